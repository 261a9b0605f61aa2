"""
JSON space and field files, and deterministic report serialization.
"""

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence, Union

import numpy as np

from src.core.config import settings
from src.core.errors import InputError
from src.core.logging import get_logger
from src.space.fields import ScalarField
from src.space.metric_space import MetricMeasureSpace

logger = get_logger(__name__)

PathLike = Union[str, Path]


def space_to_dict(space: MetricMeasureSpace) -> Dict[str, Any]:
    data: Dict[str, Any] = {"label": space.label}
    if space.dist_matrix is not None:
        data["dist_matrix"] = space.dist_matrix.tolist()
        if space.coords is not None:
            data["coords"] = space.coords.tolist()
    else:
        assert space.coords is not None
        data["coords"] = space.coords.tolist()
        data["metric"] = "euclidean"
    data["mass"] = space.mass.tolist()
    if space.step is not None:
        data["step"] = space.step
    return data


def space_from_dict(data: Dict[str, Any], validate: bool = True) -> MetricMeasureSpace:
    coords = data.get("coords")
    dist_matrix = data.get("dist_matrix")
    if dist_matrix is None:
        if coords is None:
            raise InputError("space file needs 'coords' or 'dist_matrix'", invariant="metric")
        metric = data.get("metric", "euclidean")
        if metric != "euclidean":
            raise InputError(f"unsupported metric {metric!r}", invariant="metric")
    try:
        coords_arr = None if coords is None else np.array(coords, dtype=float)
        dist_arr = None if dist_matrix is None else np.array(dist_matrix, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"malformed numeric arrays: {exc}", invariant="shape") from exc
    n = dist_arr.shape[0] if dist_arr is not None else coords_arr.shape[0]  # type: ignore[union-attr]
    mass = np.array(data.get("mass", [1.0] * n), dtype=float)
    space = MetricMeasureSpace(
        mass=mass,
        coords=coords_arr,
        dist_matrix=dist_arr,
        label=str(data.get("label", "")),
        step=data.get("step"),
    )
    if validate:
        space.validate()
    return space


def load_space(path: PathLike) -> MetricMeasureSpace:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise InputError(f"space file not found: {path}", invariant="input file") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"space file is not valid JSON: {exc}", invariant="input file") from exc
    space = space_from_dict(data)
    logger.info("Space loaded", path=str(path), points=space.size, label=space.label)
    return space


def dump_space(space: MetricMeasureSpace) -> str:
    return json.dumps(space_to_dict(space), sort_keys=True)


def distance_hash(space: MetricMeasureSpace, decimals: int = 6) -> str:
    """
    sha256 over the point count and the distance matrix in units of
    10**-decimals, both as little-endian int64, row-major.
    """
    scaled = np.rint(space.dense() * 10.0**decimals).astype("<i8")
    digest = hashlib.sha256(np.array([space.size], dtype="<i8").tobytes())
    digest.update(np.ascontiguousarray(scaled).tobytes())
    return digest.hexdigest()


def load_field(path: PathLike) -> ScalarField:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
        return ScalarField(np.array(data["values"], dtype=float), str(data.get("label", path.stem)))
    except FileNotFoundError as exc:
        raise InputError(f"field file not found: {path}", invariant="input file") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed field file {path}: {exc}", invariant="input file") from exc


def dump_field(field: ScalarField) -> str:
    return json.dumps({"label": field.label, "values": field.values.tolist()}, sort_keys=True)


# -- deterministic report formatting ---------------------------------------


def format_float(value: float, digits: int = 0) -> str:
    digits = digits or settings.FLOAT_DIGITS
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits}g}"


def normalize(obj: Any) -> Any:
    """Round floats to the fixed significant digits; infinities become strings."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isfinite(value):
            return float(format_float(value))
        return format_float(value)
    if isinstance(obj, np.ndarray):
        return [normalize(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    return obj


def dumps_report(report: Dict[str, Any]) -> str:
    return json.dumps(normalize(report), sort_keys=True, indent=2) + "\n"


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [format_float(float(v)) if isinstance(v, (float, np.floating)) else v for v in row]
        )
    return buffer.getvalue()


def write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path
