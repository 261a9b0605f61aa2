"""
Scalar fields on a space and the standard field families (coordinates,
distance fields, random Lipschitz probes, cut-point probes).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import networkx as nx
import numpy as np

from src.core.errors import InputError
from src.core.logging import get_logger
from src.space.metric_space import MetricMeasureSpace, ball

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One finite real value per space point."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def check(self, space: MetricMeasureSpace) -> "ScalarField":
        if len(self) != space.size:
            raise InputError(
                f"field {self.label!r} has {len(self)} values for {space.size} points",
                invariant="one value per point",
            )
        if not np.all(np.isfinite(self.values)):
            raise InputError(f"field {self.label!r} has non-finite values", invariant="finite values")
        return self

    def scaled(self, c: float, label: Optional[str] = None) -> "ScalarField":
        return ScalarField(c * self.values, label or f"{c:g}*{self.label}")

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.values + other.values, f"{self.label}+{other.label}")


def combine(fields: Sequence[ScalarField], coefficients: Sequence[float], label: str = "") -> ScalarField:
    matrix = np.column_stack([f.values for f in fields])
    return ScalarField(matrix @ np.asarray(coefficients, dtype=float), label)


def coordinate_fields(space: MetricMeasureSpace) -> List[ScalarField]:
    if space.coords is None:
        return []
    names = ["x", "y", "z"]
    return [
        ScalarField(space.coords[:, i], names[i] if i < 3 else f"x{i}")
        for i in range(space.coords.shape[1])
    ]


def distance_field(space: MetricMeasureSpace, z: int) -> ScalarField:
    z = space.check_point(z)
    return ScalarField(space.distances(z), f"dist({z})")


def constant_field(space: MetricMeasureSpace, c: float = 1.0) -> ScalarField:
    return ScalarField(np.full(space.size, float(c)), f"const({c:g})")


def sample_points(space: MetricMeasureSpace, k: int) -> List[int]:
    """Deterministic evenly strided sample of point ids."""
    k = min(k, space.size)
    if k <= 0:
        return []
    return sorted({int(v) for v in np.linspace(0, space.size - 1, k).round()})


def random_lipschitz_fields(
    space: MetricMeasureSpace, count: int, seed: int, anchors: int = 8
) -> List[ScalarField]:
    """
    Seeded 1-Lipschitz fields: random boundary values on random anchors,
    interpolated by the shortest-path (McShane) extension
    u(x) = min_b (v_b + d(x, b)).
    """
    rng = np.random.default_rng(seed)
    fields = []
    diameter = space.diameter()
    for k in range(count):
        chosen = rng.choice(space.size, size=min(anchors, space.size), replace=False)
        values = rng.uniform(0.0, 0.5 * diameter, size=chosen.size)
        rows = np.stack([space.distances(int(b)) for b in chosen])
        fields.append(ScalarField((rows + values[:, None]).min(axis=0), f"random({seed}:{k})"))
    return fields


def cut_point_fields(space: MetricMeasureSpace, eps: float) -> List[ScalarField]:
    """
    Sharp probes at cut points of the resolution-scale ε-graph: for an
    articulation point z, +1 on the largest component of X minus z, -1 on the
    rest, ramping to 0 at z over one resolution step.
    """
    graph = nx.Graph()
    graph.add_nodes_from(space.points)
    for x in space.points:
        for y in ball(space, x, eps):
            if y > x:
                graph.add_edge(x, int(y))
    fields = []
    for z in sorted(nx.articulation_points(graph)):
        rest = graph.copy()
        rest.remove_node(z)
        components = sorted(nx.connected_components(rest), key=lambda c: (-len(c), min(c)))
        sign = np.full(space.size, -1.0)
        sign[list(components[0])] = 1.0
        ramp = np.minimum(space.distances(z) / eps, 1.0)
        fields.append(ScalarField(sign * ramp, f"cut({z})"))
    logger.debug("Cut-point probes built", count=len(fields), eps=eps)
    return fields


def default_probes(
    space: MetricMeasureSpace,
    seed: int,
    distance_samples: int = 8,
    random_count: int = 8,
    cut_eps: Optional[float] = None,
) -> List[ScalarField]:
    """Coordinate fields, distance fields, random Lipschitz fields and cut-point probes."""
    probes = coordinate_fields(space)
    probes += [distance_field(space, z) for z in sample_points(space, distance_samples)]
    probes += random_lipschitz_fields(space, random_count, seed)
    eps = 1.5 * space.default_floor() if cut_eps is None else cut_eps
    probes += cut_point_fields(space, eps)
    return probes


def sawtooth_values(t: np.ndarray, period: float, levels: int = 1, ratio: float = 0.75) -> np.ndarray:
    """Multiscale slope-1 triangle wave; level k has period period * ratio**(2k)."""
    total = np.zeros_like(t, dtype=float)
    for k in range(levels):
        p = period * ratio ** (2 * k)
        phase = np.mod(t, p)
        total += 0.5 * p - np.abs(phase - 0.5 * p)
    return total


def parse_field_spec(space: MetricMeasureSpace, spec: str, seed: int = 0) -> ScalarField:
    """
    Build a field from a short spec:

    ``linear:a,b,...``  sum of a_i * coordinate_i
    ``coord:i``         coordinate i
    ``square:i``        coordinate i squared
    ``absdev:i,c``      |coordinate_i - c|
    ``max``             max over coordinates
    ``dist:z``          distance to point z
    ``sawtooth:P[,L]``  multiscale triangle wave along coordinate 0
    ``random:k``        k-th seeded random 1-Lipschitz field
    ``const:c``         constant
    ``<path>.json``     field file
    """
    if spec.endswith(".json"):
        from src.space.io import load_field

        return load_field(Path(spec)).check(space)

    kind, _, arg = spec.partition(":")
    args = [a for a in arg.split(",") if a != ""]
    try:
        if kind == "dist":
            return distance_field(space, int(args[0]))
        if kind == "const":
            return ScalarField(np.full(space.size, float(args[0]) if args else 1.0), spec)
        if kind == "random":
            k = int(args[0]) if args else 0
            return random_lipschitz_fields(space, k + 1, seed)[k]
        if space.coords is None:
            raise InputError(f"field {spec!r} needs coordinates", invariant="coordinates")
        coords = space.coords
        if kind == "linear":
            coef = np.array([float(a) for a in args])
            if coef.size != coords.shape[1]:
                raise InputError(
                    f"linear field needs {coords.shape[1]} coefficients", invariant="field spec"
                )
            return ScalarField(coords @ coef, spec)
        if kind == "coord":
            return ScalarField(coords[:, int(args[0])], spec)
        if kind == "square":
            return ScalarField(coords[:, int(args[0]) if args else 0] ** 2, spec)
        if kind == "absdev":
            return ScalarField(np.abs(coords[:, int(args[0])] - float(args[1])), spec)
        if kind == "max":
            return ScalarField(coords.max(axis=1), spec)
        if kind == "sawtooth":
            levels = int(args[1]) if len(args) > 1 else 1
            return ScalarField(sawtooth_values(coords[:, 0], float(args[0]), levels), spec)
    except (IndexError, ValueError) as exc:
        raise InputError(f"malformed field spec {spec!r}: {exc}", invariant="field spec") from exc
    raise InputError(f"unknown field kind {kind!r}", invariant="field spec")


def default_dictionary(space: MetricMeasureSpace) -> List[ScalarField]:
    """Coordinate fields, or two distance fields on spaces without coordinates."""
    return coordinate_fields(space) or [distance_field(space, z) for z in sample_points(space, 2)]
