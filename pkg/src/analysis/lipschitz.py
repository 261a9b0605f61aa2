"""
Global and pointwise Lipschitz calculus: LIP, var, lip, Lip and the Lip/lip ratio.

var_{x,r} f = sup { |f(y) - f(x)| / r : y in B(x, r) }; lip and Lip are the
min and max of var over the ladder radii inside a scale window, skipping
radii whose punctured ball is empty.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.errors import InputError
from src.core.logging import get_logger
from src.core.parallel import parallel_map
from src.space.fields import ScalarField
from src.space.metric_space import MetricMeasureSpace, ScaleLadder, ScaleWindow, ball

logger = get_logger(__name__)

FieldLike = Union[ScalarField, np.ndarray]

DEFAULT_RATIO_PROBES: Tuple[float, ...] = (1.0, 1.25, 1.5, 2.0, 4.0, 8.0)


def _values(f: FieldLike) -> np.ndarray:
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)


def global_lip(space: MetricMeasureSpace, f: FieldLike) -> float:
    """Exact max over pairs of |f(p) - f(q)| / d(p, q); 0 with fewer than two points."""
    values = _values(f)
    best = 0.0
    for x in range(space.size - 1):
        others = np.arange(x + 1, space.size)
        quotients = np.abs(values[others] - values[x]) / space.distances(x, others)
        best = max(best, float(quotients.max()))
    return best


def variation(space: MetricMeasureSpace, f: FieldLike, x: int, r: float) -> float:
    if not r > 0:
        raise InputError("variation needs r > 0", invariant="radius", radius=r)
    values = _values(f)
    members = ball(space, x, r)
    if members.size == 0:
        return 0.0
    return float(np.abs(values[members] - values[x]).max() / r)


def variation_table(
    space: MetricMeasureSpace,
    values: np.ndarray,
    radii: Sequence[float],
    points: Optional[Sequence[int]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    var_{x,r} for every point, radius and field column at once.

    Returns (table, counts): table has shape (points, radii, fields) and
    counts[i, k] is the number of points in B(x_i, r_k), the center included.
    """
    values = np.asarray(values, dtype=float)
    matrix = values[:, None] if values.ndim == 1 else values
    radii_arr = np.asarray(radii, dtype=float)
    if radii_arr.size and not np.all(radii_arr > 0):
        raise InputError("variation needs r > 0", invariant="radius")
    pts = list(space.points) if points is None else [space.check_point(x) for x in points]
    r_top = float(radii_arr.max()) if radii_arr.size else 0.0

    def one(x: int) -> Tuple[np.ndarray, np.ndarray]:
        row = space.distances(x)
        near = np.flatnonzero(row < r_top)
        order = near[np.argsort(row[near], kind="stable")]
        d_sorted = row[order]
        running = np.maximum.accumulate(np.abs(matrix[order] - matrix[x]), axis=0)
        count = np.searchsorted(d_sorted, radii_arr, side="left")
        return running[count - 1] / radii_arr[:, None], count

    results = parallel_map(one, pts)
    table = np.zeros((len(pts), radii_arr.size, matrix.shape[1]))
    counts = np.zeros((len(pts), radii_arr.size), dtype=int)
    for i, (var, count) in enumerate(results):
        table[i] = var
        counts[i] = count
    return table, counts


def _window(ladder: ScaleLadder, window: Optional[ScaleWindow]) -> Tuple[float, ...]:
    return ladder.window_radii(window)


def _lip_Lip(table: np.ndarray, counts: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """min / max over nondegenerate radii; table is (points, radii, fields)."""
    usable = (counts > 1)[:, :, None]
    lip = np.where(usable, table, np.inf).min(axis=1)
    Lip = np.where(usable, table, -np.inf).max(axis=1)
    degenerate = ~usable.any(axis=1)
    lip = np.where(degenerate, 0.0, lip)
    Lip = np.where(degenerate, 0.0, Lip)
    return lip, Lip, degenerate[:, 0]


def pointwise_lip(
    space: MetricMeasureSpace,
    f: FieldLike,
    x: int,
    ladder: ScaleLadder,
    window: Optional[ScaleWindow] = None,
) -> float:
    table, counts = variation_table(space, _values(f), _window(ladder, window), [x])
    lip, _, _ = _lip_Lip(table, counts)
    return float(lip[0, 0])


def pointwise_Lip(
    space: MetricMeasureSpace,
    f: FieldLike,
    x: int,
    ladder: ScaleLadder,
    window: Optional[ScaleWindow] = None,
) -> float:
    table, counts = variation_table(space, _values(f), _window(ladder, window), [x])
    _, Lip, _ = _lip_Lip(table, counts)
    return float(Lip[0, 0])


def lip_ratio(lip: np.ndarray, Lip: np.ndarray) -> np.ndarray:
    """Lip / lip with 0/0 = 1 and c/0 = +inf."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lip > 0, Lip / np.where(lip > 0, lip, 1.0), np.inf)
    return np.where((lip == 0) & (Lip == 0), 1.0, ratio)


@dataclass
class LipschitzProfile:
    """Per-point variation by scale, lip, Lip and their ratio for one field."""

    label: str
    radii: Tuple[float, ...]
    variation: np.ndarray
    counts: np.ndarray
    lip: np.ndarray
    Lip: np.ndarray
    ratio: np.ndarray
    degenerate: np.ndarray
    global_lip: float
    fractions: Dict[float, float] = field(default_factory=dict)

    def summary(self) -> Dict[str, object]:
        live = ~self.degenerate
        return {
            "label": self.label,
            "global_lip": self.global_lip,
            "radii": list(self.radii),
            "degenerate_points": int(self.degenerate.sum()),
            "lip_max": float(self.lip[live].max()) if live.any() else 0.0,
            "Lip_max": float(self.Lip[live].max()) if live.any() else 0.0,
            "ratio_fractions": {f"{k:g}": v for k, v in self.fractions.items()},
        }


def ratio_fractions(
    mass: np.ndarray, ratio: np.ndarray, probes: Sequence[float] = DEFAULT_RATIO_PROBES
) -> Dict[float, float]:
    """Mass-weighted fraction of points with Lip/lip <= K, per probe K."""
    total = float(mass.sum())
    return {float(k): float(mass[ratio <= k].sum() / total) for k in probes}


def liplip_ratio_field(
    space: MetricMeasureSpace,
    f: ScalarField,
    ladder: ScaleLadder,
    window: Optional[ScaleWindow] = None,
    probes: Sequence[float] = DEFAULT_RATIO_PROBES,
) -> LipschitzProfile:
    radii = _window(ladder, window)
    table, counts = variation_table(space, f.values, radii)
    lip, Lip, degenerate = _lip_Lip(table, counts)
    lip, Lip = lip[:, 0], Lip[:, 0]
    ratio = lip_ratio(lip, Lip)
    profile = LipschitzProfile(
        label=f.label,
        radii=radii,
        variation=table[:, :, 0],
        counts=counts,
        lip=lip,
        Lip=Lip,
        ratio=ratio,
        degenerate=degenerate,
        global_lip=global_lip(space, f),
        fractions=ratio_fractions(space.mass, ratio, probes),
    )
    logger.info(
        "Lipschitz profile computed",
        field=f.label,
        scales=len(radii),
        degenerate=int(degenerate.sum()),
    )
    return profile


def lip_percentile(profile: LipschitzProfile, mass: np.ndarray, q: float = 0.95) -> float:
    """Smallest K with mass-fraction of {ratio <= K} at least q (nondegenerate points)."""
    live = ~profile.degenerate
    if not live.any():
        return 1.0
    ratios = profile.ratio[live]
    weights = mass[live]
    order = np.argsort(ratios, kind="stable")
    cum = np.cumsum(weights[order]) / weights.sum()
    k = int(np.searchsorted(cum, q - 1e-12, side="left"))
    return float(ratios[order][min(k, ratios.size - 1)])


def eps_good_pairs(profile: LipschitzProfile, K: float, eps: float) -> np.ndarray:
    """
    (point, radius) pairs with Lip/K - eps <= lip - eps <= var <= Lip + eps,
    restricted to nondegenerate radii.
    """
    lip = profile.lip[:, None]
    Lip = profile.Lip[:, None]
    var = profile.variation
    good = (Lip / K - eps <= lip - eps) & (lip - eps <= var) & (var <= Lip + eps)
    return good & (profile.counts > 1)
