"""
Empirical p-Poincaré constants over a probe family, and the chain-of-balls
oscillation bound.

The estimate is a lower bound on the true constant: only the probes are tested.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.analysis.lipschitz import variation_table
from src.analysis.quasiconvex import quasiconvexify
from src.core.errors import InputError
from src.core.logging import get_logger
from src.core.parallel import parallel_map
from src.space.fields import ScalarField
from src.space.metric_space import MetricMeasureSpace, ScaleLadder, ball

logger = get_logger(__name__)

FINE_SCALES = 6
ZERO_TOL = 1e-12


def mean_oscillation(space: MetricMeasureSpace, f: ScalarField, members: np.ndarray) -> float:
    """Mass-weighted mean of |f - f_B| over the given ball members."""
    members = np.asarray(members, dtype=int)
    if members.size == 0:
        raise InputError("mean oscillation over an empty ball", invariant="nonempty ball")
    weights = space.mass[members]
    values = f.values[members]
    total = weights.sum()
    average = float(weights @ values / total)
    return float(weights @ np.abs(values - average) / total)


def _smallest_nondegenerate(
    space: MetricMeasureSpace, values: np.ndarray, radii: Sequence[float]
) -> Tuple[np.ndarray, np.ndarray]:
    table, counts = variation_table(space, values, radii)
    live = counts > 1
    first = np.argmax(live, axis=1)
    found = live.any(axis=1)
    rows = np.arange(space.size)
    return np.where(found[:, None], table[rows, first], 0.0), found


def discrete_lip_values(space: MetricMeasureSpace, values: np.ndarray, ladder: ScaleLadder) -> np.ndarray:
    """Variation at the smallest nondegenerate ladder radius, per point and per column."""
    ascending = ladder.ascending()
    matrix = values[:, None] if values.ndim == 1 else values
    out, found = _smallest_nondegenerate(space, matrix, ascending[:FINE_SCALES])
    if not found.all() and len(ascending) > FINE_SCALES:
        wide, _ = _smallest_nondegenerate(space, matrix, ascending)
        out = np.where(found[:, None], out, wide)
    return out


def discrete_lip_field(space: MetricMeasureSpace, f: ScalarField, ladder: ScaleLadder) -> ScalarField:
    return ScalarField(discrete_lip_values(space, f.values, ladder)[:, 0], f"lip({f.label})")


@dataclass
class PiReport:
    """Ratios for every tested (center, radius, probe), stored as (centers, radii, probes) arrays."""

    p: float
    dilation: float
    centers: np.ndarray
    radii: np.ndarray
    labels: List[str]
    lhs: np.ndarray
    rhs: np.ndarray
    ratios: np.ndarray

    @property
    def constant_estimate(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else 0.0

    def _worst_index(self) -> Optional[Tuple[int, int, int]]:
        if not self.ratios.size or self.constant_estimate == 0.0:
            return None
        flat = int(np.argmax(self.ratios))
        c, r, j = np.unravel_index(flat, self.ratios.shape)
        return int(c), int(r), int(j)

    @property
    def worst_ball(self) -> Optional[Tuple[int, float]]:
        index = self._worst_index()
        return None if index is None else (int(self.centers[index[0]]), float(self.radii[index[1]]))

    @property
    def worst_probe(self) -> Optional[str]:
        index = self._worst_index()
        return None if index is None else self.labels[index[2]]

    @property
    def ratio_table(self) -> List[Dict[str, Any]]:
        return [
            {
                "center": int(x),
                "radius": float(r),
                "probe": label,
                "lhs": float(self.lhs[c, k, j]),
                "rhs": float(self.rhs[c, k, j]),
                "ratio": float(self.ratios[c, k, j]),
            }
            for c, x in enumerate(self.centers)
            for k, r in enumerate(self.radii)
            for j, label in enumerate(self.labels)
        ]

    def probe_maxima(self) -> Dict[str, float]:
        if not self.ratios.size:
            return {}
        best = self.ratios.max(axis=(0, 1))
        return {label: float(v) for label, v in zip(self.labels, best)}

    def to_dict(self, with_table: bool = False) -> Dict[str, Any]:
        worst = self.worst_ball
        data: Dict[str, Any] = {
            "p": self.p,
            "dilation": self.dilation,
            "constant_estimate": self.constant_estimate,
            "worst_ball": list(worst) if worst else None,
            "worst_probe": self.worst_probe,
            "balls_tested": int(self.centers.size * self.radii.size),
            "probes_tested": len(self.labels),
            "probe_maxima": self.probe_maxima(),
            "lower_bound": True,
        }
        if with_table:
            data["ratio_table"] = self.ratio_table
        return data


def pi_constant_estimate(
    space: MetricMeasureSpace,
    probes: Sequence[ScalarField],
    ladder: ScaleLadder,
    p: float = 1.0,
    dilation: float = 2.0,
    centers: Optional[Sequence[int]] = None,
) -> PiReport:
    """
    ratio(B, f) = osc_B f / (r * (mean over dilation*B of lip^p)^(1/p)) for every
    center, ladder radius and probe. A vanishing left side gives ratio 0, a
    vanishing right side with positive left side gives +inf.

    Every point is a center unless ``centers`` is given.
    """
    if p < 1 or dilation < 1:
        raise InputError("PI needs p >= 1 and dilation >= 1", invariant="pi parameters", p=p, dilation=dilation)
    if not probes:
        raise InputError("PI estimate needs at least one probe", invariant="probes")
    for probe in probes:
        probe.check(space)
    F = np.column_stack([probe.values for probe in probes])
    G = discrete_lip_values(space, F, ladder) ** p
    scale = np.maximum(np.abs(F).max(axis=0), 1.0)
    radii = np.array(ladder.radii)
    centers = list(space.points) if centers is None else [space.check_point(c) for c in centers]

    def one(x: int) -> Tuple[np.ndarray, np.ndarray]:
        row = space.distances(x)
        order = np.argsort(row, kind="stable")
        sorted_d = row[order]
        w_sorted = space.mass[order]
        cum_w = np.cumsum(w_sorted)
        cum_g = np.cumsum(w_sorted[:, None] * G[order], axis=0)
        inner_counts = np.searchsorted(sorted_d, radii, side="left")
        outer_counts = np.searchsorted(sorted_d, dilation * radii, side="left")
        lhs = np.empty((radii.size, F.shape[1]))
        rhs = np.empty_like(lhs)
        for i, (r, k, ko) in enumerate(zip(radii, inner_counts, outer_counts)):
            members = order[:k]
            w = space.mass[members]
            vals = F[members]
            avg = w @ vals / w.sum()
            lhs[i] = w @ np.abs(vals - avg) / w.sum()
            rhs[i] = r * (cum_g[ko - 1] / cum_w[ko - 1]) ** (1.0 / p)
        return lhs, rhs

    results = parallel_map(one, centers)
    lhs = np.stack([left for left, _ in results]) if results else np.zeros((0, radii.size, F.shape[1]))
    rhs = np.stack([right for _, right in results]) if results else np.zeros_like(lhs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.inf)
    ratios = np.where(lhs <= ZERO_TOL * scale, 0.0, ratios)
    report = PiReport(
        p=p,
        dilation=dilation,
        centers=np.array(centers, dtype=int),
        radii=radii,
        labels=[probe.label for probe in probes],
        lhs=lhs,
        rhs=rhs,
        ratios=ratios,
    )
    logger.info(
        "Poincaré constant estimated",
        p=p,
        dilation=dilation,
        estimate=report.constant_estimate,
        balls=len(centers) * len(radii),
        probes=len(probes),
    )
    return report


def _coarsen(space: MetricMeasureSpace, vertices: Sequence[int], reach: float) -> List[int]:
    """Greedy subsequence keeping each jump below ``reach``, endpoints retained."""
    chain = [vertices[0]]
    i = 0
    while i < len(vertices) - 1:
        j = i + 1
        while j + 1 < len(vertices) and space.dist(vertices[i], vertices[j + 1]) < reach:
            j += 1
        chain.append(vertices[j])
        i = j
    return chain


def chain_oscillation_bound_check(
    space: MetricMeasureSpace,
    f: ScalarField,
    x: int,
    y: int,
    lam: float,
    safety: float = 1.0,
) -> Dict[str, Any]:
    """
    Chain x = p_1, ..., p_k = y with jumps below lam*d(x, y), balls
    B_i = B(p_i, lam*d(x, y)); checks
    |f(y) - f(x)| <= |f(x) - f_{B_1}| + sum |f_{B_{i+1}} - f_{B_i}| + |f_{B_k} - f(y)|.
    """
    if not lam > 0:
        raise InputError("chain check needs lam > 0", invariant="lambda", lam=lam)
    r = space.dist(x, y)
    eps = lam * r * safety
    path = quasiconvexify(space, x, y, eps).path
    chain = _coarsen(space, path.vertices, eps)

    def average(p: int) -> float:
        members = ball(space, p, lam * r)
        w = space.mass[members]
        return float(w @ f.values[members] / w.sum())

    averages = [average(p) for p in chain]
    terms = [abs(b - a) for a, b in zip(averages[:-1], averages[1:])]
    head = abs(f.values[x] - averages[0])
    tail = abs(averages[-1] - f.values[y])
    bound = head + float(sum(terms)) + tail
    lhs = abs(float(f.values[y] - f.values[x]))
    return {
        "x": int(x),
        "y": int(y),
        "lambda": lam,
        "eps": eps,
        "chain": [int(p) for p in chain],
        "k": len(chain),
        "terms": terms,
        "endpoint_terms": [head, tail],
        "bound": bound,
        "difference": lhs,
        "holds": bool(lhs <= bound + ZERO_TOL * max(1.0, bound)),
    }
