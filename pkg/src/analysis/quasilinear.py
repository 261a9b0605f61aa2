"""
Quasilinearity constants and net-based dimension bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.analysis.lipschitz import global_lip, variation_table
from src.core.config import settings
from src.core.errors import InputError
from src.core.logging import get_logger
from src.space.fields import ScalarField
from src.space.metric_space import Ball, MetricMeasureSpace, Net, ScaleLadder, greedy_separated_net

logger = get_logger(__name__)

UNIVERSAL_CONSTANT = 16.0


@dataclass
class QuasilinearityReport:
    global_lip: float
    min_variation: float
    constant: float
    witness_ball: Optional[Tuple[int, float]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "global_lip": self.global_lip,
            "min_variation": self.min_variation,
            "constant": self.constant,
            "witness_ball": list(self.witness_ball) if self.witness_ball else None,
        }


def default_ball_family(space: MetricMeasureSpace, ladder: ScaleLadder) -> List[Tuple[int, float]]:
    return [(x, r) for x in space.points for r in ladder.radii]


def quasilinearity_constant(
    space: MetricMeasureSpace,
    f: ScalarField,
    ladder: ScaleLadder,
    family: Optional[Sequence[Tuple[int, float]]] = None,
) -> QuasilinearityReport:
    """LIP(f) / min var over the family; balls with a single point are skipped."""
    lip_f = global_lip(space, f)
    if lip_f == 0:
        return QuasilinearityReport(0.0, 0.0, 1.0, None)
    if family is None:
        radii = list(ladder.radii)
        table, counts = variation_table(space, f.values, radii)
        entries = [
            (float(table[x, k, 0]), (x, radii[k]))
            for x in space.points
            for k in range(len(radii))
            if counts[x, k] > 1
        ]
    else:
        entries = []
        for x, r in family:
            table, counts = variation_table(space, f.values, [r], [x])
            if counts[0, 0] > 1:
                entries.append((float(table[0, 0, 0]), (int(x), float(r))))
    if not entries:
        raise InputError("ball family has no ball with two points", invariant="ball family")
    min_var, witness = min(entries, key=lambda e: e[0])
    constant = float("inf") if min_var == 0 else lip_f / min_var
    return QuasilinearityReport(lip_f, min_var, constant, witness)


def dimension_bound(K: float, C: float) -> int:
    """ceil((16 K) ** log2(C))."""
    if not (math.isfinite(K) and math.isfinite(C)):
        raise InputError("dimension bound needs finite K and C", invariant="bound parameters", K=K, C=C)
    if K < 1 or C < 1:
        raise InputError("dimension bound needs K >= 1 and C >= 1", invariant="bound parameters", K=K, C=C)
    value = (UNIVERSAL_CONSTANT * K) ** math.log2(C)
    return int(math.ceil(value * (1 - 1e-12)))


def _nearest_members(space: MetricMeasureSpace, region: np.ndarray, net: Net) -> Tuple[np.ndarray, np.ndarray]:
    members = np.array(net.members, dtype=int)
    block = space.block(region, members)
    nearest = block.argmin(axis=1)
    return members[nearest], block[np.arange(region.size), nearest]


def net_restriction_bound(
    space: MetricMeasureSpace,
    net: Net,
    basis: Sequence[ScalarField],
    random_count: int = 8,
    seed: int = 0,
) -> Dict[str, Any]:
    """
    For each test function u from span(basis): checks |u(x) - u(t(x))| <= LIP(u) d(x, t(x))
    against the nearest net member t(x), and reports sup_B |u| next to
    max_T |u| + LIP(u) * spacing.
    """
    region = net.region.members(space)
    members = np.array(net.members, dtype=int)
    if not np.isin(members, region).all():
        raise InputError("net is not inside its ball", invariant="net inside ball")
    nearest, gap = _nearest_members(space, region, net)
    rng = np.random.default_rng(seed)
    tests = list(basis)
    if basis:
        matrix = np.column_stack([b.values for b in basis])
        for k in range(random_count):
            coef = rng.standard_normal(len(basis))
            tests.append(ScalarField(matrix @ coef, f"combo({seed}:{k})"))
    rows: List[Dict[str, Any]] = []
    for u in tests:
        lip_u = global_lip(space, u)
        local = np.abs(u.values[region] - u.values[nearest])
        sup_ball = float(np.abs(u.values[region]).max())
        sup_net = float(np.abs(u.values[members]).max())
        rows.append(
            {
                "field": u.label,
                "global_lip": lip_u,
                "lipschitz_to_net": bool(np.all(local <= lip_u * gap * (1 + 1e-12) + 1e-15)),
                "sup_ball": sup_ball,
                "sup_net": sup_net,
                "sup_bound": sup_net + lip_u * net.spacing,
            }
        )
    return {
        "ball": [net.region.center, net.region.radius],
        "spacing": net.spacing,
        "net_size": len(net),
        "functions": rows,
    }


def span_rank_on_net(
    space: MetricMeasureSpace,
    fields: Sequence[ScalarField],
    region: Ball,
    c: float,
    tol: Optional[float] = None,
) -> Tuple[int, Net]:
    """Numeric rank of [field_j(t_i)] over a greedy c-net of the ball."""
    tol = settings.RANK_TOL if tol is None else tol
    if region.members(space).size < 1 or not region.radius > 0:
        raise InputError("degenerate ball", invariant="nonempty region")
    net = greedy_separated_net(space, region, c)
    if not fields:
        return 0, net
    matrix = np.column_stack([f.values[list(net.members)] for f in fields])
    singular = np.linalg.svd(matrix, compute_uv=False)
    rank = 0 if singular.size == 0 or singular[0] == 0 else int((singular > tol * singular[0]).sum())
    logger.debug("Span rank on net", rank=rank, net_size=len(net), fields=len(fields))
    return min(rank, len(net)), net
