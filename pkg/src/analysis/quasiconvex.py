"""
ε-paths, the infimal ε-path length function and recursive quasiconvexification.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from src.core.errors import GapHalvingError, InputError, NoEpsPathError
from src.core.logging import get_logger
from src.space.fields import ScalarField
from src.space.metric_space import MetricMeasureSpace, ball

logger = get_logger(__name__)

BALL_FRACTION = 0.25


@dataclass(frozen=True)
class EpsPath:
    eps: float
    vertices: Tuple[int, ...]
    length: float

    @classmethod
    def through(cls, space: MetricMeasureSpace, eps: float, vertices: Sequence[int]) -> "EpsPath":
        vertices = tuple(int(v) for v in vertices)
        return cls(eps=eps, vertices=vertices, length=path_length(space, vertices))

    def check(self, space: MetricMeasureSpace) -> bool:
        """Every step shorter than eps and the stored length matches the recomputed sum."""
        steps = _steps(space, self.vertices)
        return bool(np.all(steps < self.eps)) and self.length == float(steps.sum())


def _steps(space: MetricMeasureSpace, vertices: Sequence[int]) -> np.ndarray:
    if len(vertices) < 2:
        return np.zeros(0)
    return np.array([space.dist(a, b) for a, b in zip(vertices[:-1], vertices[1:])])


def path_length(space: MetricMeasureSpace, vertices: Sequence[int]) -> float:
    return float(_steps(space, vertices).sum())


def eps_graph(space: MetricMeasureSpace, eps: float) -> sparse.csr_matrix:
    """Symmetric sparse graph with an edge a-b of weight d(a, b) iff 0 < d(a, b) < eps."""
    if not eps > 0:
        raise InputError("eps must be positive", invariant="eps", eps=eps)
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    for x in space.points:
        row = space.distances(x)
        near = np.flatnonzero((row < eps) & (row > 0))
        rows.append(np.full(near.size, x))
        cols.append(near)
        weights.append(row[near])
    n = space.size
    return sparse.csr_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def _shortest(
    space: MetricMeasureSpace, eps: float, source: Sequence[int], graph: Optional[sparse.csr_matrix]
) -> Tuple[np.ndarray, np.ndarray]:
    source = [space.check_point(s) for s in source]
    if not source:
        raise InputError("source set is empty", invariant="nonempty source")
    graph = eps_graph(space, eps) if graph is None else graph
    dist, pred, _ = csgraph.dijkstra(
        graph, directed=False, indices=source, min_only=True, return_predecessors=True
    )
    return dist, pred


def infimal_eps_path_length(
    space: MetricMeasureSpace,
    eps: float,
    source: Sequence[int],
    cap: Optional[float] = None,
    graph: Optional[sparse.csr_matrix] = None,
) -> ScalarField:
    """u(x) = inf length of an ε-path from the source set to x; +inf when unreachable, min(u, cap) if capped."""
    dist, _ = _shortest(space, eps, source, graph)
    if cap is not None:
        dist = np.minimum(dist, cap)
    return ScalarField(dist, f"u(eps={eps:g})")


def _trace(pred: np.ndarray, target: int) -> List[int]:
    path = [target]
    while pred[path[-1]] >= 0:
        path.append(int(pred[path[-1]]))
    return path[::-1]


def half_gap_path(
    space: MetricMeasureSpace,
    p: int,
    q: int,
    eps: float,
    fraction: float = BALL_FRACTION,
    graph: Optional[sparse.csr_matrix] = None,
) -> EpsPath:
    """Shortest ε-path from B(p, fraction*r) to B(q, fraction*r), r = d(p, q)."""
    r = space.dist(p, q)
    if not r > 0:
        raise InputError("half_gap_path needs distinct points", invariant="distinct points")
    start = ball(space, p, fraction * r)
    targets = ball(space, q, fraction * r)
    overlap = np.intersect1d(start, targets)
    if overlap.size:
        return EpsPath(eps=eps, vertices=(int(overlap[0]),), length=0.0)
    dist, pred = _shortest(space, eps, start, graph)
    reach = dist[targets]
    if not np.isfinite(reach).any():
        raise NoEpsPathError(
            "no ε-path between the two balls", p=int(p), q=int(q), eps=eps
        )
    target = int(targets[int(np.argmin(reach))])
    return EpsPath.through(space, eps, _trace(pred, target))


@dataclass
class QuasiconvexResult:
    path: EpsPath
    gap_totals: List[float] = field(default_factory=list)

    def rounds(self) -> List[Dict[str, float]]:
        return [{"round": k, "gap_total": g} for k, g in enumerate(self.gap_totals)]


def quasiconvexify(
    space: MetricMeasureSpace,
    x: int,
    x_prime: int,
    eps: float,
    max_rounds: int = 50,
    fraction: float = BALL_FRACTION,
) -> QuasiconvexResult:
    """
    Recursive gap filling. The chain starts as [x, x']; each round replaces
    every gap (a, b) with d(a, b) >= eps by a, half-gap path, b. Gaps below eps
    are bridged by a single edge. The total gap must halve every round.
    """
    x, x_prime = space.check_point(x), space.check_point(x_prime)
    if x == x_prime:
        raise InputError("quasiconvexify needs distinct points", invariant="distinct points")
    graph = eps_graph(space, eps)
    chain: List[int] = [x, x_prime]
    # gap segments are (index in chain of a) where chain[i] -> chain[i+1] is a jump
    gaps = {0}
    totals = [space.dist(x, x_prime)] if space.dist(x, x_prime) >= eps else [0.0]
    rounds = 0
    while True:
        open_gaps = sorted(i for i in gaps if space.dist(chain[i], chain[i + 1]) >= eps)
        if not open_gaps:
            break
        if rounds >= max_rounds:
            raise GapHalvingError(
                "gaps did not close within max_rounds", rounds=rounds, gap_total=totals[-1]
            )
        rounds += 1
        new_chain: List[int] = []
        new_gaps = set()
        for i in range(len(chain) - 1):
            a, b = chain[i], chain[i + 1]
            new_chain.append(a)
            if i in open_gaps:
                bridge = half_gap_path(space, a, b, eps, fraction, graph)
                # a -> bridge[0] is a gap, bridge internal edges are ε-steps, bridge[-1] -> b is a gap
                new_gaps.add(len(new_chain) - 1)
                new_chain.extend(bridge.vertices)
                new_gaps.add(len(new_chain) - 1)
        new_chain.append(chain[-1])
        chain, gaps = new_chain, new_gaps
        total = sum(
            space.dist(chain[i], chain[i + 1])
            for i in gaps
            if space.dist(chain[i], chain[i + 1]) >= eps
        )
        if total > 0.5 * totals[-1] + 1e-12 * max(1.0, totals[-1]):
            raise GapHalvingError(
                "total gap failed to halve",
                round=rounds,
                previous=totals[-1],
                current=total,
                eps=eps,
            )
        totals.append(total)
    vertices = [chain[0]]
    for v in chain[1:]:
        if v != vertices[-1]:
            vertices.append(v)
    path = EpsPath.through(space, eps, vertices)
    logger.debug("Quasiconvexified", x=x, x_prime=x_prime, eps=eps, rounds=rounds, length=path.length)
    return QuasiconvexResult(path=path, gap_totals=totals)


@dataclass
class QuasiconvexityReport:
    eps: float
    constant: float
    pairs: List[Tuple[int, int]]
    ratios: List[float]
    failed_pair: Optional[Tuple[int, int]] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "eps": self.eps,
            "constant": self.constant,
            "pairs": [list(p) for p in self.pairs],
            "ratios": self.ratios,
            "failed_pair": list(self.failed_pair) if self.failed_pair else None,
        }


def sample_pairs(space: MetricMeasureSpace, count: int, seed: int) -> List[Tuple[int, int]]:
    rng = np.random.default_rng(seed)
    pairs: List[Tuple[int, int]] = []
    if space.size < 2:
        return pairs
    while len(pairs) < count:
        a, b = (int(v) for v in rng.choice(space.size, size=2, replace=False))
        pairs.append((a, b))
    return pairs


def quasiconvexity_constant(
    space: MetricMeasureSpace,
    pairs: Sequence[Tuple[int, int]],
    eps: float,
    max_rounds: int = 50,
) -> QuasiconvexityReport:
    """max over pairs of quasiconvexified length / distance; +inf on the first pair that fails."""
    ratios: List[float] = []
    for a, b in pairs:
        try:
            result = quasiconvexify(space, a, b, eps, max_rounds)
        except (NoEpsPathError, GapHalvingError) as exc:
            logger.warning("Pair not joinable at this resolution", a=a, b=b, eps=eps, error=exc.message)
            return QuasiconvexityReport(eps, float("inf"), list(pairs), ratios, failed_pair=(a, b))
        ratios.append(result.path.length / space.dist(a, b))
    constant = max(ratios) if ratios else 1.0
    return QuasiconvexityReport(eps, constant, list(pairs), ratios)
