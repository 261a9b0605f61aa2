"""
First-order dependence tests, independence sets and Chebyshev-optimal differentials.

The dependence objective at x is h_x(λ) = Lip_x(λ · f), the discrete upper
pointwise Lipschitz constant of a combination of the tuple. Over a scale
window it equals max_y |λ · (f(y) - f(x))| / r_min(y), where r_min(y) is
the smallest window radius strictly above d(x, y), so it is a max of
|linear| functions of λ and is minimized on the unit sphere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from src.analysis.lipschitz import global_lip, variation_table
from src.core.config import settings
from src.core.errors import InputError
from src.core.logging import get_logger
from src.core.parallel import parallel_map
from src.space.fields import ScalarField
from src.space.metric_space import MetricMeasureSpace, ScaleLadder, ScaleWindow, ball

logger = get_logger(__name__)

RANGE_GAP = 1e-6
FACE_SLACK = 1e-9
POLISH_START = 0.25
POLISH_STOP = 1e-9


@dataclass(frozen=True)
class CoordinateTuple:
    fields: Tuple[ScalarField, ...]

    def __post_init__(self) -> None:
        if len(self.fields) < 1:
            raise InputError("coordinate tuple needs at least one field", invariant="tuple size")
        sizes = {len(f) for f in self.fields}
        if len(sizes) != 1:
            raise InputError("coordinate fields live on different spaces", invariant="same space")

    @classmethod
    def of(cls, *fields: ScalarField) -> "CoordinateTuple":
        return cls(tuple(fields))

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(f.label for f in self.fields)

    @property
    def size(self) -> int:
        return len(self.fields)

    def matrix(self) -> np.ndarray:
        return np.column_stack([f.values for f in self.fields])


@dataclass(frozen=True)
class DependenceCertificate:
    lam: Tuple[float, ...]
    seminorm: float
    dependent: bool
    degenerate: bool = False


@dataclass(frozen=True)
class DifferentialAtPoint:
    point: int
    df: Tuple[float, ...]
    residual: float
    radius_used: float
    degenerate: bool = False
    unique: bool = True


# -- dependence -----------------------------------------------------------


def local_seminorm(
    space: MetricMeasureSpace,
    coords: CoordinateTuple,
    lam: Sequence[float],
    x: int,
    ladder: ScaleLadder,
    window: Optional[ScaleWindow] = None,
) -> float:
    """Lip_x(λ · f) over the window radii; radii with a one-point ball are skipped."""
    values = coords.matrix() @ np.asarray(lam, dtype=float)
    table, counts = variation_table(space, values, ladder.window_radii(window), [x])
    live = counts[0] > 1
    return float(table[0, live, 0].max()) if live.any() else 0.0


def difference_rows(
    space: MetricMeasureSpace, matrix: np.ndarray, x: int, radii: Sequence[float]
) -> np.ndarray:
    """Rows (f(y) - f(x)) / r_min(y) for every y != x inside the largest window ball."""
    ascending = np.sort(np.asarray(radii, dtype=float))
    if ascending.size == 0:
        return np.zeros((0, matrix.shape[1]))
    row = space.distances(x)
    near = np.flatnonzero((row < ascending[-1]) & (row > 0))
    r_min = ascending[np.searchsorted(ascending, row[near], side="right")]
    return (matrix[near] - matrix[x]) / r_min[:, None]


def _objective(A: np.ndarray, lams: np.ndarray) -> np.ndarray:
    """max_y |A λ| for every column of ``lams``."""
    return np.abs(A @ lams).max(axis=0)


def _starts(A: np.ndarray, seed: int) -> np.ndarray:
    n_fields = A.shape[1]
    _, _, vt = np.linalg.svd(A, full_matrices=False)
    starts = [vt[-1]]
    if n_fields == 2:
        angles = np.linspace(0.0, np.pi, 32, endpoint=False)
        starts += list(np.column_stack([np.cos(angles), np.sin(angles)]))
    else:
        eye = np.eye(n_fields)
        starts += list(eye)
        for i in range(n_fields):
            for j in range(i + 1, n_fields):
                starts.append((eye[i] + eye[j]) / np.sqrt(2.0))
                starts.append((eye[i] - eye[j]) / np.sqrt(2.0))
        rng = np.random.default_rng(seed)
        starts += list(rng.standard_normal((16, n_fields)))
    S = np.array(starts, dtype=float).T
    return S / np.linalg.norm(S, axis=0)


def _polish(A: np.ndarray, lam: np.ndarray) -> Tuple[np.ndarray, float]:
    """Deterministic plane-rotation descent on the unit sphere with step halving."""
    n_fields = lam.size
    planes = [(i, j) for i in range(n_fields) for j in range(i + 1, n_fields)]
    best = float(_objective(A, lam[:, None])[0])
    theta = POLISH_START
    while theta > POLISH_STOP and best > 0:
        c, s = np.cos(theta), np.sin(theta)
        candidates = []
        for i, j in planes:
            for sign in (1.0, -1.0):
                cand = lam.copy()
                cand[i] = c * lam[i] - sign * s * lam[j]
                cand[j] = sign * s * lam[i] + c * lam[j]
                candidates.append(cand)
        C = np.array(candidates).T
        values = _objective(A, C)
        k = int(np.argmin(values))
        if values[k] < best:
            lam, best = C[:, k] / np.linalg.norm(C[:, k]), float(values[k])
        else:
            theta *= 0.5
    return lam, best


def _normalize_sign(lam: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(lam)))
    return -lam if lam[k] < 0 else lam


def minimize_on_sphere(A: np.ndarray, seed: int = 0) -> Tuple[np.ndarray, float]:
    """Approximate argmin of max |A λ| over unit λ."""
    n_fields = A.shape[1]
    if n_fields == 1:
        return np.ones(1), float(np.abs(A[:, 0]).max()) if A.size else 0.0
    S = _starts(A, seed)
    values = _objective(A, S)
    order = np.argsort(values, kind="stable")[:2]
    polished = [_polish(A, S[:, k].copy()) for k in order]
    lam, value = min(polished, key=lambda item: item[1])
    return _normalize_sign(lam / np.linalg.norm(lam)), value


def dependence_test(
    space: MetricMeasureSpace,
    coords: CoordinateTuple,
    x: int,
    ladder: ScaleLadder,
    tol: Optional[float] = None,
    window: Optional[ScaleWindow] = None,
    scale: Optional[float] = None,
    seed: int = 0,
) -> DependenceCertificate:
    """dependent iff min over unit λ of Lip_x(λ · f) <= tol * max_i LIP(f_i)."""
    tol = settings.DEPENDENCE_TOL if tol is None else tol
    x = space.check_point(x)
    matrix = coords.matrix()
    if scale is None:
        scale = max(global_lip(space, f) for f in coords.fields)
    A = difference_rows(space, matrix, x, ladder.window_radii(window))
    if A.size == 0 or not np.any(A):
        lam = np.zeros(coords.size)
        lam[0] = 1.0
        return DependenceCertificate(tuple(lam), 0.0, True, degenerate=True)
    lam, value = minimize_on_sphere(A, seed)
    return DependenceCertificate(
        lam=tuple(float(v) for v in lam),
        seminorm=value,
        dependent=bool(value <= tol * scale),
    )


@dataclass
class IndependenceSet:
    points: np.ndarray
    mass_fraction: float
    certificates: List[DependenceCertificate]


def independence_set(
    space: MetricMeasureSpace,
    coords: CoordinateTuple,
    ladder: ScaleLadder,
    tol: Optional[float] = None,
    window: Optional[ScaleWindow] = None,
    region: Optional[Sequence[int]] = None,
    seed: int = 0,
) -> IndependenceSet:
    """Points where the tuple is not dependent to first order, with their mass fraction."""
    scale = max(global_lip(space, f) for f in coords.fields)
    pts = list(space.points) if region is None else [int(p) for p in region]
    certificates = parallel_map(
        lambda x: dependence_test(space, coords, x, ladder, tol, window, scale, seed), pts
    )
    chosen = np.array([x for x, cert in zip(pts, certificates) if not cert.dependent], dtype=int)
    fraction = float(space.mass[chosen].sum() / space.total_mass) if chosen.size else 0.0
    logger.debug("Independence set", labels=coords.labels, points=int(chosen.size), fraction=fraction)
    return IndependenceSet(chosen, fraction, certificates)


# -- Chebyshev differentials ------------------------------------------------


def _chebyshev_system(
    space: MetricMeasureSpace, f: ScalarField, coords: CoordinateTuple, x: int, radius: float
) -> Tuple[np.ndarray, np.ndarray]:
    members = ball(space, x, radius)
    members = members[members != x]
    if members.size < coords.size + 1:
        raise InputError(
            f"ball of radius {radius:g} at {x} has {members.size} points besides the center, "
            f"needs {coords.size + 1}",
            invariant="ball size",
        )
    weights = 1.0 / space.distances(x, members)
    D = (coords.matrix()[members] - coords.matrix()[x]) * weights[:, None]
    b = (f.values[members] - f.values[x]) * weights
    return D, b


def chebyshev_value(D: np.ndarray, b: np.ndarray, lam: np.ndarray) -> float:
    return float(np.abs(b - D @ lam).max())


def _epigraph(D: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    ones = np.ones((D.shape[0], 1))
    A_ub = np.vstack([np.hstack([-D, -ones]), np.hstack([D, -ones])])
    b_ub = np.concatenate([-b, b])
    return A_ub, b_ub


def _range_is_point(A_ub: np.ndarray, b_ub: np.ndarray, n_fields: int, bound: float) -> bool:
    """Whether every λ_i is pinned on the optimal face {t <= bound}."""
    bounds = [(None, None)] * n_fields + [(0, bound)]
    for i in range(n_fields):
        c = np.zeros(n_fields + 1)
        c[i] = 1.0
        low = optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        high = optimize.linprog(-c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if low.status != 0 or high.status != 0:
            # unbounded, or no certificate that the coordinate is pinned
            logger.debug("Range check inconclusive", coordinate=i, status=(low.status, high.status))
            return False
        if -high.fun - low.fun > RANGE_GAP:
            return False
    return True


def _min_norm(A_ub: np.ndarray, b_ub: np.ndarray, start: np.ndarray, bound: float) -> np.ndarray:
    n_fields = start.size
    constraints = [
        {"type": "ineq", "fun": lambda z: b_ub - A_ub @ z},
        {"type": "ineq", "fun": lambda z: bound - z[-1]},
    ]
    result = optimize.minimize(
        lambda z: float(z[:n_fields] @ z[:n_fields]),
        np.append(start, bound),
        jac=lambda z: np.append(2.0 * z[:n_fields], 0.0),
        constraints=constraints,
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 500},
    )
    return result.x[:n_fields] if result.success else start


def solve_differential(
    space: MetricMeasureSpace,
    f: ScalarField,
    coords: CoordinateTuple,
    x: int,
    radius: float,
    min_norm: bool = True,
) -> DifferentialAtPoint:
    """
    argmin_λ max_{y in B(x, radius), y != x} |f(y) - f(x) - λ · (coords(y) - coords(x))| / d(x, y)
    as an epigraph linear program; among optimal λ the one of least Euclidean norm.
    """
    x = space.check_point(x)
    D, b = _chebyshev_system(space, f, coords, x, radius)
    n_fields = coords.size
    if not np.any(D):
        return DifferentialAtPoint(
            x, tuple([0.0] * n_fields), float(np.abs(b).max()), radius, degenerate=True, unique=False
        )
    A_ub, b_ub = _epigraph(D, b)
    c = np.zeros(n_fields + 1)
    c[-1] = 1.0
    bounds = [(None, None)] * n_fields + [(0, None)]
    result = optimize.linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if result.status != 0:
        # λ = 0 is always feasible, so this only happens on solver trouble
        logger.warning("Chebyshev LP did not converge", point=x, status=result.status, message=result.message)
        lam = np.zeros(n_fields)
        return DifferentialAtPoint(x, tuple(lam), chebyshev_value(D, b, lam), radius, unique=False)
    lam = result.x[:n_fields]
    t_star = float(result.x[-1])
    bound = t_star + FACE_SLACK * max(1.0, t_star)
    rank_deficient = int(np.linalg.matrix_rank(D)) < n_fields
    unique = not rank_deficient
    if min_norm and unique:
        unique = _range_is_point(A_ub, b_ub, n_fields, bound)
    if min_norm and not unique:
        lam = _min_norm(A_ub, b_ub, lam, bound)
    return DifferentialAtPoint(
        point=x,
        df=tuple(float(v) for v in lam),
        residual=chebyshev_value(D, b, lam),
        radius_used=radius,
        degenerate=rank_deficient,
        unique=unique,
    )


def default_radius(
    space: MetricMeasureSpace, x: int, n_fields: int, ladder: ScaleLadder
) -> float:
    """Smallest ladder radius whose ball holds at least 3N points besides x."""
    row = space.distances(x)
    for r in ladder.ascending():
        if int((row < r).sum()) - 1 >= 3 * n_fields:
            return r
    return ladder.radii[0]


def _next_radius(ladder: ScaleLadder, r: float) -> Optional[float]:
    larger = [s for s in ladder.ascending() if s > r]
    return larger[0] if larger else None


@dataclass
class DifferentialField:
    labels: Tuple[str, ...]
    function: str
    points: List[DifferentialAtPoint]
    tol: float
    good_fraction: float
    max_df_change: float
    degenerate_points: int

    def summary(self) -> Dict[str, Any]:
        return {
            "function": self.function,
            "coords": list(self.labels),
            "tol": self.tol,
            "points": len(self.points),
            "good_mass_fraction": self.good_fraction,
            "max_df_change": self.max_df_change,
            "degenerate_points": self.degenerate_points,
            "non_unique_points": sum(1 for d in self.points if not d.unique),
        }

    def rows(self) -> List[List[Any]]:
        return [[d.point, *d.df, d.residual, d.radius_used, int(d.degenerate)] for d in self.points]


def differential_field(
    space: MetricMeasureSpace,
    f: ScalarField,
    coords: CoordinateTuple,
    ladder: ScaleLadder,
    region: Optional[Sequence[int]] = None,
    radius: Optional[float] = None,
    tol: Optional[float] = None,
    check_uniqueness: bool = True,
) -> DifferentialField:
    tol = settings.RESIDUAL_TOL if tol is None else tol
    pts = list(space.points) if region is None else [space.check_point(p) for p in region]
    if not pts:
        raise InputError("differential field over an empty region", invariant="nonempty region")

    def one(x: int) -> Tuple[DifferentialAtPoint, float]:
        r = radius if radius is not None else default_radius(space, x, coords.size, ladder)
        solved = solve_differential(space, f, coords, x, r)
        change = 0.0
        wider = _next_radius(ladder, r) if check_uniqueness else None
        if wider is not None and not solved.degenerate:
            again = solve_differential(space, f, coords, x, wider)
            change = float(np.abs(np.subtract(again.df, solved.df)).max())
        return solved, change

    results = parallel_map(one, pts)
    solved = [s for s, _ in results]
    good = np.array([s.point for s in solved if s.residual <= tol and not s.degenerate], dtype=int)
    region_mass = float(space.mass[pts].sum())
    field = DifferentialField(
        labels=coords.labels,
        function=f.label,
        points=solved,
        tol=tol,
        good_fraction=float(space.mass[good].sum() / region_mass) if good.size else 0.0,
        max_df_change=max((c for _, c in results), default=0.0),
        degenerate_points=sum(1 for s in solved if s.degenerate),
    )
    logger.info(
        "Differential field solved",
        function=f.label,
        coords=coords.labels,
        points=len(pts),
        good_fraction=field.good_fraction,
    )
    return field
