"""
Finite metric measure spaces, balls, scale ladders, doubling constants and nets.

Every ball is open: ball(x, r) = {y : d(x, y) < r}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from src.core.config import settings
from src.core.errors import InputError
from src.core.logging import get_logger

logger = get_logger(__name__)


def _frozen(array: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if array is None:
        return None
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class MetricMeasureSpace:
    """
    Finite point set 0..n-1 with a metric oracle and positive point masses.

    The metric is the dense ``dist_matrix`` when one is given, otherwise the
    Euclidean metric on ``coords``. When both are present, ``coords`` only
    carries coordinate functions (e.g. the lattice coordinates of a graph).
    ``step`` declares a uniform grid step; scale ladders snap to it.
    """

    mass: np.ndarray
    coords: Optional[np.ndarray] = None
    dist_matrix: Optional[np.ndarray] = None
    label: str = ""
    step: Optional[float] = None

    def __post_init__(self) -> None:
        mass = _frozen(self.mass)
        coords = _frozen(self.coords)
        dist_matrix = _frozen(self.dist_matrix)
        if coords is not None and coords.ndim == 1:
            coords = _frozen(coords.reshape(-1, 1))
        if coords is None and dist_matrix is None:
            raise InputError(
                "space needs coordinates or a distance matrix", invariant="metric"
            )
        n = mass.shape[0]
        if mass.ndim != 1 or n == 0:
            raise InputError("mass must be a nonempty vector", invariant="shape")
        if coords is not None and coords.shape[0] != n:
            raise InputError("coords and mass disagree in length", invariant="shape")
        if dist_matrix is not None and dist_matrix.shape != (n, n):
            raise InputError(
                "distance matrix must be square and match mass", invariant="shape"
            )
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "dist_matrix", dist_matrix)

    # -- basic accessors -------------------------------------------------

    @property
    def size(self) -> int:
        return int(self.mass.shape[0])

    @property
    def points(self) -> range:
        return range(self.size)

    @property
    def euclidean(self) -> bool:
        return self.dist_matrix is None

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    def check_point(self, x: int) -> int:
        if not isinstance(x, (int, np.integer)) or not 0 <= int(x) < self.size:
            raise InputError(f"unknown point id {x!r}", invariant="point id")
        return int(x)

    def distances(self, x: int, targets: Optional[np.ndarray] = None) -> np.ndarray:
        """Distances from x to every point (or to ``targets``)."""
        if self.dist_matrix is not None:
            row = self.dist_matrix[x]
            return row if targets is None else row[targets]
        assert self.coords is not None
        pts = self.coords if targets is None else self.coords[targets]
        diff = pts - self.coords[x]
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        """Distance submatrix d(rows[i], cols[j])."""
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        if self.dist_matrix is not None:
            return self.dist_matrix[np.ix_(rows, cols)]
        assert self.coords is not None
        diff = self.coords[rows][:, None, :] - self.coords[cols][None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    def dist(self, a: int, b: int) -> float:
        return float(self.distances(a, np.array([b]))[0])

    def dense(self) -> np.ndarray:
        if self.dist_matrix is not None:
            return self.dist_matrix
        idx = np.arange(self.size)
        return self.block(idx, idx)

    def diameter(self) -> float:
        if self.dist_matrix is not None:
            return float(self.dist_matrix.max())
        return float(max(self.distances(x).max() for x in self.points))

    def nearest_neighbor_distances(self) -> np.ndarray:
        if self.size < 2:
            return np.zeros(self.size)
        if self.dist_matrix is None:
            assert self.coords is not None
            dist, _ = cKDTree(self.coords).query(self.coords, k=2)
            return dist[:, 1]
        masked = self.dist_matrix + np.diag(np.full(self.size, np.inf))
        return masked.min(axis=1)

    def default_floor(self) -> float:
        """Resolution scale: the declared step, else the largest nearest-neighbor gap."""
        if self.step is not None:
            return float(self.step)
        if self.size < 2:
            return 1.0
        return float(self.nearest_neighbor_distances().max())

    # -- derived spaces --------------------------------------------------

    def rescaled(self, s: float) -> MetricMeasureSpace:
        """Same points and masses with every distance multiplied by s."""
        if not s > 0:
            raise InputError("rescaling factor must be positive", invariant="scale")
        return MetricMeasureSpace(
            mass=self.mass,
            coords=None if self.coords is None else self.coords * s,
            dist_matrix=None if self.dist_matrix is None else self.dist_matrix * s,
            label=self.label,
            step=None if self.step is None else self.step * s,
        )

    def subspace(
        self,
        members: Sequence[int],
        scale: float = 1.0,
        normalize_mass: bool = False,
        label: Optional[str] = None,
    ) -> MetricMeasureSpace:
        """Restriction to ``members`` (in the given order) with distances divided by scale."""
        members = np.asarray(members, dtype=int)
        mass = self.mass[members]
        if normalize_mass:
            mass = mass / mass.sum()
        coords = None if self.coords is None else self.coords[members]
        dist_matrix = None
        if self.dist_matrix is not None:
            dist_matrix = self.dist_matrix[np.ix_(members, members)] / scale
        elif coords is not None:
            coords = coords / scale
        return MetricMeasureSpace(
            mass=mass,
            coords=coords,
            dist_matrix=dist_matrix,
            label=label if label is not None else self.label,
            step=None if self.step is None else self.step / scale,
        )

    # -- validation ------------------------------------------------------

    def validate(
        self,
        exhaustive_limit: Optional[int] = None,
        samples: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> None:
        """Check the metric measure space invariants, raising InputError on the first violation."""
        exhaustive_limit = exhaustive_limit or settings.TRIANGLE_EXHAUSTIVE_LIMIT
        samples = samples or settings.TRIANGLE_SAMPLES
        seed = settings.SEED if seed is None else seed

        if not np.all(np.isfinite(self.mass)) or np.any(self.mass <= 0):
            raise InputError("every point needs positive finite mass", invariant="positive mass")

        if self.dist_matrix is None:
            assert self.coords is not None
            if not np.all(np.isfinite(self.coords)):
                raise InputError("coordinates must be finite", invariant="finite coordinates")
            if np.unique(self.coords, axis=0).shape[0] < self.size:
                raise InputError(
                    "distinct points must be at positive distance", invariant="separation"
                )
            return

        d = self.dist_matrix
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise InputError("distances must be finite and nonnegative", invariant="nonnegativity")
        if np.any(np.diag(d) != 0):
            raise InputError("dist(a, a) must be 0", invariant="zero diagonal")
        if not np.array_equal(d, d.T):
            raise InputError("dist(a, b) must equal dist(b, a)", invariant="symmetry")
        off = d + np.eye(self.size)
        if np.any(off <= 0):
            raise InputError(
                "distinct points must be at positive distance", invariant="separation"
            )
        self._check_triangle(exhaustive_limit, samples, seed)

    def _check_triangle(self, exhaustive_limit: int, samples: int, seed: int) -> None:
        d = self.dist_matrix
        assert d is not None
        tol = 1e-12 * float(d.max()) if self.size > 1 else 0.0
        if self.size <= exhaustive_limit:
            for c in range(self.size):
                bad = d > d[:, c : c + 1] + d[c : c + 1, :] + tol
                if bad.any():
                    a, b = (int(v) for v in np.argwhere(bad)[0])
                    raise InputError(
                        "dist violates the triangle inequality",
                        invariant="triangle inequality",
                        triple=[a, c, b],
                    )
            return
        rng = np.random.default_rng(seed)
        a, b, c = rng.integers(self.size, size=(3, samples))
        bad = d[a, b] > d[a, c] + d[c, b] + tol
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise InputError(
                "dist violates the triangle inequality",
                invariant="triangle inequality",
                triple=[int(a[i]), int(c[i]), int(b[i])],
            )
        logger.debug("Triangle inequality sampled", samples=samples, points=self.size)


@dataclass(frozen=True)
class Ball:
    """Open ball descriptor; radius may be +inf for the whole space."""

    center: int
    radius: float

    def members(self, space: MetricMeasureSpace) -> np.ndarray:
        return ball(space, self.center, self.radius)


@dataclass(frozen=True)
class Net:
    """c-separated net of a ball: members pairwise >= c apart, region within c of a member."""

    members: Tuple[int, ...]
    spacing: float
    region: Ball

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ScaleWindow:
    lo: float
    hi: float

    def contains(self, r: float) -> bool:
        return self.lo <= r <= self.hi


@dataclass(frozen=True)
class ScaleLadder:
    """Geometric radii r_max * ratio**k down to the first value <= floor."""

    r_max: float
    ratio: float
    floor: float
    radii: Tuple[float, ...]

    @classmethod
    def build(
        cls,
        r_max: float,
        ratio: Optional[float] = None,
        floor: Optional[float] = None,
        step: Optional[float] = None,
    ) -> ScaleLadder:
        """Build a ladder; with a declared grid step, radii snap to half-integer multiples of it."""
        ratio = settings.LADDER_RATIO if ratio is None else ratio
        floor = (step if step is not None else r_max / 64.0) if floor is None else floor
        if not (r_max > 0 and 0 < ratio < 1 and floor > 0):
            raise InputError(
                "ladder needs r_max > 0, ratio in (0, 1) and floor > 0",
                invariant="ladder",
                r_max=r_max,
                ratio=ratio,
                floor=floor,
            )
        raw: List[float] = []
        r = r_max
        while True:
            raw.append(r)
            if r <= floor or len(raw) > 10_000:
                break
            r *= ratio

        radii: List[float] = []
        for r in raw:
            if step is not None and r >= 0.5 * step:
                r = (math.floor(r / step - 0.5) + 0.5) * step
            if r > 0 and (not radii or r < radii[-1]):
                radii.append(r)
        return cls(r_max=r_max, ratio=ratio, floor=floor, radii=tuple(radii))

    @classmethod
    def for_space(
        cls,
        space: MetricMeasureSpace,
        ratio: Optional[float] = None,
        r_max: Optional[float] = None,
        floor: Optional[float] = None,
    ) -> ScaleLadder:
        r_max = space.diameter() if r_max is None else r_max
        if r_max <= 0:
            r_max = 1.0
        floor = space.default_floor() if floor is None else floor
        return cls.build(r_max, ratio=ratio, floor=floor, step=space.step)

    def default_window(
        self, lo_mult: Optional[float] = None, hi_mult: Optional[float] = None
    ) -> ScaleWindow:
        lo_mult = settings.WINDOW_LO if lo_mult is None else lo_mult
        hi_mult = settings.WINDOW_HI if hi_mult is None else hi_mult
        return ScaleWindow(lo_mult * self.floor, hi_mult * self.floor)

    def window_radii(self, window: Optional[ScaleWindow] = None) -> Tuple[float, ...]:
        window = window or self.default_window()
        return tuple(r for r in self.radii if window.contains(r))

    def ascending(self) -> Tuple[float, ...]:
        return tuple(reversed(self.radii))


# -- operations -----------------------------------------------------------


def ball(space: MetricMeasureSpace, x: int, r: float) -> np.ndarray:
    """Open ball {y : d(x, y) < r} as ascending point ids."""
    x = space.check_point(x)
    if not r >= 0:
        raise InputError("ball radius must be >= 0", invariant="radius", radius=r)
    return np.flatnonzero(space.distances(x) < r)


def ball_mass(space: MetricMeasureSpace, x: int, r: float) -> float:
    if not r > 0:
        raise InputError("ball_mass needs r > 0", invariant="radius", radius=r)
    return float(space.mass[ball(space, x, r)].sum())


def _centers(space: MetricMeasureSpace, centers: Optional[Iterable[int]]) -> List[int]:
    return list(space.points) if centers is None else [space.check_point(c) for c in centers]


def _doubling_radii(ladder: ScaleLadder, exclude_fine: bool) -> List[float]:
    lower = 4.0 * ladder.floor if exclude_fine else 0.0
    return [r for r in ladder.radii if r >= lower]


def measure_doubling_constant(
    space: MetricMeasureSpace,
    ladder: ScaleLadder,
    exclude_fine: bool = False,
    centers: Optional[Iterable[int]] = None,
) -> float:
    """max over centers and ladder radii of mu(B(x, 2r)) / mu(B(x, r))."""
    radii = np.array(_doubling_radii(ladder, exclude_fine))
    if radii.size == 0:
        return 1.0
    worst = 1.0
    for x in _centers(space, centers):
        row = space.distances(x)
        order = np.argsort(row, kind="stable")
        sorted_d = row[order]
        cum = np.cumsum(space.mass[order])
        inner = cum[np.searchsorted(sorted_d, radii, side="left") - 1]
        outer = cum[np.searchsorted(sorted_d, 2.0 * radii, side="left") - 1]
        worst = max(worst, float((outer / inner).max()))
    logger.debug("Measure doubling constant", value=worst, scales=int(radii.size))
    return worst


def greedy_net_members(
    space: MetricMeasureSpace, region: np.ndarray, c: float
) -> np.ndarray:
    """Greedy c-separated subset of ``region`` taken in ascending point-id order."""
    region = np.sort(np.asarray(region, dtype=int))
    covered = np.zeros(region.size, dtype=bool)
    members: List[int] = []
    while True:
        uncovered = np.flatnonzero(~covered)
        if uncovered.size == 0:
            break
        t = int(region[uncovered[0]])
        members.append(t)
        covered |= space.distances(t, region) < c
    return np.array(members, dtype=int)


def metric_doubling_constant(
    space: MetricMeasureSpace,
    ladder: ScaleLadder,
    exclude_fine: bool = False,
    centers: Optional[Iterable[int]] = None,
) -> float:
    """Upper estimate of C: the largest greedy (r/2)-net over balls B(x, r)."""
    radii = _doubling_radii(ladder, exclude_fine)
    worst = 1
    for x in _centers(space, centers):
        row = space.distances(x)
        for r in radii:
            region = np.flatnonzero(row < r)
            worst = max(worst, int(greedy_net_members(space, region, r / 2.0).size))
    logger.debug("Metric doubling constant", value=worst, scales=len(radii))
    return float(worst)


def greedy_separated_net(space: MetricMeasureSpace, region: Ball, c: float) -> Net:
    if not c > 0:
        raise InputError("net spacing must be positive", invariant="spacing", spacing=c)
    points = region.members(space)
    if points.size == 0:
        raise InputError("net region is empty", invariant="nonempty region")
    members = greedy_net_members(space, points, c)
    logger.debug("Greedy net built", members=int(members.size), spacing=c)
    return Net(members=tuple(int(m) for m in members), spacing=c, region=region)


def verify_net(space: MetricMeasureSpace, net: Net) -> Tuple[bool, bool]:
    """(separation, covering) checked exhaustively."""
    members = np.array(net.members, dtype=int)
    pair = space.block(members, members) + np.diag(np.full(members.size, np.inf))
    separated = bool(np.all(pair >= net.spacing))
    region = net.region.members(space)
    covered = bool(np.all(space.block(region, members).min(axis=1) < net.spacing))
    return separated, covered
