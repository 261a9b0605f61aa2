"""
Greedy measurable differentiable structure: coordinate patches chosen from a
finite function dictionary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.analysis.differentiation import (
    CoordinateTuple,
    DifferentialAtPoint,
    default_radius,
    independence_set,
    solve_differential,
)
from src.analysis.lipschitz import global_lip
from src.core.config import RunConfig, settings
from src.core.errors import AtlasStallError, InputError
from src.core.logging import get_logger, log_context
from src.space.fields import ScalarField
from src.space.metric_space import MetricMeasureSpace, ScaleLadder, ScaleWindow

logger = get_logger(__name__)


@dataclass
class AtlasParams:
    dependence_tol: float = field(default_factory=lambda: settings.ATLAS_DEPENDENCE_TOL)
    residual_tol: float = field(default_factory=lambda: settings.ATLAS_RESIDUAL_TOL)
    window_hi: float = field(default_factory=lambda: settings.ATLAS_WINDOW_HI)
    max_tuple: int = field(default_factory=lambda: settings.MAX_TUPLE)
    min_patch_mass: float = field(default_factory=lambda: settings.MIN_PATCH_MASS)
    slack: float = field(default_factory=lambda: settings.SLACK)
    seed: int = 0

    @classmethod
    def from_config(cls, config: RunConfig) -> "AtlasParams":
        return cls(
            dependence_tol=config.atlas_dependence_tol,
            residual_tol=config.atlas_residual_tol,
            window_hi=config.atlas_window_hi,
            max_tuple=config.max_tuple,
            min_patch_mass=config.min_patch_mass,
            slack=config.slack,
            seed=config.seed,
        )


@dataclass
class CoordinatePatch:
    subset: np.ndarray
    coords: CoordinateTuple
    differentials: Dict[str, List[DifferentialAtPoint]]
    mass: float

    @property
    def dimension(self) -> int:
        return self.coords.size

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dimension": self.dimension,
            "coords": list(self.coords.labels),
            "mass": self.mass,
            "points": [int(p) for p in self.subset],
        }


@dataclass
class Atlas:
    patches: List[CoordinatePatch]
    uncovered_mass: float
    total_mass: float
    dictionary: Tuple[str, ...] = ()
    stalled: bool = False

    @property
    def uncovered_fraction(self) -> float:
        return self.uncovered_mass / self.total_mass if self.total_mass else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dictionary": list(self.dictionary),
            "patches": [p.to_dict() for p in self.patches],
            "dimensions": [p.dimension for p in self.patches],
            "uncovered_mass": self.uncovered_mass,
            "uncovered_fraction": self.uncovered_fraction,
            "stalled": self.stalled,
        }


@dataclass(frozen=True)
class _Candidate:
    indices: Tuple[int, ...]
    labels: Tuple[str, ...]
    points: np.ndarray
    mass: float


def _candidates(
    space: MetricMeasureSpace,
    dictionary: Sequence[ScalarField],
    region: np.ndarray,
    ladder: ScaleLadder,
    params: AtlasParams,
) -> List[_Candidate]:
    """Tuples, by increasing size, whose independence set inside the region is heavy enough."""
    window = ScaleWindow(ladder.floor, params.window_hi * ladder.floor)
    min_mass = params.min_patch_mass * space.total_mass
    found: List[_Candidate] = []
    for size in range(1, min(params.max_tuple, len(dictionary)) + 1):
        this_size = []
        for combo in combinations(range(len(dictionary)), size):
            coords = CoordinateTuple(tuple(dictionary[i] for i in combo))
            if max(global_lip(space, f) for f in coords.fields) == 0:
                continue
            ind = independence_set(
                space, coords, ladder, params.dependence_tol, window, region, params.seed
            )
            mass = float(space.mass[ind.points].sum())
            if mass >= min_mass:
                this_size.append(_Candidate(combo, coords.labels, ind.points, mass))
        if not this_size:
            # supersets of dependent tuples stay dependent
            break
        found.extend(this_size)
    return found


def _good_points(
    space: MetricMeasureSpace,
    dictionary: Sequence[ScalarField],
    coords: CoordinateTuple,
    points: np.ndarray,
    ladder: ScaleLadder,
    params: AtlasParams,
) -> Tuple[np.ndarray, Dict[str, List[DifferentialAtPoint]]]:
    """Points where every dictionary function is differentiable within its relative tolerance."""
    keep = np.ones(points.size, dtype=bool)
    differentials: Dict[str, List[DifferentialAtPoint]] = {}
    for g in dictionary:
        threshold = params.residual_tol * global_lip(space, g)
        solved: List[Optional[DifferentialAtPoint]] = []
        for k, x in enumerate(points):
            try:
                r = default_radius(space, int(x), coords.size, ladder)
                d = solve_differential(space, g, coords, int(x), r, min_norm=False)
            except InputError:
                keep[k] = False
                solved.append(None)
                continue
            if d.residual > threshold:
                keep[k] = False
            solved.append(d)
        differentials[g.label] = solved  # type: ignore[assignment]
    chosen = points[keep]
    trimmed = {label: [d for d, k in zip(ds, keep) if k] for label, ds in differentials.items()}
    return chosen, trimmed  # type: ignore[return-value]


def _ranked_patches(
    space: MetricMeasureSpace,
    dictionary: Sequence[ScalarField],
    region: Sequence[int],
    ladder: ScaleLadder,
    params: AtlasParams,
) -> Tuple[float, Iterator[CoordinatePatch]]:
    """
    Best independence mass over the tuple search, and the qualifying patches
    ordered by size (largest first), then mass, then dictionary order.
    """
    region_arr = np.asarray(sorted(int(p) for p in region), dtype=int)
    if region_arr.size == 0 or space.mass[region_arr].sum() <= 0:
        raise InputError("patch search needs a region of positive mass", invariant="positive mass")
    candidates = _candidates(space, dictionary, region_arr, ladder, params)
    best_mass = max((c.mass for c in candidates), default=0.0)
    candidates.sort(key=lambda c: (-len(c.indices), -c.mass, c.indices))
    min_mass = params.min_patch_mass * space.total_mass

    def patches() -> Iterator[CoordinatePatch]:
        for candidate in candidates:
            coords = CoordinateTuple(tuple(dictionary[i] for i in candidate.indices))
            subset, differentials = _good_points(space, dictionary, coords, candidate.points, ladder, params)
            mass = float(space.mass[subset].sum())
            if subset.size and mass >= min_mass:
                yield CoordinatePatch(subset, coords, differentials, mass)

    return best_mass, patches()


def find_patch(
    space: MetricMeasureSpace,
    dictionary: Sequence[ScalarField],
    region: Sequence[int],
    ladder: ScaleLadder,
    params: Optional[AtlasParams] = None,
) -> Optional[CoordinatePatch]:
    """
    Coordinate patch of maximal size inside the region; ties go to the larger
    mass, then to dictionary order.
    """
    _, patches = _ranked_patches(space, dictionary, region, ladder, params or AtlasParams())
    patch = next(patches, None)
    if patch is not None:
        logger.info("Patch found", coords=patch.coords.labels, dimension=patch.dimension, mass=patch.mass)
    return patch


def build_structure(
    space: MetricMeasureSpace,
    dictionary: Sequence[ScalarField],
    ladder: ScaleLadder,
    params: Optional[AtlasParams] = None,
    strict: bool = False,
) -> Atlas:
    """
    Greedy atlas: each round accepts the first patch, in find_patch order, whose
    mass is at least half the best independence mass found on the uncovered
    region, until the uncovered mass is within the slack. A stall returns the
    partial atlas flagged, or raises when ``strict``.
    """
    params = params or AtlasParams()
    labels = tuple(f.label for f in dictionary)
    total = space.total_mass
    covered = np.zeros(space.size, dtype=bool)
    patches: List[CoordinatePatch] = []
    stalled = False
    log = logger.bind(**log_context(operation="atlas", dictionary=",".join(labels) or None))
    if not dictionary:
        return Atlas([], total, total, labels)
    for _ in range(space.size):
        uncovered = float(space.mass[~covered].sum())
        if uncovered <= params.slack * total:
            break
        best_mass, ranked = _ranked_patches(space, dictionary, np.flatnonzero(~covered), ladder, params)
        patch = next((p for p in ranked if p.mass >= 0.5 * best_mass), None)
        if patch is None:
            stalled = True
            log.warning("Atlas stalled", uncovered_fraction=uncovered / total)
            break
        patches.append(patch)
        covered[patch.subset] = True
        log.debug("Patch accepted", dimension=patch.dimension, mass=patch.mass, best_mass=best_mass)
    atlas = Atlas(patches, float(space.mass[~covered].sum()), total, labels, stalled)
    if stalled and strict:
        raise AtlasStallError(
            "no qualifying patch on the uncovered region",
            uncovered_fraction=atlas.uncovered_fraction,
            patches=len(patches),
        )
    return atlas
