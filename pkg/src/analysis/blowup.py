"""
Pointed rescalings of a space, rescaled (tangent) functions, and the
diagnostics that stand in for blow-up limits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.analysis.lipschitz import global_lip, lip_percentile, liplip_ratio_field, variation_table
from src.analysis.quasilinear import quasilinearity_constant
from src.core.errors import InputError
from src.core.logging import get_logger
from src.space.fields import ScalarField
from src.space.metric_space import MetricMeasureSpace, ScaleLadder, ScaleWindow, ball

logger = get_logger(__name__)

EXACT_RADIUS = 1e-12


@dataclass(frozen=True)
class PointedRescaling:
    """The ball B(x, R*scale) with metric d/scale; ``members`` maps view ids back to the space."""

    base: int
    scale: float
    radius: float
    members: Tuple[int, ...]
    view: MetricMeasureSpace

    @property
    def base_index(self) -> int:
        return self.members.index(self.base)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "base": self.base,
            "scale": self.scale,
            "radius": self.radius,
            "members": list(self.members),
            "points": self.view.size,
            "diameter": self.view.diameter(),
        }


def rescale(space: MetricMeasureSpace, x: int, r_k: float, R: float) -> PointedRescaling:
    if not (r_k > 0 and R > 0):
        raise InputError("rescaling needs r_k > 0 and R > 0", invariant="scale", r_k=r_k, R=R)
    members = ball(space, x, R * r_k)
    if members.size == 0:
        raise InputError("rescaling ball is empty", invariant="nonempty ball")
    view = space.subspace(
        members, scale=r_k, normalize_mass=True, label=f"{space.label}@{x}/{r_k:g}"
    )
    return PointedRescaling(int(x), float(r_k), float(R), tuple(int(m) for m in members), view)


def tangent_function(
    space: MetricMeasureSpace, f: ScalarField, x: int, r_k: float, R: float
) -> Tuple[PointedRescaling, ScalarField]:
    """(f(y) - f(x)) / r_k on the pointed rescaling at x."""
    rescaling = rescale(space, x, r_k, R)
    members = np.array(rescaling.members)
    values = (f.values[members] - f.values[x]) / r_k
    return rescaling, ScalarField(values, f"tangent({f.label})")


def var_sandwich_check(
    space: MetricMeasureSpace,
    f: ScalarField,
    x: int,
    ladder: ScaleLadder,
    R_list: Sequence[float],
    window: Optional[ScaleWindow] = None,
    delta: float = 0.0,
) -> Dict[str, Any]:
    """
    var in the view at radius R against var_{x, R*r_k} f and the lip/Lip of x.

    Rows whose R*r_k is a window ladder radius must satisfy lip <= var <= Lip
    exactly; other rows inside the window are checked with slack ``delta``.
    """
    window = window or ladder.default_window()
    radii = ladder.window_radii(window)
    table, counts = variation_table(space, f.values, radii, [x])
    live = counts[0] > 1
    lip = float(table[0, live, 0].min()) if live.any() else 0.0
    Lip = float(table[0, live, 0].max()) if live.any() else 0.0

    rows: List[Dict[str, Any]] = []
    exact_ok = True
    loose_ok = True
    for r_k in ladder.radii:
        for R in R_list:
            rescaling, tangent = tangent_function(space, f, x, r_k, R)
            base = rescaling.base_index
            view_ball = ball(rescaling.view, base, R)
            view_var = float(np.abs(tangent.values[view_ball] - tangent.values[base]).max() / R)
            rho = R * r_k
            match = [k for k, r in enumerate(radii) if abs(r - rho) <= EXACT_RADIUS * r]
            in_window = window.contains(rho)
            row: Dict[str, Any] = {
                "r_k": r_k,
                "R": R,
                "radius": rho,
                "var_view": view_var,
                "in_window": in_window,
                "exact": bool(match),
            }
            if match and live[match[0]]:
                var = float(table[0, match[0], 0])
                row["var"] = var
                row["bracketed"] = lip <= var <= Lip
                exact_ok &= row["bracketed"]
            elif in_window and view_ball.size > 1:
                row["var"] = view_var
                row["bracketed"] = lip - delta <= view_var <= Lip + delta
                loose_ok &= row["bracketed"]
            rows.append(row)
    return {
        "point": int(x),
        "lip": lip,
        "Lip": Lip,
        "delta": delta,
        "exact_holds": exact_ok,
        "loose_holds": loose_ok,
        "rows": rows,
    }


def _anchored_net(view: MetricMeasureSpace, base: int, c: float) -> List[int]:
    """Greedy c-net taking the base point first, then ascending ids."""
    order = [base] + [p for p in view.points if p != base]
    covered = np.zeros(view.size, dtype=bool)
    members: List[int] = []
    for p in order:
        if covered[p]:
            continue
        members.append(p)
        covered |= view.distances(p) < c
    return members


def _one_way(a: PointedRescaling, b: PointedRescaling, c: float) -> float:
    va, vb = a.view, b.view
    net_a = _anchored_net(va, a.base_index, c)
    net_b = _anchored_net(vb, b.base_index, c)
    from_a = va.distances(a.base_index, np.array(net_a))
    from_b = vb.distances(b.base_index, np.array(net_b))
    order = sorted(range(len(net_a)), key=lambda i: (from_a[i], net_a[i]))
    free = list(range(len(net_b)))
    pairs: List[Tuple[int, int]] = []
    for i in order:
        if not free:
            break
        j = min(free, key=lambda k: (abs(from_b[k] - from_a[i]), net_b[k]))
        free.remove(j)
        pairs.append((net_a[i], net_b[j]))

    matched_a = np.array([p for p, _ in pairs], dtype=int)
    matched_b = np.array([q for _, q in pairs], dtype=int)
    distortion = 0.0
    if matched_a.size:
        distortion = float(
            np.abs(va.block(matched_a, matched_a) - vb.block(matched_b, matched_b)).max()
        )
    cover = 0.0
    for view, net, matched in ((va, net_a, matched_a), (vb, net_b, matched_b)):
        rest = np.array(sorted(set(net) - set(matched.tolist())), dtype=int)
        if rest.size and matched.size:
            cover = max(cover, float(view.block(rest, matched).min(axis=1).max()))
        elif rest.size:
            cover = max(cover, view.diameter())
    return distortion + cover


def net_distortion(a: PointedRescaling, b: PointedRescaling, c: float) -> float:
    """
    Finite pointed-Hausdorff surrogate at resolution c: greedy c-nets matched
    outward from the base points; max metric distortion over matched pairs
    plus the larger cover radius of unmatched net points. Symmetric.
    """
    if not c > 0:
        raise InputError("net spacing must be positive", invariant="spacing", spacing=c)
    return max(_one_way(a, b, c), _one_way(b, a, c))


def tangent_quasilinearity(
    space: MetricMeasureSpace,
    f: ScalarField,
    x: int,
    ladder: ScaleLadder,
    r_k: float,
    R: float,
    window: Optional[ScaleWindow] = None,
) -> Dict[str, Any]:
    """QL constant of the tangent function next to the measured Lip/lip ratio of f."""
    rescaling, tangent = tangent_function(space, f, x, r_k, R)
    view_ladder = ScaleLadder.for_space(rescaling.view, ratio=ladder.ratio)
    report = quasilinearity_constant(rescaling.view, tangent, view_ladder)
    profile = liplip_ratio_field(space, f, ladder, window)
    return {
        "point": int(x),
        "r_k": r_k,
        "R": R,
        "view_global_lip": global_lip(rescaling.view, tangent),
        "quasilinearity": report.to_dict(),
        "liplip_ratio_at_point": float(profile.ratio[x]),
        "liplip_ratio_p95": lip_percentile(profile, space.mass),
    }
