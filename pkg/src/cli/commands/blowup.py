"""
`blowup`: pointed rescalings at a point, var sandwiches and view distortions.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

import typer

from src.analysis.blowup import net_distortion, rescale, tangent_quasilinearity, var_sandwich_check
from src.cli.common import (
    CsvOption,
    FloorOption,
    OutOption,
    RatioOption,
    SeedOption,
    SpaceOption,
    ThreadsOption,
    emit,
    emit_csv,
    envelope,
    handle_errors,
    load_run,
    parse_floats,
    resolve_config,
)
from src.space.fields import parse_field_spec


@handle_errors
def command(
    space_path: Path = SpaceOption,
    point: int = typer.Option(..., "--point", "-x", help="Base point"),
    function: str = typer.Option(..., "--function", "-f", help="Field spec"),
    scales: Optional[str] = typer.Option(None, "--scales", help="Comma-separated r_k (default: window ladder radii)"),
    radii: Optional[str] = typer.Option(None, "--radii", help="Comma-separated view radii R (default 1,2)"),
    spacing: Optional[float] = typer.Option(None, "--spacing", help="Net resolution for view distortion (default 0.5)"),
    delta: Optional[float] = typer.Option(None, "--delta", help="Slack for off-ladder sandwich rows (default 0)"),
    ratio: Optional[float] = RatioOption,
    floor: Optional[float] = FloorOption,
    seed: Optional[int] = SeedOption,
    threads: Optional[int] = ThreadsOption,
    out: Optional[Path] = OutOption,
    csv: Optional[Path] = CsvOption,
) -> None:
    """Rescaled views of the space and function at one point."""
    config = resolve_config(
        space_path=str(space_path),
        point=point,
        function=function,
        view_scales=parse_floats(scales) or None,
        view_radii=parse_floats(radii) or None,
        view_spacing=spacing,
        delta=delta,
        ratio=ratio,
        floor=floor,
        seed=seed,
        threads=threads,
    )
    space, ladder, window = load_run(config)
    f = parse_field_spec(space, function, config.seed).check(space)
    x = space.check_point(point)
    config = config.with_resolved(view_scales=config.view_scales or list(ladder.window_radii(window)))
    r_list = config.view_scales or []
    R_list = config.view_radii
    R_top = max(R_list)

    views = [rescale(space, x, r_k, R_top) for r_k in r_list]
    distortions: List[Dict[str, Any]] = [
        {"r_k": a.scale, "next_r_k": b.scale, "distortion": net_distortion(a, b, config.view_spacing)}
        for a, b in zip(views[:-1], views[1:])
    ]
    sandwich = var_sandwich_check(space, f, x, ladder, R_list, window, config.delta)
    result: Dict[str, Any] = {
        "point": x,
        "views": [{k: v for k, v in view.to_dict().items() if k != "members"} for view in views],
        "distortions": distortions,
        "sandwich": sandwich,
    }
    if r_list:
        result["tangent"] = tangent_quasilinearity(space, f, x, ladder, r_list[-1], R_top, window)
    emit_csv(
        ["r_k", "R", "radius", "var_view", "in_window", "exact"],
        [[r["r_k"], r["R"], r["radius"], r["var_view"], int(r["in_window"]), int(r["exact"])] for r in sandwich["rows"]],
        csv,
    )
    emit(envelope("blowup", config, space, result), out)
