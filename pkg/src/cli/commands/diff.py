"""
`diff`: Chebyshev-optimal differentials of a function against a coordinate tuple.
"""

from pathlib import Path
from typing import Optional

import typer

from src.analysis.differentiation import CoordinateTuple, differential_field, independence_set
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
    parse_fields,
    parse_floats,
    resolve_config,
)
from src.core.errors import InputError
from src.space.fields import coordinate_fields, parse_field_spec
from src.space.metric_space import ball


@handle_errors
def command(
    space_path: Path = SpaceOption,
    function: str = typer.Option(..., "--function", "-f", help="Field spec of the function"),
    coords: Optional[str] = typer.Option(
        None, "--coords", help="Coordinate field specs separated by ';' (default: coordinate fields)"
    ),
    radius_rule: Optional[str] = typer.Option(
        None,
        "--radius-rule",
        "--radius",
        help="'auto' (smallest ladder radius with 3N points) or a fixed ball radius",
    ),
    region: Optional[str] = typer.Option(None, "--region", help="Restrict to the ball 'center,radius'"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Residual tolerance for the good-mass fraction"),
    independence: bool = typer.Option(False, "--independence", help="Also report Ind(coords)"),
    ratio: Optional[float] = RatioOption,
    floor: Optional[float] = FloorOption,
    seed: Optional[int] = SeedOption,
    threads: Optional[int] = ThreadsOption,
    out: Optional[Path] = OutOption,
    csv: Optional[Path] = CsvOption,
) -> None:
    """Per-point df, residual and radius, with a mass-fraction summary."""
    config = resolve_config(
        space_path=str(space_path),
        function=function,
        dictionary=coords,
        region=region,
        radius_rule=radius_rule,
        residual_tol=tol,
        ratio=ratio,
        floor=floor,
        seed=seed,
        threads=threads,
    )
    space, ladder, window = load_run(config)
    f = parse_field_spec(space, function, config.seed).check(space)
    fields = parse_fields(space, coords, config.seed) or coordinate_fields(space)
    if not fields:
        raise InputError("no coordinate fields: pass --coords", invariant="tuple size")
    tuple_ = CoordinateTuple(tuple(fields))
    points = None
    if region is not None:
        parts = parse_floats(region)
        if len(parts) != 2:
            raise InputError("--region needs 'center,radius'", invariant="ball")
        points = [int(p) for p in ball(space, int(parts[0]), parts[1])]
    solved = differential_field(space, f, tuple_, ladder, points, config.fixed_radius, config.residual_tol)
    result = solved.summary()
    if independence:
        ind = independence_set(space, tuple_, ladder, config.dependence_tol, window, points, config.seed)
        result["independence"] = {"points": int(ind.points.size), "mass_fraction": ind.mass_fraction}
    emit_csv(
        ["point", *[f"df[{label}]" for label in tuple_.labels], "residual", "radius", "degenerate"],
        solved.rows(),
        csv,
    )
    emit(envelope("diff", config, space, result), out)
