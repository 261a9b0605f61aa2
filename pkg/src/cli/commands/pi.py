"""
`pi`: empirical p-Poincaré constant over a probe family.
"""

from pathlib import Path
from typing import Optional

import typer

from src.analysis.poincare import pi_constant_estimate
from src.cli.common import (
    CentersOption,
    CsvOption,
    FloorOption,
    OutOption,
    RatioOption,
    RMaxOption,
    SeedOption,
    SpaceOption,
    ThreadsOption,
    emit,
    emit_csv,
    envelope,
    handle_errors,
    load_run,
    parse_fields,
    parse_ladder,
    resolve_config,
    run_centers,
)
from src.space.fields import default_probes


@handle_errors
def command(
    space_path: Path = SpaceOption,
    p: Optional[float] = typer.Option(None, "--p", help="Exponent p >= 1"),
    dilation: Optional[float] = typer.Option(None, "--dilation", help="Dilation of the right-hand ball"),
    probes: Optional[str] = typer.Option(
        None, "--probes", help="Probe field specs separated by ';' (default: probe family)"
    ),
    ladder_spec: Optional[str] = typer.Option(
        None, "--ladder", help="Scale ladder as RATIO[,R_MAX[,FLOOR]]; overrides --ratio/--r-max/--floor"
    ),
    centers: Optional[int] = CentersOption,
    ratio: Optional[float] = RatioOption,
    r_max: Optional[float] = RMaxOption,
    floor: Optional[float] = FloorOption,
    seed: Optional[int] = SeedOption,
    threads: Optional[int] = ThreadsOption,
    out: Optional[Path] = OutOption,
    csv: Optional[Path] = CsvOption,
) -> None:
    """Estimate the Poincaré constant (a lower bound: only the probes are tested)."""
    ladder_overrides = {"ratio": ratio, "r_max": r_max, "floor": floor}
    ladder_overrides.update({k: v for k, v in parse_ladder(ladder_spec).items() if v is not None})
    config = resolve_config(
        space_path=str(space_path),
        p=p,
        dilation=dilation,
        dictionary=probes,
        centers=centers,
        seed=seed,
        threads=threads,
        **ladder_overrides,
    )
    space, ladder, _ = load_run(config)
    fields = parse_fields(space, probes, config.seed) or default_probes(space, config.seed)
    report = pi_constant_estimate(
        space,
        fields,
        ladder,
        p=config.p,
        dilation=config.dilation,
        centers=run_centers(space, config),
    )
    emit_csv(
        ["center", "radius", "probe", "lhs", "rhs", "ratio"],
        [[r["center"], r["radius"], r["probe"], r["lhs"], r["rhs"], r["ratio"]] for r in report.ratio_table],
        csv,
    )
    emit(envelope("pi", config, space, report.to_dict()), out)
