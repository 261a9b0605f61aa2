"""
`atlas`: greedy coordinate patches from a function dictionary.
"""

from pathlib import Path
from typing import Optional

import typer

from src.analysis.atlas import AtlasParams, build_structure
from src.cli.common import (
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
    resolve_config,
)
from src.space.fields import default_dictionary


@handle_errors
def command(
    space_path: Path = SpaceOption,
    dictionary: Optional[str] = typer.Option(
        None, "--dictionary", help="Field specs separated by ';' (default: coordinates or distance fields)"
    ),
    tol: Optional[float] = typer.Option(None, "--tol", help="Residual tolerance relative to each LIP"),
    slack: Optional[float] = typer.Option(None, "--slack", help="Uncovered mass fraction allowed"),
    max_tuple: Optional[int] = typer.Option(None, "--max-tuple", help="Largest coordinate tuple tried"),
    strict: bool = typer.Option(False, "--strict", help="Exit 3 when the construction stalls"),
    csv_dir: Optional[Path] = typer.Option(None, "--csv-dir", help="Directory for per-patch differential CSVs"),
    ratio: Optional[float] = RatioOption,
    floor: Optional[float] = FloorOption,
    seed: Optional[int] = SeedOption,
    threads: Optional[int] = ThreadsOption,
    out: Optional[Path] = OutOption,
) -> None:
    """Build a measurable differentiable structure on the space."""
    config = resolve_config(
        space_path=str(space_path),
        atlas_residual_tol=tol,
        slack=slack,
        max_tuple=max_tuple,
        dictionary=dictionary,
        strict=strict,
        ratio=ratio,
        floor=floor,
        seed=seed,
        threads=threads,
    )
    space, ladder, _ = load_run(config)
    fields = parse_fields(space, dictionary, config.seed)
    if dictionary is None:
        fields = default_dictionary(space)
    params = AtlasParams.from_config(config)
    atlas = build_structure(space, fields, ladder, params, strict=config.strict)
    if csv_dir is not None:
        for k, patch in enumerate(atlas.patches):
            header = ["function", "point", *[f"df[{label}]" for label in patch.coords.labels], "residual"]
            rows = [
                [label, d.point, *d.df, d.residual]
                for label, solved in patch.differentials.items()
                for d in solved
            ]
            emit_csv(header, rows, csv_dir / f"patch_{k}.csv")
    emit(envelope("atlas", config, space, atlas.to_dict()), out)
