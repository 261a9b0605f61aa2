"""
`qc`: ε-path quasiconvexification of a pair, or the sampled quasiconvexity constant.
"""

from pathlib import Path
from typing import Any, Dict, Optional

import typer

from src.analysis.quasiconvex import quasiconvexify, quasiconvexity_constant, sample_pairs
from src.cli.common import (
    CsvOption,
    OutOption,
    SeedOption,
    SpaceOption,
    ThreadsOption,
    emit,
    emit_csv,
    envelope,
    handle_errors,
    load_run,
    resolve_config,
)
from src.core.errors import InputError


@handle_errors
def command(
    space_path: Path = SpaceOption,
    eps: float = typer.Option(..., "--eps", help="Resolution: every path step is shorter than eps"),
    source: Optional[int] = typer.Option(None, "--from", help="Start point"),
    target: Optional[int] = typer.Option(None, "--to", help="End point"),
    pairs: Optional[int] = typer.Option(
        None, "--pairs", help="Number of sampled pairs when --from/--to are absent (default 20)"
    ),
    max_rounds: Optional[int] = typer.Option(
        None, "--max-rounds", help="Gap-filling rounds before giving up (default 50)"
    ),
    seed: Optional[int] = SeedOption,
    threads: Optional[int] = ThreadsOption,
    out: Optional[Path] = OutOption,
    csv: Optional[Path] = CsvOption,
) -> None:
    """Join points by ε-paths and measure the quasiconvexity constant."""
    config = resolve_config(
        space_path=str(space_path),
        eps=eps,
        source=source,
        target=target,
        pairs=pairs,
        max_rounds=max_rounds,
        seed=seed,
        threads=threads,
    )
    space, _, _ = load_run(config)
    if (config.source is None) != (config.target is None):
        raise InputError("--from and --to go together", invariant="point pair")
    assert config.eps is not None
    result: Dict[str, Any]
    if config.source is not None and config.target is not None:
        joined = quasiconvexify(space, config.source, config.target, config.eps, config.max_rounds)
        result = {
            "eps": config.eps,
            "from": config.source,
            "to": config.target,
            "vertices": list(joined.path.vertices),
            "length": joined.path.length,
            "distance": space.dist(config.source, config.target),
            "gap_totals": joined.gap_totals,
        }
        emit_csv(["round", "gap_total"], [[k, g] for k, g in enumerate(joined.gap_totals)], csv)
    else:
        report = quasiconvexity_constant(
            space, sample_pairs(space, config.pairs, config.seed), config.eps, config.max_rounds
        )
        result = report.to_dict()
        emit_csv(
            ["a", "b", "ratio"],
            [[a, b, r] for (a, b), r in zip(report.pairs, report.ratios)],
            csv,
        )
    emit(envelope("qc", config, space, result), out)
