"""
`dim`: span rank on a net, net restriction bounds and the dimension bound.
"""

import math
from pathlib import Path
from typing import Optional

import typer

from src.analysis.lipschitz import lip_percentile, liplip_ratio_field
from src.analysis.quasilinear import dimension_bound, net_restriction_bound, span_rank_on_net
from src.cli.common import (
    CentersOption,
    OutOption,
    SeedOption,
    SpaceOption,
    ThreadsOption,
    emit,
    envelope,
    handle_errors,
    load_run,
    parse_fields,
    parse_floats,
    resolve_config,
    run_centers,
)
from src.core.errors import InputError
from src.space.fields import coordinate_fields
from src.space.metric_space import Ball, metric_doubling_constant


@handle_errors
def command(
    space_path: Path = SpaceOption,
    ball_spec: str = typer.Option(..., "--ball", help="Ball as 'center,radius'"),
    spacing: float = typer.Option(..., "--spacing", help="Net spacing c"),
    fields: Optional[str] = typer.Option(
        None, "--fields", help="Field specs separated by ';' (default: coordinate fields)"
    ),
    K: Optional[float] = typer.Option(None, "--K", help="Lip/lip bound (default: measured p95 ratio)"),
    C: Optional[float] = typer.Option(None, "--C", help="Doubling constant (default: measured)"),
    centers: Optional[int] = CentersOption,
    seed: Optional[int] = SeedOption,
    threads: Optional[int] = ThreadsOption,
    out: Optional[Path] = OutOption,
) -> None:
    """Numeric rank of a function span restricted to a net, against (16 K)^log2(C)."""
    config = resolve_config(
        space_path=str(space_path),
        region=ball_spec,
        net_spacing=spacing,
        dictionary=fields,
        ratio_bound=K,
        doubling_bound=C,
        centers=centers,
        seed=seed,
        threads=threads,
    )
    space, ladder, window = load_run(config)
    parts = parse_floats(ball_spec)
    if len(parts) != 2:
        raise InputError("--ball needs 'center,radius'", invariant="ball")
    region = Ball(space.check_point(int(parts[0])), parts[1])
    basis = parse_fields(space, fields, config.seed) or coordinate_fields(space)
    assert config.net_spacing is not None
    rank, net = span_rank_on_net(space, basis, region, config.net_spacing, config.rank_tol)
    K = config.ratio_bound
    if K is None:
        K = max(
            [lip_percentile(liplip_ratio_field(space, f, ladder, window), space.mass, config.mass_fraction) for f in basis]
            or [1.0]
        )
    C = config.doubling_bound
    if C is None:
        C = metric_doubling_constant(space, ladder, exclude_fine=True, centers=run_centers(space, config))
    K, C = max(K, 1.0), max(C, 1.0)
    result = {
        "rank": rank,
        "net": list(net.members),
        "K": K,
        "C": C,
        "dimension_bound": dimension_bound(K, C) if math.isfinite(K) and math.isfinite(C) else None,
        "restriction": net_restriction_bound(space, net, basis, seed=config.seed),
    }
    emit(envelope("dim", config, space, result), out)
