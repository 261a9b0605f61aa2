"""
`report`: every analysis on one space, bundled with the resolved config.
"""

import math
from pathlib import Path
from typing import Any, Dict, Optional

import typer

from src.analysis.atlas import AtlasParams, build_structure
from src.analysis.poincare import pi_constant_estimate
from src.analysis.quasiconvex import quasiconvexity_constant, sample_pairs
from src.analysis.quasilinear import dimension_bound
from src.cli.commands.analyze import analyze_space
from src.cli.common import (
    CentersOption,
    FloorOption,
    OutOption,
    RatioOption,
    RMaxOption,
    SeedOption,
    SpaceOption,
    ThreadsOption,
    emit,
    envelope,
    handle_errors,
    load_run,
    parse_fields,
    resolve_config,
    run_centers,
)
from src.core.logging import get_logger
from src.space.fields import default_dictionary, default_probes

logger = get_logger(__name__)


@handle_errors
def command(
    space_path: Path = SpaceOption,
    dictionary: Optional[str] = typer.Option(None, "--dictionary", help="Atlas dictionary field specs"),
    eps: Optional[float] = typer.Option(None, "--eps", help="ε-path resolution (default: 1.5 x floor)"),
    pairs: Optional[int] = typer.Option(
        None, "--pairs", help="Sampled pairs for the quasiconvexity constant (default 20)"
    ),
    skip_atlas: bool = typer.Option(False, "--skip-atlas", help="Leave out the atlas construction"),
    centers: Optional[int] = CentersOption,
    ratio: Optional[float] = RatioOption,
    r_max: Optional[float] = RMaxOption,
    floor: Optional[float] = FloorOption,
    seed: Optional[int] = SeedOption,
    threads: Optional[int] = ThreadsOption,
    out: Optional[Path] = OutOption,
) -> None:
    """Lipschitz profiles, doubling, Poincaré, quasiconvexity, dimension bound and atlas."""
    config = resolve_config(
        space_path=str(space_path),
        dictionary=dictionary,
        eps=eps,
        pairs=pairs,
        centers=centers,
        ratio=ratio,
        r_max=r_max,
        floor=floor,
        seed=seed,
        threads=threads,
    )
    space, ladder, window = load_run(config)
    config = config.with_resolved(eps=config.eps or 1.5 * ladder.floor)
    assert config.eps is not None

    analysis = analyze_space(space, ladder, window, config)
    analysis.pop("_profiles")
    probes = default_probes(space, config.seed)
    pi = pi_constant_estimate(space, probes, ladder, config.p, config.dilation, run_centers(space, config))
    qc = quasiconvexity_constant(
        space, sample_pairs(space, config.pairs, config.seed), config.eps, config.max_rounds
    )

    K = max([p["ratio_p95"] for p in analysis["profiles"]] or [1.0])
    C = analysis["doubling"]["metric"]
    bound = dimension_bound(max(K, 1.0), max(C, 1.0)) if math.isfinite(K) else None

    result: Dict[str, Any] = {
        "analysis": analysis,
        "pi": pi.to_dict(),
        "quasiconvexity": qc.to_dict(),
        "dimension_bound": {"K": K, "C": C, "bound": bound},
    }
    if not skip_atlas:
        fields = parse_fields(space, dictionary, config.seed)
        if dictionary is None:
            fields = default_dictionary(space)
        params = AtlasParams.from_config(config)
        atlas = build_structure(space, fields, ladder, params)
        atlas_report = atlas.to_dict()
        for patch in atlas_report["patches"]:
            patch.pop("points")
        atlas_report["within_dimension_bound"] = bound is None or all(
            d <= bound for d in atlas_report["dimensions"]
        )
        result["atlas"] = atlas_report
    logger.info("Report assembled", space=space.label)
    emit(envelope("report", config, space, result), out)
