"""
`analyze`: Lipschitz profiles and doubling constants of a space.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

import typer

from src.analysis.lipschitz import eps_good_pairs, lip_percentile, liplip_ratio_field
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
    WindowHiOption,
    WindowLoOption,
    emit,
    emit_csv,
    envelope,
    handle_errors,
    load_run,
    parse_fields,
    resolve_config,
    run_centers,
)
from src.core.config import RunConfig
from src.space.fields import default_probes
from src.space.metric_space import (
    MetricMeasureSpace,
    ScaleLadder,
    ScaleWindow,
    measure_doubling_constant,
    metric_doubling_constant,
)


def analyze_space(
    space: MetricMeasureSpace,
    ladder: ScaleLadder,
    window: ScaleWindow,
    config: RunConfig,
) -> Dict[str, Any]:
    fields = parse_fields(space, config.function, config.seed) or default_probes(space, config.seed)
    centers = run_centers(space, config)
    profiles = [liplip_ratio_field(space, f, ladder, window) for f in fields]
    result: Dict[str, Any] = {
        "ladder": list(ladder.radii),
        "window": [window.lo, window.hi],
        "doubling": {
            "measure": measure_doubling_constant(space, ladder, centers=centers),
            "measure_coarse": measure_doubling_constant(space, ladder, exclude_fine=True, centers=centers),
            "metric": metric_doubling_constant(space, ladder, exclude_fine=True, centers=centers),
        },
        "profiles": [],
    }
    for profile in profiles:
        summary = profile.summary()
        summary["ratio_p95"] = lip_percentile(profile, space.mass, config.mass_fraction)
        if config.good_eps is not None:
            good = eps_good_pairs(profile, config.good_ratio, config.good_eps)
            summary["eps_good_fraction"] = float(good.mean())
        result["profiles"].append(summary)
    result["_profiles"] = profiles
    return result


def profile_rows(profiles: List[Any]) -> List[List[Any]]:
    rows: List[List[Any]] = []
    for profile in profiles:
        for x in range(profile.lip.size):
            rows.append(
                [
                    profile.label,
                    x,
                    float(profile.lip[x]),
                    float(profile.Lip[x]),
                    float(profile.ratio[x]),
                    *[float(v) for v in profile.variation[x]],
                ]
            )
    return rows


@handle_errors
def command(
    space_path: Path = SpaceOption,
    function: Optional[str] = typer.Option(
        None, "--function", "-f", help="Field specs separated by ';' (default: probe family)"
    ),
    eps: Optional[float] = typer.Option(None, "--eps", help="Report ε-good (point, scale) fractions"),
    K: Optional[float] = typer.Option(None, "--K", help="Lip/lip bound used for ε-good pairs (default 2)"),
    centers: Optional[int] = CentersOption,
    ratio: Optional[float] = RatioOption,
    r_max: Optional[float] = RMaxOption,
    floor: Optional[float] = FloorOption,
    window_lo: Optional[float] = WindowLoOption,
    window_hi: Optional[float] = WindowHiOption,
    seed: Optional[int] = SeedOption,
    threads: Optional[int] = ThreadsOption,
    out: Optional[Path] = OutOption,
    csv: Optional[Path] = CsvOption,
) -> None:
    """Pointwise lip / Lip profiles, their ratio and the doubling constants."""
    config = resolve_config(
        space_path=str(space_path),
        ratio=ratio,
        r_max=r_max,
        floor=floor,
        window_lo=window_lo,
        window_hi=window_hi,
        function=function,
        good_eps=eps,
        good_ratio=K,
        centers=centers,
        seed=seed,
        threads=threads,
    )
    space, ladder, window = load_run(config)
    result = analyze_space(space, ladder, window, config)
    profiles = result.pop("_profiles")
    radii = ladder.window_radii(window)
    emit_csv(
        ["field", "point", "lip", "Lip", "ratio", *[f"var@{r:.12g}" for r in radii]],
        profile_rows(profiles),
        csv,
    )
    emit(envelope("analyze", config, space, result), out)
