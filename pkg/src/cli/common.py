"""
Shared plumbing for the CLI commands: config resolution, space loading,
error-to-exit-code mapping and deterministic report output.
"""

import functools
import json
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import typer
from pydantic import ValidationError

from src.core.config import RunConfig
from src.core.errors import InputError, MMSLabError
from src.core.logging import bind_command, get_logger
from src.core.parallel import set_worker_threads
from src.space.fields import ScalarField, parse_field_spec, sample_points
from src.space.io import dumps_report, load_space, rows_to_csv, write_text
from src.space.metric_space import MetricMeasureSpace, ScaleLadder, ScaleWindow

logger = get_logger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

# Options shared by every command that reads a space
SpaceOption = typer.Option(..., "--space", "-s", help="Space JSON file")
RatioOption = typer.Option(None, "--ratio", help="Ladder ratio in (0, 1)")
RMaxOption = typer.Option(None, "--r-max", help="Largest ladder radius (default: diameter)")
FloorOption = typer.Option(None, "--floor", help="Ladder floor (default: grid step or nn-distance)")
WindowLoOption = typer.Option(None, "--window-lo", help="Window lower end, in multiples of the floor")
WindowHiOption = typer.Option(None, "--window-hi", help="Window upper end, in multiples of the floor")
SeedOption = typer.Option(None, "--seed", help="Seed for all sampled probes and pairs")
OutOption = typer.Option(None, "--out", "-o", help="Write the JSON report here instead of stdout")
CsvOption = typer.Option(None, "--csv", help="Write the CSV table here")
ThreadsOption = typer.Option(None, "--threads", help="Worker threads for per-point work")
CentersOption = typer.Option(
    None, "--centers", help="Sample this many ball centers (default: every point)"
)


def handle_errors(fn: F) -> F:
    """Map library errors to exit codes 2 (input) and 3 (computation)."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            bind_command(fn.__module__.rsplit(".", 1)[-1])
            return fn(*args, **kwargs)
        except MMSLabError as exc:
            logger.error("Command failed", error=type(exc).__name__, message=exc.message)
            typer.echo(json.dumps(exc.to_dict(), sort_keys=True, default=str), err=True)
            raise typer.Exit(code=exc.exit_code)

    return wrapper  # type: ignore[return-value]


def resolve_config(**overrides: Any) -> RunConfig:
    try:
        return RunConfig.resolve(**overrides)
    except ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "config"
        raise InputError(f"invalid option {field}: {first['msg']}", invariant=field) from exc


def load_run(config: RunConfig) -> Tuple[MetricMeasureSpace, ScaleLadder, ScaleWindow]:
    if config.space_path is None:
        raise InputError("no space file given", invariant="input file")
    set_worker_threads(config.threads)
    space = load_space(config.space_path)
    ladder = ScaleLadder.for_space(space, ratio=config.ratio, r_max=config.r_max, floor=config.floor)
    window = ladder.default_window(config.window_lo, config.window_hi)
    logger.debug("Run loaded", points=space.size, radii=len(ladder.radii), threads=config.threads)
    return space, ladder, window


def run_centers(space: MetricMeasureSpace, config: RunConfig) -> Optional[List[int]]:
    """Ball centers for PI and doubling constants: None means every point."""
    return None if config.centers is None else sample_points(space, config.centers)


def parse_ladder(text: Optional[str]) -> Dict[str, Optional[float]]:
    """``RATIO[,R_MAX[,FLOOR]]`` as ladder overrides; empty entries keep the defaults."""
    if not text:
        return {}
    parts = [part.strip() for part in text.split(",")]
    if len(parts) > 3:
        raise InputError(f"malformed ladder {text!r}: use RATIO[,R_MAX[,FLOOR]]", invariant="ladder")
    try:
        values = [float(part) if part else None for part in parts]
    except ValueError as exc:
        raise InputError(f"malformed ladder {text!r}", invariant="ladder") from exc
    values += [None] * (3 - len(values))
    return dict(zip(("ratio", "r_max", "floor"), values))


def parse_fields(space: MetricMeasureSpace, specs: Optional[str], seed: int) -> List[ScalarField]:
    """Semicolon-separated field specs, e.g. ``coord:0;coord:1;dist:0``."""
    if not specs:
        return []
    return [parse_field_spec(space, s.strip(), seed).check(space) for s in specs.split(";") if s.strip()]


def parse_floats(text: Optional[str]) -> List[float]:
    if not text:
        return []
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"malformed number list {text!r}", invariant="number list") from exc


def parse_ints(text: Optional[str]) -> List[int]:
    return [int(v) for v in parse_floats(text)]


def envelope(
    command: str, config: RunConfig, space: Optional[MetricMeasureSpace], result: Any
) -> Dict[str, Any]:
    """Every report carries the command, the fully resolved config and the space summary."""
    report: Dict[str, Any] = {"command": command, "config": config.echo(), "result": result}
    if space is not None:
        report["space"] = {"label": space.label, "points": space.size, "total_mass": space.total_mass}
    return report


def emit(report: Dict[str, Any], out: Optional[Path]) -> None:
    text = dumps_report(report)
    if out is None:
        typer.echo(text, nl=False)
    else:
        write_text(out, text)
        logger.info("Report written", path=str(out))


def emit_csv(header: Sequence[str], rows: Sequence[Sequence[Any]], path: Optional[Path]) -> None:
    if path is not None:
        write_text(path, rows_to_csv(header, rows))
