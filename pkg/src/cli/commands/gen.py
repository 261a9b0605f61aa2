"""
`gen`: write a corpus space to a JSON file.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional

import typer

from src.cli.common import handle_errors
from src.core.errors import InputError
from src.core.logging import get_logger
from src.space.generators import MAX_DENSE_POINTS, generate
from src.space.io import distance_hash, dump_space, write_text

logger = get_logger(__name__)


def _spec_from_flags(
    kind: str,
    n: Optional[int],
    dim: Optional[int],
    alpha: Optional[float],
    level: Optional[int],
    radius: Optional[int],
) -> Dict[str, Any]:
    params: Dict[str, Any] = {}
    if kind == "euclidean_grid":
        params = {"n": n, "dim": dim or 1}
    elif kind == "snowflake":
        params = {
            "alpha": 0.5 if alpha is None else alpha,
            "base": {"kind": "euclidean_grid", "params": {"n": n, "dim": dim or 1}},
        }
    elif kind == "glued":
        side = n or 16
        params = {
            "a": {"kind": "euclidean_grid", "params": {"n": side, "dim": 1}},
            "b": {"kind": "euclidean_grid", "params": {"n": side, "dim": dim or 2}},
            "pairs": [[side - 1, 0]],
        }
    elif kind in ("laakso_like", "sierpinski_gasket"):
        params = {"level": level}
    elif kind == "heisenberg_word":
        params = {"radius": radius}
    elif kind == "cusp_pair":
        params = {"n": n}
    return {"kind": kind, "params": {k: v for k, v in params.items() if v is not None}}


@handle_errors
def command(
    kind: str = typer.Option(..., "--kind", "-k", help="Generator kind"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Space file to write (default: stdout)"),
    n: Optional[int] = typer.Option(None, "--n", help="Points per axis"),
    dim: Optional[int] = typer.Option(None, "--dim", help="Grid dimension"),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Snowflake exponent"),
    level: Optional[int] = typer.Option(None, "--level", help="Recursion level"),
    radius: Optional[int] = typer.Option(None, "--radius", help="Word-metric radius"),
    spec: Optional[str] = typer.Option(None, "--spec", help="Full generator spec as JSON"),
) -> None:
    """Generate a corpus space."""
    if spec is not None:
        try:
            data = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise InputError(f"--spec is not valid JSON: {exc}", invariant="generator params") from exc
        data.setdefault("kind", kind)
    else:
        data = _spec_from_flags(kind, n, dim, alpha, level, radius)
    space = generate(data)
    text = dump_space(space) + "\n"
    fingerprint = distance_hash(space) if space.size <= MAX_DENSE_POINTS else None
    if out is None:
        typer.echo(text, nl=False)
    else:
        write_text(out, text)
        logger.info("Space written", path=str(out), points=space.size, distance_hash=fingerprint)
