"""
CLI application: registers every subcommand on one Typer app.
"""

from typing import Optional

import typer

from src.cli.commands import analyze, atlas, blowup, diff, dim, gen, pi, qc, report
from src.core.config import settings
from src.core.logging import setup_logging

app = typer.Typer(
    name=settings.PROJECT_NAME,
    help="Lipschitz analysis on finite metric measure spaces.",
    no_args_is_help=True,
    add_completion=False,
)

# Register command modules
app.command("gen")(gen.command)
app.command("analyze")(analyze.command)
app.command("pi")(pi.command)
app.command("qc")(qc.command)
app.command("dim")(dim.command)
app.command("diff")(diff.command)
app.command("atlas")(atlas.command)
app.command("blowup")(blowup.command)
app.command("report")(report.command)


@app.callback()
def main(
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Override MMSLAB_LOG_LEVEL"),
) -> None:
    """Configure logging before any subcommand runs."""
    setup_logging(log_level)
