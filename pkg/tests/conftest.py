"""
Test configuration and fixtures.
"""

import numpy as np
import pytest
from typer.testing import CliRunner

from src.space.generators import (
    cusp_pair,
    euclidean_grid,
    glued,
    heisenberg_word,
    laakso_like,
    sierpinski_gasket,
    snowflake,
)
from src.space.io import dump_space
from src.space.metric_space import MetricMeasureSpace, ScaleLadder


@pytest.fixture
def line():
    """Eleven unit-spaced points 0, 1, ..., 10 on the real line."""
    return MetricMeasureSpace(mass=np.ones(11), coords=np.arange(11.0), label="line", step=1.0)


@pytest.fixture
def line_ladder():
    """Ladder on the unit line snapped to the step: 7.5, 3.5, 1.5, 0.5."""
    return ScaleLadder.build(8.0, 0.5, floor=1.0, step=1.0)


@pytest.fixture
def lattice():
    """6 x 6 integer lattice in the plane."""
    ij = np.array([(i, j) for i in range(6) for j in range(6)], dtype=float)
    return MetricMeasureSpace(mass=np.ones(len(ij)), coords=ij, label="lattice", step=1.0)


@pytest.fixture
def grid1d():
    """101 points on [0, 1]."""
    return euclidean_grid(101, 1)


@pytest.fixture
def grid2d():
    """16 x 16 grid on the unit square."""
    return euclidean_grid(16, 2)


@pytest.fixture
def grid2d_ladder(grid2d):
    """Default ladder of the 16 x 16 grid."""
    return ScaleLadder.for_space(grid2d)


@pytest.fixture
def snowflake_line():
    """Snowflaked unit interval with exponent 1/2."""
    return snowflake(euclidean_grid(41, 1), 0.5)


@pytest.fixture
def segment_and_square():
    """Segment of 12 points glued at its right end to a corner of a 12 x 12 square."""
    return glued(euclidean_grid(12, 1), euclidean_grid(12, 2), [(11, 0)])


@pytest.fixture
def corpus(grid1d, snowflake_line, segment_and_square):
    """One small space of every generator kind, none above 2500 points."""
    return [
        grid1d,
        euclidean_grid(24, 2),
        snowflake_line,
        segment_and_square,
        cusp_pair(8),
        heisenberg_word(3),
        laakso_like(3),
        sierpinski_gasket(3),
    ]


@pytest.fixture
def runner():
    """CLI runner."""
    return CliRunner()


@pytest.fixture
def space_file(tmp_path):
    """Factory writing a space to a JSON file and returning its path."""

    def write(space, name="space.json"):
        path = tmp_path / name
        path.write_text(dump_space(space))
        return path

    return write
