"""
Tests for the corpus generators.
"""

import math

import numpy as np
import pytest

from src.core.errors import InputError
from src.space.generators import (
    cusp_pair,
    euclidean_grid,
    generate,
    glued,
    heisenberg_growth_exponent,
    heisenberg_word,
    laakso_like,
    sierpinski_gasket,
    snowflake,
)
from src.space.io import distance_hash
from src.space.metric_space import ball


class TestEuclideanGrid:
    """Regular lattices on the unit cube."""

    def test_row_major_layout(self):
        """The first axis varies slowest."""
        grid = euclidean_grid(3, 2)
        assert grid.size == 9
        assert grid.coords[1].tolist() == [0.0, 0.5]
        assert grid.coords[3].tolist() == [0.5, 0.0]
        assert grid.step == pytest.approx(0.5)

    def test_diameter(self):
        """Diagonal of the unit square."""
        assert euclidean_grid(5, 2).diameter() == pytest.approx(math.sqrt(2))

    def test_uniform_mass(self):
        """Every grid point weighs one."""
        assert np.all(euclidean_grid(4, 3).mass == 1.0)


class TestDerivedSpaces:
    """Snowflakes and gluings."""

    def test_snowflake_distances(self):
        """Distances are raised to alpha and the result is still a metric."""
        base = euclidean_grid(9, 1)
        flake = snowflake(base, 0.5)
        flake.validate()
        assert flake.dist(0, 8) == pytest.approx(1.0)
        assert flake.dist(0, 2) == pytest.approx(math.sqrt(0.25))

    def test_glued_segment_and_square(self):
        """Distances across the glue add up through the glue point."""
        space = glued(euclidean_grid(5, 1), euclidean_grid(3, 2), [(4, 0)])
        assert space.size == 13
        assert space.dist(0, 12) == pytest.approx(1.0 + math.sqrt(2))
        assert space.mass[4] == 2.0
        assert space.total_mass == 14.0

    def test_glued_side_coordinates(self):
        """Side coordinates vanish at the glue and across the other side."""
        space = glued(euclidean_grid(5, 1), euclidean_grid(3, 2), [(4, 0)])
        assert space.coords.shape == (13, 3)
        assert np.all(space.coords[4] == 0.0)
        assert np.all(space.coords[5:, 0] == 0.0)
        assert np.all(space.coords[:5, 1:] == 0.0)

    def test_glued_multiple_pairs(self):
        """Two glue pairs between two segments shorten paths through either one."""
        a = euclidean_grid(5, 1)
        space = glued(a, a, [(0, 0), (4, 4)])
        space.validate()
        assert space.size == 8
        assert space.dist(0, 4) == pytest.approx(1.0)

    def test_glued_side_metrics_never_grow(self):
        """Gluing only shortens distances within each side."""
        a, b = euclidean_grid(3, 1), euclidean_grid(3, 2)
        space = glued(a, b, [(0, 0), (2, 8)])
        space.validate()
        a_ids = [0, 1, 2]
        b_ids = [0, 3, 4, 5, 6, 7, 8, 9, 2]
        assert np.all(space.block(a_ids, a_ids) <= a.dense() + 1e-12)
        assert np.all(space.block(b_ids, b_ids) <= b.dense() + 1e-12)
        # the corners of the square are one segment apart
        assert space.dist(0, 2) == pytest.approx(1.0)
        assert b.dist(0, 8) == pytest.approx(math.sqrt(2))

    def test_cusp_pair(self):
        """Two 4 x 4 squares sharing one corner."""
        space = cusp_pair(4)
        assert space.size == 31
        assert space.diameter() == pytest.approx(2 * math.sqrt(2))
        assert space.step == pytest.approx(1.0 / 3)


class TestGraphSpaces:
    """Heisenberg word metric, diamond graphs and gaskets."""

    def test_heisenberg_radius_one(self):
        """Identity and the four generators."""
        space = heisenberg_word(1)
        assert space.size == 5
        assert space.diameter() == 2.0
        space.validate()

    def test_heisenberg_elements_sorted_by_length(self):
        """The identity comes first, then elements by word length."""
        space = heisenberg_word(2)
        assert space.coords[0].tolist() == [0.0, 0.0, 0.0]
        lengths = space.dist_matrix[0]
        assert np.all(np.diff(lengths) >= 0)

    def test_heisenberg_growth(self):
        """|B(8)| / |B(4)| grows with an exponent near four."""
        exponent = heisenberg_growth_exponent(8)
        assert exponent == pytest.approx(math.log2(1793 / 135))
        assert 3.2 <= exponent <= 4.8

    def test_heisenberg_radius_eight_metric(self):
        """The dense word metric at R = 8 reproduces the ball counts."""
        space = heisenberg_word(8)
        assert space.size == 1793
        inner = ball(space, 0, 4.5).size
        outer = ball(space, 0, 8.5).size
        assert (inner, outer) == (135, 1793)
        assert 3.2 <= math.log2(outer / inner) <= 4.8
        assert space.diameter() == 16.0

    def test_laakso_like_level_two(self):
        """Diamond graph with 12 vertices and poles four edges apart."""
        space = laakso_like(2)
        assert space.size == 12
        assert space.dist(0, 1) == 4.0
        assert space.diameter() == 4.0
        space.validate()

    @pytest.mark.parametrize(
        "level, digest",
        [
            (0, "3f6cc0ebf450c743d48d86ae914fb959a3b04c9f1cc8f586f63e0c11ad948118"),
            (1, "331a0e1b0b09153e5accafe58611fc70a9789ac71b6bef98e7e9c7257665f2a0"),
            (2, "f06e33a794763d20917b95b39ef2964e4b0da3f07bab6087c7aba2893dd416e5"),
            (3, "ca78fc473c8d7ffa97763b74674b5f52927919f0efb7b254766c16beb99677f6"),
            (4, "6ee237a56950fece40c674a2f9ca5665b19326596822cdc68e24c3923c05e44b"),
        ],
    )
    def test_laakso_like_golden_hash(self, level, digest):
        """Diamond graphs at fixed depths keep their distance matrices."""
        space = laakso_like(level)
        assert space.size == 2 + sum(2 * 4**k for k in range(level))
        assert distance_hash(space) == digest

    def test_distance_hash_sees_rescaling(self):
        """Scaling the metric changes the hash; rebuilding does not."""
        space = laakso_like(2)
        assert distance_hash(laakso_like(2)) == distance_hash(space)
        assert distance_hash(space.rescaled(2.0)) != distance_hash(space)

    def test_sierpinski_gasket(self):
        """Vertex counts (3**(k+1) + 3) / 2."""
        assert sierpinski_gasket(1).size == 6
        assert sierpinski_gasket(2).size == 15
        sierpinski_gasket(2).validate()


class TestGenerate:
    """Spec-driven generation."""

    def test_deterministic(self):
        """The same spec yields identical spaces."""
        spec = {"kind": "snowflake", "params": {"alpha": 0.5, "base": {"kind": "euclidean_grid", "params": {"n": 7}}}}
        a, b = generate(spec), generate(spec)
        assert np.array_equal(a.dense(), b.dense())
        assert a.label == b.label

    def test_nested_glued(self):
        """Glued specs nest generator specs."""
        space = generate(
            {
                "kind": "glued",
                "params": {
                    "a": {"kind": "euclidean_grid", "params": {"n": 4}},
                    "b": {"kind": "euclidean_grid", "params": {"n": 3, "dim": 2}},
                    "pairs": [[3, 0]],
                },
            }
        )
        assert space.size == 12

    def test_unknown_kind(self):
        """Unknown generator kinds are input errors."""
        with pytest.raises(InputError):
            generate({"kind": "torus", "params": {}})

    def test_bad_params(self):
        """Out-of-range parameters are input errors."""
        with pytest.raises(InputError):
            generate({"kind": "euclidean_grid", "params": {"n": 0}})
        with pytest.raises(InputError):
            generate({"kind": "cusp_pair", "params": {"n": 100}})
