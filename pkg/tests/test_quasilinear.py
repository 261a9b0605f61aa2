"""
Tests for quasilinearity constants, dimension bounds and span ranks on nets.
"""

import numpy as np
import pytest

from src.analysis.quasilinear import (
    dimension_bound,
    net_restriction_bound,
    quasilinearity_constant,
    span_rank_on_net,
)
from src.core.errors import InputError
from src.space.fields import ScalarField, constant_field, coordinate_fields, parse_field_spec, sample_points
from src.space.metric_space import Ball, ScaleLadder, greedy_separated_net, metric_doubling_constant


class TestQuasilinearityConstant:
    """LIP(f) / min var over a ball family."""

    def test_constant_field(self, grid2d, grid2d_ladder):
        """Constants are 1-quasilinear by convention."""
        assert quasilinearity_constant(grid2d, constant_field(grid2d), grid2d_ladder).constant == 1.0

    def test_linear_interior(self, grid2d, grid2d_ladder):
        """3x - y is close to linear on interior balls."""
        h = grid2d.step
        interior = [
            x for x in grid2d.points
            if np.all((grid2d.coords[x] > 4 * h - 1e-9) & (grid2d.coords[x] < 1 - 4 * h + 1e-9))
        ]
        family = [(x, r) for x in interior for r in (1.5 * h, 2.5 * h, 3.5 * h)]
        report = quasilinearity_constant(grid2d, parse_field_spec(grid2d, "linear:3,-1"), grid2d_ladder, family)
        assert 1.0 <= report.constant <= 1.5

    def test_square_at_the_origin(self, grid1d, grid2d_ladder):
        """t**2 is flat near 0, so a small ball at the origin forces a large constant."""
        report = quasilinearity_constant(grid1d, parse_field_spec(grid1d, "square:0"), grid2d_ladder, [(0, 0.1)])
        assert report.constant >= 4.0
        assert report.witness_ball == (0, 0.1)

    def test_affine_invariance(self, grid2d, grid2d_ladder):
        """a f + b has the same constant."""
        f = parse_field_spec(grid2d, "dist:17")
        g = ScalarField(-2.0 * f.values + 3.0)
        family = [(x, 0.3) for x in (0, 50, 100, 200)]
        a = quasilinearity_constant(grid2d, f, grid2d_ladder, family).constant
        b = quasilinearity_constant(grid2d, g, grid2d_ladder, family).constant
        assert b == pytest.approx(a, rel=1e-12)

    def test_family_without_pairs(self, line, line_ladder):
        """A family of one-point balls is rejected."""
        with pytest.raises(InputError):
            quasilinearity_constant(line, ScalarField(line.coords[:, 0]), line_ladder, [(3, 0.5)])


class TestDimensionBound:
    """ceil((16 K) ** log2 C)."""

    def test_values(self):
        """Reference values."""
        assert dimension_bound(1.0, 2.0) == 16
        assert dimension_bound(5.0, 1.0) == 1
        assert dimension_bound(2.0, 4.0) == 1024

    def test_monotone(self):
        """Increasing in both arguments."""
        assert dimension_bound(1.5, 3.0) <= dimension_bound(2.0, 3.0) <= dimension_bound(2.0, 5.0)

    def test_invalid(self):
        """K, C < 1 or non-finite are rejected."""
        with pytest.raises(InputError):
            dimension_bound(0.5, 2.0)
        with pytest.raises(InputError):
            dimension_bound(float("inf"), 2.0)


class TestNets:
    """Span ranks and restriction bounds on greedy nets."""

    def test_span_rank(self, grid2d):
        """{x, y, x + y} spans a plane; constants span a line."""
        x, y = coordinate_fields(grid2d)
        region = Ball(119, 0.4)
        assert span_rank_on_net(grid2d, [x, y, x + y], region, 0.1)[0] == 2
        assert span_rank_on_net(grid2d, [x, y], region, 0.1)[0] == 2
        assert span_rank_on_net(grid2d, [constant_field(grid2d)], region, 0.1)[0] == 1

    def test_rank_bounded_by_net(self, grid2d):
        """The rank never exceeds the net size."""
        fields = [parse_field_spec(grid2d, f"dist:{z}") for z in (0, 15, 240, 255, 119)]
        rank, net = span_rank_on_net(grid2d, fields, Ball(0, 0.3), 0.25)
        assert rank <= len(net)

    def test_degenerate_ball(self, grid2d):
        """Zero-radius balls are rejected."""
        with pytest.raises(InputError):
            span_rank_on_net(grid2d, coordinate_fields(grid2d), Ball(0, 0.0), 0.1)

    def test_restriction_bound(self, grid2d):
        """Span members are controlled by their net values."""
        net = greedy_separated_net(grid2d, Ball(119, 0.5), 0.2)
        report = net_restriction_bound(grid2d, net, coordinate_fields(grid2d), random_count=4, seed=1)
        assert len(report["functions"]) == 6
        for row in report["functions"]:
            assert row["lipschitz_to_net"]
            assert row["sup_ball"] <= row["sup_bound"] + 1e-12

    def test_vanishing_on_the_net(self, grid2d):
        """A function vanishing on the net is bounded by LIP times the spacing."""
        net = greedy_separated_net(grid2d, Ball(119, 0.5), 0.2)
        members = list(net.members)
        u = ScalarField(grid2d.block(np.arange(grid2d.size), members).min(axis=1), "to-net")
        report = net_restriction_bound(grid2d, net, [u], random_count=0)
        row = report["functions"][0]
        assert row["sup_net"] == 0.0
        assert row["sup_ball"] <= row["global_lip"] * net.spacing + 1e-12

    def test_net_size_within_doubling_bound(self, corpus):
        """Greedy (r/4K)-nets of corpus balls stay below (16 K) ** log2 C."""
        for space in corpus:
            ladder = ScaleLadder.for_space(space)
            C = metric_doubling_constant(space, ladder)
            for K in (1.0, 2.0, 4.0):
                bound = dimension_bound(K, C)
                for x in sample_points(space, 8):
                    for r in ladder.radii:
                        net = greedy_separated_net(space, Ball(x, r), r / (4 * K))
                        assert len(net) <= bound, (space.label, x, r, K)
