"""
Tests for pointed rescalings, tangent functions and view distortion.
"""

import numpy as np
import pytest

from src.analysis.blowup import (
    net_distortion,
    rescale,
    tangent_function,
    tangent_quasilinearity,
    var_sandwich_check,
)
from src.analysis.lipschitz import global_lip, variation
from src.core.errors import InputError
from src.space.fields import ScalarField, constant_field, parse_field_spec, random_lipschitz_fields, sample_points
from src.space.generators import euclidean_grid
from src.space.metric_space import MetricMeasureSpace, ScaleLadder


def _lattice(n, dim):
    axis = np.arange(float(n))
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    coords = np.stack([m.reshape(-1) for m in mesh], axis=1)
    return MetricMeasureSpace(mass=np.ones(len(coords)), coords=coords)


class TestRescale:
    """Pointed rescalings."""

    def test_whole_space_at_unit_scale(self, line):
        """r_k = 1 and a covering radius reproduce the space."""
        view = rescale(line, 3, 1.0, 20.0)
        assert view.members == tuple(range(11))
        assert np.allclose(view.view.dense(), line.dense())
        assert view.view.total_mass == pytest.approx(1.0)

    def test_grid_step_becomes_one(self, grid1d):
        """At r_k = step neighbors sit at distance one."""
        view = rescale(grid1d, 50, grid1d.step, 5.0)
        base = view.base_index
        assert view.members[base] == 50
        nearest = np.sort(view.view.distances(base))[1]
        assert nearest == pytest.approx(1.0)

    def test_invalid_scale(self, line):
        """Scales must be positive."""
        with pytest.raises(InputError):
            rescale(line, 0, 0.0, 1.0)

    def test_tangent_function(self, line):
        """(f - f(x)) / r_k on the view."""
        view, tangent = tangent_function(line, ScalarField(line.coords[:, 0]), 5, 2.0, 2.0)
        assert view.members == (2, 3, 4, 5, 6, 7, 8)
        assert tangent.values.tolist() == [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5]
        assert global_lip(view.view, tangent) == pytest.approx(1.0)

    def test_constant_tangent(self, grid2d):
        """Constants rescale to zero."""
        _, tangent = tangent_function(grid2d, constant_field(grid2d, 3.0), 17, 0.2, 1.0)
        assert np.all(tangent.values == 0.0)


class TestSandwich:
    """var in the view against lip and Lip."""

    def test_view_variation_matches(self, line, line_ladder):
        """var of the tangent at R equals var_{x, R r_k} of f."""
        f = ScalarField(line.coords[:, 0] ** 2)
        check = var_sandwich_check(line, f, 5, line_ladder, [1.0, 2.0])
        for row in check["rows"]:
            assert row["var_view"] == pytest.approx(variation(line, f, 5, row["radius"]), rel=1e-12)

    def test_linear(self, grid2d, grid2d_ladder):
        """Ladder rows of a linear function sit between lip and Lip."""
        check = var_sandwich_check(grid2d, parse_field_spec(grid2d, "linear:3,-1"), 119, grid2d_ladder, [1.0, 2.0])
        assert check["exact_holds"]
        assert check["lip"] <= check["Lip"]
        assert any(row["exact"] for row in check["rows"])

    def test_constant(self, grid2d, grid2d_ladder):
        """Constants have zero variation at every scale."""
        check = var_sandwich_check(grid2d, constant_field(grid2d), 119, grid2d_ladder, [1.0])
        assert check["lip"] == 0.0 and check["Lip"] == 0.0
        assert all(row["var_view"] == 0.0 for row in check["rows"])

    def test_sawtooth(self, grid1d):
        """A two-level sawtooth has lip strictly below Lip and ladder rows strictly between them."""
        ladder = ScaleLadder.for_space(grid1d)
        check = var_sandwich_check(grid1d, parse_field_spec(grid1d, "sawtooth:0.25,2"), 50, ladder, [1.0])
        assert check["exact_holds"]
        assert check["lip"] < check["Lip"]
        inside = [row["var"] for row in check["rows"] if row["exact"] and "var" in row]
        assert any(check["lip"] < v < check["Lip"] for v in inside)


    @pytest.mark.slow
    def test_random_fields_on_large_grid(self):
        """20 random fields on the 64 x 64 grid: ladder rows are bracketed and views rescale exactly."""
        space = euclidean_grid(64, 2)
        ladder = ScaleLadder.for_space(space)
        for f in random_lipschitz_fields(space, 20, seed=7):
            for x in sample_points(space, 3):
                check = var_sandwich_check(space, f, x, ladder, [1.0, 1.5])
                assert check["exact_holds"]
                assert any(row["exact"] for row in check["rows"])
                for row in check["rows"]:
                    direct = variation(space, f, x, row["radius"])
                    assert abs(row["var_view"] - direct) <= 1e-12 * max(1.0, direct)


class TestDistortion:
    """Finite pointed-Hausdorff surrogate."""

    def test_identical_views(self, line):
        """A view is at distance zero from itself."""
        view = rescale(line, 0, 1.0, 100.0)
        assert net_distortion(view, view, 1.5) == 0.0

    def test_symmetric(self, grid2d):
        """Swapping the views gives the same value."""
        a = rescale(grid2d, 119, 0.2, 2.0)
        b = rescale(grid2d, 119, 0.1, 2.0)
        assert net_distortion(a, b, 0.5) == net_distortion(b, a, 0.5)

    def test_slightly_scaled(self):
        """Scaling distances by 1 + η moves the view by at most η times its diameter."""
        space = _lattice(6, 1)
        a = rescale(space, 0, 1.0, 100.0)
        b = rescale(space, 0, 1.0 / 1.01, 100.0)
        assert net_distortion(a, b, 1.5) <= 0.01 * a.view.diameter() + 1e-9

    def test_line_versus_plane(self):
        """A line and a plane stay at least the net spacing apart."""
        a = rescale(_lattice(5, 1), 0, 1.0, 100.0)
        b = rescale(_lattice(5, 2), 0, 1.0, 100.0)
        assert net_distortion(a, b, 1.5) >= 1.5

    def test_spacing_must_be_positive(self, line):
        """Zero spacing is rejected."""
        view = rescale(line, 0, 1.0, 100.0)
        with pytest.raises(InputError):
            net_distortion(view, view, 0.0)


class TestTangentQuasilinearity:
    """QL of the tangent next to the Lip/lip ratio."""

    def test_linear_tangent(self):
        """The tangent of a linear function is linear."""
        space = euclidean_grid(33, 1)
        ladder = ScaleLadder.for_space(space)
        report = tangent_quasilinearity(space, parse_field_spec(space, "coord:0"), 16, ladder, 4 * space.step, 2.0)
        assert report["view_global_lip"] == pytest.approx(1.0)
        assert report["quasilinearity"]["constant"] >= 1.0
        assert report["liplip_ratio_at_point"] >= 1.0
