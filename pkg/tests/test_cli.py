"""
Tests for the command-line interface: exit codes, report envelopes and determinism.
"""

import csv
import json
import math

import numpy as np
import pytest

from src.cli.app import app
from src.space.generators import euclidean_grid
from src.space.metric_space import MetricMeasureSpace


@pytest.fixture
def grid8(space_file):
    return space_file(euclidean_grid(8, 2), "grid8.json")


@pytest.fixture
def line21(space_file):
    return space_file(euclidean_grid(21, 1), "line21.json")


def _report(path):
    return json.loads(path.read_text())


class TestGen:
    """Space generation."""

    def test_writes_space(self, runner, tmp_path):
        """gen writes a loadable space file."""
        out = tmp_path / "grid.json"
        result = runner.invoke(app, ["gen", "--kind", "euclidean_grid", "--n", "5", "--dim", "2", "--out", str(out)])
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert len(data["mass"]) == 25
        assert data["step"] == pytest.approx(0.25)

    def test_unknown_kind(self, runner, tmp_path):
        """Unknown generators are input errors."""
        result = runner.invoke(app, ["gen", "--kind", "moebius", "--out", str(tmp_path / "x.json")])
        assert result.exit_code == 2

    def test_bad_spec_json(self, runner):
        """--spec must be JSON."""
        result = runner.invoke(app, ["gen", "--kind", "euclidean_grid", "--spec", "{n: 3"])
        assert result.exit_code == 2


class TestAnalyze:
    """analyze command."""

    def test_linear_profile(self, runner, space_file, tmp_path):
        """Interior lip of 3x - y is close to its slope."""
        space = space_file(euclidean_grid(16, 2))
        table = tmp_path / "profile.csv"
        out = tmp_path / "report.json"
        result = runner.invoke(
            app,
            ["analyze", "-s", str(space), "-f", "linear:3,-1", "--window-hi", "4", "--csv", str(table), "-o", str(out)],
        )
        assert result.exit_code == 0, result.output
        with table.open() as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 256
        for row in rows:
            i, j = divmod(int(row["point"]), 16)
            if 4 <= i <= 11 and 4 <= j <= 11:
                assert float(row["lip"]) >= 0.8 * math.sqrt(10)
        report = _report(out)
        assert report["command"] == "analyze"
        assert report["result"]["profiles"][0]["label"] == "linear:3,-1"

    def test_byte_identical_reruns(self, runner, grid8, tmp_path):
        """The same inputs give the same bytes."""
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        for out in (first, second):
            result = runner.invoke(app, ["analyze", "-s", str(grid8), "--seed", "3", "-o", str(out)])
            assert result.exit_code == 0, result.output
        assert first.read_bytes() == second.read_bytes()

    def test_config_echo(self, runner, grid8, tmp_path):
        """The resolved configuration is embedded in the report."""
        out = tmp_path / "r.json"
        result = runner.invoke(app, ["analyze", "-s", str(grid8), "--ratio", "0.75", "-o", str(out)])
        assert result.exit_code == 0, result.output
        config = _report(out)["config"]
        assert config["ratio"] == 0.75
        assert config["space_path"] == str(grid8)
        assert "seed" in config

    def test_asymmetric_matrix(self, runner, tmp_path):
        """An asymmetric distance matrix exits 2 and names the invariant."""
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"dist_matrix": [[0, 1], [2, 0]], "mass": [1, 1]}))
        result = runner.invoke(app, ["analyze", "-s", str(path)])
        assert result.exit_code == 2
        assert "symmetry" in result.output

    def test_bad_ratio(self, runner, grid8):
        """A ladder ratio outside (0, 1) exits 2."""
        result = runner.invoke(app, ["analyze", "-s", str(grid8), "--ratio", "1.5"])
        assert result.exit_code == 2

    def test_missing_file(self, runner, tmp_path):
        """A missing space file exits 2."""
        result = runner.invoke(app, ["analyze", "-s", str(tmp_path / "nowhere.json")])
        assert result.exit_code == 2


class TestQuasiconvexity:
    """qc command."""

    def test_disconnected_pair(self, runner, space_file):
        """No ε-path between far points exits 3."""
        path = space_file(MetricMeasureSpace(mass=np.ones(3), coords=np.array([[0.0], [1.0], [10.0]])))
        result = runner.invoke(app, ["qc", "-s", str(path), "--from", "0", "--to", "2", "--eps", "1.5"])
        assert result.exit_code == 3

    def test_joined_pair(self, runner, space_file, tmp_path):
        """A connected pair reports its ε-path and the halving gap totals."""
        path = space_file(MetricMeasureSpace(mass=np.ones(4), coords=np.array([[0.0], [1.0], [2.0], [3.0]])))
        out = tmp_path / "qc.json"
        result = runner.invoke(app, ["qc", "-s", str(path), "--from", "0", "--to", "3", "--eps", "1.5", "-o", str(out)])
        assert result.exit_code == 0, result.output
        data = _report(out)["result"]
        assert data["vertices"] == [0, 1, 2, 3]
        assert data["length"] == 3.0

    def test_grid_constant(self, runner, space_file, tmp_path):
        """Sampled constant on a planar grid stays below 1.5."""
        path = space_file(euclidean_grid(16, 2))
        out = tmp_path / "qc.json"
        result = runner.invoke(app, ["qc", "-s", str(path), "--eps", "0.07", "--pairs", "20", "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert _report(out)["result"]["constant"] <= 1.5

    def test_lone_endpoint(self, runner, grid8):
        """--from without --to is an input error."""
        result = runner.invoke(app, ["qc", "-s", str(grid8), "--from", "0", "--eps", "0.2"])
        assert result.exit_code == 2


class TestOtherCommands:
    """Smoke runs of the remaining commands."""

    def test_pi(self, runner, grid8, tmp_path):
        """pi reports a finite constant."""
        out = tmp_path / "pi.json"
        result = runner.invoke(app, ["pi", "-s", str(grid8), "--centers", "8", "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert _report(out)["command"] == "pi"

    def test_dim(self, runner, grid8, tmp_path):
        """Coordinates on a planar ball have rank 2."""
        out = tmp_path / "dim.json"
        result = runner.invoke(app, ["dim", "-s", str(grid8), "--ball", "27,0.6", "--spacing", "0.2", "-o", str(out)])
        assert result.exit_code == 0, result.output
        data = _report(out)["result"]
        assert data["rank"] == 2
        assert data["dimension_bound"] >= 1

    def test_dim_bad_ball(self, runner, grid8):
        """--ball needs two numbers."""
        result = runner.invoke(app, ["dim", "-s", str(grid8), "--ball", "27", "--spacing", "0.2"])
        assert result.exit_code == 2

    def test_diff(self, runner, grid8, tmp_path):
        """A linear function has good differentials everywhere."""
        out = tmp_path / "diff.json"
        table = tmp_path / "diff.csv"
        result = runner.invoke(
            app, ["diff", "-s", str(grid8), "-f", "linear:3,-1", "--csv", str(table), "-o", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert _report(out)["result"]["good_mass_fraction"] == 1.0
        assert table.read_text().splitlines()[0].startswith("point,df[x],df[y]")

    def test_atlas(self, runner, grid8, tmp_path):
        """The default dictionary of a grid is its coordinates."""
        out = tmp_path / "atlas.json"
        result = runner.invoke(app, ["atlas", "-s", str(grid8), "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert _report(out)["result"]["dimensions"] == [2]

    def test_atlas_strict_stall(self, runner, grid8):
        """A constant dictionary stalls; --strict exits 3."""
        result = runner.invoke(app, ["atlas", "-s", str(grid8), "--dictionary", "const:1", "--strict"])
        assert result.exit_code == 3

    def test_blowup(self, runner, line21, tmp_path):
        """Rescaled views of a line and their sandwich table."""
        out = tmp_path / "blowup.json"
        result = runner.invoke(app, ["blowup", "-s", str(line21), "-x", "10", "-f", "coord:0", "-o", str(out)])
        assert result.exit_code == 0, result.output
        data = _report(out)["result"]
        assert data["sandwich"]["exact_holds"]
        assert data["views"]
        assert data["tangent"]["view_global_lip"] == pytest.approx(1.0)

    def test_report(self, runner, grid8, tmp_path):
        """report bundles every analysis."""
        out = tmp_path / "report.json"
        result = runner.invoke(app, ["report", "-s", str(grid8), "-o", str(out)])
        assert result.exit_code == 0, result.output
        data = _report(out)
        assert set(data) == {"command", "config", "result", "space"}
        assert set(data["result"]) == {"analysis", "pi", "quasiconvexity", "dimension_bound", "atlas"}
        assert data["space"]["points"] == 64


RUNS = {
    "gen": ["gen", "--kind", "laakso_like", "--level", "2"],
    "analyze": ["analyze", "-s", "{grid}", "--seed", "3"],
    "pi": ["pi", "-s", "{grid}", "--centers", "8"],
    "qc": ["qc", "-s", "{grid}", "--eps", "0.2", "--pairs", "5"],
    "dim": ["dim", "-s", "{grid}", "--ball", "27,0.6", "--spacing", "0.2"],
    "diff": ["diff", "-s", "{grid}", "-f", "dist:0"],
    "atlas": ["atlas", "-s", "{grid}"],
    "blowup": ["blowup", "-s", "{line}", "-x", "10", "-f", "coord:0"],
    "report": ["report", "-s", "{grid}"],
}


class TestDeterminism:
    """Identical runs give identical bytes."""

    @pytest.mark.parametrize("command", sorted(RUNS))
    def test_byte_identical(self, runner, grid8, line21, tmp_path, command):
        """Every subcommand writes the same bytes twice."""
        args = [a.format(grid=grid8, line=line21) for a in RUNS[command]]
        outputs = []
        for name in ("first", "second"):
            out = tmp_path / f"{command}-{name}.json"
            result = runner.invoke(app, [*args, "-o", str(out)])
            assert result.exit_code == 0, result.output
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_threads_leave_results_unchanged(self, runner, grid8, tmp_path):
        """--threads is echoed and the result matches a single-threaded run."""
        reports = []
        for threads in ("1", "3"):
            out = tmp_path / f"threads-{threads}.json"
            result = runner.invoke(app, ["analyze", "-s", str(grid8), "--threads", threads, "-o", str(out)])
            assert result.exit_code == 0, result.output
            reports.append(_report(out))
        assert [r["config"]["threads"] for r in reports] == [1, 3]
        assert reports[0]["result"] == reports[1]["result"]


class TestConfigEcho:
    """Command defaults and overrides land in the echoed config."""

    def test_qc_defaults(self, runner, grid8, tmp_path):
        """Pair count and round limit are echoed."""
        out = tmp_path / "qc.json"
        result = runner.invoke(app, ["qc", "-s", str(grid8), "--eps", "0.2", "--max-rounds", "30", "-o", str(out)])
        assert result.exit_code == 0, result.output
        config = _report(out)["config"]
        assert config["pairs"] == 20
        assert config["max_rounds"] == 30
        assert config["eps"] == 0.2

    def test_blowup_view_parameters(self, runner, line21, tmp_path):
        """View radii, net spacing, slack and scales are echoed."""
        out = tmp_path / "blowup.json"
        result = runner.invoke(
            app,
            ["blowup", "-s", str(line21), "-x", "10", "-f", "coord:0", "--radii", "1,3", "--delta", "0.1", "-o", str(out)],
        )
        assert result.exit_code == 0, result.output
        config = _report(out)["config"]
        assert config["view_radii"] == [1.0, 3.0]
        assert config["view_spacing"] == 0.5
        assert config["delta"] == 0.1
        assert config["point"] == 10
        assert config["view_scales"]

    def test_dim_bounds(self, runner, grid8, tmp_path):
        """Net spacing, explicit K and C and the center count are echoed."""
        out = tmp_path / "dim.json"
        result = runner.invoke(
            app,
            ["dim", "-s", str(grid8), "--ball", "27,0.6", "--spacing", "0.2", "--K", "2", "--C", "4", "--centers", "5", "-o", str(out)],
        )
        assert result.exit_code == 0, result.output
        config = _report(out)["config"]
        assert config["net_spacing"] == 0.2
        assert config["ratio_bound"] == 2.0
        assert config["doubling_bound"] == 4.0
        assert config["centers"] == 5
        assert config["region"] == "27,0.6"

    def test_report_resolves_eps(self, runner, grid8, tmp_path):
        """Without --eps the report uses 1.5 grid steps and says so."""
        out = tmp_path / "report.json"
        result = runner.invoke(app, ["report", "-s", str(grid8), "--skip-atlas", "-o", str(out)])
        assert result.exit_code == 0, result.output
        data = _report(out)
        assert data["config"]["eps"] == pytest.approx(1.5 / 7)
        assert data["config"]["pairs"] == 20
        assert data["result"]["quasiconvexity"]["eps"] == pytest.approx(1.5 / 7)


class TestFlags:
    """Ladder and radius options."""

    def test_ladder_option(self, runner, grid8, tmp_path):
        """--ladder sets the ratio, the largest radius and the floor."""
        out = tmp_path / "pi.json"
        result = runner.invoke(app, ["pi", "-s", str(grid8), "--ladder", "0.5,1.0", "--centers", "4", "-o", str(out)])
        assert result.exit_code == 0, result.output
        config = _report(out)["config"]
        assert config["ratio"] == 0.5
        assert config["r_max"] == 1.0
        assert config["floor"] is None

    @pytest.mark.parametrize("ladder", ["0.5,x", "0.5,1,0.1,9", "2"])
    def test_bad_ladder(self, runner, grid8, ladder):
        """Malformed or out-of-range ladders exit 2."""
        result = runner.invoke(app, ["pi", "-s", str(grid8), "--ladder", ladder])
        assert result.exit_code == 2

    def test_fixed_radius_rule(self, runner, grid8, tmp_path):
        """--radius-rule with a number solves every point on that ball."""
        out = tmp_path / "diff.json"
        table = tmp_path / "diff.csv"
        result = runner.invoke(
            app,
            ["diff", "-s", str(grid8), "-f", "linear:3,-1", "--radius-rule", "0.3", "--csv", str(table), "-o", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert _report(out)["config"]["radius_rule"] == "0.3"
        with table.open() as handle:
            rows = list(csv.DictReader(handle))
        assert {float(row["radius"]) for row in rows} == {0.3}

    def test_bad_radius_rule(self, runner, grid8):
        """A radius rule that is neither 'auto' nor a positive number exits 2."""
        result = runner.invoke(app, ["diff", "-s", str(grid8), "-f", "coord:0", "--radius-rule", "wide"])
        assert result.exit_code == 2
