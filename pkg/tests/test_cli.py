"""Tests for the experiment catalog, the run loop and the command-line surface."""

import csv
import json

import pytest
from typer.testing import CliRunner

from core import strategy
from core.catalog import expand_range, list_experiments, load_builtin, load_spec_file, validate_spec
from core.errors import NumericError, SpecValidationError
from core.loop import run_experiment
from core.session import chunk_sizes, resolve_workers, spawn_seeds
from core.strategy import summarize
from splitrx import app

runner = CliRunner()

TINY_SPECS = {
    "gain-vs-power": (
        {"sweep": {"rho": [0.0, 0.25, 0.3333333333333333, 0.5, 1.0], "power": [100, 1000]}, "knobs": {"estimator": "ei"}},
        2,
    ),
    "partition-vs-K": ({"sweep": {"k": [2, 8]}, "knobs": {"realizations": 20}}, 2),
    "mi-vs-rho": ({"sweep": {"rho": [0.0, 0.5, 1.0], "power": [10]}, "knobs": {"samples": 20000, "bins": 16}}, 3),
    "ser-vs-rho": ({"sweep": {"rho": [0.0, 0.5, 1.0], "power": [20]}, "knobs": {"trials": 10000}}, 3),
    "k1-vs-K": ({"sweep": {"k": [2], "power": [50]}, "knobs": {"trials": 10000}}, 3),
}


@pytest.fixture(autouse=True)
def _quiet_logs(monkeypatch):
    monkeypatch.setenv("SPLITRX_LOG_LEVEL", "WARNING")


def _spec(kind, name=None):
    body, _ = TINY_SPECS[kind]
    return validate_spec({"name": name or f"tiny-{kind}", "kind": kind, "seed": 7, **body})


def _read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


class TestCatalog:
    def test_all_builtins_validate(self):
        specs = list_experiments()
        assert len(specs) >= 10
        assert all(s.figure for s in specs)
        assert {s.name for s in specs} >= {"fig4", "fig5", "fig7", "fig8", "fig9", "fig10", "fig11", "fig14", "fig15", "fig16"}

    def test_range_shorthand_expands(self):
        assert len(load_builtin("fig4").sweep.rho) == 101
        assert expand_range("range:0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert expand_range([0.1, 0.2]) == [0.1, 0.2]

    @pytest.mark.parametrize("bad", ["range:1:0:0.1", "range:0:1:0", "range:a:b:c"])
    def test_bad_range(self, bad):
        with pytest.raises(SpecValidationError):
            expand_range(bad)

    def test_every_offending_field_named(self):
        with pytest.raises(SpecValidationError) as info:
            validate_spec({"name": "x", "kind": "nope", "sweep": {"rho": [2.0]}, "bogus": 1})
        assert {"kind", "sweep.rho", "bogus"} <= set(info.value.fields)

    def test_unknown_builtin(self):
        with pytest.raises(SpecValidationError) as info:
            load_builtin("fig99")
        assert info.value.fields == ["name"]

    def test_spec_file_must_be_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(SpecValidationError):
            load_spec_file(path)


class TestExperimentRuns:
    @pytest.mark.parametrize("kind", list(TINY_SPECS))
    def test_writes_csv_and_summary(self, tmp_path, kind):
        summary = run_experiment(_spec(kind), out_dir=tmp_path, workers=1, quiet=True)
        rows = _read_rows(tmp_path / f"tiny-{kind}.csv")
        assert len(rows) == TINY_SPECS[kind][1]
        assert summary["rows"] == len(rows)
        saved = json.loads((tmp_path / f"tiny-{kind}.summary.json").read_text())
        assert saved["kind"] == kind
        assert saved["seed"] == 7
        assert saved["result"] == summary["result"]

    @pytest.mark.parametrize("kind", ["mi-vs-rho", "ser-vs-rho"])
    def test_rerun_is_byte_identical(self, tmp_path, kind):
        run_experiment(_spec(kind), out_dir=tmp_path / "a", workers=1, quiet=True)
        run_experiment(_spec(kind), out_dir=tmp_path / "b", workers=2, quiet=True)
        name = f"tiny-{kind}.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_gain_rows_below_asymptote(self, tmp_path):
        summary = run_experiment(_spec("gain-vs-power"), out_dir=tmp_path, workers=1, quiet=True)
        gains = [g["gain_ei"] for g in summary["result"]["gains"]]
        assert gains[0] < gains[1] < summary["result"]["asymptote"]

    def test_boundary_rows_use_closed_forms(self, tmp_path):
        run_experiment(_spec("mi-vs-rho"), out_dir=tmp_path, workers=1, quiet=True)
        rows = _read_rows(tmp_path / "tiny-mi-vs-rho.csv")
        assert float(rows[-1]["mi_bits"]) == pytest.approx(3.4594, abs=1e-4)
        assert float(rows[-1]["std_err"]) == 0.0

    def test_k1_rows_cover_every_partition(self, tmp_path):
        summary = run_experiment(_spec("k1-vs-K"), out_dir=tmp_path, workers=1, quiet=True)
        rows = _read_rows(tmp_path / "tiny-k1-vs-K.csv")
        assert [int(r["k1"]) for r in rows] == [0, 1, 2]
        (group,) = summary["result"]["groups"]
        assert 0 <= group["k1_star"] <= 2

    def test_quadrature_tolerance_knob_is_used(self, tmp_path):
        spec = validate_spec({"name": "tight-quad", "kind": "mi-vs-rho", "sweep": {"rho": [0.0], "power": [10]},
                              "knobs": {"quadrature_tol": 1e-30}})
        with pytest.raises(NumericError):
            run_experiment(spec, out_dir=tmp_path, workers=1, quiet=True)

    def test_optimizer_knobs_reach_solver(self, tmp_path, monkeypatch):
        seen = []
        real_solve = strategy.solve_p1

        def spy(ch, resolution, restarts, seed):
            seen.append((resolution, restarts))
            return real_solve(ch, resolution=resolution, restarts=restarts, seed=seed)

        monkeypatch.setattr(strategy, "solve_p1", spy)
        spec = validate_spec({"name": "opt-knobs", "kind": "mi-vs-K", "sweep": {"k": [2], "power": [100]},
                              "knobs": {"realizations": 2, "resolution": 0.05, "restarts": 3, "estimator": "ei"}})
        run_experiment(spec, out_dir=tmp_path, workers=1, quiet=True)
        assert seen == [(0.05, 3), (0.05, 3)]

    def test_resolution_knob_validated(self):
        with pytest.raises(SpecValidationError) as info:
            validate_spec({"name": "x", "kind": "mi-vs-K", "knobs": {"resolution": 0.7}})
        assert info.value.fields == ["knobs.resolution"]

    def test_ser_argmin_breaks_zero_error_ties(self):
        spec = validate_spec({"name": "ties", "kind": "ser-vs-rho", "sweep": {"rho": [0.0, 0.5, 0.8, 1.0]}})
        base = {"scheme": "QAM", "m": 16, "k": 1, "power": 200.0, "sigma1_sq": 1.0, "sigma2_sq": 1.0, "ser": 0.0}
        rows = [
            {**base, "rho": 0.0, "ser_high_snr": None},
            {**base, "rho": 0.5, "ser_high_snr": 1e-9},
            {**base, "rho": 0.8, "ser_high_snr": 1e-12},
            {**base, "rho": 1.0, "ser_high_snr": None},
        ]
        (group,) = summarize(spec, rows)["groups"]
        assert group["argmin_rho"] == 0.8
        assert group["tied_rows"] == 4


class TestCommandLine:
    def test_list(self):
        result = runner.invoke(app, ["list"])
        assert result.exit_code == 0
        assert "fig16" in result.output

    def test_show_prints_spec(self):
        result = runner.invoke(app, ["show", "fig9"])
        assert result.exit_code == 0
        assert "gain-vs-power" in result.output

    def test_show_unknown_exits_2(self):
        assert runner.invoke(app, ["show", "nope"]).exit_code == 2

    def test_run_unknown_builtin_exits_2(self, tmp_path):
        assert runner.invoke(app, ["run", "--builtin", "nope", "--out", str(tmp_path)]).exit_code == 2

    def test_run_spec_file(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(_spec("ser-vs-rho", name="cli-ser").model_dump_json())
        result = runner.invoke(app, ["run", str(path), "--out", str(tmp_path), "--workers", "1", "--quiet"])
        assert result.exit_code == 0
        assert (tmp_path / "cli-ser.csv").exists()
        assert (tmp_path / "cli-ser.summary.json").exists()

    def test_mi_closed_form(self):
        result = runner.invoke(app, ["mi", "--rho", "1", "--power", "10"])
        assert result.exit_code == 0
        assert json.loads(result.output)["mi_bits"] == pytest.approx(3.4594, abs=1e-4)

    def test_ser_point(self):
        result = runner.invoke(app, ["ser", "--scheme", "qam", "--m", "16", "--power", "20", "--trials", "1e4", "--workers", "1"])
        assert result.exit_code == 0
        data = json.loads(result.output)
        assert data["trials"] == 10_000
        assert 0.0 < data["ser"] < 0.2

    def test_bad_sample_count(self):
        result = runner.invoke(app, ["mi", "--rho", "0.5", "--samples", "lots"])
        assert result.exit_code == 2


class TestSession:
    def test_thread_cap(self, monkeypatch):
        monkeypatch.setenv("SPLITRX_THREADS", "2")
        assert resolve_workers(8) == 2
        monkeypatch.setenv("SPLITRX_THREADS", "many")
        assert resolve_workers(3) == 3

    def test_fixed_chunking(self):
        assert chunk_sizes(10, 4) == [4, 4, 2]
        assert chunk_sizes(8, 4) == [4, 4]

    def test_seed_streams(self):
        seeds = spawn_seeds(42, 5)
        assert seeds == spawn_seeds(42, 5)
        assert len(set(seeds)) == 5
        assert all(0 <= s < 2**63 for s in seeds)
        assert spawn_seeds(42, 3) == seeds[:3]
