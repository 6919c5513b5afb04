import json
import os
import subprocess
import sys

import numpy as np
import pytest

from krylov_pls.cli import main, svg_from_rows
from krylov_pls.data import Dataset, ModelSpec, gen_design, gen_response, write_csv
from krylov_pls.simulate import read_curve_rows


def run_cli(args, env=None):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "krylov_pls.cli", *args],
        capture_output=True,
        text=True,
        env=full_env,
    )


@pytest.fixture
def dataset_csv(tmp_path):
    x = gen_design(120, [6.1, 6.0, 0.5, 0.5, 0.5], seed=17)
    beta = np.array([1.0, 1.0, 0.0, 0.0, 0.0])
    y = gen_response(x, ModelSpec(beta=beta, tau2=1.0, seed=17), 0)
    path = tmp_path / "d.csv"
    write_csv(path, Dataset(x=x, y=y))
    return path


class TestFit:
    def test_plain_fit(self, dataset_csv):
        res = run_cli(["fit", "--input", str(dataset_csv), "--k", "2"])
        assert res.returncode == 0
        rec = json.loads(res.stdout)
        assert rec["variant"] == "krylov"
        assert len(rec["beta_hat"]) == 5
        assert 0 < rec["rcond_theta"] <= 1

    def test_ridge_fit(self, dataset_csv):
        res = run_cli(
            ["fit", "--input", str(dataset_csv), "--k", "2", "--ridge",
             "--delta", "0.05", "--tau2", "1"]
        )
        assert res.returncode == 0
        rec = json.loads(res.stdout)
        assert rec["variant"] == "ridge"
        assert len(rec["alpha"]) == 2

    def test_singular_system_exits_2(self, dataset_csv):
        # k=4 exceeds the Krylov dimension of a 3-eigenvalue spectrum.
        res = run_cli(["fit", "--input", str(dataset_csv), "--k", "4"])
        assert res.returncode == 2
        rec = json.loads(res.stdout)
        assert rec["error"] == "singular_krylov"
        assert rec["rcond"] < 1e-12
        assert "--ridge" in rec["suggestion"]

    def test_malformed_csv_exits_1(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("x1,y\n1.0,zap\n")
        res = run_cli(["fit", "--input", str(bad), "--k", "1"])
        assert res.returncode == 1
        assert "row 2" in res.stderr

    def test_output_file(self, dataset_csv, tmp_path):
        out = tmp_path / "fit.json"
        res = run_cli(
            ["fit", "--input", str(dataset_csv), "--k", "2", "--output", str(out)]
        )
        assert res.returncode == 0
        assert json.loads(out.read_text())["variant"] == "krylov"


class TestCheckAndBound:
    def test_check_low_signal(self):
        res = run_cli(["check", "--scenario", "s1a", "--eta", "0.01",
                       "--delta", "0.05"])
        assert res.returncode == 0
        rec = json.loads(res.stdout)
        assert rec["a1_holds"] is True
        assert rec["a2_holds"] is False

    def test_check_high_signal(self):
        res = run_cli(["check", "--scenario", "s1a", "--eta", "1000"])
        assert res.returncode == 0
        assert json.loads(res.stdout)["a2_holds"] is True

    def test_bound_identity(self):
        res = run_cli(
            ["bound", "--scenario", "s1a", "--eta", "100", "--theorem", "th1",
             "--precise"]
        )
        assert res.returncode == 0
        rec = json.loads(res.stdout)
        total = rec["bias"] + sum(rec["pieces"].values())
        assert rec["total"] == pytest.approx(total, rel=1e-12)

    def test_bound_th2(self):
        res = run_cli(["bound", "--scenario", "s1a", "--eta", "0.01",
                       "--theorem", "th2"])
        rec = json.loads(res.stdout)
        assert rec["certified"] is True
        assert rec["theorem"] == "th2_precise"

    def test_plugin_mode(self, dataset_csv):
        res = run_cli(["check", "--plugin", "--input", str(dataset_csv), "--k", "2"])
        assert res.returncode == 0
        rec = json.loads(res.stdout)
        assert rec["mode"] == "plugin"
        assert "not covered" in rec["note"]

    def test_unknown_scenario_exits_1(self):
        res = run_cli(["check", "--scenario", "s9", "--eta", "1"])
        assert res.returncode == 1


class TestSimulate:
    def test_csv_shape(self, tmp_path):
        out = tmp_path / "res.csv"
        res = run_cli(
            ["simulate", "--scenario", "s1a", "--reps", "20", "--seed", "42",
             "--output", str(out)]
        )
        assert res.returncode == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("scenario,param_name,param_value,estimator")
        assert len(lines) == 1 + 25 * 3

    def test_threads_are_binary_identical(self, tmp_path):
        args = ["simulate", "--scenario", "s2a", "--reps", "30", "--seed", "3",
                "--grid", "0.5,1.0,2.0"]
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        run_cli(args + ["--threads", "1", "--output", str(a)])
        run_cli(args + ["--threads", "4", "--output", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_seed_env_default(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        args = ["simulate", "--scenario", "s1b", "--reps", "10",
                "--grid", "1.0"]
        run_cli(args + ["--output", str(a)], env={"KRYLOV_PLS_SEED": "99"})
        run_cli(args + ["--seed", "99", "--output", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_bias_variance_plot(self, tmp_path):
        out = tmp_path / "res.csv"
        svg = tmp_path / "fig.svg"
        res = run_cli(
            ["simulate", "--scenario", "s3", "--reps", "10", "--seed", "1",
             "--output", str(out), "--plot", str(svg)]
        )
        assert res.returncode == 0
        body = svg.read_text()
        assert body.count("<polyline") == 3
        for label in ("risk", "bias", "variance"):
            assert label in body

    def test_eta_plot_has_one_polyline_per_estimator(self, tmp_path):
        out = tmp_path / "res.csv"
        svg = tmp_path / "fig.svg"
        run_cli(
            ["simulate", "--scenario", "s1a", "--reps", "10", "--seed", "1",
             "--grid", "0.1,1,10", "--output", str(out), "--plot", str(svg)]
        )
        assert svg.read_text().count("<polyline") == 3

    def test_replot_from_csv_is_identical(self, tmp_path):
        out = tmp_path / "res.csv"
        svg = tmp_path / "fig.svg"
        run_cli(
            ["simulate", "--scenario", "s3", "--reps", "8", "--seed", "2",
             "--output", str(out), "--plot", str(svg)]
        )
        with open(out) as fh:
            rows = read_curve_rows(fh)
        assert svg_from_rows(rows) == svg.read_text()

    def test_custom_spec_file(self, tmp_path):
        spec = {
            "id": "custom",
            "spectrum": [2.0, 1.0, 0.5],
            "beta_rule": {"kind": "scaled_pair", "indices": [0, 1]},
            "n": 50,
            "reps": 10,
            "grid": [1.0],
            "k": 2,
        }
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        out = tmp_path / "res.csv"
        res = run_cli(
            ["simulate", "--spec-file", str(path), "--seed", "4",
             "--estimators", "pls,oracle", "--output", str(out)]
        )
        assert res.returncode == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 1 + 1 * 2

    def test_config_precedence(self, dataset_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"k": 1}))
        res_cfg = run_cli(["fit", "--input", str(dataset_csv), "--config", str(cfg)])
        assert json.loads(res_cfg.stdout)["k"] == 1
        res_flag = run_cli(
            ["fit", "--input", str(dataset_csv), "--config", str(cfg), "--k", "2"]
        )
        assert json.loads(res_flag.stdout)["k"] == 2


class TestMainInProcess:
    def test_main_returns_exit_code(self, tmp_path):
        bad = tmp_path / "nope.csv"
        assert main(["fit", "--input", str(bad), "--k", "1"]) == 1
