import json

import numpy as np
import pytest
from click.testing import CliRunner

from sigma_opt import load_libsvm
from sigma_opt.cli import TRACE_HEADER, cli


@pytest.fixture()
def runner():
    return CliRunner()


def _solve_args(out, extra=()):
    return [
        "solve", "--model", "gaussian", "--data", "synthetic", "--m", "100", "--N", "50",
        "--p", "10", "--n", "25", "--seed", "1", "--xi2", "1e-6", "--epsilon", "1e-10",
        "--max-iter", "400", "--out", str(out), *extra,
    ]


def _strip_elapsed(text):
    rows = []
    for line in text.strip().splitlines():
        cells = line.split(",")
        del cells[1]  # elapsed_s
        rows.append(",".join(cells))
    return "\n".join(rows)


class TestSolve:
    def test_writes_outputs_and_converges(self, runner, tmp_path):
        res = runner.invoke(cli, _solve_args(tmp_path / "o"))
        assert res.exit_code == 0, res.output
        trace = (tmp_path / "o" / "trace.csv").read_text()
        assert trace.splitlines()[0] == TRACE_HEADER
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["status"] == "converged"
        assert summary["iterations"] == len(trace.strip().splitlines()) - 2
        assert summary["config"]["seed"] == 1

    def test_monotone_f_column(self, runner, tmp_path):
        res = runner.invoke(cli, _solve_args(tmp_path / "o"))
        assert res.exit_code == 0
        lines = (tmp_path / "o" / "trace.csv").read_text().strip().splitlines()[1:]
        fs = [float(line.split(",")[2]) for line in lines]
        assert all(b <= a + 1e-12 for a, b in zip(fs, fs[1:]))

    def test_determinism_modulo_elapsed(self, runner, tmp_path):
        r1 = runner.invoke(cli, _solve_args(tmp_path / "a"))
        r2 = runner.invoke(cli, _solve_args(tmp_path / "b"))
        assert r1.exit_code == 0 and r2.exit_code == 0
        t1 = _strip_elapsed((tmp_path / "a" / "trace.csv").read_text())
        t2 = _strip_elapsed((tmp_path / "b" / "trace.csv").read_text())
        assert t1 == t2

    def test_missing_data_file_exit_1(self, runner, tmp_path):
        res = runner.invoke(cli, ["solve", "--data", str(tmp_path / "nope.libsvm")])
        assert res.exit_code == 1
        assert "nope.libsvm" in res.output

    def test_budget_exhausted_exit_2(self, runner, tmp_path):
        res = runner.invoke(cli, _solve_args(tmp_path / "o", extra=["--max-iter", "1"]))
        assert res.exit_code == 2

    def test_baseline_solver(self, runner, tmp_path):
        res = runner.invoke(cli, _solve_args(tmp_path / "o", extra=["--solver", "gd"]))
        assert res.exit_code in (0, 2)
        assert (tmp_path / "o" / "trace.csv").exists()

    def test_config_file_with_flag_override(self, runner, tmp_path):
        cfg = tmp_path / "run.yaml"
        cfg.write_text(
            "model: gaussian\ndata: synthetic\nm: 60\nN: 30\np: 6\nn: 15\n"
            "seed: 1\nepsilon: 1.0e-10\nmax_iter: 300\nout: IGNORED\n"
        )
        out = tmp_path / "fromcfg"
        res = runner.invoke(cli, ["solve", "--config", str(cfg), "--out", str(out)])
        assert res.exit_code == 0, res.output
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["m"] == 60
        assert summary["config"]["out"] == str(out)

    def test_unknown_config_key_rejected(self, runner, tmp_path):
        cfg = tmp_path / "run.yaml"
        cfg.write_text("data: synthetic\nbogus_key: 1\n")
        res = runner.invoke(cli, ["solve", "--config", str(cfg)])
        assert res.exit_code == 1
        assert "bogus_key" in res.output

    def test_poisson_synthetic(self, runner, tmp_path):
        res = runner.invoke(
            cli,
            ["solve", "--model", "poisson", "--data", "synthetic", "--m", "45", "--N", "30",
             "--p", "6", "--n", "15", "--seed", "2", "--xi2", "1e-6", "--epsilon", "1e-8",
             "--max-iter", "400", "--out", str(tmp_path / "o")],
        )
        # thin-cone Poisson instances converge slowly; schema is what matters here
        assert res.exit_code in (0, 2), res.output
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert "final_grad_norm_unscaled" in summary
        assert summary["poisson_scale"] > 1


class TestBench:
    def test_three_solvers(self, runner, tmp_path):
        out = tmp_path / "bench"
        res = runner.invoke(
            cli,
            ["bench", "--data", "synthetic", "--m", "50", "--N", "30", "--p", "6",
             "--n", "15", "--seed", "1", "--solvers", "sigma,gd,newton",
             "--epsilon", "1e-8", "--max-iter", "150", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        comparison = (out / "comparison.csv").read_text().strip().splitlines()
        assert comparison[0] == "solver,iter,elapsed_s,grad_norm,f"
        solvers = {line.split(",")[0] for line in comparison[1:]}
        assert solvers == {"sigma", "gd", "newton"}
        # grad_norm column positive and finite
        for line in comparison[1:]:
            g = float(line.split(",")[3])
            assert np.isfinite(g) and g >= 0
        assert (out / "summary.md").exists()
        assert (out / "trace_sigma.csv").exists()

    def test_p_sweep_layout(self, runner, tmp_path):
        out = tmp_path / "sweep"
        res = runner.invoke(
            cli,
            ["bench", "--data", "synthetic", "--model", "gaussian", "--m", "40", "--N", "20",
             "--n", "10", "--seed", "1", "--p-list", "0.2,0.5,0.8",
             "--epsilon", "1e-8", "--max-iter", "100", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        comparison = (out / "comparison.csv").read_text().strip().splitlines()
        solvers = {line.split(",")[0] for line in comparison[1:]}
        assert solvers == {"sigma[p=0.2N]", "sigma[p=0.5N]", "sigma[p=0.8N]"}

    def test_partial_failure_continues(self, runner, tmp_path):
        out = tmp_path / "partial"
        # newsamp with rank >= N fails; the bench must still finish with exit 0
        res = runner.invoke(
            cli,
            ["bench", "--data", "synthetic", "--m", "30", "--N", "10", "--p", "3",
             "--n", "5", "--seed", "1", "--solvers", "sigma,newsamp", "--rank", "10",
             "--epsilon", "1e-8", "--max-iter", "50", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        summaries = json.loads((out / "bench_summary.json").read_text())
        by_name = {s["solver"]: s for s in summaries}
        assert by_name["newsamp"]["status"] == "error"
        assert by_name["sigma"]["status"] in ("converged", "max_iter")

    def test_all_fail_exit_1(self, runner, tmp_path):
        res = runner.invoke(
            cli,
            ["bench", "--data", str(tmp_path / "missing.libsvm"), "--solvers", "gd",
             "--out", str(tmp_path / "x")],
        )
        assert res.exit_code == 1

    def test_gnuplot_script(self, runner, tmp_path):
        out = tmp_path / "plot"
        res = runner.invoke(
            cli,
            ["bench", "--data", "synthetic", "--m", "30", "--N", "14", "--p", "3",
             "--n", "7", "--seed", "1", "--solvers", "sigma,gd", "--gnuplot",
             "--epsilon", "1e-8", "--max-iter", "50", "--out", str(out)],
        )
        assert res.exit_code == 0
        script = (out / "plot.gp").read_text()
        assert "logscale" in script and "trace_sigma.csv" in script

    def test_time_budget_respected(self, runner, tmp_path):
        out = tmp_path / "budget"
        res = runner.invoke(
            cli,
            ["bench", "--data", "synthetic", "--m", "60", "--N", "40", "--p", "8",
             "--n", "4", "--seed", "1", "--solvers", "gd", "--epsilon", "1e-16",
             "--max-iter", "10000000", "--max-seconds", "1.0", "--out", str(out)],
        )
        assert res.exit_code == 0
        lines = (out / "trace_gd.csv").read_text().strip().splitlines()[1:]
        assert float(lines[-1].split(",")[1]) <= 1.2  # soft overshoot allowance


class TestDatagen:
    def test_writes_dataset_and_meta(self, runner, tmp_path):
        out = tmp_path / "ds"
        res = runner.invoke(
            cli,
            ["datagen", "--m", "30", "--N", "20", "--p", "4", "--gap", "100",
             "--labels", "poisson", "--seed", "3", "--out", str(out)],
        )
        assert res.exit_code == 0, res.output
        ds = load_libsvm(out / "data.libsvm", n_features=20)
        assert ds.m == 30
        assert np.all(ds.b >= 1)
        meta = json.loads((out / "meta.json").read_text())
        assert meta["m"] == 30 and meta["p"] == 4
        assert len(meta["x_true"]) == 20

    def test_meta_singular_values_survive_round_trip(self, runner, tmp_path):
        out = tmp_path / "ds"
        res = runner.invoke(
            cli,
            ["datagen", "--m", "25", "--N", "12", "--p", "3", "--gap", "50",
             "--labels", "gaussian", "--noise", "0.1", "--seed", "4", "--out", str(out)],
        )
        assert res.exit_code == 0
        meta = json.loads((out / "meta.json").read_text())
        ds = load_libsvm(out / "data.libsvm", n_features=12)
        realized = np.linalg.svd(ds.A, compute_uv=False)
        stored = np.asarray(meta["realized_singular_values"])
        assert np.max(np.abs(realized - stored) / stored) <= 1e-5

    def test_same_seed_identical_files(self, runner, tmp_path):
        args = ["datagen", "--m", "15", "--N", "8", "--p", "2", "--labels", "logistic",
                "--seed", "5"]
        r1 = runner.invoke(cli, args + ["--out", str(tmp_path / "a")])
        r2 = runner.invoke(cli, args + ["--out", str(tmp_path / "b")])
        assert r1.exit_code == 0 and r2.exit_code == 0
        assert (tmp_path / "a" / "data.libsvm").read_text() == (tmp_path / "b" / "data.libsvm").read_text()

    def test_invalid_spec_exit_1(self, runner, tmp_path):
        res = runner.invoke(
            cli,
            ["datagen", "--m", "10", "--N", "5", "--p", "9", "--labels", "gaussian",
             "--out", str(tmp_path / "bad")],
        )
        assert res.exit_code == 1

    def test_solve_on_generated_file(self, runner, tmp_path):
        out = tmp_path / "ds"
        runner.invoke(
            cli,
            ["datagen", "--m", "40", "--N", "16", "--p", "4", "--labels", "gaussian",
             "--noise", "0.05", "--seed", "6", "--out", str(out)],
        )
        res = runner.invoke(
            cli,
            ["solve", "--model", "gaussian", "--data", str(out / "data.libsvm"),
             "--n", "12", "--xi2", "1e-6", "--epsilon", "1e-8", "--max-iter", "600",
             "--out", str(tmp_path / "run")],
        )
        assert res.exit_code == 0, res.output


def test_thread_cap_env_var(tmp_path):
    import subprocess
    import sys

    out = tmp_path / "capped"
    res = subprocess.run(
        [sys.executable, "-m", "sigma_opt", "solve", "--model", "gaussian", "--data",
         "synthetic", "--m", "30", "--N", "15", "--p", "3", "--n", "8", "--seed", "1",
         "--epsilon", "1e-8", "--max-iter", "200", "--out", str(out)],
        capture_output=True, text=True,
        env={"PATH": "/usr/bin:/bin", "SIGMA_OPT_THREADS": "1"},
    )
    assert res.returncode in (0, 2), res.stderr
    assert (out / "trace.csv").exists()
