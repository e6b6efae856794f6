import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from invmaxstable import cli
from invmaxstable.simulate import file_sha256, read_pairs_csv


def run(*argv):
    return cli.main([str(a) for a in argv])


def manifest(path):
    return json.loads(open(str(path) + ".manifest.json").read())


@pytest.fixture(scope="module")
def smith_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("sim") / "s.csv"
    assert run("simulate", "--family", "smith", "--lambda", 1.3, "--n", 1000, "--seed", 42,
               "--out", path) == 0
    return path


class TestSimulate:
    def test_rows_and_manifest(self, smith_csv):
        assert read_pairs_csv(smith_csv).shape == (1000, 2)
        man = manifest(smith_csv)
        assert man["family"] == "smith" and man["params"] == {"lam": 1.3}
        assert man["seed"] == 42 and man["n"] == 1000
        assert man["outputs"] == {"s.csv": file_sha256(smith_csv)}
        assert "timestamp" in man and "tool_version" in man

    def test_deterministic(self, smith_csv, tmp_path):
        again = tmp_path / "s.csv"
        assert run("simulate", "--family", "smith", "--lambda", 1.3, "--n", 1000, "--seed", 42,
                   "--out", again) == 0
        assert file_sha256(again) == file_sha256(smith_csv)

    def test_spec_text(self, smith_csv, tmp_path):
        out = tmp_path / "t.csv"
        assert run("simulate", "--spec", "family=smith lambda=1.3", "--n", 1000, "--seed", 42,
                   "--out", out) == 0
        assert file_sha256(out) == file_sha256(smith_csv)

    def test_reps_use_consecutive_streams(self, tmp_path):
        base = tmp_path / "r.csv"
        assert run("simulate", "--family", "logistic", "--alpha", 0.5, "--n", 50, "--seed", 3,
                   "--reps", 3, "--out", base) == 0
        files = sorted(tmp_path.glob("r*.csv"))
        assert len(files) == 3
        assert [manifest(f)["stream_index"] for f in files] == [0, 1, 2]
        single = tmp_path / "single.csv"
        run("simulate", "--family", "logistic", "--alpha", 0.5, "--n", 50, "--seed", 3,
            "--stream-index", 2, "--out", single)
        assert file_sha256(single) == file_sha256(files[2])

    def test_fifteen_digit_round_trip(self, smith_csv):
        with open(smith_csv) as fh:
            rows = list(csv.reader(fh))[1:]
        vals = np.array(rows, dtype=float)
        assert np.array_equal(vals, read_pairs_csv(smith_csv))
        for v in vals.ravel()[:100]:
            assert float(f"{v:.15g}") == pytest.approx(v, rel=1e-14)

    @pytest.mark.parametrize("argv", [
        ["--family", "smith", "--lambda", 1.3, "--n", 0, "--seed", 1],
        ["--family", "smith", "--lambda", -1, "--n", 10, "--seed", 1],
        ["--family", "smith", "--lambda", "abc", "--n", 10, "--seed", 1],
        ["--family", "smith", "--lambda", "0.1..2", "--n", 10, "--seed", 1],
        ["--n", 10, "--seed", 1],
        ["--family", "nosuch", "--n", 10, "--seed", 1],
    ])
    def test_usage_errors(self, tmp_path, argv, capsys):
        assert run("simulate", *argv, "--out", tmp_path / "x.csv") == 2

    def test_parameter_message_names_violation(self, tmp_path, capsys):
        run("simulate", "--family", "smith", "--lambda", -1, "--n", 10, "--seed", 1,
            "--out", tmp_path / "x.csv")
        assert "lam" in capsys.readouterr().err


class TestFit:
    @pytest.mark.parametrize("model,names", [("canonical", {"alpha", "beta", "mu", "sigma"}),
                                             ("smith", {"lam", "mu", "sigma"})])
    def test_json(self, smith_csv, tmp_path, model, names):
        out = tmp_path / f"{model}.json"
        assert run("fit", "--input", smith_csv, "--model", model, "--out", out) == 0
        res = json.loads(out.read_text())
        assert set(res["estimates"]) == names
        for key in ("model", "estimates", "stderr", "nll", "converged", "threshold",
                    "n_exceed", "residual_quantiles"):
            assert key in res
        assert res["stderr"] is None
        assert res["threshold"] == pytest.approx(-math.log(0.065), rel=1e-14)
        resid = np.loadtxt(tmp_path / f"{model}_residuals.csv", delimiter=",", skiprows=1)
        assert resid.shape == (res["n_exceed"], 3)
        assert manifest(out)["input_sha256"] == file_sha256(smith_csv)

    def test_deterministic(self, smith_csv, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run("fit", "--input", smith_csv, "--out", a)
        run("fit", "--input", smith_csv, "--out", b)
        assert file_sha256(a) == file_sha256(b)

    def test_missing_column(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("x\n" + "\n".join(str(v) for v in range(1, 100)) + "\n")
        assert run("fit", "--input", bad, "--out", tmp_path / "f.json") == 3

    def test_missing_file(self, tmp_path):
        assert run("fit", "--input", tmp_path / "none.csv", "--out", tmp_path / "f.json") == 3

    def test_too_few_exceedances(self, tmp_path):
        small = tmp_path / "small.csv"
        run("simulate", "--family", "smith", "--lambda", 1.3, "--n", 100, "--seed", 1,
            "--out", small)
        assert run("fit", "--input", small, "--out", tmp_path / "f.json") == 3

    def test_bad_threshold(self, smith_csv, tmp_path):
        assert run("fit", "--input", smith_csv, "--threshold-quantile", 1.5,
                   "--out", tmp_path / "f.json") == 2


class TestQuantiles:
    def test_fitted_and_theory(self, smith_csv, tmp_path):
        out = tmp_path / "q.csv"
        assert run("quantiles", "--input", smith_csv, "--family", "smith", "--lambda", 1.3,
                   "--n-points", 10, "--out", out) == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert {r["source"] for r in rows} == {"fitted", "theory"}
        assert len(rows) == 2 * 3 * 10
        fitted = np.array([[float(r["q"]) for r in rows if r["source"] == "fitted"
                            and float(r["p"]) == p] for p in (0.025, 0.5, 0.975)])
        assert np.all(np.diff(fitted, axis=0) >= 0)

    def test_bad_probs(self, smith_csv, tmp_path):
        assert run("quantiles", "--input", smith_csv, "--probs", "0.5,1.2",
                   "--out", tmp_path / "q.csv") == 2


class TestTheory:
    def test_norming_sweep(self, tmp_path):
        out = tmp_path / "fig1.csv"
        assert run("theory", "--family", "smith", "--lambda", "0.01..20", "--what", "norming",
                   "--steps", 5, "--n-points", 20, "--out", out) == 0
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert {r["setting"] for r in rows} == {"0", "1", "2", "3", "4"}
        markers = {r["marker_p"] for r in rows if r["marker_p"]}
        assert len(markers) == 3
        lams = manifest(out)["settings"]
        assert lams[0]["lam"] == pytest.approx(0.01) and lams[-1]["lam"] == pytest.approx(20)
        x0 = rows[0]["x"]
        ratio = np.array([float(r["a_over_x"]) for r in rows if r["x"] == x0])
        lam = np.array([v["lam"] for v in lams])
        lx = math.log(float(x0))
        expected = np.exp(-lam * math.sqrt(2 * lx) + lam * math.log(lx) / math.sqrt(2 * lx)
                          + lam**2 / 2)
        np.testing.assert_allclose(ratio, expected, rtol=1e-12)
        assert np.argmax(ratio) == len(lam) - 1

    def test_limit_law(self, tmp_path):
        out = tmp_path / "g.csv"
        assert run("theory", "--family", "schlather", "--rho", 0.0, "--what", "limit",
                   "--n-points", 30, "--out", out) == 0
        g = np.loadtxt(out, delimiter=",", skiprows=1)[:, 2]
        assert np.all(np.diff(g) >= 0) and np.all((g >= 0) & (g <= 1))

    def test_unsupported_family(self, tmp_path):
        assert run("theory", "--family", "marshallolkin", "--alpha", 0.0,
                   "--out", tmp_path / "t.csv") == 2


class TestVerify:
    def test_moment_suite_passes(self, tmp_path):
        out = tmp_path / "v.json"
        assert run("verify", "--suite", "moment", "--out", out) == 0
        rep = json.loads(out.read_text())
        assert rep["passed"] and rep["suites"][0]["suite"] == "moment"
        assert len(rep["suites"][0]["records"]) >= 10

    def test_failing_suite_exit_code(self, tmp_path):
        # the convergence suite records the Smith reference-level failure
        out = tmp_path / "v.json"
        assert run("verify", "--suite", "convergence", "--out", out) == 4
        assert not json.loads(out.read_text())["passed"]

    def test_unknown_suite(self):
        assert run("verify", "--suite", "nosuch") == 2


class TestFig2:
    def test_outputs_and_determinism(self, tmp_path):
        args = ["fig2", "--lambda", "1.3", "--reps", 3, "--n", 1000, "--seed", 5,
                "--n-points", 6]
        assert run(*args, "--out-dir", tmp_path / "a") == 0
        assert run(*args, "--out-dir", tmp_path / "b") == 0
        for name in ("fig2_lambda1.3.csv", "fig2_summary.json"):
            assert file_sha256(tmp_path / "a" / name) == file_sha256(tmp_path / "b" / name)
        summary = json.loads((tmp_path / "a" / "fig2_summary.json").read_text())
        entry = summary["1.3"]
        assert set(entry["discrepancy_relative_iqr"]) == {"canonical", "smith"}
        with open(tmp_path / "a" / "fig2_lambda1.3.csv") as fh:
            models = {r["model"] for r in csv.DictReader(fh)}
        assert models == {"canonical", "smith", "theory"}

    def test_bad_lambda_list(self, tmp_path):
        assert run("fig2", "--lambda", "a,b", "--seed", 1, "--out-dir", tmp_path) == 2


class TestParser:
    def test_unknown_subcommand(self, capsys):
        assert run("nosuch") == 2

    def test_no_arguments(self, capsys):
        assert run() == 2

    def test_console_entry(self):
        out = subprocess.run([sys.executable, "-m", "invmaxstable.cli", "--version"],
                             capture_output=True, text=True)
        assert out.returncode == 0 and out.stdout.strip()
