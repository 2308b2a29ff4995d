import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from entropic_pricing import cli
from entropic_pricing.dynamics import PathEnsemble
from entropic_pricing.fokker_planck import DensityGrid

ATM = ["--spot", "100", "--strike", "100", "--rate", "0.05", "--vol", "0.2", "--expiry", "1"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def record(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


class TestPrice:
    def test_closed(self, capsys):
        rec = record(capsys, "price", "--style", "call", *ATM, "--method", "closed")
        assert rec["premium"] == pytest.approx(10.4506, abs=5e-5)
        assert rec["method"] == "closed_form"
        assert rec["params"]["strike"] == 100.0

    @pytest.mark.parametrize("method, tol", [("quadrature", 1e-6), ("pde", 1e-3)])
    def test_numerical_methods(self, capsys, method, tol):
        rec = record(capsys, "price", "--style", "call", *ATM, "--method", method)
        assert rec["premium"] == pytest.approx(10.450583572185565, rel=tol)

    def test_mc(self, capsys):
        rec = record(capsys, "price", "--style", "put", *ATM, "--method", "mc",
                     "--paths", "20000", "--seed", "4")
        assert abs(rec["premium"] - 5.573526022256971) < 3 * rec["std_error"]

    def test_zero_strike_put(self, capsys):
        rec = record(capsys, "price", "--style", "put", "--spot", "100", "--strike", "0",
                     "--vol", "0.2", "--expiry", "1")
        assert rec["premium"] == 0.0

    def test_negative_vol_names_flag(self, capsys):
        code, out, err = run(capsys, "price", "--style", "call", "--spot", "100", "--strike",
                             "100", "--vol", "-0.1", "--expiry", "1")
        assert code == 2 and out == ""
        assert "--vol" in err

    def test_missing_flags_all_reported(self, capsys):
        code, _, err = run(capsys, "price", "--style", "call", "--vol", "0.2")
        assert code == 2
        for flag in ("--spot", "--strike", "--expiry"):
            assert flag in err

    def test_unknown_method_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["price", "--method", "binomial"])
        assert exc.value.code == 2

    def test_numeric_failure(self, capsys):
        code, out, err = run(capsys, "price", "--style", "call", "--spot", "100", "--strike",
                             "100", "--vol", "1000", "--expiry", "1", "--method", "quadrature")
        assert code == 3 and out == ""
        assert "non-finite" in err


class TestParity:
    def test_closed(self, capsys):
        rec = record(capsys, "parity", *ATM)
        assert abs(rec["gap"]) < 1e-12
        assert rec["call"] - rec["put"] == pytest.approx(100 - 100 * math.exp(-0.05))

    def test_mc_pathwise(self, capsys):
        rec = record(capsys, "parity", *ATM, "--method", "mc", "--paths", "10000", "--seed", "2")
        assert abs(rec["pathwise_gap"]) < 1e-10


class TestSimulate:
    def args(self, path, *extra):
        return ["simulate", "--spot", "100", "--mu", "0.05", "--vol", "0.2", "--horizon", "1",
                "--steps", "12", "--paths", "50", "--seed", "7", "--out", str(path), *extra]

    def test_writes_csv(self, capsys, tmp_path):
        rec = record(capsys, *self.args(tmp_path / "p.csv"))
        assert rec["paths"] == 50
        with open(tmp_path / "p.csv") as fh:
            ens = PathEnsemble.from_csv(fh)
        assert ens.log_prices.shape == (50, 13)
        with open(tmp_path / "p.csv") as fh:
            rows = fh.read().splitlines()
        assert all(len(r.split(",")) == 13 for r in rows[1:])

    def test_single_deterministic_path(self, capsys, tmp_path):
        out = tmp_path / "one.csv"
        record(capsys, "simulate", "--spot", "100", "--mu", "0.05", "--vol", "1e-12",
               "--horizon", "1", "--steps", "4", "--paths", "1", "--seed", "0", "--out", str(out))
        with open(out) as fh:
            ens = PathEnsemble.from_csv(fh)
        assert ens.n_paths == 1
        np.testing.assert_allclose(ens.log_prices[0], math.log(100) + 0.05 * ens.times, atol=1e-9)

    def test_unwritable(self, capsys, tmp_path):
        code, _, err = run(capsys, *self.args(tmp_path / "missing" / "p.csv"))
        assert code == 4 and "cannot write" in err


class TestFpe:
    def args(self, out, *extra):
        return ["fpe", "--mu", "0.05", "--vol", "0.2", "--spot", "100", "--t-final", "1",
                "--grid", "400", "--steps", "2000", "--out", str(out), *extra]

    def test_terminal_only(self, capsys, tmp_path):
        rec = record(capsys, *self.args(tmp_path))
        assert [os.path.basename(f) for f in rec["files"]] == ["density_0000.csv"]
        assert rec["mass"] == pytest.approx(1.0, abs=1e-6)
        assert rec["l1_vs_lognormal"] < 1e-3
        with open(rec["files"][0]) as fh:
            d = DensityGrid.from_csv(fh)
        assert d.time == 1.0 and d.n_points == 400

    def test_snapshots(self, capsys, tmp_path):
        rec = record(capsys, *self.args(tmp_path, "--snapshots", "4"))
        assert len(rec["files"]) == 5
        times = []
        for f in rec["files"]:
            with open(f) as fh:
                times.append(DensityGrid.from_csv(fh).time)
        assert times == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])

    def test_too_many_snapshots(self, capsys, tmp_path):
        code, _, err = run(capsys, "fpe", "--mu", "0", "--vol", "0.2", "--spot", "1",
                           "--t-final", "1", "--steps", "3", "--snapshots", "4",
                           "--out", str(tmp_path))
        assert code == 2 and "--snapshots" in err

    def test_unwritable(self, capsys, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code, _, _ = run(capsys, *self.args(blocker / "sub"))
        assert code == 4


class TestMaxent:
    def test_closed(self, capsys):
        rec = record(capsys, "maxent", "--mu", "0.05", "--vol", "0.2", "--dt", repr(1 / 252))
        assert rec["alpha"] == pytest.approx(6300.0, rel=1e-12)
        assert rec["beta"] == pytest.approx(0.75, rel=1e-12)

    def test_rounded_dt(self, capsys):
        # 0.003968 is 1/252 to four significant figures
        rec = record(capsys, "maxent", "--mu", "0.05", "--vol", "0.2", "--dt", "0.003968")
        assert rec["alpha"] == pytest.approx(6300.0, rel=1e-4)

    def test_numeric(self, capsys):
        rec = record(capsys, "maxent", "--mu", "0.05", "--vol", "0.2", "--dt", repr(1 / 252),
                     "--numeric")
        assert rec["method"] == "dual_newton"
        assert rec["alpha"] == pytest.approx(6300.0, rel=1e-6)
        assert rec["beta"] == pytest.approx(0.75, rel=1e-6)

    def test_zero_vol(self, capsys):
        code, _, err = run(capsys, "maxent", "--mu", "0.05", "--vol", "0", "--dt", "0.01")
        assert code == 2 and "--vol" in err

    def test_underflowing_variance(self, capsys):
        code, _, err = run(capsys, "maxent", "--mu", "0", "--vol", "1e-170", "--dt", "1",
                           "--numeric")
        assert code == 3 and "residual" in err


class TestConfig:
    def test_flags_override_file(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"spot": 100,
                                   "option": {"style": "call", "strike": 100, "expiry": 1},
                                   "market": {"sigma": 0.3, "risk_free_rate": 0.05}}))
        rec = record(capsys, "price", "--config", str(cfg), "--vol", "0.2")
        assert rec["params"]["sigma"] == 0.2
        assert rec["premium"] == pytest.approx(10.450583572185565, rel=1e-14)
        rec = record(capsys, "price", "--config", str(cfg))
        assert rec["params"]["sigma"] == 0.3

    def test_verbose_echoes_resolved_config(self, capsys):
        code, out, err = run(capsys, "price", "--style", "call", *ATM, "--verbose")
        assert code == 0
        echoed = json.loads(err.splitlines()[0])["resolved_config"]
        assert echoed["market"]["sigma"] == 0.2
        assert echoed["method"] == "closed"

    def test_bad_config(self, capsys, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text("[1, 2]")
        code, _, err = run(capsys, "price", "--config", str(cfg))
        assert code == 2 and "--config" in err
        code, _, err = run(capsys, "price", "--config", str(tmp_path / "none.json"))
        assert code == 2


class TestDeterminism:
    def test_seeded_stdout_identical(self, capsys):
        for argv in (["price", "--style", "call", *ATM, "--method", "mc", "--paths", "5000"],
                     ["parity", *ATM, "--method", "mc", "--paths", "5000", "--seed", "3"],
                     ["maxent", "--mu", "0.05", "--vol", "0.2", "--dt", "0.01", "--numeric"]):
            first = run(capsys, *argv)[1]
            assert first == run(capsys, *argv)[1]

    def test_simulate_files_identical(self, capsys, tmp_path):
        blobs = []
        for name in ("a.csv", "b.csv"):
            record(capsys, "simulate", "--spot", "100", "--mu", "0.05", "--vol", "0.2",
                   "--horizon", "1", "--steps", "20", "--paths", "200", "--seed", "11",
                   "--out", str(tmp_path / name))
            blobs.append((tmp_path / name).read_bytes())
        assert blobs[0] == blobs[1]

    def test_entry_point(self, tmp_path):
        # the installed module runs as a script
        proc = subprocess.run([sys.executable, "-m", "entropic_pricing", "maxent", "--mu", "0",
                               "--vol", "1", "--dt", "1"], capture_output=True, text=True)
        assert proc.returncode == 0
        rec = json.loads(proc.stdout)
        assert (rec["alpha"], rec["beta"]) == (1.0, -0.5)
