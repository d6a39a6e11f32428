import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from rpasfa import SYNTHETIC_ARMA11
from rpasfa.cli import main


@pytest.fixture()
def config(tmp_path):
    path = tmp_path / "model.json"
    path.write_text(json.dumps(SYNTHETIC_ARMA11))
    return path


def read_csv(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return header, np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


class TestSimulate:
    def test_writes_csv_and_sidecar(self, tmp_path, config):
        out = tmp_path / "traj.csv"
        assert main(["simulate", "--config", str(config), "--horizon", "2000", "--seed", "1", "--out", str(out)]) == 0
        header, data = read_csv(out)
        assert header == ["k", "e_1", "x_1", "y_1"]
        assert data.shape == (2000, 4)
        meta = json.loads((tmp_path / "traj.csv.json").read_text())
        assert meta["seed"] == 1 and meta["T"] == 2000

    def test_deterministic_digest(self, tmp_path, config):
        digests = []
        for i in range(2):
            out = tmp_path / f"t{i}.csv"
            main(["simulate", "--config", str(config), "--horizon", "2000", "--seed", "1", "--out", str(out)])
            digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
        assert digests[0] == digests[1]

    def test_nonstationary_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(dict(SYNTHETIC_ARMA11, ar_coeffs=[[1.2]])))
        code = main(["simulate", "--config", str(bad), "--horizon", "10", "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "NonStationary" in capsys.readouterr().err

    def test_zero_horizon(self, tmp_path, config, capsys):
        code = main(["simulate", "--config", str(config), "--horizon", "0", "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "horizon" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        code = main(["simulate", "--config", str(tmp_path / "nope.json"), "--horizon", "5", "--out", str(tmp_path / "x.csv")])
        assert code == 3

    def test_unwritable_output(self, tmp_path, config):
        code = main(["simulate", "--config", str(config), "--horizon", "5", "--out", str(tmp_path / "no" / "dir" / "x.csv")])
        assert code == 3


class TestFilter:
    @pytest.fixture()
    def traj(self, tmp_path, config):
        out = tmp_path / "traj.csv"
        main(["simulate", "--config", str(config), "--horizon", "2000", "--seed", "5", "--out", str(out)])
        return out

    def test_recursive_columns(self, tmp_path, config, traj):
        out = tmp_path / "est.csv"
        assert main(["filter", "--config", str(config), "--trajectory", str(traj), "--method", "recursive", "--out", str(out)]) == 0
        header, data = read_csv(out)
        assert header == ["k", "xhat_1", "innovation_1", "post_var_1"]
        assert data.shape == (2000, 4)
        assert data[0, 3] == pytest.approx(0.44373, abs=1e-5)

    def test_augmented_has_diagnostics(self, tmp_path, config, traj):
        out = tmp_path / "est.csv"
        assert main(["filter", "--config", str(config), "--trajectory", str(traj), "--method", "augmented-kalman", "--out", str(out)]) == 0
        rec = tmp_path / "rec.csv"
        main(["filter", "--config", str(config), "--trajectory", str(traj), "--out", str(rec)])
        h1, a = read_csv(out)
        h2, b = read_csv(rec)
        assert h1 == h2
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_batch_cap(self, tmp_path, config, traj):
        code = main(["filter", "--config", str(config), "--trajectory", str(traj), "--method", "batch-oracle", "--out", str(tmp_path / "e.csv")])
        assert code == 4

    def test_static_zero_input(self, tmp_path, config):
        zeros = tmp_path / "zeros.csv"
        zeros.write_text("k,y_1\n" + "".join(f"{k},0.0\n" for k in range(20)))
        out = tmp_path / "e.csv"
        assert main(["filter", "--config", str(config), "--trajectory", str(zeros), "--method", "static", "--out", str(out)]) == 0
        header, data = read_csv(out)
        assert header == ["k", "xhat_1"]
        assert np.all(data[:, 1] == 0)

    def test_dimension_mismatch(self, tmp_path, config):
        two = tmp_path / "two.csv"
        two.write_text("k,y_1,y_2\n0,1.0,2.0\n")
        code = main(["filter", "--config", str(config), "--trajectory", str(two), "--out", str(tmp_path / "e.csv")])
        assert code == 2


class TestCompare:
    def run(self, config, out, trials=3, horizon=300, jobs=1, seed=42):
        args = ["compare", "--config", str(config), "--trials", str(trials), "--horizon", str(horizon),
                "--seed", str(seed), "--jobs", str(jobs), "--out", str(out), "--quiet"]
        return main(args)

    def test_outputs(self, tmp_path, config):
        out = tmp_path / "cmp"
        assert self.run(config, out) == 0
        doc = json.loads((out / "report.json").read_text())
        assert doc["trials"] == 3
        assert [m["method"] for m in doc["methods"]][0] == "recursive"
        assert doc["extra"]["augmented_state_dim"] == 2
        lines = (out / "fig1_trial_00.csv").read_text().splitlines()
        assert lines[0].startswith("# seed=") and "corr_recursive=" in lines[0] and "corr_static=" in lines[0]
        assert lines[1] == "k,x_true,xhat_recursive,xhat_static"
        assert len(lines) == 302
        assert "stand-in" in (out / "report.txt").read_text()

    def test_single_trial_has_no_std(self, tmp_path, config):
        out = tmp_path / "one"
        self.run(config, out, trials=1)
        assert "±" not in (out / "report.txt").read_text()
        assert "mse_std" not in (out / "report.json").read_text()

    def test_byte_identical_across_runs_and_jobs(self, tmp_path, config):
        outs = []
        for i, jobs in enumerate((1, 1, 2)):
            out = tmp_path / f"r{i}"
            self.run(config, out, jobs=jobs)
            outs.append(out)
        for name in ("report.json", "report.txt", "fig1_trial_02.csv"):
            blobs = {(o / name).read_bytes() for o in outs}
            assert len(blobs) == 1

    def test_invalid_trials(self, tmp_path, config):
        assert self.run(config, tmp_path / "x", trials=0) == 2


def test_console_script(tmp_path, config):
    out = tmp_path / "t.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "rpasfa.cli", "simulate", "--config", str(config), "--horizon", "3", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().count("\n") == 4
