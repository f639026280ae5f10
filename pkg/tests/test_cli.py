"""End-to-end tests of the command-line interface and its exit codes."""

import json
from pathlib import Path

import pytest

from bclab.cli import main
from bclab.seqcore import power_seq, seq_to_json

HARMONIC_CFG = {
    "process": {"variant": "iid"},
    "family": {
        "template": "nested-left",
        "space": "line",
        "radius": {"template": "powerlog", "c": 1.0, "p": 1.0, "q": 0.0,
                   "shift": 0.0, "start": 1},
    },
    "n": 1000,
    "n_traj": 4,
    "seed": 3,
}


def write_json(path: Path, doc) -> str:
    path.write_text(json.dumps(doc))
    return str(path)


class TestSimulate:
    def test_run_writes_artifacts_and_passes(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "cfg.json", HARMONIC_CFG)
        out = tmp_path / "run"
        code = main(["simulate", "--config", cfg, "--out", str(out),
                     "--predict", "BC"])
        assert code == 0
        for name in ("config.json", "hits.jsonl", "summary.csv",
                     "summary.md", "criteria.json", "manifest.json"):
            assert (out / name).exists(), name
        text = capsys.readouterr().out
        assert "prediction BC: pass" in text
        assert "run digest " in text

    def test_prediction_failure_exit_2(self, tmp_path):
        cfg = write_json(tmp_path / "cfg.json", HARMONIC_CFG)
        code = main(["simulate", "--config", cfg,
                     "--out", str(tmp_path / "r"), "--predict", "not-BC"])
        assert code == 2

    def test_bad_config_exit_4(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.json")
        assert main(["simulate", "--config", missing,
                     "--out", str(tmp_path)]) == 4
        bad = write_json(tmp_path / "bad.json", {**HARMONIC_CFG, "n": 5})
        assert main(["simulate", "--config", bad,
                     "--out", str(tmp_path / "r2")]) == 4
        assert "error:" in capsys.readouterr().err

    def test_missing_out_dir_exit_4(self, tmp_path):
        cfg = write_json(tmp_path / "cfg.json", HARMONIC_CFG)
        assert main(["simulate", "--config", cfg]) == 4


class TestCriteria:
    def test_satisfied_exit_0(self, tmp_path, capsys):
        spec = write_json(tmp_path / "c.json", {
            "check": "alpha", "mode": "poly-1",
            "mu": seq_to_json(power_seq(1.0, 0.5)),
            "params": {"a": 1.0}, "horizon": 10**5,
        })
        rep_out = tmp_path / "rep.json"
        assert main(["criteria", "--spec", spec, "--out", str(rep_out)]) == 0
        text = capsys.readouterr().out
        assert "verdict alpha-poly-1: satisfied" in text
        assert json.loads(rep_out.read_text())["verdict"] == "satisfied"

    def test_violated_exit_2(self, tmp_path):
        spec = write_json(tmp_path / "c.json", {
            "check": "renewal", "nu": seq_to_json(power_seq(1.0, 1.8)),
        })
        assert main(["criteria", "--spec", spec]) == 2

    def test_inconclusive_exit_3(self, tmp_path):
        # strong mode with no workable theta on the grid
        spec = write_json(tmp_path / "c.json", {
            "check": "alpha", "mode": "strong",
            "alpha": seq_to_json(power_seq(1.0, 0.5)),
            "mu": seq_to_json(power_seq(1.0, 0.9)), "horizon": 10**5,
        })
        assert main(["criteria", "--spec", spec]) == 3

    def test_bad_spec_exit_4(self, tmp_path):
        spec = write_json(tmp_path / "c.json", {"check": "wat"})
        assert main(["criteria", "--spec", spec]) == 4


class TestMixing:
    def test_dmr_bounds_csv(self, capsys):
        assert main(["mixing", "--task", "dmr", "--a", "1.0",
                     "--ns", "10,100"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "n,lower,upper"
        n, lo, hi = lines[1].split(",")
        assert n == "10"
        assert float(lo) == pytest.approx(0.1)
        assert float(hi) == pytest.approx(0.6)

    def test_circle_profile_to_file(self, tmp_path):
        out = tmp_path / "circle.csv"
        assert main(["mixing", "--task", "circle", "--ns", "16,64",
                     "--k-max", "2000", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "n,value,provenance,error_bar"
        assert len(lines) == 3

    def test_kernel_profile(self, capsys):
        assert main(["mixing", "--task", "kernel", "--a", "1.0",
                     "--ns", "10,20", "--m", "60"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 3

    def test_bad_value_exit_4(self):
        assert main(["mixing", "--task", "dmr", "--a", "-1.0"]) == 4


class TestReport:
    def test_reemit_matches_run_digest(self, tmp_path, capsys):
        cfg = write_json(tmp_path / "cfg.json", HARMONIC_CFG)
        out = tmp_path / "run"
        main(["simulate", "--config", cfg, "--out", str(out)])
        first = capsys.readouterr().out.splitlines()[0]
        assert main(["report", "--run", str(out), "--format", "md"]) == 0
        again = capsys.readouterr().out.splitlines()[0]
        assert first == again  # identical "run digest <hex>" line

    def test_missing_run_exit_4(self, tmp_path):
        assert main(["report", "--run", str(tmp_path), "--format", "csv"]) == 4
