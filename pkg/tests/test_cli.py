"""CLI integration tests: configs, artifacts, determinism, error paths."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from glassmem import cli


def run(argv):
    return cli.main([str(a) for a in argv])


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def read_csv(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    comments = [l for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    rows = list(csv.reader(body))
    return comments, rows[0], rows[1:]


class TestConfigHandling:
    def test_bundled_names_resolve(self):
        for name in cli.BUNDLED_CONFIGS:
            doc = cli.load_config(name)
            assert "subcommand" in doc and "params" in doc

    def test_missing_config_exits_2(self, tmp_path, capsys):
        assert run(["recall", "--config", tmp_path / "nope.json"]) == 2
        assert "config not found" in capsys.readouterr().err

    def test_subcommand_mismatch(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"subcommand": "sk", "params": {}})
        assert run(["recall", "--config", cfg]) == 2
        assert "subcommand" in capsys.readouterr().err

    def test_unknown_param_keys_rejected(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "subcommand": "sk",
            "params": {"n_list": [8], "bogus": 1},
        })
        assert run(["sk", "--config", cfg, "--out", tmp_path / "o"]) == 2
        assert "unknown keys" in capsys.readouterr().err

    def test_empty_p_list_usage_error(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "subcommand": "hopfield",
            "params": {"curves": [{"n": 8, "p_list": [],
                                   "realizations": 2}]},
        })
        assert run(["hopfield", "--config", cfg,
                    "--out", tmp_path / "o"]) == 2
        assert "p_list" in capsys.readouterr().err

    def test_bad_plan_path(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {
            "subcommand": "recall",
            "params": {"plan": str(tmp_path / "ghost.json"),
                       "stimulus": [1, -1]},
        })
        assert run(["recall", "--config", cfg, "--out", tmp_path / "o"]) == 2
        assert "plan file not found" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()   # nothing partially written


class TestSkCommand:
    def test_small_run_csv(self, tmp_path):
        cfg = write_config(tmp_path, {
            "subcommand": "sk", "seed": 3, "deterministic": True,
            "params": {"n_list": [8], "kinds": ["sd", "mh"],
                       "thresholds": [0.5], "realizations": 10,
                       "mode": "both"},
        })
        out = tmp_path / "out"
        assert run(["sk", "--config", cfg, "--out", out]) == 0
        comments, header, rows = read_csv(out / "sk_table.csv")
        assert any("config_hash=" in c for c in comments)
        assert header[:4] == ["n", "kind", "threshold", "realizations"]
        assert len(rows) == 2
        kinds = {r[1] for r in rows}
        assert kinds == {"sd", "mh"}
        for r in rows:
            assert float(r[4]) > 0.0   # capacity mean

    def test_threads_do_not_change_results(self, tmp_path):
        cfg = write_config(tmp_path, {
            "subcommand": "sk", "seed": 5, "deterministic": True,
            "params": {"n_list": [8, 10], "kinds": ["sd"],
                       "thresholds": [0.5], "realizations": 8,
                       "mode": "capacity"},
        })
        outs = []
        for i, threads in enumerate((1, 3)):
            out = tmp_path / f"o{i}"
            assert run(["sk", "--config", cfg, "--out", out,
                        "--threads", threads]) == 0
            outs.append((out / "sk_table.csv").read_bytes())
        assert outs[0] == outs[1]


class TestHopfieldCommand:
    def test_rows_and_fit(self, tmp_path):
        cfg = write_config(tmp_path, {
            "subcommand": "hopfield", "seed": 2, "deterministic": True,
            "params": {"curves": [
                {"n": 8, "p_list": [2, 3], "realizations": 30},
                {"n": 10, "p_list": [2, 3], "realizations": 30},
                {"n": 12, "p_list": [2, 3], "realizations": 30},
            ]},
        })
        out = tmp_path / "out"
        assert run(["hopfield", "--config", cfg, "--out", out]) == 0
        _, header, rows = read_csv(out / "hopfield_capacity.csv")
        assert header == ["n", "p", "mean", "std", "realizations", "seed"]
        assert len(rows) == 6
        summary = json.loads((out / "hopfield_summary.json").read_text())
        assert len(summary["maxima"]) == 3
        assert "fit" in summary       # 3 distinct n values

    def test_no_fit_below_three_sizes(self, tmp_path):
        cfg = write_config(tmp_path, {
            "subcommand": "hopfield", "seed": 2,
            "params": {"curves": [
                {"n": 8, "p_list": [2], "realizations": 5}]},
        })
        out = tmp_path / "out"
        assert run(["hopfield", "--config", cfg, "--out", out,
                    "--deterministic"]) == 0
        summary = json.loads((out / "hopfield_summary.json").read_text())
        assert "fit" not in summary


class TestCavityCommand:
    def test_matrix_scan_and_mode_sum(self, tmp_path):
        cfg = write_config(tmp_path, {
            "subcommand": "cavity", "seed": 1, "deterministic": True,
            "params": {"plan": "j1",
                       "scan": {"start": [0, 0], "stop": [30, 0],
                                "points": 4},
                       "mode_sum_check": {"pairs": 2, "max_order": 70}},
        })
        out = tmp_path / "out"
        assert run(["cavity", "--config", cfg, "--out", out]) == 0
        _, header, rows = read_csv(out / "j_matrix.csv")
        assert header == ["i", "j", "J"]
        assert len(rows) == 256
        summary = json.loads((out / "cavity_summary.json").read_text())
        assert summary["diag_mean"] == pytest.approx(0.8081, abs=2e-3)
        assert summary["mode_sum_max_rel_err"] < 1e-3
        _, _, scan_rows = read_csv(out / "kernel_scan.csv")
        assert len(scan_rows) == 4
        # first scan point is J((0,0),(0,0)), the kernel peak
        assert float(scan_rows[0][2]) == pytest.approx(1.283609411724655,
                                                       rel=1e-9)


class TestRecallCommand:
    def test_figs5_bundled_config(self, tmp_path):
        out = tmp_path / "out"
        assert run(["recall", "--config", "figS5_trial", "--out", out,
                    "--emit-trajectory"]) == 0
        doc = json.loads((out / "recall_outcome.json").read_text())
        assert doc["recovered_memory"] is True
        assert doc["flipped_sites"] == [2, 3, 4]
        assert doc["spin_length_drift"] < 1e-6
        assert doc["meta"]["version"]
        comments, header, rows = read_csv(out / "trajectory.csv")
        n = 16
        assert header[0] == "t"
        assert len(header) == 1 + 5 * n + 4
        assert float(rows[0][0]) == 0.0
        assert float(rows[-1][0]) == pytest.approx(8.0, abs=1e-9)

    def test_zero_stimulus_smoke(self, tmp_path):
        cfg = write_config(tmp_path, {
            "subcommand": "recall", "seed": 4,
            "params": {"plan": "j1",
                       "stimulus": [0] * 16,
                       "noise": "none", "rtol": 1e-5, "atol": 1e-7},
        })
        out = tmp_path / "out"
        assert run(["recall", "--config", cfg, "--out", out,
                    "--deterministic"]) == 0
        doc = json.loads((out / "recall_outcome.json").read_text())
        assert set(doc["signs"]) <= {-1, 1}


class TestDiscoverCommand:
    def test_sk_oracle_deterministic_bytes(self, tmp_path):
        cfg = write_config(tmp_path, {
            "subcommand": "discover", "seed": 9, "deterministic": True,
            "params": {"oracle": {"type": "sk", "n": 10, "j_seed": 4,
                                  "kind": "sd"},
                       "pipeline": {"samples": 40, "screen_trials": 6,
                                    "adaptive_trials": 6,
                                    "strict": True,
                                    "exact_single_flip": True},
                       "extrapolate": True, "emit_tree": True},
        })
        blobs = []
        for i in range(2):
            out = tmp_path / f"o{i}"
            assert run(["discover", "--config", cfg, "--out", out]) == 0
            blobs.append((
                (out / "pipeline_report.json").read_bytes(),
                (out / "trials.csv").read_bytes(),
                (out / "tree.json").read_bytes(),
            ))
        assert blobs[0] == blobs[1]
        doc = json.loads(blobs[0][0])
        assert doc["capacity"]["count"] >= 1
        assert doc["memories"]
        assert "capacity_vs_samples" in doc

    def test_identity_oracle_degenerate(self, tmp_path):
        cfg = write_config(tmp_path, {
            "subcommand": "discover", "seed": 2, "deterministic": True,
            "params": {"oracle": {"type": "identity", "n": 8},
                       "pipeline": {"samples": 20, "screen_trials": 4,
                                    "adaptive_trials": 4}},
        })
        out = tmp_path / "out"
        assert run(["discover", "--config", cfg, "--out", out]) == 0
        doc = json.loads((out / "pipeline_report.json").read_text())
        # every distinct stimulus is its own attractor with no basin
        assert doc["capacity"]["count"] == 0
        assert len(doc["memories"]) <= 20

    def test_conditions_table(self, tmp_path):
        cfg = write_config(tmp_path, {
            "subcommand": "discover", "seed": 3, "deterministic": True,
            "params": {"oracle": {"type": "sk", "n": 8, "j_seed": 1,
                                  "kind": "sd"},
                       "pipeline": {"samples": 25, "screen_trials": 4,
                                    "adaptive_trials": 4},
                       "conditions": [
                           {"label": "a"},
                           {"label": "b"},
                       ]},
        })
        out = tmp_path / "out"
        assert run(["discover", "--config", cfg, "--out", out]) == 0
        _, header, rows = read_csv(out / "capacity_table.csv")
        assert header[0] == "label"
        assert [r[0] for r in rows] == ["a", "b"]
        assert (out / "a_trials.csv").exists()
        assert (out / "b_trials.csv").exists()


class TestFlagPrecedence:
    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = write_config(tmp_path, {
            "subcommand": "cavity", "seed": 1, "deterministic": True,
            "params": {"plan": "j1"},
        })
        out = tmp_path / "out"
        assert run(["cavity", "--config", cfg, "--out", out,
                    "--seed", 77]) == 0
        doc = json.loads((out / "cavity_summary.json").read_text())
        assert doc["meta"]["seed"] == 77

    def test_env_seed_when_flag_absent(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GLASSMEM_SEED", "55")
        cfg = write_config(tmp_path, {
            "subcommand": "cavity", "seed": 1, "deterministic": True,
            "params": {"plan": "j1"},
        })
        out = tmp_path / "out"
        assert run(["cavity", "--config", cfg, "--out", out]) == 0
        doc = json.loads((out / "cavity_summary.json").read_text())
        assert doc["meta"]["seed"] == 55

    def test_nondeterministic_mode_stamps_time(self, tmp_path):
        cfg = write_config(tmp_path, {
            "subcommand": "cavity", "params": {"plan": "j1"},
        })
        out = tmp_path / "out"
        assert run(["cavity", "--config", cfg, "--out", out]) == 0
        doc = json.loads((out / "cavity_summary.json").read_text())
        assert "created_unix" in doc["meta"]

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
        assert "glassmem" in capsys.readouterr().out
