import json
import math
import subprocess
import sys

import numpy as np
import pytest

import demon_battery.experiments as experiments
from demon_battery.cli import main


def read_csv(path):
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(dict(zip(header, line.split(","))))
    return header, rows


class TestHistogramCommand:
    def test_writes_csv_and_sidecar(self, tmp_path):
        out = tmp_path / "hist.csv"
        assert main(["histogram", "--n", "2000", "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ["bin_lo", "bin_hi", "raw_count", "processed_count"]
        assert len(rows) == 40
        assert sum(int(r["raw_count"]) for r in rows) == 2000
        assert sum(int(r["processed_count"]) for r in rows) == 2000
        sidecar = json.loads((tmp_path / "hist.json").read_text())
        assert set(sidecar) == {"raw_mean", "processed_mean", "std_errors",
                                "n", "seed", "params"}
        assert sidecar["n"] == 2000
        assert sidecar["seed"] == 12345
        assert abs(sidecar["processed_mean"]
                   - 0.5 * (1 + math.sin(math.pi / 4))) < 0.02
        assert sidecar["params"]["g_tau"] == pytest.approx(math.pi / 8)

    def test_single_sample_reports_zero_error(self, tmp_path):
        out = tmp_path / "one.csv"
        assert main(["histogram", "--n", "1", "--out", str(out)]) == 0
        sidecar = json.loads((tmp_path / "one.json").read_text())
        assert sidecar["std_errors"] == {"raw": 0.0, "processed": 0.0}

    def test_rejects_zero_samples(self, tmp_path, capsys):
        code = main(["histogram", "--n", "0",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "n_samples must be ≥ 1" in capsys.readouterr().err

    def test_missing_output_directory(self, tmp_path, capsys):
        code = main(["histogram", "--n", "10",
                     "--out", str(tmp_path / "nope" / "x.csv")])
        assert code == 3
        assert "i/o error" in capsys.readouterr().err


class TestConfigHandling:
    def test_config_file_overrides_defaults(self, tmp_path):
        cfg_path = tmp_path / "conf.json"
        cfg_path.write_text(json.dumps({"n_samples": 500, "seed": 9}))
        out = tmp_path / "h.csv"
        assert main(["histogram", "--config", str(cfg_path),
                     "--out", str(out)]) == 0
        sidecar = json.loads((tmp_path / "h.json").read_text())
        assert sidecar["n"] == 500 and sidecar["seed"] == 9

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg_path = tmp_path / "conf.json"
        cfg_path.write_text(json.dumps({"coupling": 2.0}))
        assert main(["histogram", "--config", str(cfg_path),
                     "--out", str(tmp_path / "h.csv")]) == 2
        assert "unknown config key" in capsys.readouterr().err

    def test_malformed_json_rejected(self, tmp_path, capsys):
        cfg_path = tmp_path / "conf.json"
        cfg_path.write_text("{not json")
        assert main(["histogram", "--config", str(cfg_path),
                     "--out", str(tmp_path / "h.csv")]) == 2

    def test_missing_config_file_rejected(self, tmp_path, capsys):
        assert main(["histogram", "--config", str(tmp_path / "absent.json"),
                     "--out", str(tmp_path / "h.csv")]) == 2

    def test_non_increasing_grid_rejected(self, tmp_path, capsys):
        cfg_path = tmp_path / "conf.json"
        cfg_path.write_text(json.dumps({"g_tau_grid": [0.3, 0.1]}))
        assert main(["sweep-g", "--config", str(cfg_path),
                     "--out", str(tmp_path / "s.csv")]) == 2
        assert "strictly increasing" in capsys.readouterr().err

    def test_env_seed_overrides_config(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DEMON_BATTERY_SEED", "777")
        out = tmp_path / "h.csv"
        assert main(["histogram", "--n", "100", "--out", str(out)]) == 0
        sidecar = json.loads((tmp_path / "h.json").read_text())
        assert sidecar["seed"] == 777

    def test_seed_flag_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DEMON_BATTERY_SEED", "777")
        out = tmp_path / "h.csv"
        assert main(["histogram", "--n", "100", "--seed", "42",
                     "--out", str(out)]) == 0
        sidecar = json.loads((tmp_path / "h.json").read_text())
        assert sidecar["seed"] == 42

    def test_invalid_env_seed_rejected(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("DEMON_BATTERY_SEED", "lots")
        assert main(["histogram", "--out", str(tmp_path / "h.csv")]) == 2
        assert "DEMON_BATTERY_SEED" in capsys.readouterr().err


class TestSweepCommands:
    def test_g_sweep_rows_monotone(self, tmp_path):
        out = tmp_path / "sg.csv"
        assert main(["sweep-g", "--n", "2000", "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert len(rows) == 5
        assert header[0] == "g_tau"
        means = [float(r["processed_mean"]) for r in rows]
        assert all(b > a for a, b in zip(means, means[1:]))

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sweep-g", "--n", "1500", "--out", str(a)]) == 0
        assert main(["sweep-g", "--n", "1500", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_thread_count_is_invisible_in_output(self, tmp_path):
        a, b = tmp_path / "t1.csv", tmp_path / "t4.csv"
        assert main(["sweep-g", "--n", "1500", "--threads", "1",
                     "--out", str(a)]) == 0
        assert main(["sweep-g", "--n", "1500", "--threads", "4",
                     "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_reset_sweep_shape(self, tmp_path):
        out = tmp_path / "sr.csv"
        assert main(["sweep-reset", "--n", "1500", "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert len(rows) == 6
        assert header == ["gamma_tau_se", "raw_mean", "raw_std_error",
                          "processed_mean", "processed_std_error"]

    def test_line_endings_are_lf(self, tmp_path):
        out = tmp_path / "sg.csv"
        main(["sweep-g", "--n", "200", "--out", str(out)])
        raw = out.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")


class TestVerifyCommand:
    def test_pass_writes_report(self, tmp_path):
        out = tmp_path / "report.json"
        assert main(["verify", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["pass"] is True
        assert report["max_deviation"] <= 1e-10
        assert report["grid"]["theta_points"] == 181

    def test_stdout_by_default(self, capsys):
        assert main(["verify"]) == 0
        assert '"pass": true' in capsys.readouterr().out

    def test_detects_broken_oracle(self, tmp_path, monkeypatch):
        true_oracle = experiments.energetics_oracle

        def skewed(theta, g_tau, omega):
            o = true_oracle(theta, g_tau, omega)
            return type(o)(**{**o.__dict__,
                              "w_processed": o.w_processed + 1e-6})

        monkeypatch.setattr(experiments, "energetics_oracle", skewed)
        assert main(["verify", "--out", str(tmp_path / "r.json")]) == 1


class TestSampleCommand:
    def test_dumps_raw_ergotropies(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["sample", "--n", "4000", "--out", str(out)]) == 0
        header, rows = read_csv(out)
        assert header == ["ergotropy"]
        w = np.array([float(r["ergotropy"]) for r in rows])
        assert len(w) == 4000
        assert w.min() >= 0.0 and w.max() <= 1.0
        assert abs(w.mean() - 0.5) < 3 * w.std(ddof=1) / math.sqrt(4000)


def test_module_entrypoint_smoke(tmp_path):
    out = tmp_path / "s.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "demon_battery", "sample", "--n", "5",
         "--out", str(out)],
        capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
