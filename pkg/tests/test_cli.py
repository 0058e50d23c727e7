import json
import os
import subprocess
import sys

import pytest

from holodrive.cli import main
from holodrive.config import ConfigError, load_config, parse_config

VALID_SPECTRUM = {
    "schema": 1,
    "experiment": "tct-spectrum",
    "name": "spec",
    "device": {"e_j0_plus": 50.0, "e_j0_minus": 50.0, "n_max": 6},
    "sweep": {"variable": "e_i", "start": 0.0, "stop": 1.0, "points": 5, "levels": 5},
}

VALID_GATE = {
    "schema": 1,
    "experiment": "gate-up",
    "name": "up",
    "gate": {"phi": 0.7853981633974483, "times": [1.0, 2.0], "grid": 256},
}


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


class TestValidation:
    def test_valid_config_parses(self, tmp_path):
        cfg = load_config(write_config(tmp_path, VALID_SPECTRUM))
        assert cfg.experiment == "tct-spectrum"
        assert len(cfg.sweep.values) == 5

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="unknown keys"):
            parse_config({**VALID_GATE, "surprise": 1})

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError, match="unknown experiment"):
            parse_config({"schema": 1, "experiment": "gate-xy"})

    def test_bad_schema_version(self):
        with pytest.raises(ConfigError, match="schema"):
            parse_config({**VALID_GATE, "schema": 2})

    def test_negative_time_rejected(self):
        bad = {**VALID_GATE, "gate": {"phi": 0.2, "times": [-1.0]}}
        with pytest.raises(ConfigError, match="positive"):
            parse_config(bad)

    def test_missing_block(self):
        with pytest.raises(ConfigError, match="missing keys"):
            parse_config({"schema": 1, "experiment": "gate-up"})

    def test_log_time_grid(self):
        payload = {
            "schema": 1,
            "experiment": "fidelity-sweep",
            "gate": {"kind": "up", "phi": 0.3, "times": {"log_start": 10, "log_stop": 1000, "points": 3}},
        }
        cfg = parse_config(payload)
        assert cfg.gate.times == pytest.approx((10.0, 100.0, 1000.0))

    def test_validate_command_has_no_side_effects(self, tmp_path):
        path = write_config(tmp_path, VALID_SPECTRUM)
        assert main(["validate", path]) == 0
        assert sorted(os.listdir(tmp_path)) == ["config.json"]

    def test_validate_command_rejects_bad_config(self, tmp_path, capsys):
        path = write_config(tmp_path, {**VALID_GATE, "gate": {"phi": 0.2, "times": []}})
        assert main(["validate", path]) == 2
        assert "holodrive: config:" in capsys.readouterr().err

    def test_missing_file_is_a_config_error(self, tmp_path):
        assert main(["validate", str(tmp_path / "nope.json")]) == 2


class TestRun:
    def test_run_writes_csv_and_manifest(self, tmp_path):
        path = write_config(tmp_path, VALID_SPECTRUM)
        assert main(["run", path, "--out", str(tmp_path)]) == 0
        csv_path = tmp_path / "spec.csv"
        manifest_path = tmp_path / "spec.manifest.json"
        assert csv_path.exists() and manifest_path.exists()
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "experiment,variable,value,E_0,E_1,E_2,E_3,E_4,status"
        assert len(lines) == 6
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        assert manifest["rows"] == 5 and manifest["failures"] == 0
        assert manifest["config"] == VALID_SPECTRUM

    def test_failed_validation_writes_nothing(self, tmp_path):
        path = write_config(tmp_path, {**VALID_GATE, "gate": {"phi": 0.2, "times": [-3.0]}})
        out = tmp_path / "out"
        assert main(["run", path, "--out", str(out)]) == 2
        assert not out.exists()

    def test_rerun_is_byte_identical(self, tmp_path):
        path = write_config(tmp_path, VALID_SPECTRUM)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", path, "--out", str(a)]) == 0
        assert main(["run", path, "--out", str(b)]) == 0
        assert (a / "spec.csv").read_bytes() == (b / "spec.csv").read_bytes()

    def test_parallelism_does_not_change_bytes(self, tmp_path):
        path = write_config(tmp_path, VALID_SPECTRUM)
        a, b = tmp_path / "p1", tmp_path / "p8"
        assert main(["run", path, "--out", str(a), "--parallel", "1"]) == 0
        assert main(["run", path, "--out", str(b), "--parallel", "8"]) == 0
        assert (a / "spec.csv").read_bytes() == (b / "spec.csv").read_bytes()

    def test_manifest_echo_reruns_identically(self, tmp_path):
        path = write_config(tmp_path, VALID_SPECTRUM)
        a = tmp_path / "a"
        assert main(["run", path, "--out", str(a)]) == 0
        manifest = json.loads((a / "spec.manifest.json").read_text(encoding="utf-8"))
        echoed = write_config(tmp_path, manifest["config"], name="echo.json")
        b = tmp_path / "b"
        assert main(["run", echoed, "--out", str(b)]) == 0
        assert (a / "spec.csv").read_bytes() == (b / "spec.csv").read_bytes()

    def test_partial_failure_exits_3_with_status_rows(self, tmp_path, capsys):
        payload = {
            "schema": 1,
            "experiment": "tct-spectrum",
            "name": "partial",
            "device": {"n_max": 6},
            "sweep": {"variable": "e_c_plus", "values": [1.0, -1.0], "levels": 4},
        }
        path = write_config(tmp_path, payload)
        assert main(["run", path, "--out", str(tmp_path)]) == 3
        assert "rows failed" in capsys.readouterr().err
        lines = (tmp_path / "partial.csv").read_text(encoding="utf-8").splitlines()
        assert lines[1].endswith("ok")
        assert "error: ValueError" in lines[2]

    def test_gate_run_reports_high_fidelity(self, tmp_path):
        path = write_config(tmp_path, VALID_GATE)
        assert main(["run", path, "--out", str(tmp_path)]) == 0
        lines = (tmp_path / "up.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "experiment,phi,T,grid,mode,fidelity,gamma,leakage,status"
        for line in lines[1:]:
            fidelity = float(line.split(",")[5])
            assert fidelity > 1.0 - 1e-5

    def test_transition_columns_follow_the_pair_labels(self, tmp_path):
        payload = {
            "schema": 1,
            "experiment": "tct-transitions",
            "name": "pairs",
            "device": {"e_j0_plus": 100.0, "e_j0_minus": 100.0, "e_i": 0.5, "n_max": 6},
            "sweep": {"values": [95.0, 100.0]},
        }
        path = write_config(tmp_path, payload)
        assert main(["run", path, "--out", str(tmp_path)]) == 0
        header = (tmp_path / "pairs.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == "experiment,variable,value,t_e0,t_e1,t_ea,t_01,t_0a,t_1a,status"

    def test_invalid_parallel_value(self, tmp_path):
        path = write_config(tmp_path, VALID_SPECTRUM)
        assert main(["run", path, "--parallel", "0"]) == 2


class TestEnvironment:
    def test_invalid_log_level_is_a_config_error(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HOLO_LOG", "loud")
        path = write_config(tmp_path, VALID_SPECTRUM)
        assert main(["validate", path]) == 2

    def test_console_entry_point_round_trip(self, tmp_path):
        path = write_config(tmp_path, VALID_GATE, name="cli.json")
        proc = subprocess.run(
            [sys.executable, "-m", "holodrive.cli", "validate", path],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "valid" in proc.stdout