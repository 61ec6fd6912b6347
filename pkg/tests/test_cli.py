"""Command-line interface: exit codes, outputs, config validation."""

import json
from pathlib import Path

import numpy as np
import pytest

from specbank.cli import main

REPO_CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2) + "\n")
    return path


@pytest.fixture
def small_band(tmp_path):
    return write_json(tmp_path / "band.json", {
        "schema_version": 1,
        "name": "g-mini",
        "guide": "WR-5",
        "conductivity_s_per_m": 3.5e7,
        "channels": [{"f0_ghz": 186.0, "hpbw_ghz": 2.0},
                     {"f0_ghz": 181.0, "hpbw_ghz": 2.0}],
        "grid": {"start_ghz": 175.0, "stop_ghz": 192.0, "points": 301},
    })


@pytest.fixture
def chain_cfg(tmp_path):
    return write_json(tmp_path / "chain.json", {
        "schema_version": 1,
        "band": "g",
        "rf_gain_db": 40.0,
        "noise_figure_db": 6.0,
        "optical_efficiency": 0.2,
        "bandwidth_hz": 2.0e9,
        "detector_responsivity_v_per_w": 450.0,
        "detector_nep_w_per_rthz": 5e-11,
        "audio_gain_db": 34.0,
        "audio_input_noise_v_per_rthz": 1e-9,
    })


@pytest.fixture
def scenario_cfg(tmp_path, chain_cfg):
    chain = json.loads(chain_cfg.read_text())
    chain.pop("schema_version")
    return write_json(tmp_path / "scenario.json", {
        "schema_version": 1,
        "duration_s": 20.0,
        "n_channels": 2,
        "scene": {"kind": "constant", "value_k": 288.0},
        "t_ref_k": 290.0,
        "noise_net_mk_rts": 150.0,
        "seed": 5,
        "chain": chain,
    })


@pytest.fixture
def pipeline_cfg(tmp_path):
    return write_json(tmp_path / "pipe.json", {"schema_version": 1})


def make_cal(tmp_path, volts_per_kelvin, channels):
    return write_json(tmp_path / "cal.json", {
        "schema_version": 1,
        "band": "g",
        "date": "2024-08-30",
        "responsivity_v": {name: volts_per_kelvin * 216.0 for name in channels},
    })


class TestBudget:
    def test_table_and_exit_code(self, chain_cfg, capsys):
        assert main(["budget", "--chain", str(chain_cfg)]) == 0
        out = capsys.readouterr().out
        assert "detector" in out and "dominant" in out

    def test_csv_written(self, chain_cfg, tmp_path):
        out_csv = tmp_path / "budget.csv"
        assert main(["budget", "--chain", str(chain_cfg), "--out", str(out_csv)]) == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == "source,net_mk_rts"
        assert len(lines) == 6  # four sources + total

    def test_missing_file(self, tmp_path, capsys):
        assert main(["budget", "--chain", str(tmp_path / "nope.json")]) == 1

    def test_malformed_json_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{\n  "schema_version": 1,\n  broken\n}\n')
        assert main(["budget", "--chain", str(bad)]) == 1
        assert ":3:" in capsys.readouterr().err

    def test_unknown_key_strict_vs_lenient(self, chain_cfg, tmp_path, capsys):
        obj = json.loads(chain_cfg.read_text())
        obj["typo_key"] = 1
        path = write_json(tmp_path / "typo.json", obj)
        assert main(["budget", "--chain", str(path)]) == 1
        assert "typo_key" in capsys.readouterr().err
        assert main(["budget", "--chain", str(path), "--lenient"]) == 0

    def test_repo_example_config(self, capsys):
        assert main(["budget", "--chain", str(REPO_CONFIGS / "chain_g.json")]) == 0


class TestDesign:
    def test_small_band_outputs(self, small_band, tmp_path):
        out = tmp_path / "out"
        assert main(["design", "--band", str(small_band), "--out", str(out)]) == 0
        doc = json.loads((out / "design.json").read_text())
        assert doc["specbank_version"]
        assert doc["schema_version"] == 1
        assert len(doc["channels"]) == 2
        assert all(s["converged"] for s in doc["channel_status"])
        # taps ordered by descending f0
        assert doc["channels"][0]["f0_target_hz"] > doc["channels"][1]["f0_target_hz"]
        sweep = (out / "sweep.csv").read_text().splitlines()
        assert sweep[0] == "frequency_ghz,tap_00_db,tap_01_db,thru_db"
        assert (out / "bank.s4p").exists()

    def test_rerun_byte_identical(self, small_band, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["design", "--band", str(small_band), "--out", str(out1)]) == 0
        assert main(["design", "--band", str(small_band), "--out", str(out2)]) == 0
        for name in ("design.json", "sweep.csv", "bank.s4p"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_empty_channel_list_is_config_error(self, tmp_path):
        band = write_json(tmp_path / "band.json", {
            "schema_version": 1, "name": "x", "guide": "WR-5",
            "channels": [],
            "grid": {"start_ghz": 175.0, "stop_ghz": 192.0, "points": 11},
        })
        assert main(["design", "--band", str(band), "--out", str(tmp_path / "o")]) == 1

    def test_nonconvergence_exit_2_with_partial_outputs(self, tmp_path):
        band = write_json(tmp_path / "band.json", {
            "schema_version": 1, "name": "lossy", "guide": "WR-5",
            "conductivity_s_per_m": 3.5e7,
            "channels": [{"f0_ghz": 183.31, "hpbw_ghz": 2.0},
                         {"f0_ghz": 179.0, "hpbw_ghz": 0.03}],
            "grid": {"start_ghz": 175.0, "stop_ghz": 192.0, "points": 101},
        })
        out = tmp_path / "o"
        assert main(["design", "--band", str(band), "--out", str(out)]) == 2
        doc = json.loads((out / "design.json").read_text())
        flags = [s["converged"] for s in doc["channel_status"]]
        assert flags == [True, False]

    def test_optimize_flag(self, small_band, tmp_path):
        out = tmp_path / "opt"
        assert main(["design", "--band", str(small_band), "--out", str(out),
                     "--optimize"]) == 0
        doc = json.loads((out / "design.json").read_text())
        assert doc["optimized"] is True
        assert len(doc["spacing_multipliers"]) == 2

    def test_repo_g_band_config_produces_seven_port_bank(self, tmp_path):
        out = tmp_path / "g"
        assert main(["design", "--band", str(REPO_CONFIGS / "band_g.json"),
                     "--out", str(out)]) == 0
        assert (out / "bank.s7p").exists()
        header = (out / "sweep.csv").read_text().splitlines()[0]
        assert header == ("frequency_ghz,tap_00_db,tap_01_db,tap_02_db,"
                          "tap_03_db,tap_04_db,thru_db")

    def test_custom_guide_object(self, tmp_path):
        band = write_json(tmp_path / "band.json", {
            "schema_version": 1, "name": "custom", "conductivity_s_per_m": 3.5e7,
            "guide": {"name": "WR-6ish", "width_a_m": 1.65e-3, "height_b_m": 0.825e-3},
            "channels": [{"f0_ghz": 150.0, "hpbw_ghz": 2.0}],
            "grid": {"start_ghz": 140.0, "stop_ghz": 160.0, "points": 201},
        })
        assert main(["design", "--band", str(band), "--out", str(tmp_path / "o")]) == 0


class TestSimulate:
    def test_outputs(self, scenario_cfg, tmp_path):
        out = tmp_path / "sim"
        assert main(["simulate", "--scenario", str(scenario_cfg), "--out", str(out)]) == 0
        header = (out / "timestream.csv").read_text().splitlines()[0]
        assert header == "unix_time_s,chopper_pos,ref_temp_k,ch_00,ch_01"
        assert (out / "truth.csv").exists()


class TestProcess:
    def run_sim(self, scenario_cfg, tmp_path):
        sim = tmp_path / "sim"
        assert main(["simulate", "--scenario", str(scenario_cfg), "--out", str(sim)]) == 0
        return sim / "timestream.csv"

    def volts_per_kelvin(self, chain_cfg):
        from specbank.config import load_chain_config
        chain, _ = load_chain_config(chain_cfg)
        return chain.volts_per_kelvin

    def test_closure_exit_0(self, scenario_cfg, chain_cfg, pipeline_cfg, tmp_path):
        data = self.run_sim(scenario_cfg, tmp_path)
        cal = make_cal(tmp_path, self.volts_per_kelvin(chain_cfg), ["ch_00", "ch_01"])
        out = tmp_path / "proc"
        assert main(["process", "--input", str(data), "--cal", str(cal),
                     "--config", str(pipeline_cfg), "--out", str(out)]) == 0

        report = json.loads((out / "report.json").read_text())
        assert report["specbank_version"]
        assert report["schema_version"] == 1
        for entry in report["report"]["channels"].values():
            assert entry["cycle_yield"] > 0.9
            assert entry["net_mk_rts"] == pytest.approx(150.0, rel=0.25)
        # scene recovered near 288 K
        cycles = (out / "cycles.csv").read_text().splitlines()
        assert cycles[0] == "unix_time_s,ch_00_tb_k,ch_01_tb_k"
        values = np.array([[float(x) for x in line.split(",")[1:]]
                           for line in cycles[1:]])
        assert abs(values.mean() - 288.0) < 1.0
        # no glitches injected -> empty glitch table
        assert (out / "glitches.csv").read_text().splitlines()[1:] == []

    def test_constant_chopper_exits_3(self, chain_cfg, pipeline_cfg, tmp_path):
        rows = ["unix_time_s,chopper_pos,ref_temp_k,ch_00"]
        rows += [f"{i * 0.005},1000,290,0.001" for i in range(100)]
        data = tmp_path / "flat.csv"
        data.write_text("\n".join(rows) + "\n")
        cal = make_cal(tmp_path, 1e-6, ["ch_00"])
        assert main(["process", "--input", str(data), "--cal", str(cal),
                     "--config", str(pipeline_cfg),
                     "--out", str(tmp_path / "o")]) == 3

    def test_malformed_input_exits_1(self, chain_cfg, pipeline_cfg, tmp_path, capsys):
        data = tmp_path / "bad.csv"
        data.write_text("unix_time_s,chopper_pos,ref_temp_k,ch_00\n0.0,0,290,nan\n"
                        "0.005,0,290,0.1\n")
        cal = make_cal(tmp_path, 1e-6, ["ch_00"])
        assert main(["process", "--input", str(data), "--cal", str(cal),
                     "--config", str(pipeline_cfg),
                     "--out", str(tmp_path / "o")]) == 1
        assert "row 2" in capsys.readouterr().err


class TestVersion:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "specbank" in capsys.readouterr().out
