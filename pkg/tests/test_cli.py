"""Config parsing, presets, envelopes, plot-data CSVs, and exit codes."""

import json

import numpy as np
import pytest

from mimospectra import cli, rmt
from mimospectra.errors import ConfigError, NumericalError


class TestParseConfig:
    def test_fig3_preset_values(self):
        cfg = cli.parse_config(dict(cli.PRESETS["fig3"]))
        sysp = cfg["_system"]
        assert sysp.num_antennas == 400
        assert sysp.aoa_counts == (200, 200, 200, 200)  # broadcast per cell
        assert sysp.block_length == 1000
        assert sysp.users_per_cell == 5 and sysp.num_cells == 4
        assert sysp.signal_power == pytest.approx(10 ** -1.0)
        assert sysp.interference_power == pytest.approx(10 ** -1.6)
        assert sysp.spacing_ratio == 2.0 and not sysp.noise_enabled

    def test_fig7_preset_values(self):
        cfg = cli.parse_config(dict(cli.PRESETS["fig7"]))
        assert cfg["m_values"] == [200, 400, 600]
        assert cfg["snr_db"] == -5.0
        assert cfg["_system"].spacing_ratio == 0.5
        assert cfg["_system"].block_length == 400
        assert cfg["_system"].aoa_counts == (200, 200, 200, 200)

    def test_k_above_p_names_keys(self):
        raw = dict(cli.PRESETS["fig3"], aoa_counts=[4])
        with pytest.raises(ConfigError, match="users_per_cell.*AoA"):
            cli.parse_config(raw)

    def test_unknown_key_rejected(self):
        raw = dict(cli.PRESETS["fig3"], hovercraft=3)
        with pytest.raises(ConfigError, match="hovercraft"):
            cli.parse_config(raw)

    def test_db_suffix_conversion(self):
        raw = dict(cli.PRESETS["fig3"])
        raw["signal_power_db"] = -3.0
        cfg = cli.parse_config(raw)
        assert cfg["_system"].signal_power == pytest.approx(10 ** -0.3)

    def test_round_trip(self):
        cfg = cli.parse_config(dict(cli.PRESETS["fig3"]))
        clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
        again = cli.parse_config(json.loads(json.dumps(clean)))
        assert {k: v for k, v in again.items() if not k.startswith("_")} == clean

    def test_missing_required_key(self):
        with pytest.raises(ConfigError, match="kind"):
            cli.parse_config({"num_antennas": 8})


def _tiny_eigen_cfg():
    return {
        "kind": "eigen", "label": "tiny", "scenario": "identical_aoas",
        "num_antennas": 64, "users_per_cell": 4, "num_cells": 2,
        "block_length": 128, "aoa_counts": [32], "signal_power_db": -10.0,
        "interference_power_db": -16.0, "noise_enabled": False,
        "spacing_ratio": 2.0, "trials": 4, "seed": 9,
    }


class TestRunPreset:
    def test_eigen_outputs(self, tmp_path):
        cfg = cli.parse_config(_tiny_eigen_cfg())
        env_path = cli.run_preset(cfg, tmp_path)
        env = json.loads(env_path.read_text())
        assert env["seed"] == 9
        assert env["config_hash"] == cli.config_hash(cfg)
        hist = tmp_path / "tiny_eigen_hist.csv"
        assert hist.exists()
        text = hist.read_text()
        assert text.startswith(f"# config_hash={env['config_hash']} seed=9")
        rows = [r.split(",") for r in text.splitlines()[2:]]
        centers = np.array([float(r[0]) for r in rows])
        density = np.array([float(r[1]) for r in rows])
        width = centers[1] - centers[0]
        assert abs(density.sum() * width - 1.0) < 1e-6

    def test_payload_byte_identical_across_runs(self, tmp_path):
        cfg = cli.parse_config(_tiny_eigen_cfg())
        p1 = cli.run_preset(cfg, tmp_path / "a")
        p2 = cli.run_preset(cfg, tmp_path / "b")
        e1, e2 = json.loads(p1.read_text()), json.loads(p2.read_text())
        assert json.dumps(e1["payload"], sort_keys=True) == \
               json.dumps(e2["payload"], sort_keys=True)
        csv1 = (tmp_path / "a" / "tiny_eigen_hist.csv").read_bytes()
        csv2 = (tmp_path / "b" / "tiny_eigen_hist.csv").read_bytes()
        assert csv1 == csv2

    def test_ber_short_family_tables(self, tmp_path):
        raw = {
            "kind": "ber_short", "label": "tiny9", "scenario": "iid",
            "num_antennas": 48, "users_per_cell": 6, "num_cells": 2,
            "block_length": 120, "noise_enabled": True, "snr_db": 0.0,
            "ratios_db": [-9.0], "bits_target": 4000,
            "n_values": [30, 60, 120], "seed": 3,
        }
        cfg = cli.parse_config(raw)
        env = json.loads(cli.run_preset(cfg, tmp_path).read_text())
        ber = env["payload"]["ber"]
        assert set(ber) == {"N=30", "N=60", "N=120"}
        for fam in ber.values():
            assert set(fam) == {"subspace", "pilot"}
        csv_text = (tmp_path / "tiny9_ber.csv").read_text()
        assert "family,scheme,ratio_db_or_snr,ber,ci_lo,ci_hi,bits" in csv_text
        assert csv_text.count("subspace") == 3

    def test_support_plot_payload(self, tmp_path):
        raw = dict(cli.PRESETS["fig1"])
        raw.update(label="sup", seed=1)
        cfg = cli.parse_config(cli._desk_scale(raw))
        env = json.loads(cli.run_preset(cfg, tmp_path).read_text())
        sups = env["payload"]["supports"]
        assert "onesided_signal" in sups and "iid_signal" in sups
        assert (tmp_path / "sup_supports.csv").exists()

    def test_empty_payload_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="no data"):
            cli.emit_plot_data({"payload": {}, "config_hash": "x", "seed": 0,
                                "config": {"label": "x"}}, tmp_path)

    def test_failure_leaves_no_partial_files(self, tmp_path, monkeypatch):
        cfg = cli.parse_config(_tiny_eigen_cfg())

        def boom(envelope, out_dir):
            raise ConfigError("synthetic failure")

        monkeypatch.setattr(cli, "emit_plot_data", boom)
        with pytest.raises(ConfigError):
            cli.run_preset(cfg, tmp_path)
        assert list(tmp_path.iterdir()) == []


class TestMainEntry:
    def test_run_desk_preset(self, tmp_path, capsys):
        rc = cli.main(["run", "--preset", "fig3", "--scale", "desk",
                       "--seed", "5", "--out", str(tmp_path),
                       "--set", "trials=2", "--set", "num_antennas=64",
                       "--set", "aoa_counts=[32]", "--set", "block_length=128",
                       "--set", "users_per_cell=4", "--set", "num_cells=2"])
        assert rc == 0
        out = capsys.readouterr().out.strip()
        assert out.endswith("fig3_result.json")

    def test_stieltjes_command(self, tmp_path, capsys):
        params = tmp_path / "mp.json"
        params.write_text(json.dumps({"ratio": 0.5}))
        rc = cli.main(["stieltjes", "--law", "mp", "--s-re", "1.0",
                       "--s-im", "0.5", "--params", str(params)])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        g = complex(*payload["G"])
        assert abs(g - rmt.mp_stieltjes(1.0 + 0.5j, 0.5)) < 1e-12

    def test_support_command(self, tmp_path, capsys):
        params = tmp_path / "one.json"
        params.write_text(json.dumps({"scale": 0.1, "inner_dim": 5,
                                      "m": 400, "n": 1000, "p": 200}))
        rc = cli.main(["support", "--mode", "onesided", "--params", str(params)])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        (lo, hi), = payload["intervals"]
        assert 0.06 < lo < hi < 0.15

    def test_config_error_exit_code(self, tmp_path, capsys):
        params = tmp_path / "bad.json"
        params.write_text(json.dumps({"ratio": 0.5, "bogus": 1}))
        rc = cli.main(["stieltjes", "--law", "mp", "--s-re", "1.0",
                       "--s-im", "0.5", "--params", str(params)])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_file_exit_code(self, capsys):
        rc = cli.main(["support", "--mode", "onesided", "--params", "/nope.json"])
        assert rc == 2

    def test_numerical_error_exit_code(self, tmp_path, capsys, monkeypatch):
        params = tmp_path / "mp.json"
        params.write_text(json.dumps({"ratio": 0.5}))

        def boom(*a, **kw):
            raise NumericalError("synthetic")

        monkeypatch.setattr(rmt, "mp_stieltjes", boom)
        rc = cli.main(["stieltjes", "--law", "mp", "--s-re", "1.0",
                       "--s-im", "0.5", "--params", str(params)])
        assert rc == 3
        assert "numerical failure" in capsys.readouterr().err
