import json
import math

import numpy as np
import pytest
import yaml

from lzsgate.cli import ConfigError, ExperimentConfig, load_config, main, parse_config
from lzsgate.core import TWO_PI, Units
from lzsgate.presets import (CS_GATE_TIME, PRESETS, gate_time_window_optimum, get_preset,
                             list_presets)


def write(tmp_path, doc, name="exp.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return path


def run(tmp_path, doc, capsys=None):
    return main(["run", str(write(tmp_path, doc))])


class TestPresets:
    def test_listing(self, capsys):
        assert main(["list-presets"]) == 0
        out = capsys.readouterr().out
        for name in PRESETS:
            assert name in out
        assert len(out.strip().splitlines()) == len(PRESETS)

    def test_fig5_ghi(self):
        pr = get_preset("fig5_ghi")
        assert pr.params.ratios() == (13, 12, 0.75)
        assert "(13, 12, 0.75)" in pr.summary()

    def test_cs_channel(self):
        pr = get_preset("cs_channel")
        assert pr.params.delta0 == pytest.approx(TWO_PI * 75.6)
        assert pr.channel.lifetimes == (270.0, 314.0, 361.0, 406.0)
        line = pr.summary()
        assert "75.6" in line and "270/314/361/406" in line

    def test_cs_coupling(self):
        # V/2pi = 3.2 MHz from c3 = -154968 MHz um^3 at 20 um
        assert get_preset("cs_channel").params.v_dd == pytest.approx(TWO_PI * 3.2)

    def test_adiabatic(self):
        pr = get_preset("adiabatic_beterov")
        assert pr.pulse.s1 == pytest.approx(TWO_PI * -10)
        assert pr.pulse.s2 == pytest.approx(TWO_PI * -2600)
        assert pr.pulse.total_t == 1.8
        assert (pr.pulse.t1, pr.pulse.t2) == (0.45, 1.35)
        assert "s1/2pi=-10" in pr.summary() and "s2/2pi=-2600" in pr.summary()

    def test_drive_panels_are_dimensionless(self):
        for name in ("fig2", "fig3", "fig4_abc", "fig4_def", "fig4_ghi",
                     "fig5_abc", "fig5_def", "fig5_ghi"):
            assert get_preset(name).units == Units.DIMENSIONLESS

    def test_cs_presets_share_units_with_decay(self):
        for name in ("cs_channel", "cs_robust_base", "cs_robust_base_text", "cs_intermediate"):
            pr = get_preset(name)
            assert pr.decay.units == pr.params.units == Units.RAD_PER_US

    def test_unknown(self):
        with pytest.raises(KeyError, match="unknown preset"):
            get_preset("fig9")

    def test_list_matches_summaries(self):
        assert list_presets() == [p.summary() for p in PRESETS.values()]

    @pytest.mark.slow
    def test_cs_gate_time_rule(self):
        pr = get_preset("cs_robust_base_text")
        assert gate_time_window_optimum(pr.params, 1.0, 1.6, 0.001) == pytest.approx(CS_GATE_TIME)


class TestValidation:
    def test_missing_omega_names_field(self, tmp_path, capsys):
        doc = {"kind": "trajectory", "params": {"v_dd": 1, "a": 13, "delta0": 12},
               "duration": 1.0, "output": {"path": "x.csv"}}
        assert main(["validate", str(write(tmp_path, doc))]) == 1
        assert "params.omega" in capsys.readouterr().err

    @pytest.mark.parametrize("doc,field", [
        ({"kind": "movie"}, "kind"),
        ({"kind": "gate", "preset": "fig5_ghi", "colour": 1, "output": {"path": "a.json"}},
         "colour"),
        ({"kind": "gate", "preset": "nope", "output": {"path": "a.json"}}, "preset"),
        ({"kind": "gate", "preset": "fig5_ghi", "output": {"path": "a.txt", "format": "xml"}},
         "output.format"),
        ({"kind": "gate", "preset": "fig5_ghi", "integrator": {"rel_tol": -1},
          "output": {"path": "a.json"}}, "integrator.rel_tol"),
        ({"kind": "gate", "preset": "fig5_ghi", "decay": True, "output": {"path": "a.json"}},
         "decay"),
    ])
    def test_errors_carry_path(self, doc, field):
        with pytest.raises(ConfigError) as err:
            parse_config(doc)
        assert err.value.path.startswith(field)

    def test_validate_ok(self, tmp_path, capsys):
        doc = {"kind": "gate", "preset": "fig5_ghi", "output": {"path": "g.json"}}
        assert main(["validate", str(write(tmp_path, doc))]) == 0
        assert not (tmp_path / "g.json").exists()

    def test_overrides_and_output_relative_to_config(self, tmp_path):
        doc = {"kind": "gate", "preset": "fig5_ghi", "overrides": {"omega": 3},
               "vt_over_2pi": 4, "output": {"path": "out/g.json"}}
        cfg = load_config(write(tmp_path, doc))
        assert cfg.params.ratios() == (13, 12, 3)
        assert cfg.duration == pytest.approx(TWO_PI * 4)
        assert cfg.output_path == tmp_path / "out" / "g.json"

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "none.yaml")]) == 1


class TestRun:
    def test_trajectory_csv(self, tmp_path):
        doc = {"kind": "trajectory", "preset": "fig5_ghi", "output": {"path": "t.csv"}}
        assert run(tmp_path, doc) == 0
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "t,p_g,p_e,phase_g_over_pi,norm"
        last = [float(x) for x in lines[-1].split(",")]
        assert last[0] == pytest.approx(TWO_PI * 4)
        assert last[1] > 0.998

    def test_spectrum_csv(self, tmp_path):
        doc = {"kind": "spectrum", "preset": "fig2", "output": {"path": "s.csv"}}
        assert run(tmp_path, doc) == 0
        data = np.loadtxt(tmp_path / "s.csv", delimiter=",", skiprows=1)
        assert (tmp_path / "s.csv").read_text().startswith("t,e_plus,e_minus\n")
        np.testing.assert_allclose(data[:, 1] - data[:, 2],
                                   np.hypot(5 + 10 * np.cos(data[:, 0]), 1), rtol=1e-10)

    def test_byte_identical_rerun(self, tmp_path):
        doc = {"kind": "time_scan", "scheme": "lzs", "preset": "fig5_ghi",
               "deviations": {"start": -0.1, "stop": 0.1, "num": 5},
               "output": {"path": "scan.csv"}}
        assert run(tmp_path, doc) == 0
        first = (tmp_path / "scan.csv").read_bytes()
        assert run(tmp_path, doc) == 0
        assert (tmp_path / "scan.csv").read_bytes() == first

    @pytest.mark.parametrize("doc", [
        {"kind": "gate", "preset": "cs_robust_base_text", "decay": True,
         "output": {"path": "g.json"}},
        {"kind": "grid_2d", "preset": "fig5_def", "resolution": [3, 4], "metric": "p_g_final",
         "output": {"path": "m.json"}},
        {"kind": "gate", "scheme": "adiabatic", "preset": "adiabatic_beterov",
         "timing_error": 0.02, "output": {"path": "a.csv"}},
        {"kind": "trajectory", "preset": "fig4_def", "frame": "rotated",
         "output": {"path": "tr.json"}},
    ])
    def test_sidecar_round_trip(self, tmp_path, doc):
        assert run(tmp_path, doc) == 0
        out = tmp_path / doc["output"]["path"]
        meta = json.loads(out.with_name(out.name + ".meta.json").read_text())
        assert meta["tool"] == "lzsgate" and meta["wall_time_s"] >= 0
        assert meta["preset"] == doc["preset"]
        replay = dict(meta["resolved_config"])
        replay["output"] = {"path": "replay" + out.suffix, "format": replay["output"]["format"]}
        (tmp_path / "r").mkdir()
        assert main(["run", str(write(tmp_path / "r", replay))]) == 0
        assert (tmp_path / "r" / ("replay" + out.suffix)).read_bytes() == out.read_bytes()

    def test_gate_json(self, tmp_path):
        doc = {"kind": "gate", "preset": "fig5_ghi", "output": {"path": "g.json"}}
        assert run(tmp_path, doc) == 0
        rec = json.loads((tmp_path / "g.json").read_text())
        assert rec["fidelity"] > 0.999 and rec["amp_00"] == [0.5, 0.0]

    def test_underflow_exits_2(self, tmp_path, capsys):
        doc = {"kind": "gate", "preset": "fig5_def", "output": {"path": "g.json"},
               "integrator": {"rel_tol": 1e-30, "abs_tol": 1e-300}}
        assert run(tmp_path, doc) == 2
        assert "reached t=" in capsys.readouterr().err
        assert not (tmp_path / "g.json").exists()

    def test_missing_grid_cells_exit_2(self, tmp_path, capsys):
        doc = {"kind": "grid_2d", "preset": "fig5_def", "resolution": [2, 2],
               "integrator": {"rel_tol": 1e-30, "abs_tol": 1e-300},
               "output": {"path": "m.csv"}}
        assert run(tmp_path, doc) == 2
        assert "4 cells missing" in capsys.readouterr().err
        assert "nan" in (tmp_path / "m.csv").read_text()


def test_config_dataclass_defaults():
    cfg = ExperimentConfig("gate", output_path=None, output_format="json")
    assert cfg.scheme == "lzs" and math.isinf(cfg.integrator.max_step)
