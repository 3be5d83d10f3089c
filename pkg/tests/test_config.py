import json
import math

import pytest

from chirow.errors import ConfigValidationError
from chirow.io import paths
from chirow.io.config import config_hash, load_config, validate, validate_report, with_value
from chirow.io.preset_manager import PresetManager

from conftest import FSR

BUILTIN_PRESETS = {
    "device_lossy", "edge_spectrum", "circulator_lossless", "multiplex_n20", "multiplex_n5",
    "scatterer_chiral", "scatterer_conventional", "tunneling_n3",
}


def _transmission_document(**params):
    base = {"fsr": FSR, "kappa1": 0.1, "kappa2": 0.1, "kappa_in": 0.25, "Gamma": 1.5e-5, "n_cells": 10}
    base.update(params)
    return {"mode": "transmission", "params": base}


def _paths(issues):
    return [issue.path for issue in issues]


class TestValidate:
    """配置校验一次性报告全部问题。"""

    def test_valid(self):
        assert validate(_transmission_document()) == []

    def test_missing_n_cells(self):
        doc = {"mode": "bands", "params": {"g": 1e-4, "J1": 3e-4, "J2": 6e-4}}
        assert _paths(validate(doc)) == ["params.n_cells"]

    def test_points_too_small(self):
        doc = _transmission_document()
        doc["grid"] = {"points": 1}
        issues = validate(doc)
        assert _paths(issues) == ["grid.points"]
        assert "grid.points ≥ 2" in str(issues[0])

    def test_inconsistent_fsr(self):
        doc = _transmission_document(fsr=0.0032, n_eff=2.0, radius=40e-6, omega0_hz=1.95e14)
        assert "params.fsr" in _paths(validate(doc))

    def test_collects_every_problem(self):
        doc = {"units": "furlongs", "params": {"g": -1.0, "J1": 3e-4, "J2": 6e-4}, "threshold": 2}
        found = set(_paths(validate(doc)))
        assert {"mode", "units", "params.n_cells", "params.g", "threshold"} <= found

    def test_invalid_json(self):
        issues = validate("{not json")
        assert _paths(issues) == ["$"]

    def test_mixed_parameter_forms(self):
        doc = _transmission_document(g=1e-4)
        assert "params" in _paths(validate(doc))

    def test_transfer_mode_needs_fsr(self):
        doc = {"mode": "circulator", "params": {"g": 1e-4, "J1": 3e-4, "J2": 6e-4, "n_cells": 3}}
        assert "params.fsr" in _paths(validate(doc))

    def test_bad_coupling(self):
        assert "params.kappa1" in _paths(validate(_transmission_document(kappa1=1.5)))

    def test_sweep_section(self):
        doc = _transmission_document()
        doc["mode"] = "sweep"
        doc["sweep"] = {"mode": "sweep", "parameter": "grid.points", "values": []}
        found = set(_paths(validate(doc)))
        assert {"sweep.mode", "sweep.parameter", "sweep.values"} <= found

    def test_unknown_parameter(self):
        assert "params.colour" in _paths(validate(_transmission_document(colour=1.0)))

    def test_builtin_presets_are_valid(self):
        manager = PresetManager()
        for key in manager.list_available_presets():
            assert validate(manager.load_config(key)) == [], key


class TestLoadConfig:
    def test_raises_with_issues(self):
        doc = _transmission_document()
        doc["grid"] = {"points": 0}
        with pytest.raises(ConfigValidationError) as info:
            load_config(doc)
        assert _paths(info.value.issues) == ["grid.points"]

    def test_mode_override(self):
        config = load_config(json.dumps(_transmission_document()), mode="circulator")
        assert config.mode == "circulator"
        assert config.stem.startswith("circulator_")

    def test_hz_units(self):
        doc = _transmission_document(omega0=195e12, fsr=0.6e12, Gamma=1.5e-5 * 195e12)
        doc["units"] = "hz"
        params = load_config(doc).physical_params()
        assert params.fsr == pytest.approx(2 * math.pi * 0.6e12)
        assert params.omega0 == pytest.approx(2 * math.pi * 195e12)
        assert params.Gamma == pytest.approx(2 * math.pi * 1.5e-5 * 195e12)

    def test_geometry_fsr(self):
        doc = _transmission_document(n_eff=2.0, radius=40e-6, omega0_hz=1.95e14)
        del doc["params"]["fsr"]
        assert load_config(doc).physical_params().fsr == pytest.approx(FSR, rel=0.01)

    def test_tight_binding_round_trip(self):
        doc = {"mode": "circulator", "params": {"fsr": FSR, "g": 3e-4, "J1": 3e-4, "J2": 6e-4,
                                                "kappa_in": 0.25, "n_cells": 3}}
        config = load_config(doc)
        tb = config.physical_params()
        assert tb.kappa1 == pytest.approx(1j * 3e-4 / FSR)
        assert config.tight_binding().J2 == 6e-4

    def test_defaults(self):
        config = load_config(_transmission_document())
        assert config.output == {"directory": ".", "formats": ["csv", "json"]}
        assert config.threshold == 0.95
        assert config.supermode.value == "forward"

    def test_hash_ignores_key_order(self):
        doc = _transmission_document()
        reordered = dict(reversed(list(doc.items())))
        assert config_hash(doc) == config_hash(reordered)
        assert load_config(doc).digest == load_config(reordered).digest

    def test_with_value(self):
        doc = _transmission_document()
        changed = with_value(doc, "params.n_cells", 4)
        assert changed["params"]["n_cells"] == 4
        assert doc["params"]["n_cells"] == 10


class TestValidateReport:
    def test_missing_fields(self):
        found = _paths(validate_report({"windows": [{"center": 0.0}]}))
        assert {"fidelity", "survival", "insertion_loss_db", "bandwidth", "windows[0]"} <= set(found)

    def test_out_of_range(self):
        report = {"windows": [], "fidelity": 1.5, "survival": 0.9, "insertion_loss_db": 0.1, "bandwidth": 0.0}
        assert _paths(validate_report(report)) == ["fidelity"]


class TestPresetManager:
    """内置与用户预设。"""

    def test_builtin_presets(self):
        manager = PresetManager()
        assert set(manager.list_available_presets()) >= BUILTIN_PRESETS
        assert manager.get_preset_info("circulator_lossless")["source"] == "builtin"

    def test_device_preset_emitter_dissipation(self):
        params = load_config(PresetManager().load_config("device_lossy")).physical_params()
        # γ/2π = 5.48 MHz，Ω/2π = 195 THz
        assert params.gamma_qe == pytest.approx(5.48e6 / 195e12, rel=1e-3)
        assert params.gamma_in == pytest.approx(1.9858e-6)

    def test_user_preset_overrides_builtin(self):
        target = paths.get_user_preset_dir() / "circulator_lossless.json"
        doc = _transmission_document()
        doc["description"] = "自定义"
        target.write_text(json.dumps(doc), encoding="utf-8")
        manager = PresetManager()
        info = manager.get_preset_info("circulator_lossless")
        assert info["source"] == "user"
        assert info["description"] == "自定义"
        assert "description" not in manager.load_config("circulator_lossless")

    def test_broken_user_preset_skipped(self, caplog):
        (paths.get_user_preset_dir() / "broken.json").write_text("{oops", encoding="utf-8")
        manager = PresetManager()
        assert "broken" not in manager.list_available_presets()
        assert "broken.json" in caplog.text

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            PresetManager().load_config("no_such_preset")

    def test_set_user_data_dir(self, tmp_path):
        chosen = paths.set_user_data_dir(tmp_path / "chosen")
        assert paths.get_user_data_dir() == chosen
        assert paths.get_user_preset_dir() == chosen / "presets"
        paths.reset_user_data_dir()
        assert paths.get_user_data_dir() != chosen
