import numpy as np
import pytest

from holovr.errors import ConfigError
from holovr.scenario import (ScenarioConfig, default_config, load_config,
                             save_config)


class TestRoundTrip:
    def test_parse_serialize_parse_identity(self, tmp_path):
        cfg = default_config()
        first = tmp_path / "a.yaml"
        second = tmp_path / "b.yaml"
        save_config(cfg, first)
        loaded = load_config(first)
        save_config(loaded, second)
        assert cfg.to_dict() == loaded.to_dict()
        assert first.read_text() == second.read_text()

    def test_modified_values_survive(self, tmp_path):
        cfg = default_config()
        cfg.vr.n_fovs = 37
        cfg.beamformer.tx_power_dbm = 17.5
        cfg.channel.absorption = 2.5e-3
        path = tmp_path / "c.yaml"
        save_config(cfg, path)
        loaded = load_config(path)
        assert loaded.vr.n_fovs == 37
        assert loaded.beamformer.tx_power_dbm == 17.5
        assert loaded.channel.absorption == 2.5e-3

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config(path).to_dict() == default_config().to_dict()


class TestValidation:
    def test_unknown_section(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict({"nonsense": {}})

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict({"channel": {"frequency": 1.0}})

    def test_surface_outside_room(self):
        data = default_config().to_dict()
        data["room"]["rhs_pos"] = [0.0, 0.0, 9.0]
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(data)

    def test_user_range_outside_room(self):
        data = default_config().to_dict()
        data["room"]["user_xy_max"] = 7.0
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(data)

    def test_bad_algorithm(self):
        data = default_config().to_dict()
        data["solver"]["algorithm"] = "h9"
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(data)

    def test_bad_ber(self):
        data = default_config().to_dict()
        data["channel"]["ber_target"] = 0.5
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(data)


class TestBuilders:
    def test_reference_plan(self):
        plan = default_config().subband_plan()
        assert plan.centers().tolist() == [285e9, 295e9, 305e9, 315e9]

    def test_radio_constants_linearized(self):
        consts = default_config().radio_constants()
        assert consts.tx_gain == pytest.approx(1000.0)
        assert consts.rx_gain == pytest.approx(10.0)
        assert consts.noise_density == pytest.approx(3.981071705534985e-21, rel=1e-12)

    def test_tx_power(self):
        assert default_config().tx_power_watts() == pytest.approx(1.0)

    def test_interference_shares_power(self):
        model = default_config().interference_model(2.0)
        assert np.allclose(model.subband_powers, 0.5)

    def test_surface_defaults_derive_from_carrier(self):
        params = default_config().surface_params()
        assert params.spacing == pytest.approx(0.5e-3)
        assert params.dipole_length == pytest.approx(0.25e-3)

    def test_positions_inside_room(self, rng):
        cfg = default_config()
        pos = cfg.sample_user_positions(rng)
        assert pos.shape == (4, 3)
        assert np.all(pos[:, 0] >= 1.0) and np.all(pos[:, 0] <= 5.0)
        assert np.all(pos[:, 2] == 1.6)

    def test_heterogeneous_catalog_and_profile(self, rng):
        cfg = default_config()
        cat = cfg.make_catalog(rng)
        assert cat.n_users == 4 and cat.n_fovs == 100
        prof = cfg.make_profile()
        assert prof.cpu_hz.tolist() == [1.5e9, 2.0e9, 2.5e9, 3.0e9]
        assert np.all(prof.mem_budget_bits == 40 * 3e6)

    def test_homogeneous_catalog(self):
        cfg = default_config()
        cfg.vr.heterogeneous = False
        cat = cfg.make_catalog()
        assert np.all(cat.size_2d == 3e6)
        assert np.all(cat.request_prob == 0.01)
        prof = cfg.make_profile()
        assert np.all(prof.cpu_hz == 2e9)

    def test_heterogeneous_catalog_needs_rng(self):
        with pytest.raises(ConfigError):
            default_config().make_catalog()
