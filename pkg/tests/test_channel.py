import math

import numpy as np
import pytest

from holovr import channel as ch
from holovr.errors import ConfigError


def make_plan():
    return ch.SubbandPlan(carrier_hz=300e9, bandwidth_hz=40e9, n_subbands=4)


class TestSubbandPlan:
    def test_reference_centers_exact(self):
        centers = make_plan().centers()
        assert centers.tolist() == [285e9, 295e9, 305e9, 315e9]

    def test_subband_width(self):
        assert make_plan().subband_hz == 10e9

    def test_reconstruction_identity(self):
        plan = ch.SubbandPlan(212e9, 17e9, 7)
        u = np.arange(1, 8)
        expected = 212e9 - 17e9 / 2 + (u - 0.5) * 17e9 / 7
        assert np.array_equal(plan.centers(), expected)

    def test_wavelengths(self):
        lam = make_plan().wavelengths()
        assert np.allclose(lam, 3e8 / make_plan().centers())

    @pytest.mark.parametrize("kwargs", [
        dict(carrier_hz=-1e9, bandwidth_hz=1e9, n_subbands=2),
        dict(carrier_hz=1e9, bandwidth_hz=0, n_subbands=2),
        dict(carrier_hz=1e9, bandwidth_hz=1e9, n_subbands=0),
        dict(carrier_hz=1e9, bandwidth_hz=3e9, n_subbands=2),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            ch.SubbandPlan(**kwargs)


class TestGeometry:
    def test_colocated_user_rejected(self):
        with pytest.raises(ConfigError):
            ch.LinkGeometry(np.zeros(3), np.zeros((1, 3)))

    def test_distances(self):
        geom = ch.LinkGeometry(np.array([0.0, 0.0, 2.0]),
                               np.array([[1.0, 1.0, 1.6]]))
        assert geom.distances()[0] == pytest.approx(math.sqrt(2.16), rel=1e-15)

    def test_axis_aligned_angles(self):
        geom = ch.LinkGeometry(np.zeros(3), np.array([[1.0, 0.0, 0.0]]))
        assert ch.departure_angles(geom, 0) == (0.0, 0.0)

    def test_symmetric_angles(self):
        geom = ch.LinkGeometry(np.zeros(3), np.array([[0.0, 1.0, 1.0]]))
        elev, azim = ch.departure_angles(geom, 0)
        assert elev == pytest.approx(math.pi / 4, rel=1e-15)
        assert azim == pytest.approx(math.pi / 2, rel=1e-15)

    def test_scalar_example(self):
        geom = ch.LinkGeometry(np.zeros(3), np.array([[1.0, 1.0, -0.4]]))
        elev, azim = ch.departure_angles(geom, 0)
        assert azim == pytest.approx(0.7853981633974483, rel=1e-14)
        assert elev == pytest.approx(-0.2756427992162654, rel=1e-14)

    def test_vertical_convention(self):
        geom = ch.LinkGeometry(np.zeros(3), np.array([[0.0, 0.0, -1.5]]))
        elev, azim = ch.departure_angles(geom, 0)
        assert azim == 0.0
        assert elev == pytest.approx(-math.pi / 2)

    def test_direction_roundtrip(self, rng):
        users = rng.uniform(-3, 3, size=(20, 3))
        surface = np.array([0.1, -0.2, 2.0])
        geom = ch.LinkGeometry(surface, users)
        angles = ch.all_departure_angles(geom)
        d = geom.distances()
        for l in range(20):
            rebuilt = ch.direction_from_angles(*angles[l]) * d[l]
            assert np.allclose(rebuilt, users[l] - surface, rtol=1e-12, atol=1e-12)


class TestChannelGain:
    def test_reference_value(self):
        geom = ch.LinkGeometry(np.array([0.0, 0.0, 2.0]),
                               np.array([[1.0, 1.0, 1.6]]))
        h = ch.channel_gain(geom, make_plan(), 3e-3, 0, 0)
        assert h == pytest.approx(5.6869869964911566e-05, rel=1e-12)

    def test_collapses_to_unity(self):
        f = ch.SPEED_OF_LIGHT / (4 * math.pi)
        plan = ch.SubbandPlan(f, f / 10, 1)
        geom = ch.LinkGeometry(np.zeros(3), np.array([[1.0, 0.0, 0.0]]))
        # center of a single subband equals the carrier
        assert plan.centers()[0] == f
        assert ch.channel_gain(geom, plan, 0.0, 0, 0) == pytest.approx(1.0, rel=1e-15)

    def test_free_space_inverse_distance(self):
        plan = make_plan()
        near = ch.LinkGeometry(np.zeros(3), np.array([[1.0, 0.0, 0.0]]))
        far = ch.LinkGeometry(np.zeros(3), np.array([[2.0, 0.0, 0.0]]))
        h1 = ch.channel_gain(near, plan, 0.0, 0, 0)
        h2 = ch.channel_gain(far, plan, 0.0, 0, 0)
        assert h2 == pytest.approx(h1 / 2, rel=1e-14)

    def test_matrix_matches_scalar(self, rng):
        geom = ch.LinkGeometry(np.array([0.0, 0.0, 2.0]),
                               rng.uniform(0.5, 5, size=(3, 3)))
        plan = make_plan()
        kappa = [1e-3, 2e-3, 3e-3, 4e-3]
        full = ch.channel_matrix(geom, plan, kappa)
        for l in range(3):
            for u in range(4):
                assert full[l, u] == pytest.approx(
                    ch.channel_gain(geom, plan, kappa, l, u), rel=1e-14)

    def test_monotone_in_distance(self):
        plan = make_plan()
        dists = np.linspace(0.5, 6.0, 25)
        geom = ch.LinkGeometry(np.zeros(3), np.column_stack(
            [dists, np.zeros(25), np.zeros(25)]))
        h = ch.channel_matrix(geom, plan, 3e-3)[:, 1]
        assert np.all(np.diff(h) < 0)


class TestInterference:
    def test_no_leakage(self):
        model = ch.InterferenceModel(np.full(4, 0.25), np.zeros((4, 1)))
        assert ch.ibi_power(model, 1) == 0.0

    def test_two_band_example(self):
        model = ch.InterferenceModel([0.5, 0.5], [[0.05]])
        assert ch.ibi_power(model, 0) == pytest.approx(1.25e-3, rel=1e-15)

    def test_linear_in_power(self):
        model = ch.InterferenceModel(np.full(4, 0.25), np.full((4, 1), 0.05))
        double = model.with_powers(np.full(4, 0.5))
        for u in range(4):
            assert ch.ibi_power(double, u) == pytest.approx(
                2 * ch.ibi_power(model, u), rel=1e-15)

    def test_adjacency_mask(self):
        model = ch.InterferenceModel(np.ones(4), np.full((4, 1), 0.1), adjacency=1)
        # victim 0 sees only subband 1
        assert ch.ibi_power(model, 0) == pytest.approx(0.01)
        # victim 1 sees subbands 0 and 2
        assert ch.ibi_power(model, 1) == pytest.approx(0.02)
        unmasked = ch.InterferenceModel(np.ones(4), np.full((4, 1), 0.1), adjacency=None)
        assert ch.ibi_power(unmasked, 0) == pytest.approx(0.03)

    def test_leak_set_sums_before_squaring(self):
        model = ch.InterferenceModel([1.0, 1.0], [[0.03, 0.02]])
        assert ch.ibi_power(model, 0) == pytest.approx(0.05**2, rel=1e-15)


class TestSinrRate:
    consts = ch.RadioConstants(tx_gain=1000.0, rx_gain=10.0,
                               noise_density=ch.dbm_to_watts(-174.0))

    def test_zero_signal(self):
        model = ch.InterferenceModel([0.25], [[0.0]])
        assert ch.sinr(0.0, model, self.consts, 10e9, 0) == 0.0

    def test_definitional_unity(self):
        model = ch.InterferenceModel([1.0], [[0.0]])
        consts = ch.RadioConstants(1.0, 1.0, 1e-20)
        signal = math.sqrt(10e9 * 1e-20)
        assert ch.sinr(signal, model, consts, 10e9, 0) == pytest.approx(1.0, rel=1e-12)

    def test_reference_value(self):
        model = ch.InterferenceModel([0.25], [[0.0]])
        signal = math.sqrt(1e-12)
        gamma = ch.sinr(signal, model, self.consts, 10e9, 0)
        assert gamma == pytest.approx(251.18864315095723, rel=1e-12)

    def test_spectral_efficiency_examples(self):
        assert ch.spectral_efficiency(0.0, 1e-3) == 0.0
        gamma_unit = -math.log(5 * 5e-2) / 1.5
        assert ch.spectral_efficiency(gamma_unit, 5e-2) == pytest.approx(1.0, rel=1e-14)
        assert ch.spectral_efficiency(10.0, 1e-3) == pytest.approx(
            1.9377539717299719, rel=1e-12)

    def test_spectral_efficiency_domain(self):
        with pytest.raises(ConfigError):
            ch.spectral_efficiency(1.0, 0.25)
        with pytest.raises(ConfigError):
            ch.spectral_efficiency(-0.1, 1e-3)

    def test_spectral_efficiency_strictly_increasing(self):
        gammas = np.linspace(0, 50, 200)
        ks = [ch.spectral_efficiency(g, 1e-3) for g in gammas]
        assert np.all(np.diff(ks) > 0)

    def test_user_rate(self):
        assert ch.user_rate([0.0, 0.0], 10e9) == 0.0
        assert ch.user_rate([1, 1, 1, 1], 10e9) == pytest.approx(4e10)
        with pytest.raises(ConfigError):
            ch.user_rate([-0.1], 10e9)

    def test_rate_monotone_in_signal_and_interference(self, rng):
        consts = self.consts
        for _ in range(30):
            power = rng.uniform(0.01, 1.0)
            signals = np.sort(rng.uniform(1e-8, 1e-5, size=5))
            model = ch.InterferenceModel([power, power], [[0.05]])
            rates = [ch.user_rate(
                [ch.spectral_efficiency(
                    ch.sinr(s, model, consts, 10e9, 0), consts.ber_target)], 10e9)
                for s in signals]
            assert np.all(np.diff(rates) >= 0)
            leaks = np.sort(rng.uniform(0.0, 0.2, size=5))
            s = 1e-6
            rates = [ch.user_rate(
                [ch.spectral_efficiency(
                    ch.sinr(s, ch.InterferenceModel([power, power], [[lk]]),
                            consts, 10e9, 0), consts.ber_target)], 10e9)
                for lk in leaks]
            assert np.all(np.diff(rates) <= 0)

    def test_ber_bounds(self):
        with pytest.raises(ConfigError):
            ch.RadioConstants(1.0, 1.0, 1e-20, ber_target=0.2)
        with pytest.raises(ConfigError):
            ch.RadioConstants(1.0, 1.0, 1e-20, ber_target=0.0)
