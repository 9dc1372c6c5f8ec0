import math

import numpy as np
import pytest

from holovr import surface as sf
from holovr.errors import ConfigError, NumericalError

LAMBDA_C = 1e-3


def params(**kwargs):
    base = dict(nx=4, ny=4, spacing=LAMBDA_C / 2, n_feeds=2,
                dipole_length=LAMBDA_C / 4)
    base.update(kwargs)
    return sf.SurfaceParams(**base)


class TestGeometry:
    def test_single_element_feed_coincides(self):
        geom = sf.build_geometry(params(nx=1, ny=1, n_feeds=1))
        assert np.allclose(geom.displacement[0, 0], 0.0)

    def test_grid_span(self):
        geom = sf.build_geometry(params(nx=16, ny=16))
        assert geom.element_local[:, 0].max() == pytest.approx(7.5e-3)
        assert geom.element_local[:, 1].max() == pytest.approx(7.5e-3)

    def test_reference_displacements(self):
        geom = sf.build_geometry(params(nx=16, ny=16, n_feeds=3))
        assert geom.displacement.shape == (256, 3, 3)
        # feeds sit on the x = 0 edge at y = (k + 1/2) * span / 3
        span = 15 * LAMBDA_C / 2
        for k in range(3):
            assert geom.feed_local[k, 1] == pytest.approx((k + 0.5) / 3 * span)
        # hand-checked distances for three corner elements against feed 0
        fy = 0.5 / 3 * span
        for i, j in [(0, 0), (15, 0), (15, 15)]:
            n = i * 16 + j
            expect = math.hypot(i * LAMBDA_C / 2, j * LAMBDA_C / 2 - fy)
            assert np.linalg.norm(geom.displacement[n, 0]) == pytest.approx(expect, rel=1e-12)

    def test_world_frame_offset(self):
        geom = sf.build_geometry(params(), origin=(0.0, 0.0, 2.0))
        assert np.allclose(geom.element_world()[0], [0.0, 0.0, 2.0])

    def test_bad_spacing(self):
        with pytest.raises(ConfigError):
            params(spacing=0.0)

    def test_element_distance_symmetry(self, rng):
        geom = sf.build_geometry(params(nx=6, ny=5))
        for _ in range(20):
            p, q = rng.integers(0, 30, size=2)
            assert geom.element_distance(p, q) == geom.element_distance(q, p)


class TestInterferenceBasis:
    def test_phase_matched_gives_ones(self):
        # substrate index 1 and a boresight target make both phases equal at x=0 feeds
        geom = sf.build_geometry(params(substrate_index=1.0))
        basis = sf.interference_basis(geom, 0.0, 0.0, LAMBDA_C, feed=0)
        assert np.allclose(basis, 1.0, atol=1e-12)

    def test_matches_elementwise_oracle(self, rng):
        geom = sf.build_geometry(params(nx=5, ny=3, substrate_index=1.9))
        lam = 1.05e-3
        elev, azim = 0.41, -1.2
        basis = sf.interference_basis(geom, elev, azim, lam, feed=1)
        k = 2 * math.pi / lam
        kf = k * np.array([math.cos(elev) * math.cos(azim),
                           math.cos(elev) * math.sin(azim), math.sin(elev)])
        ks = 2 * math.pi * 1.9 / lam * np.array([1.0, 0.0, 0.0])
        for n in range(geom.n_elements):
            delta = kf @ geom.element_local[n] - ks @ geom.displacement[n, 1]
            assert basis[n] == pytest.approx((math.cos(delta) + 1) / 2, abs=1e-12)
        assert np.all(basis >= 0.0) and np.all(basis <= 1.0)

    def test_batch_matches_single(self, rng):
        geom = sf.build_geometry(params())
        angles = rng.uniform(-1.0, 1.0, size=(3, 2))
        batch = sf.all_interference_bases(geom, angles, LAMBDA_C)
        for l in range(3):
            for k in range(2):
                single = sf.interference_basis(geom, angles[l, 0], angles[l, 1],
                                               LAMBDA_C, feed=k)
                assert np.allclose(batch[l, k], single, atol=1e-12)


class TestPatternSynthesis:
    def test_single_component(self, rng):
        bases = rng.uniform(0, 1, size=(2, 2, 8))
        weights = np.zeros((2, 2))
        weights[1, 0] = 1.0
        assert np.allclose(sf.synthesize_pattern(weights, bases), bases[1, 0])

    def test_convexity_on_identical_bases(self, rng):
        base = rng.uniform(0, 1, size=8)
        bases = np.broadcast_to(base, (3, 2, 8)).copy()
        weights = np.full((3, 2), 1.0 / 6.0)
        assert np.allclose(sf.synthesize_pattern(weights, bases), base)

    def test_matches_triple_loop(self, rng):
        bases = rng.uniform(0, 1, size=(3, 2, 10))
        raw = rng.uniform(0, 1, size=(3, 2))
        weights = raw / raw.sum()
        expected = np.zeros(10)
        for l in range(3):
            for k in range(2):
                for n in range(10):
                    expected[n] += weights[l, k] * bases[l, k, n]
        assert np.allclose(sf.synthesize_pattern(weights, bases), expected, atol=1e-14)

    def test_bounds_under_simplex(self, rng):
        geom = sf.build_geometry(params())
        angles = rng.uniform(-1.2, 1.2, size=(4, 2))
        bases = sf.all_interference_bases(geom, angles, LAMBDA_C)
        raw = rng.uniform(0, 1, size=(4, 2))
        weights = raw / raw.sum()
        pattern = sf.synthesize_pattern(weights, bases)
        assert np.all(pattern >= -1e-12) and np.all(pattern <= 1 + 1e-12)


class TestBeamMatrix:
    def test_all_ones_case(self):
        # a single column of elements along y has zero x-displacement, so the
        # guided-wave phase vanishes
        geom = sf.build_geometry(params(nx=1, ny=4, n_feeds=1, attenuation=0.0,
                                        efficiency=1.0))
        m = sf.beam_matrix(geom, np.ones(4), LAMBDA_C)
        assert np.allclose(m, 1.0, atol=1e-12)

    def test_zero_efficiency(self):
        geom = sf.build_geometry(params(efficiency=0.0))
        m = sf.beam_matrix(geom, np.ones(16), LAMBDA_C)
        assert np.allclose(m, 0.0)

    def test_matches_diagonal_factorization(self, rng):
        geom = sf.build_geometry(params(nx=5, ny=4, n_feeds=3))
        pattern = rng.uniform(0, 1, size=20)
        lam = 0.97e-3
        direct = sf.beam_matrix(geom, pattern, lam)
        factored = (math.sqrt(geom.params.efficiency)
                    * np.diag(pattern) @ sf.feed_propagation(geom, lam))
        assert np.allclose(direct, factored, rtol=0, atol=1e-12)

    def test_amplitude_bound(self, rng):
        geom = sf.build_geometry(params())
        pattern = rng.uniform(0, 1, size=16)
        m = sf.beam_matrix(geom, pattern, LAMBDA_C)
        assert np.all(np.abs(m) <= math.sqrt(geom.params.efficiency) + 1e-12)


class TestMutualImpedance:
    def test_self_impedance_reference(self):
        z = sf.self_impedance(1e-3, 0.25e-3)
        assert z.real == pytest.approx(5.0, rel=1e-12)
        assert z.imag == pytest.approx(17.249188742790558, rel=1e-12)

    def test_symmetry(self, rng):
        geom = sf.build_geometry(params(nx=6, ny=6))
        lam = 1.0526e-3
        for _ in range(20):
            p, q = rng.integers(0, 36, size=2)
            if p == q:
                continue
            zpq = sf.mutual_impedance(geom, lam, 0.25e-3, p, q)
            zqp = sf.mutual_impedance(geom, lam, 0.25e-3, q, p)
            assert zpq == zqp

    def test_diagonal_rejected(self):
        geom = sf.build_geometry(params())
        with pytest.raises(ConfigError):
            sf.mutual_impedance(geom, 1e-3, 0.25e-3, 2, 2)

    def test_far_field_decay(self):
        lam, ld = 1.0526e-3, 0.25e-3
        z_adj = sf.mutual_impedance_at(lam / 2, lam, ld)
        z_10 = sf.mutual_impedance_at(10 * lam, lam, ld)
        z_100 = sf.mutual_impedance_at(100 * lam, lam, ld)
        assert abs(z_100) < abs(z_10) < abs(z_adj)
        # the three-ray kernel falls off as 1/distance; at 200x the adjacent
        # separation the computed ratio sits just under 1e-2
        assert abs(z_100) / abs(z_adj) < 1e-2

    def test_quadrature_refinement_stable(self):
        lam, ld = 1.0e-3, 0.25e-3
        for d in (lam / 2, 5 * lam, 50 * lam):
            coarse = sf._impedance_quadrature(np.asarray(d), lam, ld, 201)
            fine = sf._impedance_quadrature(np.asarray(d), lam, ld, 401)
            assert abs(fine - coarse) / abs(fine) < 1e-8

    def test_nonconvergence_raises(self):
        with pytest.raises(NumericalError):
            sf.mutual_impedance_at(5e-4, 1e-3, 0.25e-3, nodes=5, rtol=1e-16)

    def test_matrix_structure(self):
        geom = sf.build_geometry(params(nx=3, ny=3))
        lam = 1e-3
        z = sf.impedance_matrix(geom, lam, 0.25e-3)
        assert np.allclose(z, z.T)
        assert np.allclose(np.diag(z), sf.self_impedance(lam, 0.25e-3))
        # same separation, same impedance
        assert z[0, 1] == z[1, 2]


class TestCoupling:
    def test_diagonal_network_is_identity(self):
        z_a = sf.self_impedance(1e-3, 0.25e-3)
        z = z_a * np.eye(8, dtype=complex)
        xi = sf.coupling_matrix(z, z_a, 50.0)
        assert np.linalg.norm(xi - np.eye(8)) <= 1e-10

    def test_zero_source_impedance(self, rng):
        z = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        z = z + z.T
        assert np.allclose(sf.coupling_matrix(z, 1 + 1j, 0.0), np.eye(4))

    def test_two_by_two_symbolic(self):
        a, b = 5 + 17j, -8 - 21j
        z_o = 50.0
        z = np.array([[a, b], [b, a]])
        xi = sf.coupling_matrix(z, a, z_o)
        # (1 + Zo/a) * Z (Z + Zo I)^-1 with the 2x2 adjugate inverse
        shifted = np.array([[a + z_o, b], [b, a + z_o]])
        det = shifted[0, 0] * shifted[1, 1] - shifted[0, 1] * shifted[1, 0]
        inv = np.array([[shifted[1, 1], -shifted[0, 1]],
                        [-shifted[1, 0], shifted[0, 0]]]) / det
        expected = (1 + z_o / a) * z @ inv
        assert np.allclose(xi, expected, rtol=0, atol=1e-12)

    def test_singular_names_subband(self):
        z = -50.0 * np.eye(3, dtype=complex)
        with pytest.raises(NumericalError, match="subband 2"):
            sf.coupling_matrix(z, 1.0 + 0j, 50.0, label=2)

    def test_effective_beam(self, rng):
        beam = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
        assert np.allclose(sf.effective_beam(beam, np.eye(4)), beam)
        assert np.allclose(sf.effective_beam(np.zeros((4, 2)), rng.normal(size=(4, 4))), 0.0)
        xi = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        expected = np.zeros((4, 2), dtype=complex)
        for n in range(4):
            for k in range(2):
                for m in range(4):
                    expected[n, k] += xi[n, m] * beam[m, k]
        assert np.allclose(sf.effective_beam(beam, xi), expected, atol=1e-12)

    def test_build_coupling_shapes(self):
        geom = sf.build_geometry(params(nx=3, ny=3))
        model = sf.build_coupling(geom, [1e-3, 0.97e-3])
        assert model.z_matrices.shape == (2, 9, 9)
        assert model.coupling.shape == (2, 9, 9)
        assert model.z_self.shape == (2,)


class TestHoloWeights:
    def test_uniform(self):
        w = sf.HoloWeights.uniform(2, 3, 4)
        assert np.allclose(w.values, 1.0 / 8.0)

    def test_simplex_enforced(self):
        bad = np.full((2, 1, 2), 0.3)
        with pytest.raises(ConfigError):
            sf.HoloWeights(bad)

    def test_negative_rejected(self):
        v = np.full((1, 1, 2), 0.5)
        v[0, 0, 0] = -0.1
        v[0, 0, 1] = 1.1
        with pytest.raises(ConfigError):
            sf.HoloWeights(v)

    def test_tiny_negative_clamped(self):
        v = np.array([[[1.0 + 5e-13, -5e-13]]])
        w = sf.HoloWeights(v)
        assert np.all(w.values >= 0)

    def test_random_feasible(self, rng):
        w = sf.HoloWeights.random(rng, 3, 4, 2)
        sums = w.values.sum(axis=(0, 2))
        assert np.allclose(sums, 1.0, atol=1e-9)


class TestEffectiveBeamLinearity:
    def test_weight_derivative_matches_factored_form(self, rng):
        """The effective beam is linear in each pattern weight."""
        geom = sf.build_geometry(params(nx=3, ny=3, n_feeds=2))
        lam = 1e-3
        angles = rng.uniform(-1, 1, size=(2, 2))
        bases = sf.all_interference_bases(geom, angles, lam)
        z = sf.impedance_matrix(geom, lam, 0.25e-3)
        xi = sf.coupling_matrix(z, sf.self_impedance(lam, 0.25e-3), 50.0)
        prop = sf.feed_propagation(geom, lam)
        raw = rng.uniform(0, 1, size=(2, 2))
        weights = raw / raw.sum()

        def effective(w):
            pattern = sf.synthesize_pattern(w, bases)
            return sf.effective_beam(sf.beam_matrix(geom, pattern, lam), xi)

        h = 1e-7
        for l in range(2):
            for k in range(2):
                up = weights.copy()
                up[l, k] += h
                down = weights.copy()
                down[l, k] -= h
                slope = (effective(up) - effective(down)) / (2 * h)
                analytic = (math.sqrt(geom.params.efficiency)
                            * xi @ np.diag(bases[l, k]) @ prop)
                assert np.allclose(slope, analytic, rtol=1e-8, atol=1e-8)
