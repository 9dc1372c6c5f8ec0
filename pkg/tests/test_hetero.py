import math

import numpy as np
import pytest

from holovr import hetero, latency
from holovr.errors import EnumerationTooLarge, Infeasible
from holovr.latency import PathAssignment


def small_instance(seed=0, n_users=2, n_fovs=4, power=(0.5, 3.0), mem=(2e6, 9e6),
                   deadline=0.02):
    rng = np.random.default_rng(seed)
    catalog = latency.FovCatalog.generate(rng, n_users, n_fovs)
    profile = latency.DeviceProfile(
        cpu_hz=np.linspace(1.5e9, 2.5e9, n_users),
        switched_cap=1e-27,
        power_budget=rng.uniform(*power, n_users),
        mem_budget_bits=rng.uniform(*mem, n_users),
        deadline=deadline)
    rates = rng.choice([1.0e9, 1.5e9, 2.0e9, 2.5e9], n_users)
    return hetero.make_instance(catalog, profile, rates)


def unlimited_instance(seed=0):
    return small_instance(seed, power=(1e9, 2e9), mem=(1e18, 2e18))


class TestInstance:
    def test_gain_structure(self):
        inst = small_instance()
        assert np.all(inst.gains[:, :, 3] == 0)
        finite = np.isfinite(inst.gains)
        assert np.array_equal(finite, inst.feasible)

    def test_baseline_delay(self):
        inst = small_instance()
        t4 = inst.delays[:, :, 3]
        expected = (inst.catalog.request_prob * t4).sum() / 2
        assert inst.baseline_delay() == pytest.approx(expected, rel=1e-12)

    def test_infeasible_pairs_detected(self):
        inst = small_instance(deadline=1e-4)
        assert inst.baseline_infeasible_pairs()
        with pytest.raises(Infeasible):
            hetero.greedy_mmkp(inst)


class TestGreedy:
    def test_no_positive_gain_keeps_baseline(self):
        inst = small_instance()
        inst.gains[:, :, :3] = np.where(inst.feasible[:, :, :3], -1e-6, -np.inf)
        report = hetero.greedy_mmkp(inst)
        assert np.all(report.assignment.path_indices() == latency.PATH_REMOTE_3D)
        assert report.objective_gain == 0.0

    def test_unlimited_budgets_reach_best_paths(self):
        inst = unlimited_instance()
        report = hetero.greedy_mmkp(inst)
        gains = np.where(np.isfinite(inst.gains), inst.gains, -np.inf)
        expected = np.argmax(gains, axis=2) + 1
        # ties cannot occur in generated instances; every pair lands on its
        # highest-gain path
        assert np.array_equal(report.assignment.path_indices(), expected)

    def test_budgets_respected(self):
        for seed in range(10):
            inst = small_instance(seed)
            report = hetero.greedy_mmkp(inst)
            assert inst.check_budgets(report.assignment)

    def test_gain_delay_duality(self):
        for seed in range(10):
            inst = small_instance(seed)
            report = hetero.greedy_mmkp(inst)
            rebuilt = inst.baseline_delay() - report.objective_gain / inst.n_users
            assert report.total_delay == pytest.approx(rebuilt, rel=1e-12)
            direct = inst.assignment_delay(report.assignment)
            assert report.total_delay == pytest.approx(direct, rel=1e-12)

    def test_never_worse_than_baseline(self):
        for seed in range(20):
            inst = small_instance(seed)
            report = hetero.greedy_mmkp(inst)
            assert report.objective_gain >= 0


class TestLpSolve:
    def test_single_item_picks_best_path(self):
        inst = unlimited_instance()
        g = np.where(np.isfinite(inst.gains), inst.gains, 0.0)
        x, value = hetero.lp_solve(inst, -g)
        idx = np.argmax(np.where(np.isfinite(inst.gains), inst.gains, -np.inf), axis=2)
        for l in range(inst.n_users):
            for i in range(inst.n_fovs):
                assert x[l, i, idx[l, i]] == pytest.approx(1.0)

    def test_half_budget_splits_fractionally(self):
        inst = small_instance(3, n_users=1, n_fovs=1, power=(1e9, 2e9))
        # only path 1 carries positive gain; memory allows half of it
        inst.gains[0, 0, 1] = inst.gains[0, 0, 2] = -1.0
        inst.mem_budget[0] = inst.mem_cost[0, 0, 0] / 2
        g = np.where(np.isfinite(inst.gains), inst.gains, 0.0)
        x, _ = hetero.lp_solve(inst, -g)
        assert x[0, 0, 0] == pytest.approx(0.5, rel=1e-9)
        assert x[0, 0, 3] == pytest.approx(0.5, rel=1e-9)

    def test_matches_scipy(self, rng):
        linprog = pytest.importorskip("scipy.optimize").linprog
        for seed in range(8):
            inst = small_instance(seed)
            coeffs = rng.uniform(-1, 1, size=inst.gains.shape) * 1e-3
            coeffs[~inst.feasible] = 0.0
            x, value = hetero.lp_solve(inst, coeffs)
            for l in range(inst.n_users):
                cols = [(i, j) for i in range(inst.n_fovs) for j in range(1, 5)
                        if inst.feasible[l, i, j - 1]]
                n = len(cols)
                c = np.array([coeffs[l, i, j - 1] for i, j in cols])
                a_eq = np.zeros((inst.n_fovs, n))
                for idx, (i, j) in enumerate(cols):
                    a_eq[i, idx] = 1.0
                a_ub = np.zeros((2, n))
                for idx, (i, j) in enumerate(cols):
                    a_ub[0, idx] = inst.mem_cost[l, i, j - 1]
                    a_ub[1, idx] = inst.power_cost[l, i, j - 1]
                b_ub = [inst.mem_budget[l], inst.power_budget[l]]
                ref = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq,
                              b_eq=np.ones(inst.n_fovs), bounds=(0, 1),
                              method="highs")
                assert ref.status == 0
                mine = float(sum(coeffs[l, i, j - 1] * x[l, i, j - 1]
                                 for i, j in cols))
                assert mine == pytest.approx(ref.fun, rel=1e-7, abs=1e-12)


class TestRelaxAndLinearize:
    def test_zero_penalty_dominates_binary(self):
        for seed in range(10):
            inst = small_instance(seed)
            greedy = hetero.greedy_mmkp(inst)
            report = hetero.relax_and_linearize(inst, 0.0, greedy.assignment)
            oracle = hetero.brute_force_mmkp(inst)
            assert report.objective_gain >= oracle.objective_gain - 1e-12

    def test_bound_below_optimum(self):
        for seed in range(10):
            inst = small_instance(seed)
            greedy = hetero.greedy_mmkp(inst)
            report = hetero.relax_and_linearize(
                inst, hetero.default_penalty(inst), greedy.assignment)
            oracle = hetero.brute_force_mmkp(inst)
            assert report.bound <= oracle.total_delay + 1e-12

    def test_integral_lp_optimum_is_fixed_point(self):
        inst = unlimited_instance()
        greedy = hetero.greedy_mmkp(inst)
        report = hetero.relax_and_linearize(
            inst, hetero.default_penalty(inst), greedy.assignment)
        assert report.assignment.mode == "binary"
        assert np.array_equal(report.assignment.path_indices(),
                              greedy.assignment.path_indices())


class TestDca:
    def test_large_penalty_locks_integral_warm_start(self):
        inst = small_instance()
        greedy = hetero.greedy_mmkp(inst)
        report = hetero.dca_cccp(inst, penalty=1e6 * hetero.default_penalty(inst),
                                 warm=greedy.assignment)
        assert report.iterations == 1
        assert report.converged
        assert np.array_equal(report.assignment.path_indices(),
                              greedy.assignment.path_indices())

    def test_descent_and_feasibility(self):
        for seed in range(20):
            inst = small_instance(seed)
            report = hetero.dca_cccp(inst)
            trace = np.asarray(report.objective_trace)
            assert np.all(np.diff(trace) <= 1e-9)
            assert inst.check_budgets(report.assignment)
            assert report.objective_gain >= -1e-12

    def test_not_worse_than_greedy(self):
        wins = 0
        for seed in range(30):
            inst = small_instance(seed)
            greedy = hetero.greedy_mmkp(inst)
            report = hetero.dca_cccp(inst)
            if report.total_delay <= greedy.total_delay + 1e-12:
                wins += 1
        assert wins == 30


class TestBruteForce:
    def test_single_pair(self):
        inst = small_instance(1, n_users=1, n_fovs=1, mem=(1e18, 2e18),
                              power=(1e9, 2e9))
        report = hetero.brute_force_mmkp(inst)
        best = np.argmax(np.where(np.isfinite(inst.gains), inst.gains, -np.inf))
        assert report.assignment.path_indices()[0, 0] == best + 1

    def test_matches_greedy_with_unlimited_budgets(self):
        inst = unlimited_instance(2)
        greedy = hetero.greedy_mmkp(inst)
        oracle = hetero.brute_force_mmkp(inst)
        assert oracle.objective_gain == pytest.approx(greedy.objective_gain, rel=1e-12)

    def test_size_guard(self):
        inst = small_instance(0, n_users=2, n_fovs=6)
        with pytest.raises(EnumerationTooLarge):
            hetero.brute_force_mmkp(inst, max_size=1000)

    def test_optimum_between_bound_and_greedy(self):
        for seed in range(15):
            inst = small_instance(seed)
            greedy = hetero.greedy_mmkp(inst)
            _, bound = hetero.relaxation_bound(inst)
            oracle = hetero.brute_force_mmkp(inst)
            assert bound <= oracle.total_delay + 1e-12
            assert oracle.total_delay <= greedy.total_delay + 1e-12
