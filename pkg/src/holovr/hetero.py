"""Path-selection solvers for heterogeneous FoV catalogs.

One option per (user, FoV) out of the four service paths, under per-user
memory and average-power budgets.  Three solution routes of increasing
cost: a score-ordered greedy, a one-shot linearized relaxation (also the
source of the lower bound), and an iterated convex-concave refinement with
rounding and budget repair.  A per-user exhaustive search serves as the
exact oracle on tiny instances.

The per-user structure (separate budgets, additive objective) lets every
linear subproblem decompose into independent user LPs, each solved by the
revised simplex warm-started from the all-remote vertex.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import latency
from .errors import ConfigError, EnumerationTooLarge, Infeasible, NumericalError
from .latency import (FovCatalog, DeviceProfile, PathAssignment,
                      PATH_REMOTE_3D, N_PATHS)
from .simplex import LpResult, solve_lp

CERT_TOL = 1e-7


@dataclass
class MmkpInstance:
    """Gains, costs, budgets and feasibility mask of one path-selection problem."""

    catalog: FovCatalog
    profile: DeviceProfile
    rates: np.ndarray          # (L,)
    delays: np.ndarray         # (L, V, 4)
    gains: np.ndarray          # (L, V, 4), baseline column zero
    mem_cost: np.ndarray       # (L, V, 4) bits
    power_cost: np.ndarray     # (L, V, 4) W
    feasible: np.ndarray       # (L, V, 4) bool
    mem_budget: np.ndarray     # (L,)
    power_budget: np.ndarray   # (L,)

    @property
    def n_users(self) -> int:
        return self.catalog.n_users

    @property
    def n_fovs(self) -> int:
        return self.catalog.n_fovs

    def baseline_delay(self) -> float:
        """Average delay of the all-remote assignment."""
        t4 = self.delays[:, :, PATH_REMOTE_3D - 1]
        return float((self.catalog.request_prob * t4).sum() / self.n_users)

    def baseline_infeasible_pairs(self) -> list:
        """(user, fov) pairs whose 3D download misses the deadline."""
        bad = ~self.feasible[:, :, PATH_REMOTE_3D - 1]
        return [(int(l), int(i)) for l, i in zip(*np.nonzero(bad))]

    def assignment_gain(self, assignment: PathAssignment) -> float:
        contrib = np.where(assignment.x > 0, self.gains, 0.0) * assignment.x
        return float(contrib.sum())

    def assignment_delay(self, assignment: PathAssignment) -> float:
        return latency.total_delay(assignment, self.delays, self.catalog)

    def resource_usage(self, assignment: PathAssignment) -> tuple[np.ndarray, np.ndarray]:
        mem = (self.mem_cost * assignment.x).sum(axis=(1, 2))
        power = (self.power_cost * assignment.x).sum(axis=(1, 2))
        return mem, power

    def check_budgets(self, assignment: PathAssignment, tol: float = 1e-7) -> bool:
        mem, power = self.resource_usage(assignment)
        return bool(np.all(mem <= self.mem_budget * (1 + tol) + tol)
                    and np.all(power <= self.power_budget * (1 + tol) + tol))


def make_instance(catalog: FovCatalog, profile: DeviceProfile, rates) -> MmkpInstance:
    """Assemble the solver inputs from catalog, device profile and rates."""
    rates = np.broadcast_to(np.asarray(rates, dtype=float), (catalog.n_users,)).copy()
    delays = latency.delay_table(catalog, profile, rates)
    mask = latency.deadline_mask(catalog, profile, rates)
    costs = latency.resource_costs(catalog, profile)
    gains = latency.gain_table(catalog, profile, rates, delays)
    gains = np.where(mask, gains, -np.inf)
    gains[:, :, PATH_REMOTE_3D - 1] = np.where(
        mask[:, :, PATH_REMOTE_3D - 1], 0.0, -np.inf)
    return MmkpInstance(
        catalog=catalog, profile=profile, rates=rates, delays=delays,
        gains=gains, mem_cost=costs.mem, power_cost=costs.power,
        feasible=mask, mem_budget=profile.mem_budget_bits.copy(),
        power_budget=profile.power_budget.copy())


@dataclass
class SolverReport:
    """Uniform result record for every solver route."""

    assignment: PathAssignment
    objective_gain: float
    total_delay: float
    iterations: int
    converged: bool
    method: str
    bound: float | None = None           # relaxed lower-bound delay, when computed
    objective_trace: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def _require_baseline(instance: MmkpInstance):
    bad = instance.baseline_infeasible_pairs()
    if bad:
        raise Infeasible(
            f"{len(bad)} (user, fov) pairs cannot meet the deadline even via "
            f"remote 3D download: {bad[:8]}{'...' if len(bad) > 8 else ''}",
            detail=bad)


def _score_weights(instance: MmkpInstance, alpha_mem, alpha_power):
    """Per-user cost weights; ``None`` selects budget-normalized defaults."""
    if alpha_mem is None:
        alpha_mem = np.where(instance.mem_budget > 0, 1.0 / np.maximum(instance.mem_budget, 1e-300), np.inf)
    else:
        alpha_mem = np.full(instance.n_users, float(alpha_mem))
    if alpha_power is None:
        alpha_power = np.where(instance.power_budget > 0, 1.0 / np.maximum(instance.power_budget, 1e-300), np.inf)
    else:
        alpha_power = np.full(instance.n_users, float(alpha_power))
    return alpha_mem, alpha_power


def _scores(instance: MmkpInstance, eps: float, alpha_mem, alpha_power) -> np.ndarray:
    """Gain-per-normalized-cost score of every candidate move."""
    am, ap = _score_weights(instance, alpha_mem, alpha_power)
    denom = eps + am[:, None, None] * instance.mem_cost + ap[:, None, None] * instance.power_cost
    with np.errstate(invalid="ignore"):
        rho = np.where(np.isfinite(denom), instance.gains / denom, 0.0)
    rho = np.where(np.isfinite(instance.gains), rho, -np.inf)
    rho[:, :, PATH_REMOTE_3D - 1] = 0.0
    return rho


def greedy_mmkp(instance: MmkpInstance, eps: float = 1e-9,
                alpha_mem=None, alpha_power=None) -> SolverReport:
    """Score-ordered greedy upgrade from the all-remote baseline.

    Candidates are visited in descending gain-per-cost order; a move is
    taken when it fits both budgets and beats the score of the pair's
    current path (so zero- or negative-gain moves never displace the
    baseline).
    """
    _require_baseline(instance)
    rho = _scores(instance, eps, alpha_mem, alpha_power)
    order = []
    for l in range(instance.n_users):
        for i in range(instance.n_fovs):
            for j in (1, 2, 3):
                if instance.feasible[l, i, j - 1] and np.isfinite(rho[l, i, j - 1]):
                    order.append((l, i, j))
    order.sort(key=lambda t: (-rho[t[0], t[1], t[2] - 1], t[0], t[1], t[2]))

    current = np.full((instance.n_users, instance.n_fovs), PATH_REMOTE_3D, dtype=int)
    current_score = np.zeros((instance.n_users, instance.n_fovs))
    mem_use = np.zeros(instance.n_users)
    power_use = np.zeros(instance.n_users)
    for l, i, j in order:
        score = rho[l, i, j - 1]
        if score <= current_score[l, i]:
            continue
        old = current[l, i]
        new_mem = mem_use[l] - instance.mem_cost[l, i, old - 1] + instance.mem_cost[l, i, j - 1]
        new_power = (power_use[l] - instance.power_cost[l, i, old - 1]
                     + instance.power_cost[l, i, j - 1])
        if new_mem <= instance.mem_budget[l] and new_power <= instance.power_budget[l]:
            current[l, i] = j
            current_score[l, i] = score
            mem_use[l] = new_mem
            power_use[l] = new_power

    assignment = PathAssignment.from_paths(current)
    gain = instance.assignment_gain(assignment)
    return SolverReport(
        assignment=assignment, objective_gain=gain,
        total_delay=instance.baseline_delay() - gain / instance.n_users,
        iterations=len(order), converged=True, method="greedy")


def _user_lp(instance: MmkpInstance, l: int, coeffs: np.ndarray) -> np.ndarray:
    """Minimize sum(coeffs * x) for one user over its choice/budget polytope.

    Columns are the feasible (fov, path) pairs plus two budget slacks; the
    all-remote vertex provides the starting basis.  Rows and objective are
    scaled to O(1) before pivoting; certification happens on the scaled
    system.
    """
    v = instance.n_fovs
    cols = [(i, j) for i in range(v) for j in range(1, N_PATHS + 1)
            if instance.feasible[l, i, j - 1]]
    n_struct = len(cols)
    n = n_struct + 2
    m = v + 2
    a = np.zeros((m, n))
    c = np.zeros(n)
    for idx, (i, j) in enumerate(cols):
        a[i, idx] = 1.0
        a[v, idx] = instance.mem_cost[l, i, j - 1]
        a[v + 1, idx] = instance.power_cost[l, i, j - 1]
        c[idx] = coeffs[i, j - 1]
    a[v, n_struct] = 1.0
    a[v + 1, n_struct + 1] = 1.0
    b = np.ones(m)
    b[v] = instance.mem_budget[l]
    b[v + 1] = instance.power_budget[l]

    row_scale = np.maximum(np.abs(a).max(axis=1), np.abs(b))
    row_scale = np.where(row_scale > 0, row_scale, 1.0)
    a_s = a / row_scale[:, None]
    b_s = b / row_scale
    c_scale = np.abs(c).max()
    c_s = c / c_scale if c_scale > 0 else c

    basis = [idx for idx, (i, j) in enumerate(cols) if j == PATH_REMOTE_3D]
    basis += [n_struct, n_struct + 1]
    result = solve_lp(c_s, a_s, b_s, basis)

    primal = result.primal_residual(a_s, b_s)
    dual = result.dual_residual()
    comp = float(np.max(np.abs(result.x * result.reduced_costs), initial=0.0))
    if max(primal, dual, comp) > CERT_TOL:
        raise NumericalError(
            f"LP certificate failed for user {l}: primal {primal:.2e}, "
            f"dual {dual:.2e}, complementarity {comp:.2e}")

    x = np.zeros((v, N_PATHS))
    for idx, (i, j) in enumerate(cols):
        x[i, j - 1] = result.x[idx]
    return x


def lp_solve(instance: MmkpInstance, coeffs: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimize sum(coeffs * x) over the relaxed assignment polytope.

    Decomposes into one LP per user.  Returns the (L, V, 4) solution and
    the objective value on the original (unscaled) coefficients.
    """
    _require_baseline(instance)
    x = np.zeros((instance.n_users, instance.n_fovs, N_PATHS))
    for l in range(instance.n_users):
        x[l] = _user_lp(instance, l, coeffs[l])
    return x, float((coeffs * x).sum())


def _snap_assignment(x: np.ndarray, tol: float = 1e-9) -> PathAssignment:
    """Wrap an LP solution, snapping to binary when it is integral."""
    snapped = np.where(np.abs(x - np.round(x)) <= tol, np.round(x), x)
    mode = "binary" if np.all(np.abs(snapped - np.round(snapped)) <= tol) else "relaxed"
    return PathAssignment(snapped, mode=mode)


def _finite_gains(instance: MmkpInstance) -> np.ndarray:
    return np.where(np.isfinite(instance.gains), instance.gains, 0.0)


def default_penalty(instance: MmkpInstance) -> float:
    """Integrality penalty weight: ten times the largest gain magnitude."""
    scale = float(np.abs(_finite_gains(instance)).max())
    return 10.0 * scale if scale > 0 else 1.0


def relaxation_bound(instance: MmkpInstance) -> tuple[np.ndarray, float]:
    """Pure LP relaxation: maximal gain and the implied delay lower bound."""
    g = _finite_gains(instance)
    x, value = lp_solve(instance, -g)
    relaxed_gain = -value
    return x, instance.baseline_delay() - relaxed_gain / instance.n_users


def relax_and_linearize(instance: MmkpInstance, penalty: float,
                        warm: PathAssignment) -> SolverReport:
    """One linearization of the concave integrality penalty at the warm start.

    Also solves the penalty-free relaxation, whose value (converted to a
    delay) is the lower bound reported by this route.
    """
    _require_baseline(instance)
    g = _finite_gains(instance)
    _, bound = relaxation_bound(instance)
    coeffs = -(g + penalty * (2.0 * warm.x - 1.0))
    x, _ = lp_solve(instance, coeffs)
    assignment = _snap_assignment(x)
    gain = float((g * x).sum())
    return SolverReport(
        assignment=assignment, objective_gain=gain,
        total_delay=instance.baseline_delay() - gain / instance.n_users,
        iterations=1, converged=True, method="relax_linearize", bound=bound)


def _penalized_objective(instance: MmkpInstance, x: np.ndarray, penalty: float) -> float:
    g = _finite_gains(instance)
    return float((-g * x + penalty * x * (1.0 - x)).sum())


def _repair(instance: MmkpInstance, paths: np.ndarray, rho: np.ndarray) -> bool:
    """Demote lowest-score selections to the remote baseline until budgets hold."""
    mem_use = np.zeros(instance.n_users)
    power_use = np.zeros(instance.n_users)
    for l in range(instance.n_users):
        idx = paths[l] - 1
        mem_use[l] = instance.mem_cost[l, np.arange(instance.n_fovs), idx].sum()
        power_use[l] = instance.power_cost[l, np.arange(instance.n_fovs), idx].sum()
    for l in range(instance.n_users):
        while (mem_use[l] > instance.mem_budget[l] * (1 + 1e-12) + 1e-12
               or power_use[l] > instance.power_budget[l] * (1 + 1e-12) + 1e-12):
            movable = [(rho[l, i, paths[l, i] - 1], i) for i in range(instance.n_fovs)
                       if paths[l, i] != PATH_REMOTE_3D]
            if not movable:
                return False
            _, i = min(movable)
            j = paths[l, i]
            mem_use[l] -= instance.mem_cost[l, i, j - 1]
            power_use[l] -= instance.power_cost[l, i, j - 1]
            paths[l, i] = PATH_REMOTE_3D
    return True


def dca_cccp(instance: MmkpInstance, penalty: float | None = None,
             tol: float = 1e-6, max_iter: int = 50,
             warm: PathAssignment | None = None) -> SolverReport:
    """Convex-concave refinement of the relaxed assignment, then rounding.

    Each iteration linearizes the concave integrality penalty at the
    current point and solves the resulting LP; the penalized objective is
    non-increasing by majorization, and the recorded trace lets callers
    audit that.  The final point is rounded per (user, FoV) to the largest
    component and repaired back into the budgets by demoting the
    lowest-score selections.

    With no explicit warm start the iteration is seeded from the
    penalty-free relaxation (a binary warm start under the default penalty
    is already a fixed point) while the greedy solution serves as the
    incumbent: the solver never returns an assignment worse than the
    feasible point it started from.
    """
    _require_baseline(instance)
    if penalty is None:
        penalty = default_penalty(instance)
    g = _finite_gains(instance)
    notes = []
    if warm is None:
        incumbent = greedy_mmkp(instance).assignment
        x, _ = relaxation_bound(instance)
    else:
        incumbent = warm if warm.mode == "binary" else None
        x = warm.x.copy()
    trace = [_penalized_objective(instance, x, penalty)]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        coeffs = -(g + penalty * (2.0 * x - 1.0))
        x_next, _ = lp_solve(instance, coeffs)
        step = float(np.max(np.abs(x_next - x)))
        x = x_next
        trace.append(_penalized_objective(instance, x, penalty))
        if step <= tol:
            converged = True
            break

    masked = np.where(instance.feasible, x, -np.inf)
    paths = np.argmax(masked, axis=2) + 1
    rho = _scores(instance, 1e-9, None, None)
    if _repair(instance, paths, rho):
        assignment = PathAssignment.from_paths(paths)
    elif incumbent is not None:
        notes.append("budget repair failed; fell back to the warm start")
        assignment = incumbent
    else:
        raise Infeasible("budget repair failed and no binary warm start exists")
    if incumbent is not None:
        if instance.assignment_gain(incumbent) > instance.assignment_gain(assignment):
            notes.append("rounded point lost to the incumbent; kept the incumbent")
            assignment = incumbent
    gain = instance.assignment_gain(assignment)
    return SolverReport(
        assignment=assignment, objective_gain=gain,
        total_delay=instance.baseline_delay() - gain / instance.n_users,
        iterations=iterations, converged=converged, method="dca_cccp",
        objective_trace=trace, notes=notes)


def brute_force_mmkp(instance: MmkpInstance, max_size: float = 2e6) -> SolverReport:
    """Exact optimum by per-user exhaustive enumeration.

    Budgets and the objective are separable across users, so each user's
    best feasible path tuple is found independently.  Ties resolve to the
    lexicographically smallest tuple.
    """
    if 4 ** (instance.n_users * instance.n_fovs) > max_size:
        raise EnumerationTooLarge(
            f"4^{instance.n_users * instance.n_fovs} assignments exceed the "
            f"enumeration guard {max_size:g}")
    _require_baseline(instance)
    paths = np.zeros((instance.n_users, instance.n_fovs), dtype=int)
    for l in range(instance.n_users):
        options = [[j for j in range(1, N_PATHS + 1) if instance.feasible[l, i, j - 1]]
                   for i in range(instance.n_fovs)]
        best_gain = -math.inf
        best = None
        for combo in itertools.product(*options):
            idx = np.array(combo) - 1
            rng_i = np.arange(instance.n_fovs)
            if instance.mem_cost[l, rng_i, idx].sum() > instance.mem_budget[l]:
                continue
            if instance.power_cost[l, rng_i, idx].sum() > instance.power_budget[l]:
                continue
            gain = instance.gains[l, rng_i, idx].sum()
            if gain > best_gain:
                best_gain = gain
                best = combo
        if best is None:
            raise Infeasible(f"user {l} has no budget-feasible assignment")
        paths[l] = best
    assignment = PathAssignment.from_paths(paths)
    gain = instance.assignment_gain(assignment)
    return SolverReport(
        assignment=assignment, objective_gain=gain,
        total_delay=instance.baseline_delay() - gain / instance.n_users,
        iterations=1, converged=True, method="brute_force")
