"""Scenario orchestration: the two-timescale loop and the experiment suites.

The loop alternates a slow prefetch/render re-solve with fast beamformer
re-optimization under user mobility, coupled through the downlink rates in
one direction and the expected wireless bits in the other.  Suites
regenerate the reference experiment families as versioned CSV files plus a
plotting script artifact (never executed here).

Every run is a pure function of (config, seed); CSV floats are written with
full ``repr`` precision so identical runs produce identical bytes.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import beamformer as bf
from . import channel as ch
from . import hetero, homo, latency
from .errors import ConfigError, Infeasible
from .latency import PathAssignment
from .scenario import ScenarioConfig

CSV_VERSION = "holovr-csv v1"


# ---------------------------------------------------------------------------
# CSV plumbing


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, description: str, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {CSV_VERSION} {description}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _workers(explicit=None) -> int:
    if explicit is not None:
        return max(1, int(explicit))
    return max(1, int(os.environ.get("HOLOVR_WORKERS", "1")))


def _pmap(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Mobility


@dataclass
class MobilityState:
    velocities: np.ndarray       # (L, 2) m/s, linear model
    targets: np.ndarray          # (L, 2), waypoint model


def init_mobility(config: ScenarioConfig, rng: np.random.Generator) -> MobilityState:
    n = config.room.n_users
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
    velocities = config.mobility.speed * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    targets = rng.uniform(config.room.user_xy_min, config.room.user_xy_max, size=(n, 2))
    return MobilityState(velocities=velocities, targets=targets)


def step_mobility(config: ScenarioConfig, positions: np.ndarray,
                  state: MobilityState, rng: np.random.Generator) -> np.ndarray:
    """Advance user positions one tick; z stays at head height."""
    dt = config.mobility.tick_seconds
    xy = positions[:, :2].copy()
    if config.mobility.model == "linear":
        xy += state.velocities * dt
        for axis, extent in enumerate(config.room.size[:2]):
            low, high = 0.0, extent
            for l in range(xy.shape[0]):
                c = xy[l, axis]
                while c < low or c > high:
                    if c < low:
                        c = 2 * low - c
                    else:
                        c = 2 * high - c
                    state.velocities[l, axis] *= -1.0
                xy[l, axis] = c
    else:  # waypoint
        speed = config.mobility.speed
        for l in range(xy.shape[0]):
            to_target = state.targets[l] - xy[l]
            dist = np.linalg.norm(to_target)
            if dist <= speed * dt:
                xy[l] = state.targets[l]
                state.targets[l] = rng.uniform(config.room.user_xy_min,
                                               config.room.user_xy_max, size=2)
            else:
                xy[l] += to_target / dist * speed * dt
    out = positions.copy()
    out[:, :2] = xy
    return out


# ---------------------------------------------------------------------------
# Two-timescale loop


@dataclass
class TickRecord:
    index: int
    is_long: bool
    solver_feasible: bool
    positions: np.ndarray
    rates: np.ndarray
    mean_delay: float
    objective: float
    pg_iterations: int
    pg_converged: bool
    path_indices: np.ndarray     # (L, V) committed assignment


@dataclass
class RunRecord:
    seed: int
    config: ScenarioConfig
    catalog: latency.FovCatalog
    profile: latency.DeviceProfile
    ticks: list = field(default_factory=list)
    wall_time: float = 0.0

    def mean_delays(self) -> np.ndarray:
        return np.array([t.mean_delay for t in self.ticks])

    def audit(self, tol: float = 1e-10) -> bool:
        """Re-derive every recorded delay from its raw components."""
        for tick in self.ticks:
            delays = latency.delay_table(self.catalog, self.profile, tick.rates)
            assignment = PathAssignment.from_paths(tick.path_indices)
            value = latency.total_delay(assignment, delays, self.catalog)
            ok = (value == tick.mean_delay or
                  abs(value - tick.mean_delay) <= tol * max(1.0, abs(tick.mean_delay)))
            if not ok and not (np.isinf(value) and np.isinf(tick.mean_delay)):
                return False
        return True


def _solve_assignment(config: ScenarioConfig, instance: hetero.MmkpInstance):
    """Run the configured long-timescale algorithm; must commit a binary plan."""
    alg = config.solver.algorithm
    if alg == "h1":
        return hetero.greedy_mmkp(instance, eps=config.solver.greedy_eps)
    if alg == "h3":
        return hetero.dca_cccp(instance, penalty=config.solver.penalty,
                               tol=config.solver.dca_tol,
                               max_iter=config.solver.dca_max_iter)
    if alg == "oracle":
        return hetero.brute_force_mmkp(instance)
    raise ConfigError(f"algorithm {alg!r} cannot commit a binary assignment; "
                      "use h1, h3 or oracle for the committed plan")


def run_two_timescale(config: ScenarioConfig, seed: int | None = None) -> RunRecord:
    """Alternate the long-timescale offloading solve with fast re-beamforming.

    Per tick: at long-tick boundaries the path assignment is re-solved with
    rates evaluated for the current beamformer state, and the wireless-bit
    weights are refreshed; then mobility advances, the channel context is
    rebuilt, and the beamformer re-optimizes (warm-started).  The recorded
    delay always combines the committed assignment with the fresh rates.
    An infeasible re-solve keeps the previous assignment and flags the tick.
    """
    start = time.perf_counter()
    if seed is None:
        seed = config.run.seed
    rng = np.random.default_rng(seed)
    plan = config.subband_plan()
    consts = config.radio_constants()
    tx_power = config.tx_power_watts()
    interference = config.interference_model(tx_power)
    geometry = config.build_surface()
    coupling = config.build_coupling(geometry)
    catalog = config.make_catalog(rng)
    profile = config.make_profile()
    positions = config.sample_user_positions(rng)
    mobility = init_mobility(config, rng)

    committed = PathAssignment.all_remote(config.room.n_users, config.vr.n_fovs)
    pending = latency.expected_wireless_bits(committed, catalog)
    beam_state = None
    solver_feasible = False
    record = RunRecord(seed=seed, config=config, catalog=catalog, profile=profile)

    n_ticks = config.run.n_long_ticks * config.run.short_per_long
    for tick in range(n_ticks):
        is_long = tick % config.run.short_per_long == 0
        if is_long:
            link = ch.LinkGeometry(np.asarray(config.room.rhs_pos, dtype=float), positions)
            ctx = bf.build_context(plan, geometry, coupling, link, consts,
                                   interference, config.channel.absorption,
                                   pending, tx_power,
                                   weighting=config.beamformer.weighting)
            state_now = beam_state if beam_state is not None else ctx.initial_state()
            rates_now = bf.user_rates(state_now, ctx)
            instance = hetero.make_instance(catalog, profile, rates_now)
            try:
                report = _solve_assignment(config, instance)
                committed = report.assignment
                solver_feasible = True
            except Infeasible:
                solver_feasible = False
            pending = latency.expected_wireless_bits(committed, catalog)

        if tick > 0:
            positions = step_mobility(config, positions, mobility, rng)
        link = ch.LinkGeometry(np.asarray(config.room.rhs_pos, dtype=float), positions)
        ctx = bf.build_context(plan, geometry, coupling, link, consts,
                               interference, config.channel.absorption,
                               pending, tx_power,
                               weighting=config.beamformer.weighting)
        init = beam_state if config.run.warm_start else None
        pg = bf.pg_solve(ctx, init=init,
                         step_power=config.beamformer.step_power,
                         step_weights=config.beamformer.step_weights,
                         tol=config.beamformer.tol,
                         max_iter=config.beamformer.max_iter)
        beam_state = pg.state
        rates = bf.user_rates(beam_state, ctx)
        delays = latency.delay_table(catalog, profile, rates)
        mean_delay = latency.total_delay(committed, delays, catalog)
        record.ticks.append(TickRecord(
            index=tick, is_long=is_long, solver_feasible=solver_feasible,
            positions=positions.copy(), rates=rates, mean_delay=mean_delay,
            objective=pg.objective, pg_iterations=pg.iterations,
            pg_converged=pg.converged, path_indices=committed.path_indices()))
    record.wall_time = time.perf_counter() - start
    return record


# ---------------------------------------------------------------------------
# Experiment suites


_ZONE1_COMBOS = [(1.0e9, 1.5e9, 3.0), (1.0e9, 2.0e9, 4.0), (1.5e9, 2.0e9, 5.0),
                 (1.5e9, 2.5e9, 6.0), (2.0e9, 2.5e9, 8.0), (2.0e9, 3.0e9, 10.0)]
_ZONE2_COMBOS = [(1.0e9, 2.0e9, 1.0), (1.0e9, 3.0e9, 2.0), (1.5e9, 2.5e9, 1.0),
                 (1.5e9, 3.0e9, 1.5), (2.0e9, 2.0e9, 0.5), (2.5e9, 3.0e9, 1.0)]


def _homo_instance(config: ScenarioConfig, rate, cpu, cycles, mem_slots, render_budget):
    return homo.HomoInstance(
        n_fovs=config.vr.n_fovs, size_2d=config.vr.size_2d_bits,
        size_ratio=config.vr.size_ratio, rate=rate, cpu_hz=cpu,
        render_cycles=cycles, mem_slots=mem_slots, render_budget=render_budget,
        deadline=config.vr.deadline)


def run_homo_sweeps(config: ScenarioConfig, out_dir, seed: int | None = None,
                    workers=None, delta_step: int = 5,
                    render_budget: int = 20, combos=None) -> list:
    """Zone map, budget sweeps and the allocation migration.

    ``delta_step``/``render_budget`` control the memory sweep grid;
    ``combos`` optionally replaces the built-in (rate, cpu, cycles) tuples.
    """
    out = []
    rows = []
    ratio = config.vr.size_ratio
    for alpha in (2.0, 3.0, 4.0):
        for rate in np.linspace(0.5e9, 3.0e9, 11):
            for cpu in np.linspace(1.5e9, 5.0e9, 11):
                inst = homo.HomoInstance(
                    n_fovs=config.vr.n_fovs, size_2d=config.vr.size_2d_bits,
                    size_ratio=alpha, rate=float(rate), cpu_hz=float(cpu),
                    render_cycles=config.vr.render_cycles, mem_slots=0,
                    render_budget=0, deadline=config.vr.deadline)
                zone = homo.classify_zone(inst)
                rows.append((alpha, rate, cpu, config.vr.render_cycles,
                             inst.render_cycles / inst.cpu_hz,
                             (alpha - 1.0) / rate, zone.value))
    out.append(write_csv(Path(out_dir) / "homo_zone_map.csv",
                         "zone classification over (rate, cpu) grid",
                         ["size_ratio", "rate_bps", "cpu_hz", "render_cycles",
                          "cycles_per_hz", "zone_boundary", "zone"], rows))

    rows = []
    if combos is not None:
        families = [("custom", list(combos))]
    else:
        families = [("remote_3d", _ZONE1_COMBOS), ("local_render", _ZONE2_COMBOS)]
    for zone_label, combos_ in families:
        for rate, cpu, cycles in combos_:
            for mem_slots in range(0, int(ratio * config.vr.n_fovs) + 1, delta_step):
                inst = _homo_instance(config, rate, cpu, cycles, mem_slots, render_budget)
                policy = homo.solve_closed_form(inst)
                value = homo.evaluate_policy(inst, policy)
                oracle = homo.brute_force_policy(inst)
                oracle_value = homo.evaluate_policy(inst, oracle)
                rows.append((zone_label, rate, cpu, cycles, mem_slots, render_budget,
                             homo.classify_zone(inst).value, policy.prefetch_2d,
                             policy.prefetch_3d, policy.render, value, oracle_value,
                             abs(value - oracle_value) <= 1e-12 * max(1.0, oracle_value)))
    out.append(write_csv(Path(out_dir) / "homo_delta_sweep.csv",
                         "optimal delay vs memory slots",
                         ["zone_family", "rate_bps", "cpu_hz", "render_cycles",
                          "mem_slots", "render_budget", "zone", "prefetch_2d",
                          "prefetch_3d", "render", "delay_s", "oracle_delay_s",
                          "match"], rows))

    rows = []
    for mem_slots in (10, 20, 40, 80):
        for budget in range(0, config.vr.n_fovs + 1, delta_step):
            rate, cpu, cycles = _ZONE2_COMBOS[0]
            inst = _homo_instance(config, rate, cpu, cycles, mem_slots, budget)
            policy = homo.solve_closed_form(inst)
            value = homo.evaluate_policy(inst, policy)
            rows.append((mem_slots, budget, policy.prefetch_2d,
                         policy.prefetch_3d, policy.render, value))
    out.append(write_csv(Path(out_dir) / "homo_qmax_sweep.csv",
                         "optimal delay vs rendering budget",
                         ["mem_slots", "render_budget", "prefetch_2d", "prefetch_3d",
                          "render", "delay_s"], rows))

    rows = []
    rate, cpu, cycles = _ZONE1_COMBOS[0]
    for mem_slots in range(0, int(ratio * config.vr.n_fovs) + 1, delta_step):
        inst = _homo_instance(config, rate, cpu, cycles, mem_slots, render_budget)
        policy = homo.solve_closed_form(inst)
        groups = homo.allocation_breakdown(policy, inst.n_fovs)
        rows.append((mem_slots,) + groups)
    out.append(write_csv(Path(out_dir) / "homo_allocation.csv",
                         "FoV counts per service group vs memory slots",
                         ["mem_slots", "local_3d", "render_cached", "render_fetched",
                          "remote_3d"], rows))
    out.append(_emit_plot_script(out_dir, "homo"))
    return out


_HETERO_RATES = np.array([1.0e9, 1.5e9, 2.0e9, 2.5e9])


def _hetero_setup(config: ScenarioConfig, seed: int):
    rng = np.random.default_rng(seed)
    catalog = latency.FovCatalog.generate(
        rng, config.room.n_users, config.vr.n_fovs,
        size_2d_range=tuple(config.vr.size_2d_range),
        size_3d_range=tuple(config.vr.size_3d_range),
        render_range=tuple(config.vr.render_range),
        zipf_exponent=config.vr.zipf_exponent)
    profile = config.make_profile()
    rates = _HETERO_RATES[np.arange(config.room.n_users) % _HETERO_RATES.size]
    return catalog, profile, rates


_HETERO_BETAS = (0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4)


def _hetero_seed_rows(args) -> list:
    """All budget-sweep rows for one seed (worker-pool unit of work).

    Budgets sweep as multiples of the resource usage of the relaxed
    lower-bound solution computed under effectively unlimited budgets.
    """
    config, s = args
    rows = []
    catalog, profile, rates = _hetero_setup(config, s)
    loose = latency.DeviceProfile(
        cpu_hz=profile.cpu_hz, switched_cap=profile.switched_cap,
        power_budget=np.full(profile.n_users, 1e12),
        mem_budget_bits=np.full(profile.n_users, 1e18),
        deadline=profile.deadline)
    wide = hetero.make_instance(catalog, loose, rates)
    x_ref, _ = hetero.relaxation_bound(wide)
    ref_assign = latency.PathAssignment(x_ref, mode="relaxed")
    ref_mem, ref_pow = wide.resource_usage(ref_assign)
    ref_mem = np.maximum(ref_mem, 1.0)
    ref_pow = np.maximum(ref_pow, 1e-6)
    for sweep_dim in ("mem", "power"):
        for beta in _HETERO_BETAS:
            beta_m = beta if sweep_dim == "mem" else 1.0
            beta_p = beta if sweep_dim == "power" else 1.0
            scoped = latency.DeviceProfile(
                cpu_hz=profile.cpu_hz, switched_cap=profile.switched_cap,
                power_budget=beta_p * ref_pow,
                mem_budget_bits=beta_m * ref_mem,
                deadline=profile.deadline)
            instance = hetero.make_instance(catalog, scoped, rates)
            greedy = hetero.greedy_mmkp(instance, eps=config.solver.greedy_eps)
            relaxed = hetero.relax_and_linearize(
                instance, hetero.default_penalty(instance), greedy.assignment)
            dca = hetero.dca_cccp(instance, penalty=config.solver.penalty,
                                  tol=config.solver.dca_tol,
                                  max_iter=config.solver.dca_max_iter,
                                  warm=None)
            for name, delay, rep in (("h1", greedy.total_delay, greedy),
                                     ("h2", relaxed.bound, relaxed),
                                     ("h3", dca.total_delay, dca)):
                if name == "h2":
                    mem_util = pow_util = float("nan")
                else:
                    mem_use, pow_use = instance.resource_usage(rep.assignment)
                    mem_util = float((mem_use / np.maximum(scoped.mem_budget_bits, 1e-12)).max())
                    pow_util = float((pow_use / np.maximum(scoped.power_budget, 1e-12)).max())
                rows.append((s, sweep_dim, beta_m, beta_p, name, delay,
                             relaxed.bound, mem_util, pow_util))
    return rows


def run_hetero_sweeps(config: ScenarioConfig, out_dir, seed: int | None = None,
                      workers=None, n_seeds: int = 3) -> list:
    """Algorithm comparison as the budget ratios vary."""
    if seed is None:
        seed = config.run.seed
    seed_rows = _pmap(_hetero_seed_rows,
                      [(config, s) for s in range(seed, seed + n_seeds)],
                      _workers(workers))
    rows = [row for block in seed_rows for row in block]
    path = write_csv(Path(out_dir) / "hetero_budget_sweep.csv",
                     "algorithm delays vs budget ratios",
                     ["seed", "sweep_dim", "beta_mem", "beta_power", "algorithm",
                      "delay_s", "bound_s", "mem_utilization", "power_utilization"],
                     rows)
    return [path, _emit_plot_script(out_dir, "hetero")]


def _beamform_point(config: ScenarioConfig, seed: int, power_db: float,
                    dump_dir=None, schemes=("equal", "random")):
    """One (seed, power) evaluation of the optimizer against its baselines."""
    rng = np.random.default_rng(seed)
    plan = config.subband_plan()
    consts = config.radio_constants()
    tx_power = config.tx_power_watts() * ch.db_to_linear(power_db)
    interference = config.interference_model(tx_power)
    geometry = config.build_surface()
    coupling = config.build_coupling(geometry)
    catalog = config.make_catalog(rng)
    profile = config.make_profile()
    positions = config.sample_user_positions(rng)
    link = ch.LinkGeometry(np.asarray(config.room.rhs_pos, dtype=float), positions)

    committed = PathAssignment.all_remote(config.room.n_users, config.vr.n_fovs)
    pending = latency.expected_wireless_bits(committed, catalog)
    ctx = bf.build_context(plan, geometry, coupling, link, consts, interference,
                           config.channel.absorption, pending, tx_power,
                           weighting=config.beamformer.weighting)
    states = {name: state
              for name, state in bf.baselines(ctx, np.random.default_rng(seed + 1)).items()
              if name in schemes}
    pg = bf.pg_solve(ctx, step_power=config.beamformer.step_power,
                     step_weights=config.beamformer.step_weights,
                     tol=config.beamformer.tol, max_iter=config.beamformer.max_iter)
    states["pg"] = pg.state

    results = {}
    for name, state in states.items():
        rates = bf.user_rates(state, ctx)
        instance = hetero.make_instance(catalog, profile, rates)
        try:
            plan_report = hetero.greedy_mmkp(instance)
            assignment = plan_report.assignment
            feasible = True
        except Infeasible:
            assignment = committed
            feasible = False
        delays = latency.delay_table(catalog, profile, rates)
        results[name] = (bf.objective(state, ctx), rates,
                         latency.total_delay(assignment, delays, catalog), feasible)
    if dump_dir is not None:
        _dump_matrices(coupling, ctx, states["pg"], dump_dir)
    return results, pg


def run_beamform_sweeps(config: ScenarioConfig, out_dir, seed: int | None = None,
                        workers=None, dump_matrices: bool = False) -> list:
    if seed is None:
        seed = config.run.seed
    rows = []
    trace_rows = []
    dump_dir = Path(out_dir) / "matrices" if dump_matrices else None
    for s in range(seed, seed + 3):
        for power_db in np.arange(-10.0, 20.1, 5.0):
            dump = dump_dir if (s == seed and power_db == 0.0) else None
            results, pg = _beamform_point(config, s, float(power_db), dump_dir=dump)
            for name, (objective, rates, delay, feasible) in sorted(results.items()):
                rows.append((s, float(power_db), name, objective, delay, feasible,
                             *[float(r) for r in rates]))
            if s == seed and power_db == 0.0:
                for it, value in enumerate(pg.trace):
                    trace_rows.append((s, it, value))
    rate_cols = [f"rate_user{l}" for l in range(config.room.n_users)]
    out = [write_csv(Path(out_dir) / "beamform_power_sweep.csv",
                     "objective/delay vs transmit power scaling",
                     ["seed", "power_scale_db", "scheme", "objective", "mean_delay_s",
                      "assignment_feasible", *rate_cols], rows),
           write_csv(Path(out_dir) / "beamform_trace.csv",
                     "objective trace of the projected-gradient solver",
                     ["seed", "iteration", "objective"], trace_rows),
           _emit_plot_script(out_dir, "beamform")]
    if dump_matrices:
        out.append(dump_dir)
    return out


def _dump_matrices(coupling, ctx, state, dump_dir):
    """Debug CSV dump of the impedance/coupling matrices and patterns."""
    dump_dir = Path(dump_dir)
    dump_dir.mkdir(parents=True, exist_ok=True)
    for u in range(ctx.n_subbands):
        _write_complex_csv(dump_dir / f"impedance_u{u}.csv", coupling.z_matrices[u])
        _write_complex_csv(dump_dir / f"coupling_u{u}.csv", coupling.coupling[u])
        pattern = np.einsum("lk,lkn->n", state.weights.values[:, u, :], ctx.bases[:, u])
        write_csv(dump_dir / f"pattern_u{u}.csv", f"pattern subband {u}",
                  ["element", "amplitude"],
                  [(n, float(p)) for n, p in enumerate(pattern)])


def _write_complex_csv(path, matrix):
    rows = []
    for row in np.asarray(matrix):
        rows.append([f"{v.real!r},{v.imag!r}" for v in row])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {CSV_VERSION} complex matrix as re,im pairs, row-major\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    return path


def run_e2e(config: ScenarioConfig, out_dir, seed: int | None = None,
            workers=None) -> list:
    record = run_two_timescale(config, seed=seed)
    if not record.audit():
        raise RuntimeError("self-audit failed: recorded delays do not match "
                           "their recomputation")
    rows = []
    for tick in record.ticks:
        counts = PathAssignment.from_paths(tick.path_indices).path_counts()
        row = [record.seed, tick.index, tick.is_long, tick.solver_feasible,
               tick.objective, tick.pg_iterations, tick.pg_converged,
               tick.mean_delay]
        for l in range(config.room.n_users):
            row.extend([tick.positions[l, 0], tick.positions[l, 1],
                        float(tick.rates[l]), *counts[l]])
        rows.append(row)
    cols = ["seed", "tick", "is_long", "solver_feasible", "objective",
            "pg_iterations", "pg_converged", "mean_delay_s"]
    for l in range(config.room.n_users):
        cols.extend([f"x_user{l}", f"y_user{l}", f"rate_user{l}",
                     f"n_local3d_user{l}", f"n_cached_user{l}",
                     f"n_fetched_user{l}", f"n_remote_user{l}"])
    path = write_csv(Path(out_dir) / "e2e_ticks.csv",
                     "two-timescale run, one row per tick", cols, rows)
    return [path, _emit_plot_script(out_dir, "e2e")]


_PLOT_SNIPPETS = {
    "homo": """\
data = read_csv(HERE / "homo_delta_sweep.csv")
for key, block in groupby(data, ("zone_family", "rate_bps", "cpu_hz", "render_cycles")):
    plt.plot(column(block, "mem_slots"), column(block, "delay_s"), label=str(key))
plt.xlabel("memory slots (2D-FoV units)"); plt.ylabel("average delay (s)")
plt.legend(fontsize=6); plt.savefig(HERE / "homo_delta_sweep.png", dpi=150)
""",
    "hetero": """\
data = read_csv(HERE / "hetero_budget_sweep.csv")
for key, block in groupby(data, ("sweep_dim", "algorithm")):
    plt.plot(column(block, "beta_mem" if key[0] == "mem" else "beta_power"),
             column(block, "delay_s"), marker="o", label=str(key))
plt.xlabel("budget ratio"); plt.ylabel("average delay (s)")
plt.legend(fontsize=6); plt.savefig(HERE / "hetero_budget_sweep.png", dpi=150)
""",
    "beamform": """\
data = read_csv(HERE / "beamform_power_sweep.csv")
for key, block in groupby(data, ("scheme",)):
    plt.plot(column(block, "power_scale_db"), column(block, "mean_delay_s"),
             marker="o", label=key[0])
plt.xlabel("transmit power scaling (dB)"); plt.ylabel("average delay (s)")
plt.yscale("log"); plt.legend(); plt.savefig(HERE / "beamform_power_sweep.png", dpi=150)
""",
    "e2e": """\
data = read_csv(HERE / "e2e_ticks.csv")
plt.plot(column(data, "tick"), column(data, "mean_delay_s"), marker=".")
plt.xlabel("tick"); plt.ylabel("average delay (s)")
plt.savefig(HERE / "e2e_ticks.png", dpi=150)
""",
}

_PLOT_PRELUDE = '''\
"""Plot the {name} suite CSVs (generated artifact; run manually)."""
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def read_csv(path):
    with open(path) as fh:
        lines = [l for l in fh if not l.startswith("#")]
    reader = csv.DictReader(lines)
    return list(reader)


def column(rows, name):
    return [float(r[name]) for r in rows]


def groupby(rows, keys):
    groups = defaultdict(list)
    for r in rows:
        groups[tuple(r[k] for k in keys)].append(r)
    return sorted(groups.items())


'''


def _emit_plot_script(out_dir, name: str) -> Path:
    path = Path(out_dir) / f"plot_{name}.py"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_PLOT_PRELUDE.format(name=name))
        fh.write(_PLOT_SNIPPETS[name])
    return path


_SUITES = {
    "homo_sweeps": run_homo_sweeps,
    "hetero_sweeps": run_hetero_sweeps,
    "beamform_sweeps": run_beamform_sweeps,
    "e2e": run_e2e,
}


def experiment_suite(name: str, config: ScenarioConfig, out_dir,
                     seed: int | None = None, workers=None, **kwargs) -> list:
    """Regenerate one experiment family's CSV data under ``out_dir``."""
    if name not in _SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from {sorted(_SUITES)}")
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    return _SUITES[name](config, out_dir, seed=seed, workers=_workers(workers), **kwargs)
