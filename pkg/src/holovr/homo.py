"""Closed-form prefetch/render policies for homogeneous FoV catalogs.

With identical FoVs and uniform popularity the per-user problem collapses
to choosing three counts: 2D prefetches, 3D prefetches and rendered FoVs.
Two parameter zones decide whether downloading a 3D FoV beats rendering a
downloaded 2D one; inside a verified regime the optimum is closed-form,
outside it an exhaustive enumeration takes over.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, EnumerationTooLarge, Infeasible

log = logging.getLogger(__name__)


class Zone(enum.Enum):
    """Which non-prefetched service path wins for a given device/link."""

    REMOTE_3D = "remote_3d"
    LOCAL_RENDER = "local_render"


@dataclass(frozen=True)
class HomoInstance:
    """One user's aggregated problem data.

    ``mem_slots`` counts memory in units of one 2D FoV; ``render_budget``
    is the maximum number of FoVs the device may render under its
    long-term power constraint.
    """

    n_fovs: int
    size_2d: float          # bits
    size_ratio: float       # 3D size / 2D size, >= 1
    rate: float             # bit/s
    cpu_hz: float
    render_cycles: float    # cycles per input bit
    mem_slots: int
    render_budget: int
    deadline: float = math.inf

    def __post_init__(self):
        if self.n_fovs < 1:
            raise ConfigError("need at least one FoV")
        if min(self.size_2d, self.rate, self.cpu_hz, self.deadline) <= 0:
            raise ConfigError("sizes, rate, CPU frequency and deadline must be positive")
        if self.size_ratio < 1.0:
            raise ConfigError("3D/2D size ratio must be at least 1")
        if self.render_cycles < 0:
            raise ConfigError("render intensity must be nonnegative")
        if self.mem_slots < 0 or self.render_budget < 0:
            raise ConfigError("budgets must be nonnegative")

    @classmethod
    def from_device(cls, n_fovs: int, size_2d: float, size_ratio: float,
                    rate: float, cpu_hz: float, render_cycles: float,
                    mem_bits: float, power_budget: float, switched_cap: float,
                    deadline: float) -> "HomoInstance":
        """Derive the integer budgets from physical device parameters.

        Both budgets are floored; flooring can only tighten them.
        """
        render_budget = math.floor(
            n_fovs * power_budget * deadline
            / (switched_cap * cpu_hz**2 * size_2d * render_cycles))
        return cls(n_fovs, size_2d, size_ratio, rate, cpu_hz, render_cycles,
                   mem_slots=math.floor(mem_bits / size_2d),
                   render_budget=max(0, render_budget),
                   deadline=deadline)

    def path_delays(self) -> tuple[float, float, float]:
        """(render-cached, render-fetched, remote-3D) delays in seconds."""
        render = self.size_2d * self.render_cycles / self.cpu_hz
        fetch_2d = self.size_2d / self.rate
        fetch_3d = self.size_ratio * self.size_2d / self.rate
        return render, render + fetch_2d, fetch_3d

    @property
    def budgets_within_fovs(self) -> bool:
        """Whether prefetching plus rendering cannot saturate the catalog."""
        return self.mem_slots / self.size_ratio + self.render_budget <= self.n_fovs

    @property
    def deadline_ok(self) -> bool:
        """Scenario preconditions: both download paths meet the deadline."""
        _, t3, t4 = self.path_delays()
        return t3 < self.deadline and t4 <= self.deadline


@dataclass(frozen=True)
class HomoPolicy:
    """Aggregated policy: counts of 2D prefetches, 3D prefetches, renders."""

    prefetch_2d: int
    prefetch_3d: int
    render: int
    method: str = "closed_form"

    @property
    def cached_renders(self) -> int:
        """FoVs rendered straight from prefetched 2D copies."""
        return min(self.prefetch_2d, self.render)


def classify_zone(instance: HomoInstance) -> Zone:
    """Remote 3D wins when rendering a downloaded 2D FoV is no faster.

    The boundary o/f = (ratio - 1)/R belongs to the remote-3D zone.
    """
    remote_edge = (instance.size_ratio - 1.0) / instance.rate
    if instance.render_cycles / instance.cpu_hz >= remote_edge:
        return Zone.REMOTE_3D
    return Zone.LOCAL_RENDER


def evaluate_policy(instance: HomoInstance, policy: HomoPolicy) -> float:
    """Average delay of a feasible policy (s)."""
    violations = []
    if policy.prefetch_2d < 0 or policy.prefetch_3d < 0 or policy.render < 0:
        violations.append("negative count")
    used = policy.prefetch_2d + instance.size_ratio * policy.prefetch_3d
    if used > instance.mem_slots + 1e-9:
        violations.append(f"memory {used:g} > {instance.mem_slots}")
    if policy.render > instance.render_budget:
        violations.append(f"render {policy.render} > {instance.render_budget}")
    if policy.prefetch_3d + policy.render > instance.n_fovs:
        violations.append("prefetch_3d + render exceeds the catalog")
    if violations:
        raise Infeasible("policy infeasible: " + "; ".join(violations), detail=violations)
    t2, t3, t4 = instance.path_delays()
    q = policy.cached_renders
    remote = instance.n_fovs - policy.prefetch_3d - policy.render
    return (q * t2 + (policy.render - q) * t3 + remote * t4) / instance.n_fovs


def _closed_form_applicable(instance: HomoInstance) -> bool:
    """Regime where the closed form provably matches the enumeration.

    Requires the aggregate budgets to fit inside the catalog, strict
    dominance of cached rendering over spending the same memory on 3D
    prefetching (t2 < t4 (1 - 1/ratio)), intact deadline preconditions,
    and integral leftover memory so flooring wastes nothing.
    """
    if not instance.budgets_within_fovs or not instance.deadline_ok:
        return False
    t2, _, t4 = instance.path_delays()
    if not t2 < t4 * (1.0 - 1.0 / instance.size_ratio):
        return False
    p2d = min(instance.mem_slots, instance.render_budget)
    leftover = (instance.mem_slots - p2d) / instance.size_ratio
    return abs(leftover - round(leftover)) <= 1e-9


def solve_closed_form(instance: HomoInstance) -> HomoPolicy:
    """Optimal aggregated policy.

    Uses the zone-specific closed form inside its verified regime and
    falls back to the exhaustive search otherwise (logged, not raised).
    """
    if not instance.deadline_ok:
        _, t3, t4 = instance.path_delays()
        raise Infeasible(
            f"scenario violates its deadline preconditions: "
            f"download+render {t3:.4g}s / 3D download {t4:.4g}s vs deadline "
            f"{instance.deadline:.4g}s")
    if not _closed_form_applicable(instance):
        log.info("instance outside the closed-form regime; using enumeration")
        best = brute_force_policy(instance)
        return replace(best, method="fallback_oracle")
    zone = classify_zone(instance)
    p2d = min(instance.mem_slots, instance.render_budget)
    render = p2d if zone is Zone.REMOTE_3D else instance.render_budget
    p3d = math.floor((instance.mem_slots - p2d) / instance.size_ratio + 1e-9)
    return HomoPolicy(p2d, p3d, render)


def brute_force_policy(instance: HomoInstance,
                       max_points: int = 10_000_000) -> HomoPolicy:
    """Exhaustive search over aggregated policies.

    Scans 3D prefetch counts in ascending order; for each, every remaining
    2D prefetch count and render count is evaluated vectorized.  The first
    strictly better point wins, which makes tie-breaking deterministic
    (smallest prefetch_3d, then prefetch_2d, then render).
    """
    ratio = instance.size_ratio
    p3d_max = math.floor(instance.mem_slots / ratio + 1e-9)
    approx = (p3d_max + 1) * (instance.mem_slots + 1) * (instance.render_budget + 1)
    if approx > max_points:
        raise EnumerationTooLarge(
            f"{approx} candidate policies exceed the enumeration guard {max_points}")
    t2, t3, t4 = instance.path_delays()
    best_value = math.inf
    best = None
    for p3d in range(p3d_max + 1):
        p2d_cap = math.floor(instance.mem_slots - ratio * p3d + 1e-9)
        r_cap = min(instance.render_budget, instance.n_fovs - p3d)
        if p2d_cap < 0 or r_cap < 0:
            continue
        p2d = np.arange(p2d_cap + 1)[:, None]
        r = np.arange(r_cap + 1)[None, :]
        q = np.minimum(p2d, r)
        values = (q * t2 + (r - q) * t3
                  + (instance.n_fovs - p3d - r) * t4) / instance.n_fovs
        flat = np.argmin(values)
        if values.flat[flat] < best_value:
            best_value = float(values.flat[flat])
            bi, bj = np.unravel_index(flat, values.shape)
            best = HomoPolicy(int(bi), p3d, int(bj), method="brute_force")
    if best is None:
        raise Infeasible("no feasible aggregated policy")
    return best


def allocation_breakdown(policy: HomoPolicy, n_fovs: int) -> tuple[int, int, int, int]:
    """FoV counts per service group, summing to the catalog size.

    Order: 3D-prefetched, rendered-from-cache, rendered-from-download,
    remote-3D.
    """
    q = policy.cached_renders
    remote = n_fovs - policy.prefetch_3d - policy.render
    if remote < 0:
        raise Infeasible("policy covers more FoVs than the catalog holds")
    return policy.prefetch_3d, q, policy.render - q, remote
