"""VR service-path economics.

FoV catalog, device profiles, the four service paths and their delays,
resource cost tables, delay gains against the remote-3D baseline, and the
expected wireless-critical bits that couple offloading to beamforming.

Path labels follow the domain convention:

1. serve the 3D FoV from device memory (prefetched),
2. render on device from a prefetched 2D FoV,
3. download the 2D FoV and render on device,
4. download the 3D FoV (the baseline).

Arrays with a path axis have length 4 and are indexed ``label - 1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

log = logging.getLogger(__name__)

PATH_LOCAL_3D = 1
PATH_RENDER_CACHED = 2
PATH_RENDER_FETCHED = 3
PATH_REMOTE_3D = 4
N_PATHS = 4


def zipf_probabilities(n: int, exponent: float) -> np.ndarray:
    """Zipf popularity profile over ``n`` items, heaviest first."""
    if n < 1:
        raise ConfigError("need at least one FoV")
    ranks = np.arange(1, n + 1, dtype=float)
    weights = ranks ** (-exponent)
    return weights / weights.sum()


@dataclass
class FovCatalog:
    """Per-(user, FoV) sizes, request probabilities and rendering intensity."""

    size_2d: np.ndarray        # (L, V) bits
    size_3d: np.ndarray        # (L, V) bits
    request_prob: np.ndarray   # (L, V)
    render_cycles: np.ndarray  # (L, V) cycles per input bit

    def __post_init__(self):
        self.size_2d = np.atleast_2d(np.asarray(self.size_2d, dtype=float))
        shape = self.size_2d.shape
        self.size_3d = np.broadcast_to(np.asarray(self.size_3d, dtype=float), shape).copy()
        self.request_prob = np.broadcast_to(np.asarray(self.request_prob, dtype=float), shape).copy()
        self.render_cycles = np.broadcast_to(np.asarray(self.render_cycles, dtype=float), shape).copy()
        if np.any(self.size_2d <= 0) or np.any(self.size_3d <= 0):
            raise ConfigError("FoV sizes must be positive")
        if np.any(self.request_prob < 0):
            raise ConfigError("request probabilities must be nonnegative")
        row_sums = self.request_prob.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > 1e-9):
            raise ConfigError(f"request probabilities must sum to 1 per user (got {row_sums})")
        ratio = self.size_3d / self.size_2d
        if np.any(ratio < 1.0 - 1e-12):
            raise ConfigError("3D FoVs must be at least as large as their 2D source")
        if np.any(ratio < 2.0):
            log.warning("some 3D/2D size ratios fall below 2; stereoscopic content "
                        "is typically at least twice the 2D size")

    @property
    def n_users(self) -> int:
        return self.size_2d.shape[0]

    @property
    def n_fovs(self) -> int:
        return self.size_2d.shape[1]

    @property
    def size_ratio(self) -> np.ndarray:
        return self.size_3d / self.size_2d

    @classmethod
    def homogeneous(cls, n_users: int, n_fovs: int, size_2d: float,
                    size_ratio: float = 2.0, render_cycles: float = 1.0) -> "FovCatalog":
        """Identical FoVs with uniform request probabilities."""
        shape = (n_users, n_fovs)
        return cls(
            size_2d=np.full(shape, size_2d),
            size_3d=np.full(shape, size_2d * size_ratio),
            request_prob=np.full(shape, 1.0 / n_fovs),
            render_cycles=np.full(shape, render_cycles),
        )

    @classmethod
    def generate(cls, rng: np.random.Generator, n_users: int, n_fovs: int,
                 size_2d_range=(1e6, 4e6), size_3d_range=(2e6, 8e6),
                 render_range=(5.0, 15.0), zipf_exponent: float = 1.2) -> "FovCatalog":
        """Heterogeneous catalog with Zipf popularity.

        3D sizes are clamped from below to the 2D size so the catalog
        invariant holds for independent draws; each user gets an
        independently permuted popularity ranking.
        """
        shape = (n_users, n_fovs)
        size_2d = rng.uniform(*size_2d_range, size=shape)
        size_3d = np.maximum(rng.uniform(*size_3d_range, size=shape), size_2d)
        cycles = rng.uniform(*render_range, size=shape)
        base = zipf_probabilities(n_fovs, zipf_exponent)
        prob = np.stack([base[rng.permutation(n_fovs)] for _ in range(n_users)])
        return cls(size_2d, size_3d, prob, cycles)

    @classmethod
    def from_file(cls, path) -> "FovCatalog":
        """Load a catalog from a YAML/JSON mapping of per-user arrays."""
        import yaml

        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        try:
            return cls(
                size_2d=np.asarray(data["size_2d"], dtype=float),
                size_3d=np.asarray(data["size_3d"], dtype=float),
                request_prob=np.asarray(data["request_prob"], dtype=float),
                render_cycles=np.asarray(data["render_cycles"], dtype=float),
            )
        except KeyError as exc:
            raise ConfigError(f"catalog file {path} is missing field {exc}") from exc


@dataclass
class DeviceProfile:
    """Per-user compute and budget parameters."""

    cpu_hz: np.ndarray          # (L,) cycles/s
    switched_cap: float         # J s / cycle^3
    power_budget: np.ndarray    # (L,) W
    mem_budget_bits: np.ndarray  # (L,) bits
    deadline: float             # s

    def __post_init__(self):
        self.cpu_hz = np.atleast_1d(np.asarray(self.cpu_hz, dtype=float))
        n = self.cpu_hz.shape[0]
        self.power_budget = np.broadcast_to(
            np.asarray(self.power_budget, dtype=float), (n,)).copy()
        self.mem_budget_bits = np.broadcast_to(
            np.asarray(self.mem_budget_bits, dtype=float), (n,)).copy()
        if np.any(self.cpu_hz <= 0):
            raise ConfigError("CPU frequencies must be positive")
        if self.switched_cap <= 0 or self.deadline <= 0:
            raise ConfigError("switched capacitance and deadline must be positive")
        if np.any(self.power_budget < 0) or np.any(self.mem_budget_bits < 0):
            raise ConfigError("budgets must be nonnegative")

    @property
    def n_users(self) -> int:
        return self.cpu_hz.shape[0]


def path_delay(catalog: FovCatalog, profile: DeviceProfile, rate: float,
               l: int, i: int, path: int) -> float:
    """Delay of serving FoV (l, i) over one of the four paths (s).

    A zero rate makes the transmission paths (3, 4) infinitely slow; the
    infinite sentinel marks them unusable rather than raising.
    """
    if path not in (1, 2, 3, 4):
        raise ConfigError(f"unknown path {path}")
    q2d = catalog.size_2d[l, i]
    q3d = catalog.size_3d[l, i]
    render = q2d * catalog.render_cycles[l, i] / profile.cpu_hz[l]
    if path == PATH_LOCAL_3D:
        return 0.0
    if path == PATH_RENDER_CACHED:
        return render
    if rate <= 0:
        return math.inf
    if path == PATH_RENDER_FETCHED:
        return q2d / rate + render
    return q3d / rate


def delay_table(catalog: FovCatalog, profile: DeviceProfile, rates) -> np.ndarray:
    """(L, V, 4) delays for every user, FoV and path."""
    rates = np.broadcast_to(np.asarray(rates, dtype=float), (catalog.n_users,))
    render = catalog.size_2d * catalog.render_cycles / profile.cpu_hz[:, None]
    with np.errstate(divide="ignore"):
        inv_rate = np.where(rates > 0, 1.0 / np.where(rates > 0, rates, 1.0), np.inf)
    tx_2d = catalog.size_2d * inv_rate[:, None]
    tx_3d = catalog.size_3d * inv_rate[:, None]
    out = np.zeros((catalog.n_users, catalog.n_fovs, N_PATHS))
    out[:, :, PATH_RENDER_CACHED - 1] = render
    out[:, :, PATH_RENDER_FETCHED - 1] = tx_2d + render
    out[:, :, PATH_REMOTE_3D - 1] = tx_3d
    return out


def deadline_mask(catalog: FovCatalog, profile: DeviceProfile, rates) -> np.ndarray:
    """(L, V, 4) boolean mask of deadline-feasible paths.

    Only the transmission paths are constrained: path 3 must finish the
    download plus render within the deadline, path 4 the 3D download.
    Paths 1 and 2 are always available.
    """
    delays = delay_table(catalog, profile, rates)
    mask = np.ones(delays.shape, dtype=bool)
    mask[:, :, PATH_RENDER_FETCHED - 1] = delays[:, :, PATH_RENDER_FETCHED - 1] <= profile.deadline
    mask[:, :, PATH_REMOTE_3D - 1] = delays[:, :, PATH_REMOTE_3D - 1] <= profile.deadline
    return mask


@dataclass
class PathAssignment:
    """Per-(user, FoV) distribution over the four service paths."""

    x: np.ndarray   # (L, V, 4)
    mode: str = "binary"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim != 3 or self.x.shape[2] != N_PATHS:
            raise ConfigError("assignment must be (L, V, 4)")
        if self.mode not in ("binary", "relaxed"):
            raise ConfigError("mode must be 'binary' or 'relaxed'")
        self.validate()

    def validate(self, tol: float = 1e-9):
        if np.any(self.x < -tol) or np.any(self.x > 1 + tol):
            raise ConfigError("assignment entries must lie in [0, 1]")
        sums = self.x.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > 1e-6):
            raise ConfigError("each (user, FoV) must select exactly one unit of path mass")
        if self.mode == "binary":
            if np.any(np.abs(self.x - np.round(self.x)) > tol):
                raise ConfigError("binary assignment has fractional entries")
            self.x = np.round(self.x)

    @property
    def n_users(self) -> int:
        return self.x.shape[0]

    @property
    def n_fovs(self) -> int:
        return self.x.shape[1]

    def path_indices(self) -> np.ndarray:
        """(L, V) chosen path labels (binary assignments only)."""
        if self.mode != "binary":
            raise ConfigError("path indices are defined for binary assignments")
        return np.argmax(self.x, axis=2) + 1

    def path_counts(self) -> np.ndarray:
        """(L, 4) number of FoVs per user on each path."""
        idx = self.path_indices()
        return np.stack([(idx == p).sum(axis=1) for p in range(1, N_PATHS + 1)], axis=1)

    @classmethod
    def all_remote(cls, n_users: int, n_fovs: int) -> "PathAssignment":
        x = np.zeros((n_users, n_fovs, N_PATHS))
        x[:, :, PATH_REMOTE_3D - 1] = 1.0
        return cls(x)

    @classmethod
    def from_paths(cls, indices: np.ndarray) -> "PathAssignment":
        indices = np.asarray(indices)
        x = np.zeros(indices.shape + (N_PATHS,))
        for p in range(1, N_PATHS + 1):
            x[..., p - 1] = indices == p
        return cls(x)


def total_delay(assignment: PathAssignment, delays: np.ndarray,
                catalog: FovCatalog) -> float:
    """Average request delay over users: (1/L) sum_li pi * T * x.

    Infinite delays on unselected paths are ignored; an infinite delay on a
    selected path propagates (the assignment is genuinely unserveable).
    """
    contrib = np.where(assignment.x > 0, delays, 0.0) * assignment.x
    return float((catalog.request_prob[:, :, None] * contrib).sum() / assignment.n_users)


@dataclass
class ResourceCosts:
    """Memory (bits) and average-power (W) cost of each path choice."""

    mem: np.ndarray    # (L, V, 4)
    power: np.ndarray  # (L, V, 4)


def resource_costs(catalog: FovCatalog, profile: DeviceProfile) -> ResourceCosts:
    """Cost table: prefetching consumes memory, local rendering consumes power."""
    shape = (catalog.n_users, catalog.n_fovs, N_PATHS)
    mem = np.zeros(shape)
    mem[:, :, PATH_LOCAL_3D - 1] = catalog.size_3d
    mem[:, :, PATH_RENDER_CACHED - 1] = catalog.size_2d
    power = np.zeros(shape)
    render_power = (catalog.request_prob * profile.switched_cap
                    * profile.cpu_hz[:, None] ** 2
                    * catalog.size_2d * catalog.render_cycles / profile.deadline)
    power[:, :, PATH_RENDER_CACHED - 1] = render_power
    power[:, :, PATH_RENDER_FETCHED - 1] = render_power
    return ResourceCosts(mem, power)


def delay_gain(catalog: FovCatalog, profile: DeviceProfile, rate: float,
               l: int, i: int, path: int) -> float:
    """Probability-weighted delay reduction of ``path`` against the baseline."""
    if path == PATH_REMOTE_3D:
        return 0.0
    t4 = path_delay(catalog, profile, rate, l, i, PATH_REMOTE_3D)
    tj = path_delay(catalog, profile, rate, l, i, path)
    if not (math.isfinite(t4) and math.isfinite(tj)):
        raise ConfigError("delay gain requires finite path delays")
    return catalog.request_prob[l, i] * (t4 - tj)


def gain_table(catalog: FovCatalog, profile: DeviceProfile, rates,
               delays: np.ndarray | None = None) -> np.ndarray:
    """(L, V, 4) delay gains; the baseline column is identically zero."""
    if delays is None:
        delays = delay_table(catalog, profile, rates)
    baseline = delays[:, :, PATH_REMOTE_3D - 1][:, :, None]
    gains = catalog.request_prob[:, :, None] * (baseline - delays)
    gains[:, :, PATH_REMOTE_3D - 1] = 0.0
    return gains


def expected_wireless_bits(assignment: PathAssignment, catalog: FovCatalog) -> np.ndarray:
    """(L,) expected bits each user must still pull over the air per request.

    Only the download paths contribute: the 2D size on path 3 and the 3D
    size on path 4.  Defined for committed (binary) strategies; users whose
    value is zero need no wireless data and are excluded from rate
    weighting by the caller.
    """
    if assignment.mode != "binary":
        raise ConfigError("wireless-bit weights are defined for committed "
                          "(binary) assignments")
    fetched = assignment.x[:, :, PATH_RENDER_FETCHED - 1] * catalog.size_2d
    remote = assignment.x[:, :, PATH_REMOTE_3D - 1] * catalog.size_3d
    return (catalog.request_prob * (fetched + remote)).sum(axis=1)
