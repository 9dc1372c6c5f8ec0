"""Scenario configuration: one validated record for a whole simulation.

The on-disk format is nested YAML mirroring the section dataclasses below;
``default_config`` ships the reference indoor scenario.  Loading re-checks
every component invariant, and parse -> serialize -> parse is the identity
on all fields.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import yaml

from . import channel as ch
from . import latency, surface
from .errors import ConfigError


def _from_mapping(cls, data: dict, section: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in section {section!r}: {sorted(unknown)}")
    return cls(**data)


@dataclass
class ChannelSection:
    carrier_hz: float = 300e9
    bandwidth_hz: float = 40e9
    n_subbands: int = 4
    absorption: float = 3e-3          # molecular absorption, 1/m
    tx_gain_dbi: float = 30.0
    rx_gain_dbi: float = 10.0
    noise_dbm_hz: float = -174.0
    ber_target: float = 1e-3
    leak_coeff: float = 0.05
    n_leak: int = 1
    leak_adjacency: int = 1


@dataclass
class SurfaceSection:
    nx: int = 16
    ny: int = 16
    spacing: float | None = None        # default: half the carrier wavelength
    n_feeds: int = 3
    substrate_index: float = 1.7320508075688772
    attenuation: float = 0.1
    efficiency: float = 0.8
    dipole_length: float | None = None  # default: quarter carrier wavelength
    source_impedance: float = 50.0
    quadrature_nodes: int = 201


@dataclass
class RoomSection:
    size: list = field(default_factory=lambda: [6.0, 6.0, 3.0])
    rhs_pos: list = field(default_factory=lambda: [0.0, 0.0, 2.0])
    n_users: int = 4
    user_height: float = 1.6
    user_xy_min: float = 1.0
    user_xy_max: float = 5.0


@dataclass
class VrSection:
    n_fovs: int = 100
    deadline: float = 0.02
    switched_cap: float = 1e-27
    power_budget: float = 5.0
    mem_slots: int = 40                # memory in 2D-FoV units
    heterogeneous: bool = True
    # homogeneous catalog parameters
    size_2d_bits: float = 3e6
    size_ratio: float = 2.0
    render_cycles: float = 1.0
    cpu_hz: float = 2e9
    # heterogeneous catalog parameters
    zipf_exponent: float = 1.2
    size_2d_range: list = field(default_factory=lambda: [1e6, 4e6])
    size_3d_range: list = field(default_factory=lambda: [2e6, 8e6])
    render_range: list = field(default_factory=lambda: [5.0, 15.0])
    cpu_choices: list = field(default_factory=lambda: [1.5e9, 2.0e9, 2.5e9, 3.0e9])


@dataclass
class SolverSection:
    algorithm: str = "h3"             # h1 | h2 | h3 | oracle
    greedy_eps: float = 1e-9
    penalty: float | None = None      # None: ten times the largest gain
    dca_tol: float = 1e-6
    dca_max_iter: int = 50


@dataclass
class BeamformerSection:
    tx_power_dbm: float = 30.0
    step_power: float = 0.05
    step_weights: float = 0.05
    tol: float = 1e-4
    max_iter: int = 200
    weighting: str = "as-printed"     # or "inverted"


@dataclass
class MobilitySection:
    model: str = "linear"             # linear (wall reflection) | waypoint
    speed: float = 1.0                # m/s
    tick_seconds: float = 0.5


@dataclass
class RunSection:
    n_long_ticks: int = 2
    short_per_long: int = 10
    seed: int = 0
    warm_start: bool = True


@dataclass
class ScenarioConfig:
    channel: ChannelSection = field(default_factory=ChannelSection)
    surface: SurfaceSection = field(default_factory=SurfaceSection)
    room: RoomSection = field(default_factory=RoomSection)
    vr: VrSection = field(default_factory=VrSection)
    solver: SolverSection = field(default_factory=SolverSection)
    beamformer: BeamformerSection = field(default_factory=BeamformerSection)
    mobility: MobilitySection = field(default_factory=MobilitySection)
    run: RunSection = field(default_factory=RunSection)

    def __post_init__(self):
        self.validate()

    # -- validation ----------------------------------------------------

    def validate(self):
        c, s, r, v = self.channel, self.surface, self.room, self.vr
        if c.carrier_hz <= 0 or c.bandwidth_hz <= 0 or c.n_subbands < 1:
            raise ConfigError("channel plan parameters must be positive")
        if not 0 < c.ber_target < 0.2:
            raise ConfigError("BER target must lie in (0, 0.2)")
        if s.nx < 1 or s.ny < 1 or s.n_feeds < 1:
            raise ConfigError("surface grid and feed count must be positive")
        if not 0 <= s.efficiency <= 1:
            raise ConfigError("radiation efficiency must lie in [0, 1]")
        if len(r.size) != 3 or min(r.size) <= 0:
            raise ConfigError("room size must be three positive extents")
        if len(r.rhs_pos) != 3 or any(not 0 <= p <= q for p, q in zip(r.rhs_pos, r.size)):
            raise ConfigError("surface position must lie inside the room box")
        if not 0 < r.user_height < r.size[2]:
            raise ConfigError("user height must lie inside the room")
        if not 0 <= r.user_xy_min < r.user_xy_max:
            raise ConfigError("user xy range must be increasing and nonnegative")
        if r.user_xy_max > min(r.size[0], r.size[1]):
            raise ConfigError("user xy range leaves the room")
        if r.n_users < 1:
            raise ConfigError("need at least one user")
        if v.n_fovs < 1 or v.deadline <= 0 or v.switched_cap <= 0:
            raise ConfigError("VR catalog parameters must be positive")
        if v.mem_slots < 0 or v.power_budget < 0:
            raise ConfigError("budgets must be nonnegative")
        if v.size_ratio < 1:
            raise ConfigError("3D/2D size ratio must be at least 1")
        if self.solver.algorithm not in ("h1", "h2", "h3", "oracle"):
            raise ConfigError("solver algorithm must be one of h1|h2|h3|oracle")
        if self.beamformer.weighting not in ("as-printed", "inverted"):
            raise ConfigError("weighting must be 'as-printed' or 'inverted'")
        if self.mobility.model not in ("linear", "waypoint"):
            raise ConfigError("mobility model must be 'linear' or 'waypoint'")
        if self.run.n_long_ticks < 1 or self.run.short_per_long < 1:
            raise ConfigError("tick counts must be positive")

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {f.name: asdict(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        sections = {f.name: f.default_factory for f in fields(cls)}
        unknown = set(data) - set(sections)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for f in fields(cls):
            if f.name in data:
                kwargs[f.name] = _from_mapping(f.default_factory, data[f.name], f.name)
        return cls(**kwargs)

    # -- derived builders ------------------------------------------------

    def subband_plan(self) -> ch.SubbandPlan:
        return ch.SubbandPlan(self.channel.carrier_hz, self.channel.bandwidth_hz,
                              self.channel.n_subbands)

    def radio_constants(self) -> ch.RadioConstants:
        return ch.RadioConstants(
            tx_gain=ch.db_to_linear(self.channel.tx_gain_dbi),
            rx_gain=ch.db_to_linear(self.channel.rx_gain_dbi),
            noise_density=ch.dbm_to_watts(self.channel.noise_dbm_hz),
            ber_target=self.channel.ber_target)

    def tx_power_watts(self) -> float:
        return ch.dbm_to_watts(self.beamformer.tx_power_dbm)

    def interference_model(self, total_power: float | None = None) -> ch.InterferenceModel:
        if total_power is None:
            total_power = self.tx_power_watts()
        u = self.channel.n_subbands
        powers = np.full(u, total_power / u)
        coeff = np.full((u, self.channel.n_leak), self.channel.leak_coeff)
        return ch.InterferenceModel(powers, coeff, self.channel.leak_adjacency)

    def surface_params(self) -> surface.SurfaceParams:
        lam_c = ch.SPEED_OF_LIGHT / self.channel.carrier_hz
        s = self.surface
        return surface.SurfaceParams(
            nx=s.nx, ny=s.ny,
            spacing=s.spacing if s.spacing is not None else lam_c / 2,
            n_feeds=s.n_feeds,
            substrate_index=s.substrate_index,
            attenuation=s.attenuation,
            efficiency=s.efficiency,
            dipole_length=s.dipole_length if s.dipole_length is not None else lam_c / 4,
            source_impedance=s.source_impedance)

    def build_surface(self) -> surface.RhsGeometry:
        return surface.build_geometry(self.surface_params(), origin=self.room.rhs_pos)

    def build_coupling(self, geometry: surface.RhsGeometry) -> surface.CouplingModel:
        return surface.build_coupling(geometry, self.subband_plan().wavelengths(),
                                      nodes=self.surface.quadrature_nodes)

    def sample_user_positions(self, rng: np.random.Generator) -> np.ndarray:
        r = self.room
        xy = rng.uniform(r.user_xy_min, r.user_xy_max, size=(r.n_users, 2))
        pos = np.column_stack([xy, np.full(r.n_users, r.user_height)])
        return pos

    def make_catalog(self, rng: np.random.Generator | None = None) -> latency.FovCatalog:
        v = self.vr
        if v.heterogeneous:
            if rng is None:
                raise ConfigError("heterogeneous catalogs need a seeded generator")
            return latency.FovCatalog.generate(
                rng, self.room.n_users, v.n_fovs,
                size_2d_range=tuple(v.size_2d_range),
                size_3d_range=tuple(v.size_3d_range),
                render_range=tuple(v.render_range),
                zipf_exponent=v.zipf_exponent)
        return latency.FovCatalog.homogeneous(
            self.room.n_users, v.n_fovs, v.size_2d_bits,
            size_ratio=v.size_ratio, render_cycles=v.render_cycles)

    def make_profile(self) -> latency.DeviceProfile:
        v = self.vr
        n = self.room.n_users
        if v.heterogeneous:
            choices = np.asarray(v.cpu_choices, dtype=float)
            cpu = choices[np.arange(n) % choices.size]
        else:
            cpu = np.full(n, v.cpu_hz)
        return latency.DeviceProfile(
            cpu_hz=cpu,
            switched_cap=v.switched_cap,
            power_budget=np.full(n, v.power_budget),
            mem_budget_bits=np.full(n, v.mem_slots * v.size_2d_bits),
            deadline=v.deadline)


def default_config() -> ScenarioConfig:
    return ScenarioConfig()


def save_config(config: ScenarioConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# holovr scenario configuration\n")
        yaml.safe_dump(config.to_dict(), fh, sort_keys=True, default_flow_style=False)


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        return default_config()
    return ScenarioConfig.from_dict(data)
