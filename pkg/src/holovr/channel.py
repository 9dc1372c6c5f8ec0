"""Frequency-selective THz link budget.

Subband planning, free-space/absorption channel gains, inter-band
interference power, per-subband SINR, M-QAM spectral efficiency and the
per-user downlink rate.  All gains are linear, all powers are watts; dB
conversion happens only at configuration boundaries.

Users and subbands are 0-indexed throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

SPEED_OF_LIGHT = 3.0e8  # m/s


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


@dataclass(frozen=True)
class SubbandPlan:
    """Equal split of the system bandwidth into narrowband subbands."""

    carrier_hz: float
    bandwidth_hz: float
    n_subbands: int

    def __post_init__(self):
        if self.carrier_hz <= 0 or self.bandwidth_hz <= 0:
            raise ConfigError("carrier and bandwidth must be positive")
        if self.n_subbands < 1:
            raise ConfigError("need at least one subband")
        if self.bandwidth_hz >= 2 * self.carrier_hz:
            raise ConfigError("bandwidth exceeds carrier; lowest subband non-physical")

    @property
    def subband_hz(self) -> float:
        return self.bandwidth_hz / self.n_subbands

    @property
    def carrier_wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    def centers(self) -> np.ndarray:
        """Subband center frequencies, lowest first."""
        u = np.arange(1, self.n_subbands + 1, dtype=float)
        return self.carrier_hz - self.bandwidth_hz / 2 + (u - 0.5) * self.subband_hz

    def wavelengths(self) -> np.ndarray:
        return SPEED_OF_LIGHT / self.centers()


@dataclass(frozen=True)
class LinkGeometry:
    """Positions of the transmit surface and the HMD users (world frame, m)."""

    surface_pos: np.ndarray  # (3,)
    user_pos: np.ndarray     # (L, 3)

    def __post_init__(self):
        object.__setattr__(self, "surface_pos", np.asarray(self.surface_pos, dtype=float))
        object.__setattr__(self, "user_pos", np.atleast_2d(np.asarray(self.user_pos, dtype=float)))
        if self.surface_pos.shape != (3,):
            raise ConfigError("surface position must be a 3-vector")
        if self.user_pos.ndim != 2 or self.user_pos.shape[1] != 3:
            raise ConfigError("user positions must be (L, 3)")
        if np.any(self.distances() <= 0):
            raise ConfigError("a user is colocated with the surface")

    @property
    def n_users(self) -> int:
        return self.user_pos.shape[0]

    def offsets(self) -> np.ndarray:
        return self.user_pos - self.surface_pos[None, :]

    def distances(self) -> np.ndarray:
        return np.linalg.norm(self.user_pos - self.surface_pos[None, :], axis=1)


def departure_angles(geometry: LinkGeometry, l: int) -> tuple[float, float]:
    """Elevation/azimuth of the line of sight toward user ``l``.

    Convention for a user straight along the surface normal axis
    (dx = dy = 0): azimuth 0, elevation +-pi/2.
    """
    dx, dy, dz = geometry.offsets()[l]
    azimuth = math.atan2(dy, dx)
    elevation = math.atan2(dz, math.hypot(dx, dy))
    return elevation, azimuth


def all_departure_angles(geometry: LinkGeometry) -> np.ndarray:
    """(L, 2) array of (elevation, azimuth) pairs."""
    d = geometry.offsets()
    elevation = np.arctan2(d[:, 2], np.hypot(d[:, 0], d[:, 1]))
    azimuth = np.arctan2(d[:, 1], d[:, 0])
    return np.stack([elevation, azimuth], axis=1)


def direction_from_angles(elevation: float, azimuth: float) -> np.ndarray:
    """Unit vector matching the departure-angle convention."""
    ce = math.cos(elevation)
    return np.array([ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)])


def channel_gain(geometry: LinkGeometry, plan: SubbandPlan, absorption, l: int, u: int) -> float:
    """Scalar channel amplitude for user ``l`` on subband ``u``.

    Spreading loss c / (4 pi f d) times the molecular-absorption factor
    exp(-kappa d / 2).  Real-positive in this model; the common phase is
    dropped because every element sees the same coefficient.
    """
    f_u = plan.centers()[u]
    kappa = float(np.broadcast_to(absorption, (plan.n_subbands,))[u])
    d = geometry.distances()[l]
    return SPEED_OF_LIGHT / (4.0 * math.pi * f_u * d) * math.exp(-kappa * d / 2.0)


def channel_matrix(geometry: LinkGeometry, plan: SubbandPlan, absorption) -> np.ndarray:
    """(L, U) matrix of channel amplitudes."""
    f = plan.centers()[None, :]
    kappa = np.broadcast_to(absorption, (plan.n_subbands,))[None, :]
    d = geometry.distances()[:, None]
    return SPEED_OF_LIGHT / (4.0 * math.pi * f * d) * np.exp(-kappa * d / 2.0)


@dataclass(frozen=True)
class InterferenceModel:
    """Deterministic inter-band leakage power.

    ``leak_coeff`` holds the per-source-subband leakage coefficients over the
    dominant leakage components (shape (U, n_leak)); the waveform spectrum is
    unit-normalized so the leakage variance collapses to a discrete sum.
    ``adjacency`` restricts which source subbands v contribute to victim u
    (|v - u| <= adjacency); ``None`` means every other subband contributes.
    """

    subband_powers: np.ndarray      # (U,) W
    leak_coeff: np.ndarray          # (U, n_leak)
    adjacency: int | None = 1

    def __post_init__(self):
        powers = np.asarray(self.subband_powers, dtype=float)
        coeff = np.atleast_2d(np.asarray(self.leak_coeff, dtype=float))
        if coeff.shape[0] == 1 and powers.shape[0] > 1:
            coeff = np.repeat(coeff, powers.shape[0], axis=0)
        object.__setattr__(self, "subband_powers", powers)
        object.__setattr__(self, "leak_coeff", coeff)
        if np.any(powers < 0):
            raise ConfigError("subband powers must be nonnegative")
        if not np.all(np.isfinite(coeff)):
            raise ConfigError("leakage coefficients must be finite")

    @property
    def n_subbands(self) -> int:
        return self.subband_powers.shape[0]

    def with_powers(self, subband_powers) -> "InterferenceModel":
        return InterferenceModel(subband_powers, self.leak_coeff, self.adjacency)


def ibi_power(model: InterferenceModel, u: int) -> float:
    """Leakage variance on victim subband ``u`` (W)."""
    total = 0.0
    per_source = np.abs(model.leak_coeff.sum(axis=1)) ** 2
    for v in range(model.n_subbands):
        if v == u:
            continue
        if model.adjacency is not None and abs(v - u) > model.adjacency:
            continue
        total += model.subband_powers[v] * per_source[v]
    return total


@dataclass(frozen=True)
class RadioConstants:
    """Antenna gains (linear), noise spectral density and target BER."""

    tx_gain: float
    rx_gain: float
    noise_density: float  # W/Hz
    ber_target: float = 1e-3

    def __post_init__(self):
        if self.tx_gain <= 0 or self.rx_gain <= 0:
            raise ConfigError("antenna gains must be positive (linear units)")
        if self.noise_density <= 0:
            raise ConfigError("noise density must be positive")
        if not 0.0 < self.ber_target < 0.2:
            raise ConfigError("BER target must lie in (0, 0.2) so ln(5 eps) < 0")


def sinr(signal: complex, model: InterferenceModel, consts: RadioConstants,
         subband_hz: float, u: int) -> float:
    """Instantaneous SINR given the composite received amplitude.

    ``signal`` is the scalar channel x effective-beam x power composite
    supplied by the beamformer; the leakage power rides through the same
    antenna gains as the signal.
    """
    if subband_hz <= 0:
        raise ConfigError("subband bandwidth must be positive")
    gains = consts.tx_gain * consts.rx_gain
    interference = gains * ibi_power(model, u)
    noise = subband_hz * consts.noise_density
    return gains * abs(signal) ** 2 / (interference + noise)


def spectral_efficiency(gamma: float, ber: float) -> float:
    """Achievable M-QAM spectral efficiency at SINR ``gamma`` (bit/s/Hz)."""
    if not 0.0 < ber < 0.2:
        raise ConfigError("BER target must lie in (0, 0.2)")
    if gamma < 0:
        raise ConfigError("SINR must be nonnegative")
    return math.log2(1.0 - 1.5 * gamma / math.log(5.0 * ber))


def user_rate(k_values, subband_hz: float) -> float:
    """Downlink rate: subband bandwidth times the summed efficiencies (bit/s)."""
    k = np.asarray(k_values, dtype=float)
    if np.any(k < 0):
        raise ConfigError("spectral efficiencies must be nonnegative")
    return float(subband_hz * k.sum())
