"""Reconfigurable holographic surface model.

Element grid construction, holographic interference bases, pattern
synthesis, per-subband beam matrices, and the mutual-coupling network
(dipole mutual impedances, coupling matrices, effective beams).

Phase conventions:

* Element positions for wave-phase computations are taken in the local
  surface frame (element (0, 0) at the origin) so pattern values do not
  depend on where the surface sits in the room.
* The hologram is recorded against the conjugated reference wave, which
  makes re-illumination reconstruct the target wave exactly; the
  phase-matched case yields a basis of ones.
* The free-space wave vector at elevation/azimuth (theta, phi) is
  (2 pi / lambda) [cos(theta)cos(phi), cos(theta)sin(phi), sin(theta)].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError


@dataclass(frozen=True)
class SurfaceParams:
    """Static description of the radiating surface hardware."""

    nx: int
    ny: int
    spacing: float               # element pitch (m)
    n_feeds: int = 3
    feed_positions: tuple | None = None  # optional (K, 3) local-frame override
    substrate_index: float = math.sqrt(3.0)
    attenuation: float = 0.1     # structural attenuation of the guided wave (1/m)
    efficiency: float = 0.8      # element radiation efficiency in (0, 1]
    dipole_length: float = 2.5e-4  # quarter of the carrier wavelength by default
    source_impedance: float = 50.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ConfigError("element grid must be at least 1x1")
        if self.spacing <= 0:
            raise ConfigError("element spacing must be positive")
        if self.n_feeds < 1:
            raise ConfigError("need at least one feed")
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigError("radiation efficiency must lie in [0, 1]")
        if self.substrate_index <= 0 or self.dipole_length <= 0:
            raise ConfigError("substrate index and dipole length must be positive")
        if self.attenuation < 0:
            raise ConfigError("structural attenuation must be nonnegative")


@dataclass(frozen=True)
class RhsGeometry:
    """Realized element/feed layout plus displacement table."""

    params: SurfaceParams
    origin: np.ndarray          # world position of element (0, 0)
    element_local: np.ndarray   # (N, 3) local frame
    feed_local: np.ndarray      # (K, 3) local frame
    displacement: np.ndarray    # (N, K, 3) element minus feed
    grid_index: np.ndarray      # (N, 2) integer (i, j) per element

    @property
    def n_elements(self) -> int:
        return self.element_local.shape[0]

    @property
    def n_feeds(self) -> int:
        return self.feed_local.shape[0]

    def element_world(self) -> np.ndarray:
        return self.element_local + self.origin[None, :]

    def wave_direction(self) -> np.ndarray:
        """Propagation direction of the guided reference wave (+x)."""
        return np.array([1.0, 0.0, 0.0])

    def surface_wavenumber(self, wavelength: float) -> float:
        return 2.0 * math.pi * self.params.substrate_index / wavelength

    def element_distance(self, p: int, q: int) -> float:
        di, dj = self.grid_index[p] - self.grid_index[q]
        return self.params.spacing * math.hypot(di, dj)


def build_geometry(params: SurfaceParams, origin=(0.0, 0.0, 0.0)) -> RhsGeometry:
    """Lay out the element grid and feeds.

    Element (i, j) sits at [i*d, j*d, 0] in the surface frame.  Default
    feeds are spread evenly along the x=0 edge so the guided wave launched
    along +x sweeps the whole aperture.
    """
    d = params.spacing
    ii, jj = np.meshgrid(np.arange(params.nx), np.arange(params.ny), indexing="ij")
    grid = np.stack([ii.ravel(), jj.ravel()], axis=1)
    elements = np.zeros((grid.shape[0], 3))
    elements[:, 0] = grid[:, 0] * d
    elements[:, 1] = grid[:, 1] * d

    if params.feed_positions is not None:
        feeds = np.atleast_2d(np.asarray(params.feed_positions, dtype=float))
        if feeds.shape != (params.n_feeds, 3):
            raise ConfigError("feed position override must be (n_feeds, 3)")
    else:
        span = (params.ny - 1) * d
        k = np.arange(params.n_feeds)
        feeds = np.zeros((params.n_feeds, 3))
        feeds[:, 1] = (k + 0.5) / params.n_feeds * span

    displacement = elements[:, None, :] - feeds[None, :, :]
    return RhsGeometry(
        params=params,
        origin=np.asarray(origin, dtype=float),
        element_local=elements,
        feed_local=feeds,
        displacement=displacement,
        grid_index=grid,
    )


def free_space_wavevector(elevation: float, azimuth: float, wavelength: float) -> np.ndarray:
    k = 2.0 * math.pi / wavelength
    ce = math.cos(elevation)
    return k * np.array([ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)])


def interference_basis(geometry: RhsGeometry, elevation: float, azimuth: float,
                       wavelength: float, feed: int) -> np.ndarray:
    """Normalized hologram of one (user direction, feed) pair.

    Entry n is (cos(phase_target(n) - phase_reference(n)) + 1) / 2, i.e. the
    real part of the target wave recorded against the conjugated reference,
    shifted into [0, 1].
    """
    k_f = free_space_wavevector(elevation, azimuth, wavelength)
    k_s = geometry.surface_wavenumber(wavelength) * geometry.wave_direction()
    phase = geometry.element_local @ k_f - geometry.displacement[:, feed, :] @ k_s
    return (np.cos(phase) + 1.0) / 2.0


def all_interference_bases(geometry: RhsGeometry, angles: np.ndarray,
                           wavelength: float) -> np.ndarray:
    """(L, K, N) bases for every user/feed pair at one wavelength."""
    k_mag = 2.0 * math.pi / wavelength
    elevation = angles[:, 0]
    azimuth = angles[:, 1]
    ce = np.cos(elevation)
    k_f = k_mag * np.stack([ce * np.cos(azimuth), ce * np.sin(azimuth), np.sin(elevation)], axis=1)
    k_s = geometry.surface_wavenumber(wavelength) * geometry.wave_direction()
    target_phase = k_f @ geometry.element_local.T            # (L, N)
    ref_phase = geometry.displacement @ k_s                  # (N, K)
    phase = target_phase[:, None, :] - ref_phase.T[None, :, :]
    return (np.cos(phase) + 1.0) / 2.0


def synthesize_pattern(weights_u: np.ndarray, bases_u: np.ndarray) -> np.ndarray:
    """Convex superposition of per-(user, feed) holograms for one subband.

    ``weights_u`` is (L, K) on the probability simplex, ``bases_u`` is
    (L, K, N).  The result stays in [0, 1].
    """
    return np.einsum("lk,lkn->n", weights_u, bases_u)


def feed_propagation(geometry: RhsGeometry, wavelength: float) -> np.ndarray:
    """(N, K) guided-wave factor from each feed to each element.

    Amplitude decays with the structural attenuation, phase advances with
    the substrate wavenumber along the feed-to-element displacement.  This
    factor does not depend on the pattern weights.
    """
    k_s = geometry.surface_wavenumber(wavelength) * geometry.wave_direction()
    path = np.linalg.norm(geometry.displacement, axis=2)
    phase = geometry.displacement @ k_s
    return np.exp(-geometry.params.attenuation * path) * np.exp(-1j * phase)


def beam_matrix(geometry: RhsGeometry, pattern: np.ndarray, wavelength: float) -> np.ndarray:
    """(N, K) beam matrix: per-element amplitude times the guided-wave factor."""
    pattern = np.asarray(pattern, dtype=float)
    if pattern.shape != (geometry.n_elements,):
        raise ConfigError("pattern length must match the element count")
    k_s = geometry.surface_wavenumber(wavelength) * geometry.wave_direction()
    path = np.linalg.norm(geometry.displacement, axis=2)
    phase = geometry.displacement @ k_s
    amp = math.sqrt(geometry.params.efficiency) * pattern[:, None]
    return amp * np.exp(-geometry.params.attenuation * path - 1j * phase)


def self_impedance(wavelength: float, dipole_length: float) -> complex:
    """Closed-form self impedance of an electrically short dipole (ohm)."""
    ratio = dipole_length / wavelength
    return 80.0 * ratio**2 - 1j * (120.0 / math.pi) * math.log(wavelength / (2.0 * math.pi * dipole_length))


def _current_profile(z: np.ndarray, wavelength: float, dipole_length: float) -> np.ndarray:
    up = np.sin(2.0 * math.pi * z / wavelength)
    down = np.sin(2.0 * math.pi * (2.0 * dipole_length - z) / wavelength)
    return np.where(z <= dipole_length, up, down)


def _impedance_integrand(dist: np.ndarray, z: np.ndarray, wavelength: float,
                         dipole_length: float) -> np.ndarray:
    """Kernel of the mutual-impedance integral, broadcast over (dist, z)."""
    d = dist[..., None]
    k = 2.0 * math.pi / wavelength
    r0 = np.sqrt(d**2 + z**2)
    r1 = np.sqrt(d**2 + (dipole_length - z) ** 2)
    r2 = np.sqrt(d**2 + (dipole_length + z) ** 2)
    kernel = (-1j * np.exp(-1j * k * r1) / r1
              - 1j * np.exp(-1j * k * r2) / r2
              + 2j * math.cos(k * dipole_length) * np.exp(-1j * k * r0) / r0)
    return _current_profile(z, wavelength, dipole_length) * kernel


def _simpson(values: np.ndarray, step: float) -> np.ndarray:
    """Composite Simpson rule along the last axis (odd number of nodes)."""
    n = values.shape[-1]
    if n < 3 or n % 2 == 0:
        raise ValueError("Simpson rule needs an odd node count >= 3")
    weights = np.ones(n)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return (step / 3.0) * (values @ weights)


def _impedance_quadrature(dist: np.ndarray, wavelength: float, dipole_length: float,
                          nodes: int) -> np.ndarray:
    """Integrate the kernel over [0, 2 l_d], split at the current kink l_d."""
    if nodes < 5:
        raise ValueError("need at least 5 quadrature nodes")
    half = (nodes - 1) // 2
    if half % 2 == 1:
        half += 1
    z_lo = np.linspace(0.0, dipole_length, half + 1)
    z_hi = np.linspace(dipole_length, 2.0 * dipole_length, half + 1)
    lo = _simpson(_impedance_integrand(dist, z_lo, wavelength, dipole_length), z_lo[1] - z_lo[0])
    hi = _simpson(_impedance_integrand(dist, z_hi, wavelength, dipole_length), z_hi[1] - z_hi[0])
    return -30.0 * (lo + hi)


def mutual_impedance_at(dist, wavelength: float, dipole_length: float,
                        nodes: int = 201, rtol: float = 1e-6,
                        check: bool = True):
    """Mutual impedance between two parallel dipoles at separation ``dist``.

    Numerical quadrature of the piecewise-sine current against the
    three-ray kernel.  With ``check`` enabled the quadrature is repeated at
    doubled resolution and must agree to ``rtol`` (relative to the larger
    magnitude, with a 1e-12 ohm floor for near-zero values).
    """
    dist = np.asarray(dist, dtype=float)
    if np.any(dist <= 0):
        raise ConfigError("mutual impedance requires a positive separation")
    coarse = _impedance_quadrature(dist, wavelength, dipole_length, nodes)
    if check:
        fine = _impedance_quadrature(dist, wavelength, dipole_length, 2 * (nodes - 1) + 1)
        scale = np.maximum(np.maximum(np.abs(coarse), np.abs(fine)), 1e-12)
        err = np.abs(fine - coarse) / scale
        if np.any(err > rtol):
            worst = float(np.max(err))
            raise NumericalError(
                f"mutual-impedance quadrature not converged: relative change "
                f"{worst:.3e} > {rtol:.1e} at {nodes} nodes "
                f"(wavelength={wavelength:.4e} m, dipole={dipole_length:.4e} m)")
        coarse = fine
    if coarse.ndim == 0:
        return complex(coarse)
    return coarse


def mutual_impedance(geometry: RhsGeometry, wavelength: float, dipole_length: float,
                     p: int, q: int, nodes: int = 201) -> complex:
    """Mutual impedance between grid elements ``p`` and ``q``."""
    if p == q:
        raise ConfigError("mutual impedance is defined for distinct elements; "
                          "use self_impedance for the diagonal")
    d = geometry.element_distance(p, q)
    return mutual_impedance_at(d, wavelength, dipole_length, nodes=nodes)


def impedance_matrix(geometry: RhsGeometry, wavelength: float,
                     dipole_length: float | None = None, nodes: int = 201) -> np.ndarray:
    """(N, N) mutual-impedance network at one wavelength.

    The planar grid has few distinct element separations, so the quadrature
    runs once per distance and the results are scattered into the matrix.
    The diagonal carries the closed-form self impedance.
    """
    if dipole_length is None:
        dipole_length = geometry.params.dipole_length
    n = geometry.n_elements
    idx = geometry.grid_index
    di = idx[:, 0][:, None] - idx[:, 0][None, :]
    dj = idx[:, 1][:, None] - idx[:, 1][None, :]
    sq = di**2 + dj**2
    unique_sq, inverse = np.unique(sq, return_inverse=True)
    values = np.zeros(unique_sq.shape[0], dtype=complex)
    off_diag = unique_sq > 0
    dists = geometry.params.spacing * np.sqrt(unique_sq[off_diag].astype(float))
    if dists.size:
        values[off_diag] = mutual_impedance_at(dists, wavelength, dipole_length, nodes=nodes)
    values[~off_diag] = self_impedance(wavelength, dipole_length)
    return values[inverse].reshape(n, n)


def coupling_matrix(z_matrix: np.ndarray, z_self: complex, z_source: float,
                    label=None) -> np.ndarray:
    """Map from the uncoupled to the coupled element excitation.

    Computed as (1 + Z_O / Z_A) * Z (Z + Z_O I)^{-1} via a linear solve;
    collapses to the identity when the network is purely diagonal or the
    source impedance vanishes.
    """
    z_matrix = np.asarray(z_matrix)
    n = z_matrix.shape[0]
    if z_matrix.shape != (n, n):
        raise ConfigError("impedance matrix must be square")
    if z_source == 0:
        return np.eye(n, dtype=complex)
    shifted = z_matrix + z_source * np.eye(n)
    try:
        solved = np.linalg.solve(shifted.T, z_matrix.T).T
    except np.linalg.LinAlgError as exc:
        where = f" (subband {label})" if label is not None else ""
        raise NumericalError(f"coupling system is singular{where}") from exc
    return (1.0 + z_source / z_self) * solved


def effective_beam(beam: np.ndarray, coupling: np.ndarray) -> np.ndarray:
    """Apply the coupling network to a beam matrix."""
    beam = np.asarray(beam)
    coupling = np.asarray(coupling)
    if coupling.shape[1] != beam.shape[0]:
        raise ConfigError("coupling/beam shapes disagree")
    return coupling @ beam


@dataclass(frozen=True)
class CouplingModel:
    """Per-subband impedance network and coupling matrices."""

    source_impedance: float
    dipole_length: float
    z_matrices: np.ndarray   # (U, N, N) complex
    z_self: np.ndarray       # (U,) complex
    coupling: np.ndarray     # (U, N, N) complex


def build_coupling(geometry: RhsGeometry, wavelengths, nodes: int = 201) -> CouplingModel:
    """Assemble the impedance and coupling matrices for every subband.

    Depends only on the element grid and the subband wavelengths; pattern
    weights and feed powers never touch it, so the result is cached by the
    caller for the lifetime of the geometry.
    """
    wavelengths = np.atleast_1d(np.asarray(wavelengths, dtype=float))
    l_d = geometry.params.dipole_length
    z_o = geometry.params.source_impedance
    n = geometry.n_elements
    z_mats = np.zeros((wavelengths.size, n, n), dtype=complex)
    z_selfs = np.zeros(wavelengths.size, dtype=complex)
    xis = np.zeros_like(z_mats)
    for u, lam in enumerate(wavelengths):
        z_mats[u] = impedance_matrix(geometry, lam, l_d, nodes=nodes)
        z_selfs[u] = self_impedance(lam, l_d)
        xis[u] = coupling_matrix(z_mats[u], z_selfs[u], z_o, label=u)
    return CouplingModel(z_o, l_d, z_mats, z_selfs, xis)


def identity_coupling(n_elements: int, n_subbands: int,
                      source_impedance: float = 50.0,
                      dipole_length: float = 2.5e-4) -> CouplingModel:
    """Coupling-free stand-in (useful for tests and quick runs)."""
    eye = np.broadcast_to(np.eye(n_elements, dtype=complex),
                          (n_subbands, n_elements, n_elements)).copy()
    return CouplingModel(source_impedance, dipole_length, eye.copy(),
                         np.ones(n_subbands, dtype=complex), eye)


@dataclass
class HoloWeights:
    """Holographic amplitude weights, one simplex per subband.

    ``values`` has shape (L, U, K); for each subband the (user, feed)
    weights are nonnegative and sum to one.
    """

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise ConfigError("weights must be (L, U, K)")
        self.validate()

    def validate(self, tol: float = 1e-9):
        if np.any(self.values < -1e-12):
            raise ConfigError("weights must be nonnegative")
        np.clip(self.values, 0.0, None, out=self.values)
        sums = self.values.sum(axis=(0, 2))
        if np.any(np.abs(sums - 1.0) > tol):
            raise ConfigError(f"per-subband weights must sum to 1 (got {sums})")

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def uniform(cls, n_users: int, n_subbands: int, n_feeds: int) -> "HoloWeights":
        v = np.full((n_users, n_subbands, n_feeds), 1.0 / (n_users * n_feeds))
        return cls(v)

    @classmethod
    def random(cls, rng: np.random.Generator, n_users: int, n_subbands: int,
               n_feeds: int) -> "HoloWeights":
        raw = rng.uniform(0.0, 1.0, size=(n_users, n_subbands, n_feeds))
        raw /= raw.sum(axis=(0, 2), keepdims=True)
        return cls(raw)
