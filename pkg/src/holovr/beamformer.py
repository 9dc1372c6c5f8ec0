"""Projected-gradient optimizer for holographic weights and feed powers.

Maximizes the pending-data-weighted sum rate over the per-subband weight
simplices and feed-power spheres.  Gradients come from Wirtinger calculus;
because every user sees the same scalar channel coefficient across
elements, all matrix products collapse onto the coupling column sums,
which keeps one iteration at O(U (N K + L K N)).

Feed powers are real nonnegative amplitudes (no feed phases), so the
complex power gradient is mapped to the real ascent direction 2 Re(grad).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from .errors import ConfigError, NumericalError
from .surface import (CouplingModel, HoloWeights, RhsGeometry,
                      all_interference_bases, feed_propagation)

LN2 = math.log(2.0)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-threshold)."""
    v = np.asarray(v, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise ConfigError("cannot project a non-finite vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ranks = np.arange(1, v.size + 1)
    cond = u - css / ranks > 0
    k = int(np.nonzero(cond)[0][-1]) + 1
    theta = css[k - 1] / k
    return np.maximum(v - theta, 0.0)


def project_power(v: np.ndarray, budget: float) -> np.ndarray:
    """Project onto the nonnegative sphere of squared norm ``budget``.

    Clamp negatives then rescale; exact whenever any positive entry
    survives.  An all-nonpositive input falls back to the uniform point.
    """
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ConfigError("cannot project a non-finite vector")
    if budget < 0:
        raise ConfigError("power budget must be nonnegative")
    w = np.maximum(v, 0.0)
    norm = np.linalg.norm(w)
    if norm <= 1e-300:
        return np.full(v.shape, math.sqrt(budget / v.size))
    return w * (math.sqrt(budget) / norm)


@dataclass
class PowerAlloc:
    """Per-subband feed amplitudes (sqrt-watts), fixed squared norm each."""

    amplitudes: np.ndarray   # (U, K) >= 0
    subband_budget: float    # watts per subband

    def __post_init__(self):
        self.amplitudes = np.atleast_2d(np.asarray(self.amplitudes, dtype=float))
        self.validate()

    def validate(self, tol: float = 1e-9):
        if np.any(self.amplitudes < -1e-12):
            raise ConfigError("feed amplitudes must be nonnegative")
        np.clip(self.amplitudes, 0.0, None, out=self.amplitudes)
        norms = (self.amplitudes**2).sum(axis=1)
        if np.any(np.abs(norms - self.subband_budget) > tol * max(1.0, self.subband_budget)):
            raise ConfigError(
                f"per-subband power must equal the budget {self.subband_budget:g} "
                f"(got {norms})")

    @classmethod
    def uniform(cls, n_subbands: int, n_feeds: int, total_power: float) -> "PowerAlloc":
        budget = total_power / n_subbands
        amp = np.full((n_subbands, n_feeds), math.sqrt(budget / n_feeds))
        return cls(amp, budget)

    @classmethod
    def random(cls, rng: np.random.Generator, n_subbands: int, n_feeds: int,
               total_power: float) -> "PowerAlloc":
        budget = total_power / n_subbands
        raw = rng.uniform(0.0, 1.0, size=(n_subbands, n_feeds))
        amp = np.stack([project_power(row, budget) for row in raw])
        return cls(amp, budget)


@dataclass
class BeamformingState:
    weights: HoloWeights
    powers: PowerAlloc


@dataclass
class BeamformerContext:
    """Everything the objective needs that does not change during a solve."""

    plan: ch.SubbandPlan
    consts: ch.RadioConstants
    interference: ch.InterferenceModel
    gains: np.ndarray           # (L, U) channel amplitudes
    bases: np.ndarray           # (L, U, K, N) hologram bases
    propagation: np.ndarray     # (U, N, K) guided-wave factors
    coupling_colsum: np.ndarray  # (U, N) 1^T Xi_u
    efficiency: float
    log_coeff: np.ndarray       # (L, U), negative
    pending_bits: np.ndarray    # (L,)
    total_power: float
    weighting: str = "as-printed"

    @property
    def n_users(self) -> int:
        return self.gains.shape[0]

    @property
    def n_subbands(self) -> int:
        return self.gains.shape[1]

    @property
    def n_feeds(self) -> int:
        return self.propagation.shape[2]

    @property
    def active(self) -> np.ndarray:
        return self.pending_bits > 0

    def user_weights(self) -> np.ndarray:
        """Per-user rate weights; users with no pending data drop out."""
        w = np.zeros(self.n_users)
        act = self.active
        if self.weighting == "as-printed":
            w[act] = 1.0 / self.pending_bits[act]
        elif self.weighting == "inverted":
            w[act] = self.pending_bits[act]
        else:
            raise ConfigError(f"unknown weighting mode {self.weighting!r}")
        return w

    def initial_state(self) -> BeamformingState:
        return BeamformingState(
            HoloWeights.uniform(self.n_users, self.n_subbands, self.n_feeds),
            PowerAlloc.uniform(self.n_subbands, self.n_feeds, self.total_power))


def build_context(plan: ch.SubbandPlan, geometry: RhsGeometry,
                  coupling: CouplingModel, link: ch.LinkGeometry,
                  consts: ch.RadioConstants, interference: ch.InterferenceModel,
                  absorption, pending_bits, total_power: float,
                  weighting: str = "as-printed") -> BeamformerContext:
    """Precompute channel scalars, bases and coupling sums for one scene."""
    wavelengths = plan.wavelengths()
    angles = ch.all_departure_angles(link)
    gains = ch.channel_matrix(link, plan, absorption)
    n_users = link.n_users
    bases = np.stack([all_interference_bases(geometry, angles, lam)
                      for lam in wavelengths], axis=1)
    prop = np.stack([feed_propagation(geometry, lam) for lam in wavelengths])
    colsum = coupling.coupling.sum(axis=1)
    noise = plan.subband_hz * consts.noise_density
    gain_prod = consts.tx_gain * consts.rx_gain
    log_coeff = np.zeros((n_users, plan.n_subbands))
    for u in range(plan.n_subbands):
        denom = gain_prod * ch.ibi_power(interference, u) + noise
        log_coeff[:, u] = 1.5 / math.log(5.0 * consts.ber_target) * gain_prod / denom
    pending = np.broadcast_to(np.asarray(pending_bits, dtype=float), (n_users,)).copy()
    return BeamformerContext(
        plan=plan, consts=consts, interference=interference, gains=gains,
        bases=bases, propagation=prop, coupling_colsum=colsum,
        efficiency=geometry.params.efficiency, log_coeff=log_coeff,
        pending_bits=pending, total_power=total_power, weighting=weighting)


def _subband_terms(state: BeamformingState, ctx: BeamformerContext, u: int):
    """Shared per-subband quantities for objective and gradients."""
    a_u = state.weights.values[:, u, :]                      # (L, K)
    pattern = np.einsum("lk,lkn->n", a_u, ctx.bases[:, u])   # (N,)
    fed = ctx.propagation[u] @ state.powers.amplitudes[u]    # (N,)
    root_eff = math.sqrt(ctx.efficiency)
    excitation = root_eff * ctx.coupling_colsum[u] * fed     # (N,) complex
    composite = excitation @ pattern                         # scalar
    signals = ctx.gains[:, u] * composite                    # (L,)
    log_args = 1.0 - ctx.log_coeff[:, u] * np.abs(signals) ** 2
    return pattern, excitation, composite, signals, log_args


def signal_scalars(state: BeamformingState, ctx: BeamformerContext) -> np.ndarray:
    """(L, U) composite received amplitudes (channel x beam x power)."""
    out = np.zeros((ctx.n_users, ctx.n_subbands), dtype=complex)
    for u in range(ctx.n_subbands):
        out[:, u] = _subband_terms(state, ctx, u)[3]
    return out


def objective(state: BeamformingState, ctx: BeamformerContext) -> float:
    """Pending-data-weighted sum rate (bit/s per bit for the printed mode)."""
    w = ctx.user_weights()
    total = 0.0
    with np.errstate(invalid="ignore"):
        for u in range(ctx.n_subbands):
            log_args = _subband_terms(state, ctx, u)[4]
            total += float(w @ np.log2(log_args))
    return ctx.plan.subband_hz * total


def grad_power(state: BeamformingState, ctx: BeamformerContext, u: int) -> np.ndarray:
    """Wirtinger gradient of the objective in the feed amplitudes (K,).

    Callers stepping a real amplitude vector should use 2 Re(grad).
    """
    pattern, excitation, _, signals, log_args = _subband_terms(state, ctx, u)
    w = ctx.user_weights()
    weighted = w * ctx.log_coeff[:, u] * np.conj(ctx.gains[:, u]) * signals / log_args
    beam_colsum = (math.sqrt(ctx.efficiency) * (ctx.coupling_colsum[u] * pattern)
                   @ ctx.propagation[u])                     # (K,) = transpose(M~) 1
    return -(ctx.plan.subband_hz / LN2) * weighted.sum() * np.conj(beam_colsum)


def grad_weights(state: BeamformingState, ctx: BeamformerContext, u: int) -> np.ndarray:
    """Gradient of the objective in the (L, K) pattern weights of subband u."""
    _, excitation, _, signals, log_args = _subband_terms(state, ctx, u)
    w = ctx.user_weights()
    weighted = (w * ctx.log_coeff[:, u] * np.conj(signals) * ctx.gains[:, u]
                / log_args).sum()
    inner = np.einsum("lkn,n->lk", ctx.bases[:, u], excitation)
    return -(2.0 * ctx.plan.subband_hz / LN2) * np.real(weighted * inner)


def grad_weight(state: BeamformingState, ctx: BeamformerContext,
                l: int, u: int, k: int) -> float:
    return float(grad_weights(state, ctx, u)[l, k])


def user_rates(state: BeamformingState, ctx: BeamformerContext) -> np.ndarray:
    """(L,) downlink rates composed through the channel-module operations."""
    signals = signal_scalars(state, ctx)
    rates = np.zeros(ctx.n_users)
    for l in range(ctx.n_users):
        ks = [ch.spectral_efficiency(
                ch.sinr(signals[l, u], ctx.interference, ctx.consts,
                        ctx.plan.subband_hz, u),
                ctx.consts.ber_target)
              for u in range(ctx.n_subbands)]
        rates[l] = ch.user_rate(ks, ctx.plan.subband_hz)
    return rates


@dataclass
class PgResult:
    state: BeamformingState
    trace: list
    iterations: int
    converged: bool

    @property
    def objective(self) -> float:
        return self.trace[-1]


def pg_solve(ctx: BeamformerContext, init: BeamformingState | None = None,
             step_power: float = 0.05, step_weights: float = 0.05,
             tol: float = 1e-4, max_iter: int = 200) -> PgResult:
    """Simultaneous projected gradient ascent on powers and weights.

    Both gradients are evaluated on the same iterate before either update;
    each update is projected back onto its constraint set and the stop rule
    is a relative objective change below ``tol``.
    """
    if init is None:
        init = ctx.initial_state()
    amps = init.powers.amplitudes.copy()
    weights = init.weights.values.copy()
    budget = init.powers.subband_budget
    state = BeamformingState(HoloWeights(weights.copy()), PowerAlloc(amps.copy(), budget))
    trace = [objective(state, ctx)]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        grad_p = np.zeros_like(amps)
        grad_a = np.zeros_like(weights)
        for u in range(ctx.n_subbands):
            grad_p[u] = 2.0 * np.real(grad_power(state, ctx, u))
            grad_a[:, u, :] = grad_weights(state, ctx, u)
        for u in range(ctx.n_subbands):
            amps[u] = project_power(amps[u] + step_power * grad_p[u], budget)
            flat = (weights[:, u, :] + step_weights * grad_a[:, u, :]).ravel()
            weights[:, u, :] = project_simplex(flat).reshape(ctx.n_users, ctx.n_feeds)
        state = BeamformingState(HoloWeights(weights.copy()), PowerAlloc(amps.copy(), budget))
        value = objective(state, ctx)
        if not math.isfinite(value):
            err = NumericalError(f"objective became non-finite at iteration {iterations}")
            err.last_state = BeamformingState(HoloWeights(weights.copy()),
                                              PowerAlloc(amps.copy(), budget))
            err.trace = trace
            raise err
        previous = trace[-1]
        trace.append(value)
        if abs(value - previous) <= tol * max(abs(previous), 1e-12):
            converged = True
            break
    return PgResult(state=state, trace=trace, iterations=iterations, converged=converged)


def baselines(ctx: BeamformerContext, rng: np.random.Generator | None = None) -> dict:
    """Unoptimized reference states: uniform everything, and seeded random."""
    out = {"equal": ctx.initial_state()}
    if rng is None:
        rng = np.random.default_rng(0)
    out["random"] = BeamformingState(
        HoloWeights.random(rng, ctx.n_users, ctx.n_subbands, ctx.n_feeds),
        PowerAlloc.random(rng, ctx.n_subbands, ctx.n_feeds, ctx.total_power))
    return out
