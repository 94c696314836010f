"""
Improved BP decoders built on the bp_core engine.

Each variant only changes how the posterior Q is formed from the check sums
S; scheduling, clamping and the convergence test are shared. The update
rules follow the usual optimizer shapes:

    momentum   g = gamma * g + (1 - gamma) * grad;  Q -= alpha * g
    adagrad    G += grad ** 2;  Q -= alpha * grad / (sqrt(G) + eps)
    ewainit    Pi_t = alpha * Pi_0 + (1 - alpha) * Q_prev;  Q = Pi_t + S
    mbp        Q = Pi + S / alpha

with grad = Q_prev - Pi_0 - S. BP-OTS periodically overwrites the prior of
the least reliable qubit; AMBP and AEWA sweep alpha from large to small.
"""
import logging
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from bp_core import (ANTI_PAIRS, DecodeOutcome, MessageState, PosteriorRule, decoder_for,
                     lambda_edges)
from codes import CodeSpec
from decoder_config import ConfigError, DecoderConfig

logger = logging.getLogger(__name__)


class TraceError(Exception):
    """Raised when a recorded trace is too short for the requested query."""
    pass


class MomentumRule(PosteriorRule):
    name = "momentum"

    def __init__(self, alpha: float, gamma: float = 0.0):
        self.alpha = alpha
        self.gamma = gamma

    def update(self, state: MessageState, idx: np.ndarray, base: np.ndarray,
               sums: np.ndarray, t: int) -> np.ndarray:
        previous = state.posterior[idx]
        grad = previous - base[idx] - sums
        velocity = self.gamma * state.mom_g[idx] + (1 - self.gamma) * grad
        state.mom_g[idx] = velocity
        return previous - self.alpha * velocity


class AdagradRule(PosteriorRule):
    """Accumulates squared gradients from the first iteration, steps from the second."""
    name = "adagrad"

    def __init__(self, alpha: float, epsilon: float):
        self.alpha = alpha
        self.epsilon = epsilon

    def update(self, state: MessageState, idx: np.ndarray, base: np.ndarray,
               sums: np.ndarray, t: int) -> np.ndarray:
        previous = state.posterior[idx]
        grad = previous - base[idx] - sums
        state.ada_G[idx] += grad ** 2
        if t == 1:
            return base[idx] + sums
        return previous - self.alpha * grad / (np.sqrt(state.ada_G[idx]) + self.epsilon)


class EwaInitRule(PosteriorRule):
    name = "ewainit"

    def __init__(self, alpha: float):
        self.alpha = alpha

    def update(self, state: MessageState, idx: np.ndarray, base: np.ndarray,
               sums: np.ndarray, t: int) -> np.ndarray:
        if t == 1:
            prior = base[idx]
        else:
            prior = self.alpha * base[idx] + (1 - self.alpha) * state.posterior[idx]
        state.prior_t[idx] = prior
        return prior + sums


class MbpRule(PosteriorRule):
    """Memory BP: check messages scaled by 1/alpha.

    Outgoing messages lambda(Q) - m_c->v are the engine's extrinsic
    messages, since lambda_h(Q - m * anti) = lambda_h(Q) - m.
    """
    name = "mbp"

    def __init__(self, alpha: float):
        self.alpha = alpha

    def update(self, state: MessageState, idx: np.ndarray, base: np.ndarray,
               sums: np.ndarray, t: int) -> np.ndarray:
        return base[idx] + sums / self.alpha


class TrappingSetBreaker:
    """Every T-th failed iteration, force the least reliable qubit onto its best guess.

    All priors are restored first; then the qubit whose smallest |Q_W| is
    minimal gets prior -C on its most likely component and +C on the rest.
    """

    def __init__(self, T: int, C: float, prior0: np.ndarray):
        if T < 1:
            raise ValueError(f"T must be at least 1, got {T}")
        self.T = T
        self.C = C
        self.prior0 = np.array(prior0, dtype=np.float64)
        self.firings = 0

    def __call__(self, state: MessageState, base: np.ndarray, t: int) -> Optional[np.ndarray]:
        if t % self.T:
            return None
        Q = state.posterior
        qubit = int(np.argmin(np.abs(Q).min(axis=1)))
        component = int(np.argmin(Q[qubit]))
        replacement = self.prior0.copy()
        replacement[qubit] = self.C
        replacement[qubit, component] = -self.C
        self.firings += 1
        logger.debug("[BP] OTS at t=%d: qubit %d forced to %s", t, qubit, "XYZ"[component])
        return replacement


def rule_for(config: DecoderConfig) -> PosteriorRule:
    """Posterior rule of a non-adaptive variant."""
    if config.variant in ("plain", "bp_ots"):
        return PosteriorRule()
    if config.variant == "momentum":
        return MomentumRule(config.alpha, config.gamma)
    if config.variant == "adagrad":
        return AdagradRule(config.alpha, config.epsilon)
    if config.variant in ("ewainit", "ewainit_ots"):
        return EwaInitRule(config.alpha)
    if config.variant == "mbp":
        return MbpRule(config.alpha)
    raise ConfigError(f"{config.variant} has no single posterior rule")


def _run(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> DecodeOutcome:
    decoder = decoder_for(code)
    if not config.uses_ots:
        return decoder.run(syndrome, priors, config, rule_for(config))
    prior0 = np.clip(decoder.prior_array(priors), -config.clamp, config.clamp)
    breaker = TrappingSetBreaker(config.ots_T, config.ots_C, prior0)
    outcome = decoder.run(syndrome, priors, config, rule_for(config), breaker)
    outcome.ots_firings = breaker.firings
    return outcome


def _require(config: DecoderConfig, *variants: str) -> None:
    if config.variant not in variants:
        raise ConfigError(f"expected variant {' or '.join(variants)}, got {config.variant!r}")


def decode(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> DecodeOutcome:
    """Run whichever decoder ``config.variant`` names."""
    if config.is_adaptive:
        return adaptive_decode(code, syndrome, priors, config)
    return _run(code, syndrome, priors, config)


def momentum_decode(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> DecodeOutcome:
    _require(config, "momentum")
    return _run(code, syndrome, priors, config)


def adagrad_decode(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> DecodeOutcome:
    _require(config, "adagrad")
    return _run(code, syndrome, priors, config)


def ewainit_decode(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> DecodeOutcome:
    _require(config, "ewainit")
    return _run(code, syndrome, priors, config)


def mbp_decode(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> DecodeOutcome:
    _require(config, "mbp")
    return _run(code, syndrome, priors, config)


def bp_ots_decode(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> DecodeOutcome:
    _require(config, "bp_ots")
    return _run(code, syndrome, priors, config)


def ewainit_ots_decode(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> DecodeOutcome:
    _require(config, "ewainit_ots")
    return _run(code, syndrome, priors, config)


def adaptive_decode(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> DecodeOutcome:
    """Try each alpha in list order and keep the first converging run.

    ``total_iterations`` sums every inner run; on failure the last inner
    outcome is returned with ``alpha_star`` unset.
    """
    if not config.is_adaptive:
        raise ConfigError(f"{config.variant} is not an adaptive variant")
    total = 0
    outcome = None
    for alpha in config.alpha_list:
        outcome = _run(code, syndrome, priors, config.inner(alpha))
        total += outcome.iterations
        if outcome.converged:
            outcome.alpha_star = alpha
            break
    outcome.total_iterations = total
    logger.debug("[BP] %s: alpha*=%s after %d total iterations", config.variant, outcome.alpha_star, total)
    return outcome


def ambp_decode(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> DecodeOutcome:
    _require(config, "ambp")
    return adaptive_decode(code, syndrome, priors, config)


def aewa_decode(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> DecodeOutcome:
    _require(config, "aewa")
    return adaptive_decode(code, syndrome, priors, config)


def _sums_sequence(trace: Sequence, t: int) -> list:
    if t < 1 or t > len(trace):
        raise TraceError(f"trace holds {len(trace)} iterations, asked for t={t}")
    return [getattr(r, "check_sums", r) for r in trace[:t]]


def ewainit_closed_form(trace: Sequence, prior0, alpha: float, t: int) -> np.ndarray:
    """Q(t) = Pi_0 + sum_k (1 - alpha)^k S(t - k), from recorded check sums.

    ``trace`` holds IterationRecords or the N x 3 sum arrays themselves.
    """
    sums = _sums_sequence(trace, t)
    result = np.array(prior0, dtype=np.float64) + np.zeros_like(sums[0])
    for k in range(t):
        result = result + (1 - alpha) ** k * sums[t - 1 - k]
    return result


def momentum_closed_form(trace: Sequence, prior0, alpha: float, t: int) -> np.ndarray:
    """Q(t) = Pi_0 + sum_k alpha (1 - alpha)^k S(t - k) for gamma = 0."""
    sums = _sums_sequence(trace, t)
    result = np.array(prior0, dtype=np.float64) + np.zeros_like(sums[0])
    for k in range(t):
        result = result + alpha * (1 - alpha) ** k * sums[t - 1 - k]
    return result


def _edge_terms(code: CodeSpec, syndrome, Q):
    decoder = decoder_for(code)
    Q = np.asarray(Q, dtype=np.float64)
    lam = lambda_edges(Q[decoder.edge_qubit], decoder.edge_symbol, clamp=np.inf)
    halves = np.tanh(lam / 2)
    signs = 1.0 - 2.0 * (np.asarray(syndrome, dtype=np.int64) % 2)
    products, others = decoder.edge_products(halves)
    return decoder, Q, halves, signs, products, others


def check_energies(code: CodeSpec, syndrome, Q) -> np.ndarray:
    """Per-check terms 2 atanh((-1)^s_i prod tanh(lambda/2))."""
    _, _, _, signs, products, _ = _edge_terms(code, syndrome, Q)
    return 2 * np.arctanh(signs * products)


def energy(code: CodeSpec, syndrome, Q) -> float:
    """Negative sum of check terms; smallest when every check is satisfied confidently."""
    return float(-check_energies(code, syndrome, Q).sum())


def energy_gradient(code: CodeSpec, syndrome, Q) -> np.ndarray:
    """Exact dJ/dQ, N x 3."""
    decoder, Q, halves, signs, products, others = _edge_terms(code, syndrome, Q)
    x = signs * products
    owner = decoder.edge_check
    dJ_dlam = -(2 / (1 - x[owner] ** 2)) * signs[owner] * others * 0.5 * (1 - halves ** 2)

    rows = np.arange(decoder.n_edges)
    h = decoder.edge_symbol - 1
    a, b = ANTI_PAIRS[h, 0], ANTI_PAIRS[h, 1]
    q = Q[decoder.edge_qubit]
    dlam_dQ = np.zeros((decoder.n_edges, 3))
    dlam_dQ[rows, h] = -expit(-q[rows, h])
    dlam_dQ[rows, a] = expit(q[rows, b] - q[rows, a])
    dlam_dQ[rows, b] = expit(q[rows, a] - q[rows, b])

    grad = np.zeros_like(Q)
    np.add.at(grad, decoder.edge_qubit, dJ_dlam[:, None] * dlam_dQ)
    return grad
