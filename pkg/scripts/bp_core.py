"""
LLR belief propagation over GF(4) on the Tanner graph of a stabilizer code.

Messages are scalars on Tanner edges; posteriors are (Q_X, Q_Y, Q_Z) triples
per qubit. Edge arrays follow the row-major order of TannerGraph. One
iteration is a horizontal (check) update, a posterior update and a vertical
(variable) update, followed by a hard decision and a syndrome test.

The posterior update is pluggable (PosteriorRule) so that every decoder
variant shares the same scheduling, clamping and convergence logic.
"""
import logging
import weakref
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Union

import numpy as np
import scipy.sparse as sp

from codes import CodeSpec
from decoder_config import CLAMP, ConfigError, DecoderConfig
from pauli import PauliError, PauliSymbol, PauliVector, syndrome_of

logger = logging.getLogger(__name__)

EPS_TANH = 1e-12

# row h: which of X, Y, Z anticommute with h
ANTICOMMUTE = np.array([[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]], dtype=np.float64)
# column pair anticommuting with h, indexed by h - 1
ANTI_PAIRS = np.array([[1, 2], [0, 2], [0, 1]], dtype=np.int64)


def lambda_edges(triples: np.ndarray, symbols: np.ndarray, clamp: float = CLAMP) -> np.ndarray:
    """lambda_h(t) for rows of an E x 3 array, h given per row.

    ln(1 + e^-t_h) - ln(e^-t_a + e^-t_b) with a, b the components
    anticommuting with h.
    """
    triples = np.asarray(triples, dtype=np.float64)
    rows = np.arange(len(triples))
    h = np.asarray(symbols, dtype=np.int64) - 1
    others = ANTI_PAIRS[h]
    t_h = triples[rows, h]
    t_a = triples[rows, others[:, 0]]
    t_b = triples[rows, others[:, 1]]
    return np.clip(np.logaddexp(0.0, -t_h) - np.logaddexp(-t_a, -t_b), -clamp, clamp)


def lambda_fn(h: Union[str, int, PauliSymbol], t, clamp: float = CLAMP) -> float:
    """Log-odds that the error commutes with h, from an LLR triple."""
    symbol = PauliSymbol.parse(h)
    if symbol == PauliSymbol.I:
        raise PauliError("lambda is undefined for the identity")
    return float(lambda_edges(np.asarray(t, dtype=np.float64).reshape(1, 3), [int(symbol)], clamp)[0])


def hard_decision(Q: np.ndarray) -> PauliVector:
    """I where every component is positive, else the smallest (X < Y < Z on ties)."""
    Q = np.asarray(Q, dtype=np.float64)
    return PauliVector.from_symbols(np.where(np.all(Q > 0, axis=1), 0, np.argmin(Q, axis=1) + 1))


def _leave_one_out(values: np.ndarray) -> np.ndarray:
    """Row-wise product of all other entries, without division."""
    ones = np.ones((values.shape[0], 1))
    prefix = np.cumprod(np.hstack([ones, values[:, :-1]]), axis=1)
    suffix = np.cumprod(np.hstack([ones, values[:, :0:-1]]), axis=1)[:, ::-1]
    return prefix * suffix


@dataclass
class MessageState:
    """Mutable decoder state of one run."""
    v2c: np.ndarray
    c2v: np.ndarray
    posterior: np.ndarray
    prior_t: np.ndarray
    mom_g: np.ndarray
    ada_G: np.ndarray
    iteration: int = 0


@dataclass
class IterationRecord:
    iteration: int
    estimate: PauliVector
    posterior: np.ndarray
    check_sums: np.ndarray
    prior: np.ndarray
    v2c: Optional[np.ndarray] = None
    c2v: Optional[np.ndarray] = None


@dataclass
class DecodeOutcome:
    """Result of one decode; a failure is a value, not an exception."""
    converged: bool
    estimate: PauliVector
    iterations: int
    total_iterations: int = 0
    posterior: Optional[np.ndarray] = None
    trace: Optional[List[IterationRecord]] = None
    alpha_star: Optional[float] = None
    # prior resets made by an oscillation breaker
    ots_firings: int = 0

    def __post_init__(self):
        if not self.total_iterations:
            self.total_iterations = self.iterations


class PosteriorRule:
    """Plain update Q = Pi + S.

    ``update`` receives the qubit indices being refreshed, the current prior
    base, their check sums S and the iteration number, and returns new
    posterior rows. It may keep extra state in the MessageState.
    """
    name = "plain"

    def update(self, state: MessageState, idx: np.ndarray, base: np.ndarray,
               sums: np.ndarray, t: int) -> np.ndarray:
        return base[idx] + sums


# perturb(state, base, t) -> replacement base or None
Perturbation = Callable[[MessageState, np.ndarray, int], Optional[np.ndarray]]


class _Layer(NamedTuple):
    qubits: np.ndarray
    edges: np.ndarray
    checks: np.ndarray
    incidence: sp.csr_matrix


class BPDecoder:
    """Precomputed edge tables for one code; ``run`` does the decoding."""

    def __init__(self, code: CodeSpec):
        self.code = code
        tanner = code.tanner
        self.n_qubits = code.n_qubits
        self.n_checks = code.n_checks
        self.n_edges = tanner.n_edges
        self.edge_check = tanner.edge_check
        self.edge_qubit = tanner.edge_qubit
        self.edge_symbol = tanner.edge_symbol
        self.qubit_edges = tanner.qubit_edges
        self.check_edges = tanner.check_edges
        self.anti = ANTICOMMUTE[self.edge_symbol]

        degree = max((len(e) for e in self.check_edges), default=0)
        # padded with the dummy edge index E, whose tanh is 1
        self._slots = np.full((self.n_checks, max(degree, 1)), self.n_edges, dtype=np.int64)
        self._edge_slot = np.zeros(self.n_edges, dtype=np.int64)
        for i, edges in enumerate(self.check_edges):
            self._slots[i, :len(edges)] = edges
            self._edge_slot[edges] = np.arange(len(edges))

        self._incidence = sp.csr_matrix(
            (np.ones(self.n_edges), (self.edge_qubit, np.arange(self.n_edges))),
            shape=(self.n_qubits, self.n_edges))
        self._all_qubits = np.arange(self.n_qubits)
        self._all_edges = np.arange(self.n_edges)
        self._all_checks = np.arange(self.n_checks)
        self._layers = self._serial_layers()

    def _serial_layers(self) -> List[_Layer]:
        """Group qubits so that ascending-order serial updates can run in batches.

        A qubit lands one layer after the latest earlier qubit it shares a
        check with, so batching reproduces the one-qubit-at-a-time sweep.
        """
        layer_of = np.zeros(self.n_qubits, dtype=np.int64)
        latest = np.full(self.n_checks, -1, dtype=np.int64)
        for j in range(self.n_qubits):
            checks = self.edge_check[self.qubit_edges[j]]
            layer_of[j] = latest[checks].max() + 1 if len(checks) else 0
            latest[checks] = layer_of[j]
        layers = []
        for level in range(int(layer_of.max()) + 1 if self.n_qubits else 0):
            qubits = np.flatnonzero(layer_of == level)
            edges = np.concatenate([self.qubit_edges[j] for j in qubits]).astype(np.int64)
            layers.append(_Layer(qubits, edges, np.unique(self.edge_check[edges]), self._incidence[qubits]))
        return layers

    def initial_state(self, priors: np.ndarray, clamp: float = CLAMP) -> MessageState:
        """Messages at t = 0: v2c = lambda(Pi), c2v = 0, Q = Pi."""
        return MessageState(
            v2c=lambda_edges(priors[self.edge_qubit], self.edge_symbol, clamp),
            c2v=np.zeros(self.n_edges),
            posterior=priors.copy(),
            prior_t=priors.copy(),
            mom_g=np.zeros_like(priors),
            ada_G=np.zeros_like(priors),
        )

    def check_values(self, v2c: np.ndarray, signs: np.ndarray, clamp: float,
                     edges: np.ndarray, checks: np.ndarray) -> np.ndarray:
        """Check-to-variable messages for ``edges``, whose checks are the sorted ``checks``."""
        t_ext = np.append(np.tanh(np.clip(v2c, -clamp, clamp) / 2), 1.0)
        loo = np.clip(_leave_one_out(t_ext[self._slots[checks]]), -(1 - EPS_TANH), 1 - EPS_TANH)
        owners = self.edge_check[edges]
        rows = np.searchsorted(checks, owners)
        values = signs[owners] * 2 * np.arctanh(loo[rows, self._edge_slot[edges]])
        return np.clip(values, -clamp, clamp)

    def edge_products(self, values: np.ndarray):
        """Per-check product of edge ``values`` and, per edge, the product of the others."""
        rows = np.append(values, 1.0)[self._slots]
        return rows.prod(axis=1), _leave_one_out(rows)[self.edge_check, self._edge_slot]

    def check_sums(self, c2v: np.ndarray) -> np.ndarray:
        """S_W per qubit: sum of incoming messages from checks anticommuting with W."""
        return np.asarray(self._incidence @ (self.anti * c2v[:, None]))

    def variable_messages(self, posterior: np.ndarray, c2v: np.ndarray, clamp: float,
                          edges: Optional[np.ndarray] = None) -> np.ndarray:
        """Extrinsic v2c: lambda applied to Q with the edge's own check message removed."""
        e = self._all_edges if edges is None else edges
        extrinsic = posterior[self.edge_qubit[e]] - self.anti[e] * c2v[e, None]
        return lambda_edges(extrinsic, self.edge_symbol[e], clamp)

    # single-edge forms of the three updates

    def check_update(self, state: MessageState, check: int, qubit: int, s: int,
                     clamp: float = CLAMP) -> float:
        e = self.code.tanner.edge_id(check, qubit)
        others = self.check_edges[check][self.check_edges[check] != e]
        prod = np.prod(np.tanh(np.clip(state.v2c[others], -clamp, clamp) / 2))
        prod = np.clip(prod, -(1 - EPS_TANH), 1 - EPS_TANH)
        return float((-1) ** (int(s) % 2) * 2 * np.arctanh(prod))

    def variable_update(self, state: MessageState, qubit: int, check: int, priors,
                        clamp: float = CLAMP) -> float:
        priors = self.prior_array(priors)
        e = self.code.tanner.edge_id(check, qubit)
        edges = self.qubit_edges[qubit]
        others = edges[edges != e]
        triple = priors[qubit] + (self.anti[others] * state.c2v[others, None]).sum(axis=0)
        return lambda_fn(int(self.edge_symbol[e]), triple, clamp)

    def posterior_update(self, state: MessageState, qubit: int, priors) -> np.ndarray:
        priors = self.prior_array(priors)
        edges = self.qubit_edges[qubit]
        return priors[qubit] + (self.anti[edges] * state.c2v[edges, None]).sum(axis=0)

    def prior_array(self, priors) -> np.ndarray:
        """Broadcast a triple or an N x 3 array to a fresh N x 3 float array."""
        priors = np.asarray(priors, dtype=np.float64)
        if priors.shape not in ((3,), (self.n_qubits, 3)):
            raise ValueError(f"priors must be a triple or N x 3, got shape {priors.shape}")
        return np.array(np.broadcast_to(priors, (self.n_qubits, 3)))

    def run(self, syndrome, priors, config: DecoderConfig, rule: Optional[PosteriorRule] = None,
            perturb: Optional[Perturbation] = None) -> DecodeOutcome:
        """Iterate until the hard decision reproduces ``syndrome`` or iter_max is hit.

        With ``config.early_stop`` off the loop always runs iter_max
        iterations and the outcome describes the last one.
        """
        rule = rule or PosteriorRule()
        clamp = config.clamp
        s = np.asarray(syndrome, dtype=np.int64).ravel() % 2
        if len(s) != self.n_checks:
            raise ValueError(f"Syndrome length {len(s)} does not match M={self.n_checks}")
        signs = 1.0 - 2.0 * s
        base = np.clip(self.prior_array(priors), -clamp, clamp)
        state = self.initial_state(base, clamp)
        trace: Optional[List[IterationRecord]] = [] if config.record_trace else None

        converged = False
        estimate = PauliVector.identity(self.n_qubits)
        first_hit = None
        for t in range(1, config.iter_max + 1):
            state.iteration = t
            if config.schedule == "serial":
                for layer in self._layers:
                    state.c2v[layer.edges] = self.check_values(state.v2c, signs, clamp, layer.edges, layer.checks)
                    sums = np.asarray(layer.incidence @ (self.anti * state.c2v[:, None]))
                    state.posterior[layer.qubits] = np.clip(
                        rule.update(state, layer.qubits, base, sums, t), -clamp, clamp)
                    state.v2c[layer.edges] = self.variable_messages(state.posterior, state.c2v, clamp, layer.edges)
                sums = self.check_sums(state.c2v) if trace is not None else None
            else:
                state.c2v = self.check_values(state.v2c, signs, clamp, self._all_edges, self._all_checks)
                sums = self.check_sums(state.c2v)
                state.posterior = np.clip(rule.update(state, self._all_qubits, base, sums, t), -clamp, clamp)
                state.v2c = self.variable_messages(state.posterior, state.c2v, clamp)

            estimate = hard_decision(state.posterior)
            converged = bool(np.array_equal(syndrome_of(self.code, estimate), s))
            if trace is not None:
                trace.append(IterationRecord(
                    iteration=t,
                    estimate=estimate,
                    posterior=state.posterior.copy(),
                    check_sums=sums.copy(),
                    prior=base.copy(),
                    v2c=state.v2c.copy() if config.record_messages else None,
                    c2v=state.c2v.copy() if config.record_messages else None,
                ))
            if converged and first_hit is None:
                first_hit = t
            if converged and config.early_stop:
                break
            if not converged and perturb is not None:
                replacement = perturb(state, base, t)
                if replacement is not None:
                    base = np.clip(replacement, -clamp, clamp)

        iterations = state.iteration
        logger.debug("[BP] %s on %s: converged=%s after %d iterations (first hit %s)",
                     rule.name, self.code.name, converged, iterations, first_hit)
        return DecodeOutcome(converged, estimate, iterations, posterior=state.posterior, trace=trace)


_DECODERS: "weakref.WeakKeyDictionary[CodeSpec, BPDecoder]" = weakref.WeakKeyDictionary()


def decoder_for(code: CodeSpec) -> BPDecoder:
    """Cached BPDecoder for ``code``."""
    decoder = _DECODERS.get(code)
    if decoder is None:
        decoder = BPDecoder(code)
        _DECODERS[code] = decoder
    return decoder


def decode(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> DecodeOutcome:
    """Plain LLR-BP over GF(4), parallel or serial schedule."""
    if config.variant != "plain":
        raise ConfigError(f"bp_core.decode runs plain BP only, got {config.variant!r}; use bp_variants.decode")
    return decoder_for(code).run(syndrome, priors, config)
