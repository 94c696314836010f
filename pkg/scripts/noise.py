"""
I.i.d. Pauli noise channels, per-trial random streams and decoder priors.
"""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from pauli import PauliVector

logger = logging.getLogger(__name__)

ZERO_PROB_FLOOR = 1e-12
DEPOLARIZING_BIAS = (1 / 3, 1 / 3, 1 / 3)
XZZX_BIAS = (1 / 6, 1 / 6, 2 / 3)

# sampled interval index -> symbol code (X, Y, Z, I)
_INTERVAL_SYMBOL = np.array([1, 2, 3, 0], dtype=np.int64)


@dataclass(frozen=True)
class NoiseModel:
    """Single-qubit Pauli channel: P(W) = p_total * bias[W] for W in X, Y, Z."""
    p_total: float
    bias: Tuple[float, float, float] = DEPOLARIZING_BIAS

    def __post_init__(self):
        if not 0.0 <= self.p_total < 1.0:
            raise ValueError(f"p_total must lie in [0, 1), got {self.p_total}")
        bias = tuple(float(b) for b in self.bias)
        if len(bias) != 3 or min(bias) < 0:
            raise ValueError(f"bias must be three nonnegative weights, got {self.bias}")
        if abs(sum(bias) - 1.0) > 1e-9:
            raise ValueError(f"bias must sum to 1, got {sum(bias)}")
        object.__setattr__(self, "bias", bias)

    @classmethod
    def depolarizing(cls, p: float) -> "NoiseModel":
        return cls(p, DEPOLARIZING_BIAS)

    @classmethod
    def biased(cls, p: float, eta_z: float = XZZX_BIAS[2]) -> "NoiseModel":
        """Z-biased channel; X and Y share the remaining weight equally."""
        if not 0.0 <= eta_z <= 1.0:
            raise ValueError(f"eta_z must lie in [0, 1], got {eta_z}")
        rest = (1.0 - eta_z) / 2
        return cls(p, (rest, rest, eta_z))

    @classmethod
    def per_pauli(cls, p_w: float) -> "NoiseModel":
        """Depolarizing channel with probability p_w for each of X, Y, Z."""
        return cls.depolarizing(3 * p_w)

    @property
    def probabilities(self) -> np.ndarray:
        """(p_X, p_Y, p_Z)."""
        return self.p_total * np.asarray(self.bias)

    def __str__(self) -> str:
        eta = ",".join(f"{b:.4g}" for b in self.bias)
        return f"p={self.p_total:g} eta=({eta})"


@dataclass(frozen=True)
class RngStream:
    """Counter-based stream: (master_seed, stream_index) fixes every draw."""
    master_seed: int
    stream_index: int

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence([int(self.master_seed) & (2 ** 64 - 1), int(self.stream_index)])
        return np.random.Generator(np.random.Philox(seq))


def sample_error(model: NoiseModel, n: int, rng: RngStream) -> PauliVector:
    """Draw an n-qubit error with each position independent."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    u = rng.generator().random(n)
    edges = np.cumsum(model.probabilities)
    return PauliVector.from_symbols(_INTERVAL_SYMBOL[np.searchsorted(edges, u, side="right")])


def priors_from_channel(model: NoiseModel) -> np.ndarray:
    """LLR triple ln((1 - p_W) / p_W); zero components are floored first."""
    if model.p_total >= 1.0:
        raise ValueError(f"p_total must be below 1, got {model.p_total}")
    p = np.maximum(model.probabilities, ZERO_PROB_FLOOR)
    return np.log((1.0 - p) / p)


def prior_matrix(model: NoiseModel, n: int) -> np.ndarray:
    """N x 3 array with the channel's triple on every qubit."""
    return np.tile(priors_from_channel(model), (n, 1))


def empirical_frequencies(errors: Sequence[PauliVector]) -> np.ndarray:
    """Observed (X, Y, Z) frequencies over a batch of errors."""
    counts = np.zeros(4, dtype=np.int64)
    total = 0
    for e in errors:
        counts += np.bincount(e.symbols.astype(np.int64), minlength=4)
        total += len(e)
    if total == 0:
        return np.zeros(3)
    return counts[1:] / total
