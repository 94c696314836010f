"""
Monte Carlo evaluation: sample an error, decode its syndrome, classify the
residual, and aggregate logical error rates over many seeded trials.

Trial k of a batch always draws from RngStream(master_seed, k), so results
do not depend on how trials are spread over worker processes.
"""
import logging
import math
import time
from dataclasses import dataclass
from enum import Enum
from multiprocessing import get_context
from typing import Dict, List, Optional, Sequence, Tuple

import tqdm
from scipy.stats import binomtest

import bp_variants
from bp_core import DecodeOutcome
from codes import CodeSpec
from decoder_config import DecoderConfig
from noise import DEPOLARIZING_BIAS, NoiseModel, RngStream, priors_from_channel, sample_error
from pauli import PauliVector, Residual, classify_residual, mul, syndrome_of

logger = logging.getLogger(__name__)

ROW_COLUMNS = (
    "code", "name", "L", "N", "K", "decoder", "schedule", "alpha", "gamma", "T", "C", "iter_max",
    "p", "eta_x", "eta_y", "eta_z", "trials", "successes", "undetected", "unconverged",
    "ler", "ler_ci_low", "ler_ci_high", "mean_iters_all", "mean_iters_conv", "mean_ms", "seed",
)
CONFIDENCE = 0.95
POOL_CHUNKSIZE = 64


class DecoderConsistencyError(Exception):
    """A decoder reported convergence but its estimate misses the syndrome."""
    pass


class TrialClass(str, Enum):
    SUCCESS = "success"
    UNDETECTED_LOGICAL = "undetected_logical"
    NOT_CONVERGED = "not_converged"


@dataclass
class TrialOutcome:
    classification: TrialClass
    iterations: int
    wall_time: float


def classify_outcome(code: CodeSpec, error: PauliVector, outcome: DecodeOutcome) -> TrialClass:
    """Success iff the decoder converged onto the error's stabilizer coset."""
    if not outcome.converged:
        return TrialClass.NOT_CONVERGED
    residual = classify_residual(code, mul(outcome.estimate, error))
    if residual == Residual.DETECTED:
        raise DecoderConsistencyError(
            f"decoder reported convergence on {code.name} but the residual {outcome.estimate * error} "
            "has a nonzero syndrome")
    if residual == Residual.LOGICAL:
        return TrialClass.UNDETECTED_LOGICAL
    return TrialClass.SUCCESS


def run_trial(code: CodeSpec, model: NoiseModel, config: DecoderConfig, stream: RngStream) -> TrialOutcome:
    """One sample-decode-classify round."""
    error = sample_error(model, code.n_qubits, stream)
    syndrome = syndrome_of(code, error)
    start = time.perf_counter()
    outcome = bp_variants.decode(code, syndrome, priors_from_channel(model), config)
    elapsed = time.perf_counter() - start
    return TrialOutcome(classify_outcome(code, error, outcome), outcome.total_iterations, elapsed)


@dataclass
class RunStats:
    """Aggregated counters of one (code, noise, decoder) batch."""
    code: CodeSpec
    model: NoiseModel
    config: DecoderConfig
    master_seed: int
    trials: int = 0
    successes: int = 0
    undetected: int = 0
    unconverged: int = 0
    iterations_sum: int = 0
    iterations_converged_sum: int = 0
    wall_time_sum: float = 0.0

    def add(self, outcome: TrialOutcome) -> None:
        self.trials += 1
        self.iterations_sum += outcome.iterations
        self.wall_time_sum += outcome.wall_time
        if outcome.classification == TrialClass.NOT_CONVERGED:
            self.unconverged += 1
            return
        self.iterations_converged_sum += outcome.iterations
        if outcome.classification == TrialClass.SUCCESS:
            self.successes += 1
        else:
            self.undetected += 1

    @property
    def failures(self) -> int:
        return self.undetected + self.unconverged

    @property
    def ler(self) -> float:
        """Undetected logical errors and non-convergences per trial."""
        return self.failures / self.trials if self.trials else 0.0

    @property
    def ler_interval(self) -> Tuple[float, float]:
        """Wilson score interval."""
        if not self.trials:
            return 0.0, 1.0
        ci = binomtest(self.failures, self.trials).proportion_ci(confidence_level=CONFIDENCE, method="wilson")
        return float(ci.low), float(ci.high)

    @property
    def mean_iterations(self) -> float:
        return self.iterations_sum / self.trials if self.trials else 0.0

    @property
    def mean_iterations_converged(self) -> float:
        converged = self.successes + self.undetected
        return self.iterations_converged_sum / converged if converged else 0.0

    @property
    def mean_wall_time(self) -> float:
        return self.wall_time_sum / self.trials if self.trials else 0.0

    def to_row(self, timing: bool = True) -> Dict[str, object]:
        """Row in ROW_COLUMNS order; ``timing=False`` blanks mean_ms."""
        low, high = self.ler_interval
        row: Dict[str, object] = {
            "code": self.code.family,
            "name": self.code.name,
            "L": "" if self.code.lattice_size is None else self.code.lattice_size,
            "N": self.code.n_qubits,
            "K": self.code.n_logical,
        }
        row.update(self.config.as_row())
        eta_x, eta_y, eta_z = self.model.bias
        row.update({
            "p": self.model.p_total,
            "eta_x": eta_x,
            "eta_y": eta_y,
            "eta_z": eta_z,
            "trials": self.trials,
            "successes": self.successes,
            "undetected": self.undetected,
            "unconverged": self.unconverged,
            "ler": self.ler,
            "ler_ci_low": low,
            "ler_ci_high": high,
            "mean_iters_all": self.mean_iterations,
            "mean_iters_conv": self.mean_iterations_converged,
            "mean_ms": 1000 * self.mean_wall_time if timing else "",
            "seed": self.master_seed,
        })
        return {column: row[column] for column in ROW_COLUMNS}

    def __str__(self) -> str:
        low, high = self.ler_interval
        return (f"{self.code.name} {self.config} {self.model}: LER={self.ler:.4g} "
                f"[{low:.3g}, {high:.3g}] over {self.trials} trials, "
                f"mean iterations {self.mean_iterations:.2f}")


# Set per worker process by the pool initializer
_worker_shared_data = None


def _init_worker(code: CodeSpec, model: NoiseModel, config: DecoderConfig, master_seed: int) -> None:
    global _worker_shared_data
    _worker_shared_data = {
        "code": code,
        "model": model,
        "config": config,
        "master_seed": master_seed,
    }


def _trial_worker(index: int) -> TrialOutcome:
    d = _worker_shared_data
    return run_trial(d["code"], d["model"], d["config"], RngStream(d["master_seed"], index))


def run_batch(code: CodeSpec, model: NoiseModel, config: DecoderConfig, n_trials: int,
              master_seed: int, workers: int = 1, progress: bool = False) -> RunStats:
    """Run trials 0..n_trials-1 and aggregate them in trial order."""
    if n_trials < 1:
        raise ValueError(f"n_trials must be at least 1, got {n_trials}")
    stats = RunStats(code, model, config, master_seed)
    desc = f"{code.name} {config.variant} p={model.p_total:g}"
    logger.info("[SWEEP] %s: %d trials, %s, seed %d, %d worker(s)", code.name, n_trials, config, master_seed, workers)

    if workers <= 1:
        for k in tqdm.tqdm(range(n_trials), desc=desc, disable=not progress):
            stats.add(run_trial(code, model, config, RngStream(master_seed, k)))
    else:
        ctx = get_context("spawn")
        with ctx.Pool(processes=workers, initializer=_init_worker,
                      initargs=(code, model, config, master_seed)) as pool:
            for outcome in tqdm.tqdm(pool.imap(_trial_worker, range(n_trials), chunksize=POOL_CHUNKSIZE),
                                     total=n_trials, desc=desc, disable=not progress):
                stats.add(outcome)

    logger.info("[SWEEP] %s", stats)
    return stats


def sweep(codes: Sequence[CodeSpec], p_values: Sequence[float], configs: Sequence[DecoderConfig],
          n_trials: int, master_seed: int, workers: int = 1,
          bias: Tuple[float, float, float] = DEPOLARIZING_BIAS, progress: bool = False) -> List[RunStats]:
    """Every (code, decoder, p) combination in that order, all on the same seeds."""
    if not codes or not p_values or not configs:
        raise ValueError("sweep needs at least one code, one p and one decoder config")
    results = []
    for code in codes:
        for config in configs:
            for p in p_values:
                results.append(run_batch(code, NoiseModel(p, bias), config, n_trials, master_seed,
                                         workers, progress))
    return results


def compare_decoders(code: CodeSpec, model: NoiseModel, configs: Sequence[DecoderConfig], n_trials: int,
                     master_seed: int, workers: int = 1) -> List[RunStats]:
    """Paired comparison: every config decodes the same error samples."""
    return [run_batch(code, model, config, n_trials, master_seed, workers) for config in configs]


def _floored_log_ler(stats: RunStats) -> float:
    return math.log(max(stats.ler, 0.5 / stats.trials))


def estimate_crossing(rows_small: Sequence[RunStats], rows_large: Sequence[RunStats]) -> Optional[float]:
    """p at which the larger code's LER curve first crosses the smaller one's.

    The difference of log LERs is interpolated linearly between the two grid
    points bracketing its first sign change. Ties only count when they sit
    between points of opposite sign.
    """
    small = {s.model.p_total: s for s in rows_small}
    large = {s.model.p_total: s for s in rows_large}
    grid = sorted(set(small) & set(large))
    diffs = [_floored_log_ler(large[p]) - _floored_log_ler(small[p]) for p in grid]
    prev: Optional[int] = None
    for k, d in enumerate(diffs):
        if d == 0:
            continue
        if prev is not None and diffs[prev] * d < 0:
            if k - prev > 1:
                return grid[prev + 1]
            return grid[prev] + (grid[k] - grid[prev]) * diffs[prev] / (diffs[prev] - d)
        prev = k
    return None
