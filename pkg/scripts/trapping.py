"""
The (4,0) trapping set: four qubits on an 8-cycle of Z checks, where two
adjacent X errors leave plain BP oscillating. Instrumented decodes, period
detection and the decoder comparison table live here.
"""
import csv
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

import bp_variants
from bp_core import DecodeOutcome, IterationRecord
from bp_variants import TraceError
from codes import CodeSpec
from decoder_config import DecoderConfig
from noise import NoiseModel, priors_from_channel
from pauli import PauliSymbol, PauliVector, syndrome_of

logger = logging.getLogger(__name__)

TRAP_ITER_MAX = 50
TRAP_P = 0.01
TRAP_PERIOD_MAX = 4
DEFAULT_ERROR_QUBITS = (1, 2)
DEFAULT_T_VALUES = (3, 5, 9)
DEFAULT_ALPHA_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


def build_ts40() -> CodeSpec:
    """Check c_i acts with Z on qubits i and i+1 mod 4."""
    symbols = np.zeros((4, 4), dtype=np.int64)
    for i in range(4):
        symbols[i, i] = PauliSymbol.Z
        symbols[i, (i + 1) % 4] = PauliSymbol.Z
    return CodeSpec.from_symbols(symbols, name="ts40", family="ts40")


@dataclass
class TrapInstance:
    code: CodeSpec
    error: PauliVector
    syndrome: np.ndarray
    priors: np.ndarray


def ts40_instance(error_qubits: Sequence[int] = DEFAULT_ERROR_QUBITS, pauli: str = "X",
                  p: float = TRAP_P) -> TrapInstance:
    """Trapping-set decode problem; the default error gives syndrome 1010."""
    code = build_ts40()
    symbols = np.zeros(code.n_qubits, dtype=np.int64)
    for q in error_qubits:
        if not 0 <= q < code.n_qubits:
            raise ValueError(f"error qubit {q} outside 0..{code.n_qubits - 1}")
        symbols[q] = PauliSymbol.parse(pauli)
    error = PauliVector.from_symbols(symbols)
    return TrapInstance(code, error, syndrome_of(code, error), priors_from_channel(NoiseModel.depolarizing(p)))


@dataclass
class IterationTrace:
    """Per-iteration snapshots of one decode."""
    records: List[IterationRecord] = field(default_factory=list)
    converged: bool = False

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, t: int) -> IterationRecord:
        return self.records[t]

    @property
    def decisions(self) -> List[str]:
        return [str(r.estimate) for r in self.records]

    @property
    def posteriors(self) -> np.ndarray:
        """T x N x 3."""
        return np.array([r.posterior for r in self.records])


def trace_decode(code: CodeSpec, syndrome, priors, config: DecoderConfig) -> Tuple[DecodeOutcome, IterationTrace]:
    """Decode with every iteration recorded."""
    outcome = bp_variants.decode(code, syndrome, priors, replace(config, record_trace=True))
    return outcome, IterationTrace(list(outcome.trace or []), outcome.converged)


def detect_oscillation(trace: Union[IterationTrace, Sequence], period_max: int = TRAP_PERIOD_MAX) -> Optional[int]:
    """Smallest period of the hard decisions over the last half of the trace.

    Converged traces and constant tails have no period.
    """
    if isinstance(trace, IterationTrace):
        if trace.converged:
            return None
        decisions = trace.decisions
    else:
        decisions = [str(d) for d in trace]
    if len(decisions) < 2 * period_max:
        raise TraceError(f"need at least {2 * period_max} iterations to look for period {period_max}, "
                         f"got {len(decisions)}")
    tail = decisions[len(decisions) // 2:]
    if all(d == tail[0] for d in tail):
        return None
    for period in range(2, period_max + 1):
        if all(tail[k] == tail[k + period] for k in range(len(tail) - period)):
            return period
    return None


def tanner_girth(code: CodeSpec) -> Optional[int]:
    """Length of the shortest cycle in the Tanner graph, None for a forest."""
    n = code.n_qubits
    tanner = code.tanner
    adjacency: List[List[int]] = [[] for _ in range(n + code.n_checks)]
    for i, j in zip(tanner.edge_check, tanner.edge_qubit):
        adjacency[j].append(n + int(i))
        adjacency[n + int(i)].append(int(j))

    best = None
    for root in range(len(adjacency)):
        dist = {root: 0}
        parent = {root: -1}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in adjacency[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    parent[v] = u
                    queue.append(v)
                elif parent[u] != v:
                    length = dist[u] + dist[v] + 1
                    if best is None or length < best:
                        best = length
    return best


def export_trace(trace: IterationTrace, path: Union[str, Path]) -> None:
    """CSV rows (iteration, qubit, Q_X, Q_Y, Q_Z, decision)."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["iteration", "qubit", "Q_X", "Q_Y", "Q_Z", "decision"])
        for record in trace.records:
            decision = str(record.estimate)
            for j, (qx, qy, qz) in enumerate(record.posterior):
                writer.writerow([record.iteration, j, repr(float(qx)), repr(float(qy)), repr(float(qz)), decision[j]])
    logger.info("[TRAP] wrote %d iterations to %s", len(trace), path)


@dataclass
class TrapRow:
    algorithm: str
    schedule: str
    parameter: str
    converged: bool
    iterations: int
    period: Optional[int] = None

    def result(self) -> str:
        if self.converged:
            return f"iter={self.iterations}"
        if self.period:
            return f"- (period {self.period})"
        return "-"


def run_case(instance: TrapInstance, config: DecoderConfig, parameter: str = "") -> TrapRow:
    outcome, trace = trace_decode(instance.code, instance.syndrome, instance.priors, config)
    period = None
    if not outcome.converged and len(trace) >= 2 * TRAP_PERIOD_MAX:
        period = detect_oscillation(trace)
    if outcome.alpha_star is not None:
        parameter = f"alpha*={outcome.alpha_star:g}"
    return TrapRow(config.variant, config.schedule, parameter, outcome.converged, outcome.total_iterations, period)


def trapping_suite(iter_max: int = TRAP_ITER_MAX, T_values: Sequence[int] = DEFAULT_T_VALUES,
                 alphas: Sequence[float] = DEFAULT_ALPHA_GRID,
                 instance: Optional[TrapInstance] = None) -> List[TrapRow]:
    """Every decoder on the trapping-set instance, under both schedules."""
    instance = instance or ts40_instance()
    rows = []
    for schedule in ("parallel", "serial"):
        def make(variant: str, **kwargs) -> DecoderConfig:
            return DecoderConfig.for_variant(variant, schedule=schedule, iter_max=iter_max, **kwargs)

        rows.append(run_case(instance, make("plain")))
        for variant in ("momentum", "ewainit", "mbp"):
            for alpha in alphas:
                rows.append(run_case(instance, make(variant, alpha=alpha), f"alpha={alpha:g}"))
        config = make("adagrad")
        rows.append(run_case(instance, config, f"alpha={config.alpha:g}"))
        rows.append(run_case(instance, make("ambp")))
        rows.append(run_case(instance, make("aewa")))
        for variant in ("bp_ots", "ewainit_ots"):
            for T in T_values:
                rows.append(run_case(instance, make(variant, ots_T=T), f"T={T}"))
    logger.info("[TRAP] ran %d trapping-set cases", len(rows))
    return rows


def format_table(rows: Sequence[TrapRow]) -> str:
    """Plain-text report, one line per case."""
    header = f"{'algorithm':<12} {'schedule':<9} {'parameter':<14} result"
    lines = [header, "-" * len(header)]
    for row in rows:
        lines.append(f"{row.algorithm:<12} {row.schedule:<9} {row.parameter:<14} {row.result()}")
    return "\n".join(lines)
