"""
Stabilizer code construction and I/O.

Codes are stored as a pair of sparse GF(2) matrices (hx, hz): entry (i, j)
of hx is 1 when check i acts on qubit j with X or Y, and likewise hz for Z
or Y. Surface codes come from hypergraph products of repetition codes;
anything else can be read from a QCODE4 text file.
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

import gf2
from pauli import FROM_BITS, SYMBOLS, PauliSymbol, PauliVector

logger = logging.getLogger(__name__)

FORMAT_MAGIC = "QCODE4"


class CodeFormatError(Exception):
    """Raised when a QCODE4 file cannot be parsed."""
    pass


class CodeValidationError(Exception):
    """Raised when a constructed code violates a stabilizer-code invariant."""
    pass


def _bits_csr(matrix) -> sp.csr_matrix:
    m = sp.csr_matrix(matrix, dtype=np.int64, copy=True)
    m.data %= 2
    m.eliminate_zeros()
    m = m.astype(np.uint8)
    m.sort_indices()
    return m


@dataclass(frozen=True)
class TannerGraph:
    """Edge arrays of the GF(4) Tanner graph, edges in row-major order."""
    n_checks: int
    n_qubits: int
    edge_check: np.ndarray
    edge_qubit: np.ndarray
    edge_symbol: np.ndarray
    check_edges: Tuple[np.ndarray, ...]
    qubit_edges: Tuple[np.ndarray, ...]

    @classmethod
    def from_matrices(cls, hx: sp.csr_matrix, hz: sp.csr_matrix) -> "TannerGraph":
        combined = (hx.astype(np.int64) + 2 * hz.astype(np.int64)).tocsr()
        combined.sort_indices()
        m, n = combined.shape
        rows = np.repeat(np.arange(m), np.diff(combined.indptr))
        cols = combined.indices.astype(np.int64)
        symbols = FROM_BITS[combined.data].astype(np.int64)
        check_edges = tuple(np.arange(combined.indptr[i], combined.indptr[i + 1]) for i in range(m))
        by_qubit: List[List[int]] = [[] for _ in range(n)]
        for e, j in enumerate(cols):
            by_qubit[j].append(e)
        qubit_edges = tuple(np.array(lst, dtype=np.int64) for lst in by_qubit)
        return cls(m, n, rows, cols, symbols, check_edges, qubit_edges)

    @property
    def n_edges(self) -> int:
        return len(self.edge_check)

    @cached_property
    def _edge_ids(self) -> Dict[Tuple[int, int], int]:
        return {(int(i), int(j)): e for e, (i, j) in enumerate(zip(self.edge_check, self.edge_qubit))}

    def edge_id(self, check: int, qubit: int) -> int:
        try:
            return self._edge_ids[(check, qubit)]
        except KeyError:
            raise KeyError(f"No edge between check {check} and qubit {qubit}")

    def check_neighbors(self, check: int) -> List[Tuple[int, PauliSymbol]]:
        """N(c_i): (qubit, symbol) pairs."""
        return [(int(self.edge_qubit[e]), PauliSymbol(int(self.edge_symbol[e]))) for e in self.check_edges[check]]

    def qubit_neighbors(self, qubit: int) -> List[Tuple[int, PauliSymbol]]:
        """M(v_j): (check, symbol) pairs."""
        return [(int(self.edge_check[e]), PauliSymbol(int(self.edge_symbol[e]))) for e in self.qubit_edges[qubit]]

    def qubit_degrees(self) -> np.ndarray:
        return np.array([len(edges) for edges in self.qubit_edges])

    def check_degrees(self) -> np.ndarray:
        return np.array([len(edges) for edges in self.check_edges])


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """A stabilizer code: check matrix, logical operators and metadata."""
    hx: sp.csr_matrix
    hz: sp.csr_matrix
    logicals: Tuple[PauliVector, ...] = ()
    name: str = "code"
    family: str = "custom"
    lattice_size: Optional[int] = None
    distance: Optional[int] = None

    def __post_init__(self):
        hx = _bits_csr(self.hx)
        hz = _bits_csr(self.hz)
        if hx.shape != hz.shape:
            raise ValueError(f"hx {hx.shape} and hz {hz.shape} must have the same shape")
        for logical in self.logicals:
            if len(logical) != hx.shape[1]:
                raise ValueError(f"Logical of length {len(logical)} does not fit N={hx.shape[1]}")
        object.__setattr__(self, "hx", hx)
        object.__setattr__(self, "hz", hz)
        object.__setattr__(self, "logicals", tuple(self.logicals))

    @classmethod
    def from_symbols(cls, symbols, logicals: Optional[Sequence[PauliVector]] = None, **meta) -> "CodeSpec":
        """Build from an M x N array of symbol codes (0=I, 1=X, 2=Y, 3=Z).

        Logicals are computed when not supplied, provided the rows commute.
        """
        s = np.asarray(symbols, dtype=np.int64)
        if s.ndim != 2:
            raise ValueError("Symbol matrix must be two-dimensional")
        if s.size and (s.min() < 0 or s.max() > 3):
            raise ValueError("Symbol codes must lie in 0..3")
        hx = _bits_csr((s == PauliSymbol.X) | (s == PauliSymbol.Y))
        hz = _bits_csr((s == PauliSymbol.Z) | (s == PauliSymbol.Y))
        if logicals is None:
            logicals = find_logicals(hx, hz) if rows_commute(hx, hz) else ()
        return cls(hx, hz, tuple(logicals), **meta)

    @classmethod
    def from_strings(cls, rows: Sequence[str], **meta) -> "CodeSpec":
        """Build from dense row strings such as ['XXI', 'IZZ']."""
        return cls.from_symbols([PauliVector.from_string(r).symbols for r in rows], **meta)

    @property
    def n_qubits(self) -> int:
        return self.hx.shape[1]

    @property
    def n_checks(self) -> int:
        return self.hx.shape[0]

    @cached_property
    def tanner(self) -> TannerGraph:
        return TannerGraph.from_matrices(self.hx, self.hz)

    @cached_property
    def rank(self) -> int:
        return gf2.rank(self.stabilizer_matrix())

    @property
    def n_logical(self) -> int:
        """K = N - rank of the symplectic check matrix."""
        return self.n_qubits - self.rank

    @cached_property
    def logical_x(self) -> np.ndarray:
        return np.array([l.x for l in self.logicals], dtype=np.int64).reshape(-1, self.n_qubits)

    @cached_property
    def logical_z(self) -> np.ndarray:
        return np.array([l.z for l in self.logicals], dtype=np.int64).reshape(-1, self.n_qubits)

    @property
    def is_css(self) -> bool:
        """Every row is purely X-type or purely Z-type."""
        x_rows = np.diff(self.hx.indptr) > 0
        z_rows = np.diff(self.hz.indptr) > 0
        return not np.any(x_rows & z_rows)

    def stabilizer_matrix(self) -> sp.csr_matrix:
        """Symplectic (x | z) form, M x 2N."""
        return sp.hstack([self.hx, self.hz]).tocsr()

    def symbol_matrix(self) -> np.ndarray:
        return FROM_BITS[self.hx.toarray() + 2 * self.hz.toarray()].astype(np.int64)

    def row(self, i: int) -> PauliVector:
        return PauliVector(self.hx.getrow(i).toarray().ravel(), self.hz.getrow(i).toarray().ravel())

    def parameters(self) -> str:
        d = "?" if self.distance is None else str(self.distance)
        return f"[[{self.n_qubits}, {self.n_logical}, {d}]]"

    def __str__(self) -> str:
        return f"{self.name} {self.parameters()}"


def rows_commute(hx: sp.csr_matrix, hz: sp.csr_matrix) -> bool:
    return first_anticommuting_pair(hx, hz) is None


def first_anticommuting_pair(hx: sp.csr_matrix, hz: sp.csr_matrix) -> Optional[Tuple[int, int]]:
    gram = (hx.astype(np.int64) @ hz.T.astype(np.int64) + hz.astype(np.int64) @ hx.T.astype(np.int64)).toarray() % 2
    hits = np.argwhere(np.triu(gram, 1))
    if hits.size == 0:
        return None
    return int(hits[0][0]), int(hits[0][1])


def _symplectic(a: np.ndarray, b: np.ndarray) -> int:
    n = len(a) // 2
    return int((np.dot(a[:n].astype(np.int64), b[n:]) + np.dot(a[n:].astype(np.int64), b[:n])) % 2)


def _support_weight(v: np.ndarray) -> int:
    n = len(v) // 2
    return int(np.count_nonzero(v[:n] | v[n:]))


def _minimize(vector: np.ndarray, stabilizers: np.ndarray) -> np.ndarray:
    """Greedy weight reduction by single stabilizer multiplications."""
    best = vector.copy()
    improved = True
    while improved:
        improved = False
        for s in stabilizers:
            candidate = best ^ s
            if _support_weight(candidate) < _support_weight(best):
                best = candidate
                improved = True
    return best


def find_logicals(hx: sp.csr_matrix, hz: sp.csr_matrix) -> Tuple[PauliVector, ...]:
    """Logical operators ordered X1, Z1, X2, Z2, ...

    Normalizer vectors are reduced modulo the stabilizer row space, paired by
    symplectic Gram-Schmidt and then shortened greedily.
    """
    stabilizers = gf2.as_bits(sp.hstack([hx, hz]))
    reduced, pivots = gf2.row_reduce(stabilizers)
    # v = (vx | vz) commutes with every row iff [hz | hx] v = 0
    normalizer = gf2.nullspace(sp.hstack([hz, hx]))
    candidates: List[np.ndarray] = []
    for v in normalizer:
        r = gf2.reduce_vector(v, reduced, pivots)
        if not r.any():
            continue
        candidates.append(r)
        reduced, pivots = gf2.row_reduce(np.vstack([reduced, r]))

    pairs: List[np.ndarray] = []
    pool = candidates
    while pool:
        a = pool.pop(0)
        partner = next((k for k, b in enumerate(pool) if _symplectic(a, b)), None)
        if partner is None:
            logger.warning("[CODE] normalizer vector without symplectic partner dropped")
            continue
        b = pool.pop(partner)
        pool = [c ^ (_symplectic(c, b) * a) ^ (_symplectic(c, a) * b) for c in pool]
        pairs.extend([a, b])

    return tuple(PauliVector.from_symplectic(_minimize(v, stabilizers)) for v in pairs)


@dataclass
class ValidationReport:
    """Outcome of validate(): parameters, weight histograms, first violation."""
    n_qubits: int
    n_checks: int
    rank: int
    n_logical: int
    row_weights: Dict[int, int] = field(default_factory=dict)
    col_weights: Dict[int, int] = field(default_factory=dict)
    violation: Optional[str] = None

    @property
    def valid(self) -> bool:
        return self.violation is None

    def __str__(self) -> str:
        verdict = "valid" if self.valid else f"INVALID: {self.violation}"
        return (f"N={self.n_qubits} M={self.n_checks} rank={self.rank} K={self.n_logical} "
                f"rows={self.row_weights} cols={self.col_weights} {verdict}")


def _histogram(values: np.ndarray) -> Dict[int, int]:
    keys, counts = np.unique(values, return_counts=True)
    return {int(k): int(c) for k, c in zip(keys, counts)}


def validate(code: CodeSpec) -> ValidationReport:
    """Check all CodeSpec invariants and report the first one violated."""
    support = ((code.hx + code.hz) > 0).astype(np.int64)
    report = ValidationReport(
        n_qubits=code.n_qubits,
        n_checks=code.n_checks,
        rank=code.rank,
        n_logical=code.n_logical,
        row_weights=_histogram(np.asarray(support.sum(axis=1)).ravel()),
        col_weights=_histogram(np.asarray(support.sum(axis=0)).ravel()),
    )

    pair = first_anticommuting_pair(code.hx, code.hz)
    if pair is not None:
        report.violation = f"rows {pair[0]} and {pair[1]} anticommute"
        return report

    if len(code.logicals) != 2 * code.n_logical:
        report.violation = f"{len(code.logicals)} logicals stored, expected 2K={2 * code.n_logical}"
        return report

    if code.logicals:
        lx, lz = code.logical_x, code.logical_z
        flips = (code.hx.astype(np.int64) @ lz.T + code.hz.astype(np.int64) @ lx.T) % 2
        hits = np.argwhere(flips)
        if hits.size:
            i, k = hits[0]
            report.violation = f"logical {k} anticommutes with row {i}"
            return report
        gram = (lx @ lz.T + lz @ lx.T) % 2
        expected = np.zeros_like(gram)
        for p in range(code.n_logical):
            expected[2 * p, 2 * p + 1] = expected[2 * p + 1, 2 * p] = 1
        hits = np.argwhere(gram != expected)
        if hits.size:
            a, b = hits[0]
            report.violation = f"logicals {a} and {b} break the pairing"
            return report
    return report


def require_valid(code: CodeSpec) -> CodeSpec:
    report = validate(code)
    if not report.valid:
        raise CodeValidationError(f"{code.name}: {report.violation}")
    return code


def repetition_check(n: int, periodic: bool) -> sp.csr_matrix:
    """Parity checks of the length-n repetition code, (n or n-1) x n."""
    if n < 2:
        raise ValueError(f"Repetition length must be at least 2, got {n}")
    rows = n if periodic else n - 1
    i = np.arange(rows)
    r = np.concatenate([i, i])
    c = np.concatenate([i, (i + 1) % n])
    return _bits_csr(sp.coo_matrix((np.ones(2 * rows, dtype=np.int64), (r, c)), shape=(rows, n)))


def hypergraph_product(h1, h2, **meta) -> CodeSpec:
    """CSS code with X checks [H1 x I | I x H2^T] and Z checks [I x H2 | H1^T x I]."""
    h1 = _bits_csr(h1)
    h2 = _bits_csr(h2)
    m1, n1 = h1.shape
    m2, n2 = h2.shape
    n = n1 * n2 + m1 * m2
    x_checks = sp.hstack([sp.kron(h1, sp.identity(n2, dtype=np.int64)),
                          sp.kron(sp.identity(m1, dtype=np.int64), h2.T)])
    z_checks = sp.hstack([sp.kron(sp.identity(n1, dtype=np.int64), h2),
                          sp.kron(h1.T, sp.identity(m2, dtype=np.int64))])
    hx = sp.vstack([x_checks, sp.csr_matrix((z_checks.shape[0], n), dtype=np.int64)])
    hz = sp.vstack([sp.csr_matrix((x_checks.shape[0], n), dtype=np.int64), z_checks])
    hx, hz = _bits_csr(hx), _bits_csr(hz)
    meta.setdefault("name", f"hgp_{n}")
    code = CodeSpec(hx, hz, find_logicals(hx, hz), **meta)
    logger.info("[CODE] built %s", code)
    return code


def build_toric(L: int) -> CodeSpec:
    """[[2L^2, 2, L]] toric code."""
    if L < 2:
        raise ValueError(f"Toric code needs L >= 2, got {L}")
    return hypergraph_product(repetition_check(L, True), repetition_check(L, True),
                              name=f"toric_L{L}", family="toric", lattice_size=L)


def build_planar(L: int) -> CodeSpec:
    """[[2L^2 - 2L + 1, 1, L]] unrotated planar surface code."""
    if L < 2:
        raise ValueError(f"Planar code needs L >= 2, got {L}")
    return hypergraph_product(repetition_check(L, False), repetition_check(L, False),
                              name=f"planar_L{L}", family="planar", lattice_size=L)


def build_xzzx(L: int) -> CodeSpec:
    """XZZX code on the periodic L x L lattice, one qubit per site.

    Plaquette (i, j) applies X to (i, j), Z to (i, j+1), Z to (i+1, j) and X
    to (i+1, j+1). K is 2 for even L and 1 for odd L.
    """
    if L < 2:
        raise ValueError(f"XZZX code needs L >= 2, got {L}")

    def site(i: int, j: int) -> int:
        return (i % L) * L + (j % L)

    symbols = np.zeros((L * L, L * L), dtype=np.int64)
    for i in range(L):
        for j in range(L):
            row = i * L + j
            symbols[row, site(i, j)] = PauliSymbol.X
            symbols[row, site(i, j + 1)] = PauliSymbol.Z
            symbols[row, site(i + 1, j)] = PauliSymbol.Z
            symbols[row, site(i + 1, j + 1)] = PauliSymbol.X
    code = require_valid(CodeSpec.from_symbols(symbols, name=f"xzzx_L{L}", family="xzzx", lattice_size=L))
    logger.info("[CODE] built %s", code)
    return code


def estimate_distance(code: CodeSpec, max_weight: int = 4) -> Optional[int]:
    """Smallest weight of a nontrivial logical, or None if above max_weight.

    CSS codes are searched one sector at a time.
    """
    if not code.logicals:
        return None
    hx = code.hx.toarray().astype(np.int64)
    hz = code.hz.toarray().astype(np.int64)
    lx, lz = code.logical_x, code.logical_z
    choices = [(1, 0), (0, 1)] if code.is_css else [(1, 0), (1, 1), (0, 1)]
    for w in range(1, max_weight + 1):
        for support in itertools.combinations(range(code.n_qubits), w):
            cols = list(support)
            if code.is_css:
                patterns = [[c] * w for c in choices]
            else:
                patterns = itertools.product(choices, repeat=w)
            for pattern in patterns:
                px = np.array([p[0] for p in pattern], dtype=np.int64)
                pz = np.array([p[1] for p in pattern], dtype=np.int64)
                if np.any((hx[:, cols] @ pz + hz[:, cols] @ px) % 2):
                    continue
                if np.any((lx[:, cols] @ pz + lz[:, cols] @ px) % 2):
                    return w
    return None


def _parse_entries(line_no: int, text: str, n: int) -> np.ndarray:
    row = np.zeros(n, dtype=np.int64)
    for token in text.split():
        col_text, sep, symbol = token.partition(":")
        if not sep:
            raise CodeFormatError(f"line {line_no}: entry {token!r} is not <col>:<P>")
        try:
            col = int(col_text)
        except ValueError:
            raise CodeFormatError(f"line {line_no}: bad column index {col_text!r}")
        if not 0 <= col < n:
            raise CodeFormatError(f"line {line_no}: column {col} out of range for N={n}")
        if symbol not in ("X", "Y", "Z"):
            raise CodeFormatError(f"line {line_no}: unknown symbol {symbol!r}")
        if row[col]:
            raise CodeFormatError(f"line {line_no}: duplicate entry for column {col}")
        row[col] = SYMBOLS.index(symbol)
    return row


def _parse_count(line_no: int, parts: List[str], keyword: str) -> int:
    if len(parts) != 2 or parts[0] != keyword:
        raise CodeFormatError(f"line {line_no}: expected '{keyword} <count>'")
    try:
        value = int(parts[1])
    except ValueError:
        raise CodeFormatError(f"line {line_no}: bad {keyword} count {parts[1]!r}")
    if value < 0:
        raise CodeFormatError(f"line {line_no}: negative {keyword} count")
    return value


def load_code(path: Union[str, Path]) -> CodeSpec:
    """Read a QCODE4 file; logicals are computed when the file omits them."""
    path = Path(path)
    raw = path.read_text(encoding="utf-8").splitlines()
    lines = [(no, text.split("#", 1)[0].strip()) for no, text in enumerate(raw, 1)]
    lines = [(no, text) for no, text in lines if text]
    if not lines:
        raise CodeFormatError(f"{path}: empty file")

    no, header = lines[0]
    parts = header.split()
    if len(parts) != 3 or parts[0] != FORMAT_MAGIC:
        raise CodeFormatError(f"line {no}: expected '{FORMAT_MAGIC} <M> <N>'")
    try:
        m, n = int(parts[1]), int(parts[2])
    except ValueError:
        raise CodeFormatError(f"line {no}: M and N must be integers")
    if m < 1 or n < 1:
        raise CodeFormatError(f"line {no}: M and N must be positive")

    pos = 1
    declared_k = None
    if pos < len(lines) and lines[pos][1].split()[0] == "K":
        declared_k = _parse_count(lines[pos][0], lines[pos][1].split(), "K")
        pos += 1

    if len(lines) - pos < m:
        raise CodeFormatError(f"{path}: expected {m} check rows, found {len(lines) - pos}")
    symbols = np.array([_parse_entries(no, text, n) for no, text in lines[pos:pos + m]]).reshape(m, n)
    pos += m

    logicals = None
    if pos < len(lines):
        no, text = lines[pos]
        count = _parse_count(no, text.split(), "LOGICALS")
        if count % 2:
            raise CodeFormatError(f"line {no}: LOGICALS count must be even")
        pos += 1
        if len(lines) - pos != count:
            raise CodeFormatError(f"{path}: expected {count} logical rows, found {len(lines) - pos}")
        logicals = [PauliVector.from_symbols(_parse_entries(no, text, n)) for no, text in lines[pos:]]

    code = CodeSpec.from_symbols(symbols, logicals=logicals, name=path.stem, family="file")
    if declared_k is not None and declared_k != code.n_logical:
        raise CodeFormatError(f"{path}: declared K={declared_k} but rank gives K={code.n_logical}")
    logger.info("[CODE] loaded %s from %s", code, path)
    return code


def _format_entries(symbols: np.ndarray) -> str:
    return " ".join(f"{j}:{SYMBOLS[s]}" for j, s in enumerate(symbols) if s)


def save_code(code: CodeSpec, path: Union[str, Path]) -> None:
    """Write ``code`` in QCODE4 format."""
    lines = [f"# {code.name} {code.parameters()}",
             f"{FORMAT_MAGIC} {code.n_checks} {code.n_qubits}",
             f"K {code.n_logical}"]
    lines.extend(_format_entries(row) for row in code.symbol_matrix())
    if code.logicals:
        lines.append(f"LOGICALS {len(code.logicals)}")
        lines.extend(_format_entries(l.symbols) for l in code.logicals)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
