"""Phaseless Pauli operators stored as (x, z) bit vectors."""
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import TYPE_CHECKING, Iterable, Sequence, Union

import numpy as np

if TYPE_CHECKING:
    from codes import CodeSpec

SYMBOLS = "IXYZ"

# symbol code -> bits, and (x + 2z) -> symbol code
X_BIT = np.array([0, 1, 1, 0], dtype=np.uint8)
Z_BIT = np.array([0, 0, 1, 1], dtype=np.uint8)
FROM_BITS = np.array([0, 1, 3, 2], dtype=np.uint8)


class PauliError(Exception):
    """Raised for malformed Pauli strings or mismatched operator lengths."""
    pass


class PauliSymbol(IntEnum):
    """Single-qubit Pauli; the integer code doubles as a component index + 1."""
    I = 0
    X = 1
    Y = 2
    Z = 3

    def __str__(self) -> str:
        return self.name

    @classmethod
    def parse(cls, value: Union[str, int, "PauliSymbol"]) -> "PauliSymbol":
        """Accept 'X', 1 or PauliSymbol.X alike."""
        if isinstance(value, str):
            if value.upper() not in SYMBOLS:
                raise PauliError(f"Unknown Pauli symbol: {value!r}")
            return cls(SYMBOLS.index(value.upper()))
        try:
            return cls(int(value))
        except ValueError:
            raise PauliError(f"Unknown Pauli symbol: {value!r}")


class Residual(str, Enum):
    """Class of a residual operator relative to a code."""
    IN_STABILIZER = "in_stabilizer"
    LOGICAL = "logical"
    DETECTED = "detected"


def commute(a: Union[PauliSymbol, int], b: Union[PauliSymbol, int]) -> int:
    """Return 1 when ``a`` and ``b`` anticommute, else 0."""
    a, b = int(a), int(b)
    return int(a != 0 and b != 0 and a != b)


@dataclass(frozen=True, eq=False)
class PauliVector:
    """An N-qubit Pauli operator without phase."""
    x: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.uint8) % 2
        z = np.asarray(self.z, dtype=np.uint8) % 2
        if x.ndim != 1 or x.shape != z.shape:
            raise PauliError(f"x/z parts must be equal-length vectors, got {x.shape} and {z.shape}")
        x.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @classmethod
    def identity(cls, n: int) -> "PauliVector":
        return cls(np.zeros(n, dtype=np.uint8), np.zeros(n, dtype=np.uint8))

    @classmethod
    def from_symbols(cls, symbols: Iterable[Union[int, PauliSymbol]]) -> "PauliVector":
        """Build from integer symbol codes (0=I, 1=X, 2=Y, 3=Z)."""
        codes = np.asarray(symbols if isinstance(symbols, np.ndarray) else list(symbols), dtype=np.int64)
        if codes.size and (codes.min() < 0 or codes.max() > 3):
            raise PauliError("Symbol codes must lie in 0..3")
        return cls(X_BIT[codes], Z_BIT[codes])

    @classmethod
    def from_string(cls, text: str) -> "PauliVector":
        """Parse a dense string such as 'XIZY'."""
        try:
            codes = [SYMBOLS.index(ch) for ch in text.upper()]
        except ValueError:
            raise PauliError(f"Invalid Pauli string: {text!r}")
        return cls.from_symbols(codes)

    @classmethod
    def single(cls, n: int, qubit: int, symbol: Union[str, int, PauliSymbol]) -> "PauliVector":
        """Weight-one operator acting on ``qubit``."""
        if not 0 <= qubit < n:
            raise PauliError(f"Qubit {qubit} out of range for length {n}")
        codes = np.zeros(n, dtype=np.int64)
        codes[qubit] = PauliSymbol.parse(symbol)
        return cls.from_symbols(codes)

    @property
    def symbols(self) -> np.ndarray:
        """Integer symbol code per qubit."""
        return FROM_BITS[self.x + 2 * self.z]

    def __len__(self) -> int:
        return len(self.x)

    def __getitem__(self, j: int) -> PauliSymbol:
        return PauliSymbol(int(self.symbols[j]))

    def __str__(self) -> str:
        return "".join(SYMBOLS[c] for c in self.symbols)

    def __repr__(self) -> str:
        return f"PauliVector('{self}')"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliVector):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z)

    def __hash__(self) -> int:
        return hash((self.x.tobytes(), self.z.tobytes()))

    def __mul__(self, other: "PauliVector") -> "PauliVector":
        return mul(self, other)

    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.x | self.z)

    def symplectic(self) -> np.ndarray:
        """Concatenated (x | z) bit vector."""
        return np.concatenate([self.x, self.z])

    @classmethod
    def from_symplectic(cls, bits: Sequence[int]) -> "PauliVector":
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 1 or len(bits) % 2:
            raise PauliError("Symplectic vector must have even length")
        n = len(bits) // 2
        return cls(bits[:n], bits[n:])


def mul(a: PauliVector, b: PauliVector) -> PauliVector:
    """Elementwise phaseless product."""
    if len(a) != len(b):
        raise PauliError(f"Length mismatch: {len(a)} vs {len(b)}")
    return PauliVector(a.x ^ b.x, a.z ^ b.z)


def weight(v: PauliVector) -> int:
    return v.weight()


def symplectic_product(a: PauliVector, b: PauliVector) -> int:
    """1 when the two operators anticommute."""
    if len(a) != len(b):
        raise PauliError(f"Length mismatch: {len(a)} vs {len(b)}")
    return int((np.dot(a.x.astype(np.int64), b.z) + np.dot(a.z.astype(np.int64), b.x)) % 2)


def syndrome_of(code: "CodeSpec", e: PauliVector) -> np.ndarray:
    """Syndrome bits of ``e`` against every check row of ``code``."""
    if len(e) != code.n_qubits:
        raise PauliError(f"Error length {len(e)} does not match N={code.n_qubits}")
    ex = e.x.astype(np.int64)
    ez = e.z.astype(np.int64)
    return ((code.hx @ ez + code.hz @ ex) % 2).astype(np.uint8)


def classify_residual(code: "CodeSpec", r: PauliVector) -> Residual:
    """Place ``r`` in the stabilizer group, a nontrivial logical class, or neither."""
    if np.any(syndrome_of(code, r)):
        return Residual.DETECTED
    if not code.logicals:
        raise PauliError(f"Code {code.name} carries no logical operators")
    flips = (code.logical_x @ r.z.astype(np.int64) + code.logical_z @ r.x.astype(np.int64)) % 2
    return Residual.LOGICAL if np.any(flips) else Residual.IN_STABILIZER
