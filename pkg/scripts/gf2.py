"""GF(2) linear algebra for check matrices, backed by galois.

Inputs may be dense arrays, nested lists or scipy sparse matrices; results
come back as plain numpy uint8 arrays.
"""
from typing import List, Tuple

import galois
import numpy as np
import scipy.sparse as sp

GF2 = galois.GF(2)


def as_bits(matrix) -> np.ndarray:
    """Return a fresh 2-D uint8 copy of ``matrix`` reduced mod 2."""
    if sp.issparse(matrix):
        matrix = matrix.toarray()
    bits = np.array(matrix, dtype=np.int64) % 2
    if bits.ndim == 1:
        bits = bits.reshape(1, -1)
    return bits.astype(np.uint8)


def _field(matrix) -> galois.FieldArray:
    return GF2(as_bits(matrix))


def row_reduce(matrix) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form over GF(2).

    Returns the nonzero rows of the RREF and the pivot column of each row.
    """
    bits = _field(matrix)
    if bits.shape[0] == 0:
        return as_bits(bits), []
    rref = bits.row_reduce().view(np.ndarray).astype(np.uint8)
    reduced = rref[rref.any(axis=1)]
    pivots = np.argmax(reduced != 0, axis=1).tolist()
    return reduced, pivots


def rank(matrix) -> int:
    """Rank over GF(2)."""
    return len(row_reduce(matrix)[1])


def nullspace(matrix) -> np.ndarray:
    """Basis of {v : matrix @ v = 0 mod 2}, one vector per row."""
    kernel = _field(matrix).null_space()
    return kernel.view(np.ndarray).astype(np.uint8).reshape(-1, as_bits(matrix).shape[1])


def reduce_vector(vector: np.ndarray, reduced: np.ndarray, pivots: List[int]) -> np.ndarray:
    """Canonical representative of ``vector`` modulo the row space of an RREF."""
    v = GF2(np.array(vector, dtype=np.uint8) % 2)
    if not pivots:
        return v.view(np.ndarray).astype(np.uint8)
    rows = GF2(np.asarray(reduced, dtype=np.uint8))
    # pivot columns of an RREF form an identity block
    return (v - v[pivots] @ rows).view(np.ndarray).astype(np.uint8)
