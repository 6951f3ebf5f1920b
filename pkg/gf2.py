"""GF(2) linear algebra used for knowledge-span audits."""
from dataclasses import dataclass
from typing import Tuple

import numpy as np


def to_gf2(matrix) -> np.ndarray:
    return np.array(matrix, dtype=np.uint8) % 2


@dataclass(frozen=True)
class RowReduceResult:
    matrix: np.ndarray
    rank: int
    pivots: Tuple[int, ...]


def row_reduce(matrix) -> RowReduceResult:
    """Reduced row echelon form over GF(2); zero rows sink to the bottom."""
    mat = to_gf2(matrix).copy()
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {mat.shape}")
    rows, cols = mat.shape
    pivots = []
    row = 0
    for col in range(cols):
        if row == rows:
            break
        candidates = np.flatnonzero(mat[row:, col])
        if candidates.size == 0:
            continue
        pivot = row + int(candidates[0])
        if pivot != row:
            mat[[row, pivot]] = mat[[pivot, row]]
        others = np.flatnonzero(mat[:, col])
        others = others[others != row]
        mat[others, :] ^= mat[row, :]
        pivots.append(col)
        row += 1
    return RowReduceResult(matrix=mat, rank=len(pivots), pivots=tuple(pivots))


def rank(matrix) -> int:
    return row_reduce(matrix).rank


def in_row_space(matrix, vector) -> bool:
    """True when vector is a GF(2) combination of the rows of matrix."""
    mat = to_gf2(matrix)
    vec = to_gf2(vector).reshape(1, -1)
    if mat.size == 0:
        return not vec.any()
    return rank(mat) == rank(np.vstack([mat, vec]))


def span_elements(basis) -> np.ndarray:
    """Every vector of the span of the basis rows, zero vector first."""
    basis = to_gf2(basis)
    r = basis.shape[0]
    coeffs = (np.arange(2 ** r, dtype=np.int64)[:, None] >> np.arange(r)) & 1
    return (coeffs @ basis.astype(np.int64)) % 2
