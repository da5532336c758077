"""Token-level similarity functions: count Tanimoto, soft-match transform,
triangular position window, and their product.

All functions are pure and safe to evaluate concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .data import SparseCountVector
from .errors import ValidationError


@dataclass(frozen=True)
class SoftKernelParams:
    """Softness temperature for the exponential match transform."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValidationError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class WindowParams:
    """Bandwidth of the triangular Toeplitz position window."""

    bandwidth: int

    def __post_init__(self):
        if int(self.bandwidth) != self.bandwidth or self.bandwidth < 1:
            raise ValidationError(f"bandwidth must be an integer >= 1, got {self.bandwidth}")


def tanimoto(u: SparseCountVector, v: SparseCountVector) -> float:
    """Count Tanimoto <u,v> / (<u,u> + <v,v> - <u,v>).

    Both empty -> 1.0 (identical objects); one empty -> 0.0. Symmetric,
    bounded in [0,1], equal to 1 iff u == v elementwise.
    """
    if len(u) == 0 and len(v) == 0:
        return 1.0
    uv = u.dot(v)
    denom = u.self_dot() + v.self_dot() - uv
    if denom <= 0.0:
        return 0.0
    return uv / denom


def soft_kernel(k0: float, params: SoftKernelParams) -> float:
    """exp(-beta * (1 - k0)); strictly increasing in k0, equals 1 iff k0 == 1."""
    return math.exp(-params.beta * (1.0 - k0))


def triangular_window(i: int, j: int, params: WindowParams) -> float:
    """max(0, 1 - |i-j|/T): Toeplitz, unit diagonal, zero support beyond T."""
    return max(0.0, 1.0 - abs(i - j) / params.bandwidth)


def position_local_kernel(
    u: SparseCountVector,
    v: SparseCountVector,
    i: int,
    j: int,
    soft: SoftKernelParams,
    win: WindowParams,
) -> float:
    """Window times soft Tanimoto; zero outside the band regardless of chemistry."""
    w = triangular_window(i, j, win)
    if w == 0.0:
        return 0.0
    return w * soft_kernel(tanimoto(u, v), soft)


def fingerprint_matrix(vectors: list[SparseCountVector]) -> sp.csr_matrix:
    """Stack sparse count vectors into a CSR matrix with remapped columns."""
    all_ids = np.concatenate([v.ids for v in vectors]) if vectors else np.array([], dtype=np.uint64)
    uniq = np.unique(all_ids)
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    indices = []
    values = []
    for r, v in enumerate(vectors):
        cols = np.searchsorted(uniq, v.ids)
        indices.append(cols)
        values.append(v.counts.astype(np.float64))
        indptr[r + 1] = indptr[r] + len(v)
    indices = np.concatenate(indices) if indices else np.array([], dtype=np.int64)
    values = np.concatenate(values) if values else np.array([], dtype=np.float64)
    return sp.csr_matrix((values, indices, indptr), shape=(len(vectors), max(len(uniq), 1)))


def tanimoto_table(
    rows: list[SparseCountVector], cols: list[SparseCountVector] | None = None
) -> np.ndarray:
    """Pairwise count-Tanimoto matrix via sparse inner products.

    Matches tanimoto() pointwise, including the empty-vs-empty == 1 and
    empty-vs-nonempty == 0 conventions.
    """
    symmetric = cols is None
    cols = rows if symmetric else cols
    X = fingerprint_matrix(list(rows) + ([] if symmetric else list(cols)))
    A = X[: len(rows)]
    B = A if symmetric else X[len(rows):]
    dots = np.asarray((A @ B.T).todense(), dtype=np.float64)
    sa = np.asarray(A.multiply(A).sum(axis=1)).ravel()
    sb = sa if symmetric else np.asarray(B.multiply(B).sum(axis=1)).ravel()
    denom = sa[:, None] + sb[None, :] - dots
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0.0, dots / np.where(denom > 0.0, denom, 1.0), 0.0)
    # Empty-vs-empty pairs have zero denominator but are identical objects.
    empty_a = sa == 0.0
    empty_b = sb == 0.0
    if empty_a.any() and empty_b.any():
        out[np.ix_(empty_a, empty_b)] = 1.0
    return out


def soft_table(tan: np.ndarray, params: SoftKernelParams) -> np.ndarray:
    """Elementwise exp(-beta * (1 - t)) over a Tanimoto table."""
    return np.exp(-params.beta * (1.0 - tan))
