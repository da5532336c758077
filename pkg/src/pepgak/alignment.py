"""Global-alignment sequence kernels.

Three dynamic programs over a local token similarity kappa in [0,1]:

* gak:    M[i,j] = kappa * (M[i-1,j-1] + M[i-1,j] + M[i,j-1])
          (the local match gates every transition into the cell)
* mdgak:  M[i,j] = kappa * M[i-1,j-1] + M[i-1,j] + M[i,j-1]
          (the match weighs only the diagonal transition; gaps propagate
          unweighted, so the DP can route around isolated mismatches)
* pmdgak: mdgak with kappa_T(i,j) = window(i,j) * exp(-beta*(1-tanimoto)),
          computed over the diagonal band only.

Boundaries are M[0,0] = 1 and M[i,0] = M[0,j] = 0, so only monotone lattice
paths whose first step is diagonal contribute. The gap decay is fixed to 1;
the field on AlignmentKernelKind documents that choice.

oracle_path_sum enumerates the paths explicitly and is the test-side
reference for both DPs (guarded to small instances).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .data import SparseCountVector
from .errors import NormalizationError, ValidationError
from .local_kernels import SoftKernelParams, WindowParams, soft_table, tanimoto_table


class AlignmentFamily(str, Enum):
    GAK = "gak"
    MD_GAK = "md_gak"
    PMD_GAK = "pmd_gak"


@dataclass(frozen=True)
class AlignmentKernelKind:
    """Kernel family tag plus the PMD parameters when applicable.

    gap_decay exists for provenance only; the recursions fix it to 1.
    """

    family: AlignmentFamily
    soft: SoftKernelParams | None = None
    window: WindowParams | None = None
    gap_decay: float = 1.0

    def __post_init__(self):
        if self.gap_decay != 1.0:
            raise ValidationError("gap decay is fixed to 1")
        if self.family is AlignmentFamily.PMD_GAK and (
            self.soft is None or self.window is None
        ):
            raise ValidationError("PMD kernel requires soft and window parameters")


@njit(cache=True)
def _gak_dp(table):
    n, m = table.shape
    M = np.zeros((n + 1, m + 1))
    M[0, 0] = 1.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            M[i, j] = table[i - 1, j - 1] * (M[i - 1, j - 1] + M[i - 1, j] + M[i, j - 1])
    return M[n, m]


@njit(cache=True)
def _mdgak_dp(table):
    n, m = table.shape
    M = np.zeros((n + 1, m + 1))
    M[0, 0] = 1.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            M[i, j] = table[i - 1, j - 1] * M[i - 1, j - 1] + M[i - 1, j] + M[i, j - 1]
    return M[n, m]


@njit(cache=True)
def _pmdgak_dp(soft_values, bandwidth):
    # Local-kernel lookups happen only inside |i-j| < T; outside the band the
    # cell reduces to pure gap propagation, which must still be carried for
    # exactness against the dense windowed recursion.
    n, m = soft_values.shape
    M = np.zeros((n + 1, m + 1))
    M[0, 0] = 1.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d = i - j if i >= j else j - i
            if d < bandwidth:
                kappa = (1.0 - d / bandwidth) * soft_values[i - 1, j - 1]
                M[i, j] = kappa * M[i - 1, j - 1] + M[i - 1, j] + M[i, j - 1]
            else:
                M[i, j] = M[i - 1, j] + M[i, j - 1]
    return M[n, m]


def gak_from_table(table: np.ndarray) -> float:
    """GAK value from a precomputed n x m local-kernel table."""
    table = np.ascontiguousarray(table, dtype=np.float64)
    if table.ndim != 2 or table.shape[0] == 0 or table.shape[1] == 0:
        raise ValidationError("local kernel table must be 2-d and nonempty")
    return float(_gak_dp(table))


def mdgak_from_table(table: np.ndarray) -> float:
    """Decoupled-alignment value from a precomputed local-kernel table."""
    table = np.ascontiguousarray(table, dtype=np.float64)
    if table.ndim != 2 or table.shape[0] == 0 or table.shape[1] == 0:
        raise ValidationError("local kernel table must be 2-d and nonempty")
    return float(_mdgak_dp(table))


def pmdgak_from_table(soft_values: np.ndarray, win: WindowParams) -> float:
    """Banded position-aware value from a precomputed soft-kernel table."""
    soft_values = np.ascontiguousarray(soft_values, dtype=np.float64)
    if soft_values.ndim != 2 or soft_values.shape[0] == 0 or soft_values.shape[1] == 0:
        raise ValidationError("local kernel table must be 2-d and nonempty")
    return float(_pmdgak_dp(soft_values, win.bandwidth))


def windowed_table(soft_values: np.ndarray, win: WindowParams) -> np.ndarray:
    """Dense kappa_T table: triangular window applied to a soft-kernel table."""
    n, m = soft_values.shape
    i = np.arange(1, n + 1)[:, None]
    j = np.arange(1, m + 1)[None, :]
    w = np.maximum(0.0, 1.0 - np.abs(i - j) / win.bandwidth)
    return w * soft_values


def local_kernel_table(
    a: Sequence, b: Sequence, local: Callable[[object, object], float]
) -> np.ndarray:
    out = np.empty((len(a), len(b)), dtype=np.float64)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i, j] = local(x, y)
    return out


def _check_sequences(a, b):
    if len(a) == 0 or len(b) == 0:
        raise ValidationError("alignment kernels require nonempty sequences")


def gak(a: Sequence, b: Sequence, local: Callable[[object, object], float]) -> float:
    """Global alignment kernel over token sequences with local kernel values in [0,1]."""
    _check_sequences(a, b)
    return gak_from_table(local_kernel_table(a, b, local))


def mdgak(a: Sequence, b: Sequence, local: Callable[[object, object], float]) -> float:
    """Decoupled global alignment kernel (matches weigh only diagonal steps)."""
    _check_sequences(a, b)
    return mdgak_from_table(local_kernel_table(a, b, local))


def pmdgak(
    a: Sequence[SparseCountVector],
    b: Sequence[SparseCountVector],
    soft: SoftKernelParams,
    win: WindowParams,
) -> float:
    """Position-aware decoupled kernel over fingerprint sequences.

    Equals mdgak with the local kernel replaced by
    window(i,j) * exp(-beta*(1 - tanimoto)); the banded computation is exact
    against the dense recursion with the local kernel zeroed outside the band.
    """
    _check_sequences(a, b)
    tan = tanimoto_table(list(a), list(b))
    return pmdgak_from_table(soft_table(tan, soft), win)


_ORACLE_MAX_CELLS = 12


def oracle_path_sum(
    a: Sequence,
    b: Sequence,
    local: Callable[[object, object], float],
    kind: AlignmentFamily | AlignmentKernelKind,
) -> float:
    """Sum over explicit monotone lattice paths; test-side reference.

    Paths step right, up, or diagonally from (0,0) to (n,m). Any path that
    touches a boundary cell (i,0) or (0,j) with a positive index contributes
    zero, mirroring the DP boundary values. Under MD_GAK the path weight
    multiplies the local kernel at diagonal-step endpoints only; under GAK at
    every cell the path enters with both indices >= 1. PMD_GAK uses the
    MD_GAK rule (the window is part of the local kernel the caller passes).

    Guarded to len(a) + len(b) <= 12; enumeration is exponential.
    """
    _check_sequences(a, b)
    family = kind.family if isinstance(kind, AlignmentKernelKind) else kind
    n, m = len(a), len(b)
    if n + m > _ORACLE_MAX_CELLS:
        raise ValidationError(
            f"oracle refuses instances with n+m > {_ORACLE_MAX_CELLS} (got {n + m})"
        )
    kappa = local_kernel_table(a, b, local)
    diagonal_only = family in (AlignmentFamily.MD_GAK, AlignmentFamily.PMD_GAK)
    total = 0.0
    # Depth-first over (i, j, accumulated weight).
    stack = [(0, 0, 1.0)]
    while stack:
        i, j, w = stack.pop()
        if i == n and j == m:
            total += w
            continue
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            ni, nj = i + di, j + dj
            if ni > n or nj > m:
                continue
            if ni == 0 or nj == 0:
                # Entered a zero-valued boundary prefix; the whole path is 0.
                continue
            if di == dj == 1 or not diagonal_only:
                nw = w * kappa[ni - 1, nj - 1]
            else:
                nw = w
            stack.append((ni, nj, nw))
    return total


def cosine_normalize(k_ab: float, k_aa: float, k_bb: float) -> float:
    """k_ab / sqrt(k_aa * k_bb); unit-diagonal normalization."""
    if not (k_aa > 0.0 and k_bb > 0.0):
        raise NormalizationError(
            f"cosine normalization requires positive self-similarities, got {k_aa}, {k_bb}"
        )
    return k_ab / math.sqrt(k_aa * k_bb)
