"""Kernel specifications, Gram matrix assembly, PSD checking and Gram file I/O.

Gram assembly encodes peptides as index sequences into a monomer vocabulary,
precomputes the monomer-level Tanimoto table once, and evaluates the alignment
DP per pair with numba (parallel over independent entries, so results do not
depend on the worker count).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from numba import njit, prange

from .alignment import _gak_dp, _mdgak_dp, _pmdgak_dp
from .data import Dataset, SparseCountVector
from .errors import IntegrityError, NormalizationError, ValidationError
from .local_kernels import tanimoto_table

SYMMETRY_RTOL = 1e-12
PSD_TOL = 1e-8


class KernelFamily(str, Enum):
    GAK = "gak"
    MD_GAK = "md_gak"
    PMD_GAK = "pmd_gak"
    TANIMOTO_PEPTIDE = "tanimoto_peptide"
    CONVEX = "convex"


_FAMILY_CODE = {KernelFamily.GAK: 0, KernelFamily.MD_GAK: 1, KernelFamily.PMD_GAK: 2}


@dataclass(frozen=True)
class KernelSpec:
    """Declarative description of one kernel.

    beta/bandwidth apply to PMD_GAK; alpha plus two non-convex component specs
    to CONVEX. amplitude scales the Gram at model-fit time (so normalized Gram
    matrices keep an exactly unit diagonal); jitter is added to the training
    diagonal when factorizing.
    """

    family: KernelFamily
    beta: float | None = None
    bandwidth: int | None = None
    alpha: float | None = None
    components: tuple["KernelSpec", "KernelSpec"] | None = None
    normalize: bool = True
    amplitude: float = 1.0
    jitter: float = 1e-6

    def __post_init__(self):
        if not isinstance(self.family, KernelFamily):
            object.__setattr__(self, "family", KernelFamily(self.family))
        if not self.amplitude > 0:
            raise ValidationError(f"amplitude must be > 0, got {self.amplitude}")
        if self.jitter < 0:
            raise ValidationError(f"jitter must be >= 0, got {self.jitter}")
        if self.family is KernelFamily.PMD_GAK:
            if self.beta is None or not self.beta > 0:
                raise ValidationError("PMD kernel requires beta > 0")
            if self.bandwidth is None or self.bandwidth < 1:
                raise ValidationError("PMD kernel requires bandwidth >= 1")
        if self.family is KernelFamily.CONVEX:
            if self.alpha is None or not (0.0 <= self.alpha <= 1.0):
                raise ValidationError("convex combination requires alpha in [0,1]")
            if self.components is None or len(self.components) != 2:
                raise ValidationError("convex combination requires two component specs")
            for comp in self.components:
                if comp.family is KernelFamily.CONVEX:
                    raise ValidationError("convex components must not be convex themselves")

    def to_dict(self) -> dict:
        out = {
            "family": self.family.value,
            "normalize": self.normalize,
            "amplitude": self.amplitude,
            "jitter": self.jitter,
        }
        if self.family is KernelFamily.PMD_GAK:
            out["beta"] = self.beta
            out["bandwidth"] = self.bandwidth
        if self.family is KernelFamily.CONVEX:
            out["alpha"] = self.alpha
            out["components"] = [c.to_dict() for c in self.components]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        comps = d.get("components")
        return cls(
            family=KernelFamily(d["family"]),
            beta=d.get("beta"),
            bandwidth=d.get("bandwidth"),
            alpha=d.get("alpha"),
            components=tuple(cls.from_dict(c) for c in comps) if comps else None,
            normalize=d.get("normalize", True),
            amplitude=d.get("amplitude", 1.0),
            jitter=d.get("jitter", 1e-6),
        )

    def key(self) -> str:
        """Stable string identity, usable as a cache key."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


@dataclass
class GramMatrix:
    """Pairwise kernel values with provenance.

    When row and column ids coincide the matrix must be symmetric; when
    normalized, the diagonal must be exactly unit (within 1e-12).
    """

    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]
    values: np.ndarray
    spec: KernelSpec
    normalized: bool

    def __post_init__(self):
        self.row_ids = tuple(self.row_ids)
        self.col_ids = tuple(self.col_ids)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.row_ids), len(self.col_ids)):
            raise ValidationError("Gram dimensions do not match id list lengths")
        if self.row_ids == self.col_ids and len(self.row_ids) > 0:
            scale = max(1.0, float(np.abs(self.values).max()))
            if np.abs(self.values - self.values.T).max() > SYMMETRY_RTOL * scale:
                raise ValidationError("square Gram is not symmetric within tolerance")
            if self.normalized:
                if np.abs(np.diag(self.values) - 1.0).max() > SYMMETRY_RTOL:
                    raise ValidationError("normalized Gram diagonal differs from 1")

    @property
    def is_square(self) -> bool:
        return self.row_ids == self.col_ids

    def submatrix(self, row_ids: Sequence[str], col_ids: Sequence[str]) -> "GramMatrix":
        rindex = {pid: i for i, pid in enumerate(self.row_ids)}
        cindex = {pid: i for i, pid in enumerate(self.col_ids)}
        try:
            ri = [rindex[p] for p in row_ids]
            ci = [cindex[p] for p in col_ids]
        except KeyError as exc:
            raise IntegrityError(f"id {exc.args[0]!r} not present in Gram") from None
        return GramMatrix(
            tuple(row_ids), tuple(col_ids), self.values[np.ix_(ri, ci)], self.spec, self.normalized
        )


def mix_kernels(g1: GramMatrix, g2: GramMatrix, alpha: float) -> GramMatrix:
    """Entrywise convex combination alpha*g1 + (1-alpha)*g2."""
    if not (0.0 <= alpha <= 1.0):
        raise ValidationError(f"alpha must be in [0,1], got {alpha}")
    if g1.row_ids != g2.row_ids or g1.col_ids != g2.col_ids:
        raise IntegrityError("convex combination requires identical row/col id lists")
    spec = KernelSpec(
        family=KernelFamily.CONVEX,
        alpha=alpha,
        components=(g1.spec, g2.spec),
        normalize=g1.normalized and g2.normalized,
        amplitude=1.0,
        jitter=max(g1.spec.jitter, g2.spec.jitter),
    )
    values = alpha * g1.values + (1.0 - alpha) * g2.values
    return GramMatrix(g1.row_ids, g1.col_ids, values, spec, g1.normalized and g2.normalized)


@njit(cache=True)
def _gather(table, a, b):
    n = a.shape[0]
    m = b.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            out[i, j] = table[a[i], b[j]]
    return out


@njit(cache=True)
def _pair_value(table, a, b, family_code, bandwidth):
    sub = _gather(table, a, b)
    if family_code == 0:
        return _gak_dp(sub)
    elif family_code == 1:
        return _mdgak_dp(sub)
    return _pmdgak_dp(sub, bandwidth)


@njit(cache=True, parallel=True)
def _pairwise_symmetric(seqs, lens, table, family_code, bandwidth):
    n = seqs.shape[0]
    out = np.empty((n, n))
    for p in prange(n * n):
        i = p // n
        j = p % n
        if j < i:
            continue
        v = _pair_value(table, seqs[i, : lens[i]], seqs[j, : lens[j]], family_code, bandwidth)
        out[i, j] = v
        out[j, i] = v
    return out


@njit(cache=True, parallel=True)
def _pairwise_cross(seqs_a, lens_a, seqs_b, lens_b, table, family_code, bandwidth):
    na = seqs_a.shape[0]
    nb = seqs_b.shape[0]
    out = np.empty((na, nb))
    for p in prange(na * nb):
        i = p // nb
        j = p % nb
        out[i, j] = _pair_value(
            table, seqs_a[i, : lens_a[i]], seqs_b[j, : lens_b[j]], family_code, bandwidth
        )
    return out


@njit(cache=True, parallel=True)
def _self_similarities(seqs, lens, table, family_code, bandwidth):
    n = seqs.shape[0]
    out = np.empty(n)
    for i in prange(n):
        out[i] = _pair_value(table, seqs[i, : lens[i]], seqs[i, : lens[i]], family_code, bandwidth)
    return out


class GramBuilder:
    """Caches the dataset encoding and per-spec Gram matrices.

    The monomer Tanimoto table is computed once per dataset; alignment Grams
    for different hyperparameters reuse it.
    """

    def __init__(self, ds: Dataset):
        self.ds = ds
        self._vocab = sorted(ds.monomers)
        self._vindex = {mid: i for i, mid in enumerate(self._vocab)}
        self._pindex = {p.peptide_id: i for i, p in enumerate(ds.peptides)}
        max_len = max((p.length for p in ds.peptides), default=1)
        self._seqs = np.zeros((len(ds.peptides), max_len), dtype=np.int64)
        self._lens = np.zeros(len(ds.peptides), dtype=np.int64)
        for i, pep in enumerate(ds.peptides):
            self._lens[i] = pep.length
            for j, mid in enumerate(pep.monomers):
                self._seqs[i, j] = self._vindex[mid]
        self._tan_table: np.ndarray | None = None
        self._cache: dict[str, GramMatrix] = {}

    def _monomer_tanimoto(self) -> np.ndarray:
        if self._tan_table is None:
            fps = [self.ds.monomers[mid].fingerprint for mid in self._vocab]
            self._tan_table = tanimoto_table(fps)
        return self._tan_table

    def _local_table(self, spec: KernelSpec) -> np.ndarray:
        tan = self._monomer_tanimoto()
        if spec.family is KernelFamily.PMD_GAK:
            return np.exp(-spec.beta * (1.0 - tan))
        return tan

    def _rows_to_indices(self, ids: Sequence[str]) -> np.ndarray:
        try:
            return np.array([self._pindex[p] for p in ids], dtype=np.int64)
        except KeyError as exc:
            raise IntegrityError(f"unknown peptide id {exc.args[0]!r}") from None

    def _molecule_fps(self, ids: Sequence[str]) -> list[SparseCountVector]:
        fps = []
        for pid in ids:
            pep = self.ds.peptide_by_id(pid)
            if pep.molecule_fingerprint is None:
                raise ValidationError(
                    f"peptide {pid!r} has no molecule fingerprint; required by the "
                    "whole-peptide Tanimoto kernel"
                )
            fps.append(pep.molecule_fingerprint)
        return fps

    def _raw_values(
        self, spec: KernelSpec, row_ids: Sequence[str], col_ids: Sequence[str] | None
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unnormalized values plus row/col self-similarities."""
        symmetric = col_ids is None
        if spec.family is KernelFamily.TANIMOTO_PEPTIDE:
            row_fps = self._molecule_fps(row_ids)
            if symmetric:
                values = tanimoto_table(row_fps)
                self_r = np.array([1.0] * len(row_fps))
                return values, self_r, self_r
            col_fps = self._molecule_fps(col_ids)
            values = tanimoto_table(row_fps, col_fps)
            ones_r = np.ones(len(row_fps))
            ones_c = np.ones(len(col_fps))
            return values, ones_r, ones_c
        code = _FAMILY_CODE[spec.family]
        band = spec.bandwidth if spec.bandwidth is not None else 1
        table = self._local_table(spec)
        ri = self._rows_to_indices(row_ids)
        if symmetric:
            values = _pairwise_symmetric(self._seqs[ri], self._lens[ri], table, code, band)
            self_r = np.diag(values).copy()
            return values, self_r, self_r
        ci = self._rows_to_indices(col_ids)
        values = _pairwise_cross(
            self._seqs[ri], self._lens[ri], self._seqs[ci], self._lens[ci], table, code, band
        )
        self_r = _self_similarities(self._seqs[ri], self._lens[ri], table, code, band)
        self_c = _self_similarities(self._seqs[ci], self._lens[ci], table, code, band)
        return values, self_r, self_c

    def gram(
        self,
        spec: KernelSpec,
        row_ids: Sequence[str] | None = None,
        col_ids: Sequence[str] | None = None,
    ) -> GramMatrix:
        """Pairwise kernel values; symmetric half computed once when square.

        With row_ids omitted the Gram covers every peptide in the dataset; the
        full square matrix is cached per spec, so repeated calls (e.g. from an
        inner-CV grid) slice instead of recomputing.
        """
        if row_ids is None:
            row_ids = tuple(self.ds.peptide_ids())
        if col_ids is not None:
            full = self.gram(spec)
            return full.submatrix(row_ids, col_ids)
        row_ids = tuple(row_ids)
        cache_key = spec.key()
        cached = self._cache.get(cache_key)
        if cached is not None:
            if cached.row_ids == row_ids:
                return cached
            return cached.submatrix(row_ids, row_ids)
        if spec.family is KernelFamily.CONVEX:
            c1, c2 = spec.components
            g = mix_kernels(self.gram(c1, row_ids), self.gram(c2, row_ids), spec.alpha)
            g = GramMatrix(g.row_ids, g.col_ids, g.values, spec, g.normalized)
        else:
            values, self_r, _ = self._raw_values(spec, row_ids, None)
            if spec.normalize:
                if np.any(self_r <= 0.0):
                    bad = row_ids[int(np.argmax(self_r <= 0.0))]
                    raise NormalizationError(
                        f"peptide {bad!r} has non-positive self-similarity; cannot normalize"
                    )
                scale = 1.0 / np.sqrt(self_r)
                values = values * scale[:, None] * scale[None, :]
                np.fill_diagonal(values, 1.0)
            g = GramMatrix(row_ids, row_ids, values, spec, spec.normalize)
        if row_ids == tuple(self.ds.peptide_ids()):
            self._cache[cache_key] = g
        return g

    def self_similarities(self, spec: KernelSpec, ids: Sequence[str]) -> np.ndarray:
        """k(x,x) per peptide: exactly 1 for normalized kernels, raw DP otherwise."""
        ids = tuple(ids)
        if spec.family is KernelFamily.CONVEX:
            c1, c2 = spec.components
            return spec.alpha * self.self_similarities(c1, ids) + (
                1.0 - spec.alpha
            ) * self.self_similarities(c2, ids)
        if spec.normalize or spec.family is KernelFamily.TANIMOTO_PEPTIDE:
            return np.ones(len(ids))
        code = _FAMILY_CODE[spec.family]
        band = spec.bandwidth if spec.bandwidth is not None else 1
        ri = self._rows_to_indices(ids)
        return _self_similarities(
            self._seqs[ri], self._lens[ri], self._local_table(spec), code, band
        )

    def cross_gram(
        self, spec: KernelSpec, row_ids: Sequence[str], col_ids: Sequence[str]
    ) -> GramMatrix:
        """Rectangular Gram between two id lists (rows need not be in cols)."""
        row_ids = tuple(row_ids)
        col_ids = tuple(col_ids)
        if spec.family is KernelFamily.CONVEX:
            c1, c2 = spec.components
            g1 = self.cross_gram(c1, row_ids, col_ids)
            g2 = self.cross_gram(c2, row_ids, col_ids)
            values = spec.alpha * g1.values + (1.0 - spec.alpha) * g2.values
            return GramMatrix(row_ids, col_ids, values, spec, g1.normalized and g2.normalized)
        values, self_r, self_c = self._raw_values(spec, row_ids, col_ids)
        if spec.normalize:
            if np.any(self_r <= 0.0) or np.any(self_c <= 0.0):
                raise NormalizationError("non-positive self-similarity; cannot normalize")
            values = values * (1.0 / np.sqrt(self_r))[:, None] * (1.0 / np.sqrt(self_c))[None, :]
        return GramMatrix(row_ids, col_ids, values, spec, spec.normalize)


def gram(
    rows: Sequence[str],
    cols: Sequence[str] | None,
    spec: KernelSpec,
    ds: Dataset,
) -> GramMatrix:
    """One-shot Gram assembly; see GramBuilder for the caching variant."""
    builder = GramBuilder(ds)
    if cols is None or tuple(cols) == tuple(rows):
        return builder.gram(spec, tuple(rows))
    return builder.cross_gram(spec, rows, cols)


@dataclass(frozen=True)
class PsdReport:
    min_eig: float
    max_eig: float
    is_psd: bool


def psd_check(g: GramMatrix | np.ndarray, tol: float = PSD_TOL) -> PsdReport:
    """Eigenvalue extremes of the symmetrized matrix.

    is_psd iff min_eig >= -tol * max(1, max_eig).
    """
    values = g.values if isinstance(g, GramMatrix) else np.asarray(g, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValidationError("PSD check requires a square matrix")
    sym = (values + values.T) / 2.0
    eigs = np.linalg.eigvalsh(sym)
    min_eig = float(eigs[0])
    max_eig = float(eigs[-1])
    return PsdReport(min_eig, max_eig, min_eig >= -tol * max(1.0, max_eig))


_GRAM_MAGIC = "PEPGAKGRAM 1"


def save_gram(g: GramMatrix, path) -> None:
    """Header (kernel spec, ids, normalized flag) + row-major little-endian f8."""
    header = {
        "spec": g.spec.to_dict(),
        "row_ids": list(g.row_ids),
        "col_ids": list(g.col_ids),
        "normalized": g.normalized,
        "shape": list(g.values.shape),
    }
    with open(path, "wb") as fh:
        fh.write((_GRAM_MAGIC + "\n").encode("utf-8"))
        fh.write((json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(g.values, dtype="<f8").tobytes())


def load_gram(path) -> GramMatrix:
    with open(path, "rb") as fh:
        magic = fh.readline().decode("utf-8").rstrip("\n")
        if magic != _GRAM_MAGIC:
            raise ValidationError(f"not a Gram file (magic {magic!r})")
        header = json.loads(fh.readline().decode("utf-8"))
        shape = tuple(header["shape"])
        data = fh.read(8 * shape[0] * shape[1])
        values = np.frombuffer(data, dtype="<f8").reshape(shape).copy()
    return GramMatrix(
        tuple(header["row_ids"]),
        tuple(header["col_ids"]),
        values,
        KernelSpec.from_dict(header["spec"]),
        header["normalized"],
    )
