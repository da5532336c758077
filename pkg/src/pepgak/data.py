"""Data model for fingerprints, peptides and datasets, plus the JSONL interchange format.

A dataset is a line-delimited JSON stream with two record kinds:

    {"kind":"monomer","id":str,"fp":[[feature_id,count],...]}
    {"kind":"peptide","id":str,"monomers":[str,...],"perm":float,
     "mol_fp":[[feature_id,count],...]|null,"group":str,"scaffold":str|null,
     "force_train":bool}

Feature ids are unsigned 64-bit hashes sorted ascending; counts are positive
integers. Monomer and peptide lines may appear in any order; referential
integrity is checked once the whole stream is read.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from .errors import IntegrityError, ParseError, ValidationError

PERM_MIN = -10.0
PERM_MAX = -4.0
PERMEABLE_THRESHOLD = -6.0
LENGTH_MIN = 2
LENGTH_MAX = 15

_U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class SparseCountVector:
    """Hashed count fingerprint: sorted (feature_id, count) pairs.

    Feature ids are strictly increasing unsigned 64-bit integers, counts are
    >= 1. The empty vector is allowed.
    """

    ids: np.ndarray  # uint64, strictly increasing
    counts: np.ndarray  # int64, all >= 1

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.uint64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if ids.ndim != 1 or counts.ndim != 1 or ids.shape != counts.shape:
            raise ValidationError("fingerprint ids/counts must be 1-d and equal length")
        if ids.size and np.any(ids[1:] <= ids[:-1]):
            raise ValidationError("fingerprint feature ids must be strictly increasing")
        if counts.size and np.any(counts < 1):
            raise ValidationError("fingerprint counts must be >= 1")
        ids.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "SparseCountVector":
        pairs = list(pairs)
        ids = np.array([p[0] for p in pairs], dtype=np.uint64)
        counts = np.array([p[1] for p in pairs], dtype=np.int64)
        return cls(ids, counts)

    def to_pairs(self) -> list[list[int]]:
        return [[int(i), int(c)] for i, c in zip(self.ids, self.counts)]

    def __len__(self) -> int:
        return int(self.ids.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseCountVector):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(
            self.counts, other.counts
        )

    def __hash__(self):
        return hash((self.ids.tobytes(), self.counts.tobytes()))

    def dot(self, other: "SparseCountVector") -> float:
        """Count-vector inner product over the shared support."""
        if len(self) == 0 or len(other) == 0:
            return 0.0
        _, ia, ib = np.intersect1d(
            self.ids, other.ids, assume_unique=True, return_indices=True
        )
        return float(np.dot(self.counts[ia], other.counts[ib]))

    def self_dot(self) -> float:
        return float(np.dot(self.counts, self.counts))


EMPTY_FINGERPRINT = SparseCountVector(
    np.array([], dtype=np.uint64), np.array([], dtype=np.int64)
)


@dataclass(frozen=True)
class MonomerRecord:
    monomer_id: str
    fingerprint: SparseCountVector


@dataclass(frozen=True)
class PeptideRecord:
    """One peptide: ordered monomer ids plus label and split metadata."""

    peptide_id: str
    monomers: tuple[str, ...]
    permeability: float
    group_id: str
    molecule_fingerprint: SparseCountVector | None = None
    scaffold_id: str | None = None
    force_train: bool = False

    def __post_init__(self):
        object.__setattr__(self, "monomers", tuple(self.monomers))
        n = len(self.monomers)
        if not (LENGTH_MIN <= n <= LENGTH_MAX):
            raise ValidationError(
                f"peptide {self.peptide_id!r}: length {n} outside [{LENGTH_MIN},{LENGTH_MAX}]"
            )
        p = float(self.permeability)
        if not (PERM_MIN <= p <= PERM_MAX):
            raise ValidationError(
                f"peptide {self.peptide_id!r}: permeability {p} outside [{PERM_MIN},{PERM_MAX}]"
            )

    @property
    def length(self) -> int:
        return len(self.monomers)


@dataclass
class Dataset:
    """Immutable after construction; safe for concurrent reads."""

    monomers: dict[str, MonomerRecord] = field(default_factory=dict)
    peptides: list[PeptideRecord] = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self):
        seen = set()
        for pep in self.peptides:
            if pep.peptide_id in seen:
                raise IntegrityError(f"duplicate peptide id {pep.peptide_id!r}")
            seen.add(pep.peptide_id)
            for mid in pep.monomers:
                if mid not in self.monomers:
                    raise IntegrityError(
                        f"peptide {pep.peptide_id!r} references unknown monomer {mid!r}"
                    )

    def peptide_by_id(self, peptide_id: str) -> PeptideRecord:
        if not hasattr(self, "_index"):
            self._index = {p.peptide_id: p for p in self.peptides}
        try:
            return self._index[peptide_id]
        except KeyError:
            raise IntegrityError(f"unknown peptide id {peptide_id!r}") from None

    def peptide_ids(self) -> list[str]:
        return [p.peptide_id for p in self.peptides]

    def subset(self, peptide_ids: Iterable[str]) -> "Dataset":
        peps = [self.peptide_by_id(pid) for pid in peptide_ids]
        return Dataset(monomers=self.monomers, peptides=peps)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.monomers == other.monomers and self.peptides == other.peptides


def _parse_fingerprint(pairs, line_number, what) -> SparseCountVector:
    if not isinstance(pairs, list):
        raise ParseError(f"{what} must be a list of [id,count] pairs", line_number)
    prev = -1
    for pair in pairs:
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not isinstance(pair[0], int)
            or not isinstance(pair[1], int)
        ):
            raise ParseError(f"{what} entries must be [int,int] pairs", line_number)
        fid, count = pair
        if not (0 <= fid <= _U64_MAX):
            raise ParseError(f"{what} feature id {fid} outside unsigned 64-bit range", line_number)
        if count < 1:
            raise ParseError(f"{what} count {count} must be >= 1", line_number)
        if fid <= prev:
            raise ParseError(f"{what} feature ids not strictly increasing", line_number)
        prev = fid
    return SparseCountVector.from_pairs((p[0], p[1]) for p in pairs)


def _require(obj, key, types, line_number):
    if key not in obj:
        raise ParseError(f"missing field {key!r}", line_number)
    value = obj[key]
    if not isinstance(value, types):
        raise ParseError(f"field {key!r} has wrong type", line_number)
    return value


def parse_dataset(stream: IO[str] | Iterable[str]) -> Dataset:
    """Parse the JSONL interchange format into a validated Dataset.

    Raises ParseError (with line number) on malformed lines, IntegrityError on
    dangling monomer references or duplicate ids, ValidationError on
    out-of-range values.
    """
    monomers: dict[str, MonomerRecord] = {}
    peptides: list[PeptideRecord] = []
    for line_number, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line_number) from None
        if not isinstance(obj, dict):
            raise ParseError("record must be a JSON object", line_number)
        kind = obj.get("kind")
        if kind == "monomer":
            mid = _require(obj, "id", str, line_number)
            fp = _parse_fingerprint(_require(obj, "fp", list, line_number), line_number, "fp")
            if mid in monomers:
                raise IntegrityError(f"line {line_number}: duplicate monomer id {mid!r}")
            monomers[mid] = MonomerRecord(mid, fp)
        elif kind == "peptide":
            pid = _require(obj, "id", str, line_number)
            mono = _require(obj, "monomers", list, line_number)
            if not mono or not all(isinstance(m, str) for m in mono):
                raise ParseError("'monomers' must be a nonempty list of strings", line_number)
            perm = _require(obj, "perm", (int, float), line_number)
            group = _require(obj, "group", str, line_number)
            scaffold = obj.get("scaffold")
            if scaffold is not None and not isinstance(scaffold, str):
                raise ParseError("'scaffold' must be a string or null", line_number)
            force_train = obj.get("force_train", False)
            if not isinstance(force_train, bool):
                raise ParseError("'force_train' must be a boolean", line_number)
            mol_fp = obj.get("mol_fp")
            fp = None
            if mol_fp is not None:
                fp = _parse_fingerprint(mol_fp, line_number, "mol_fp")
            try:
                pep = PeptideRecord(
                    peptide_id=pid,
                    monomers=tuple(mono),
                    permeability=float(perm),
                    group_id=group,
                    molecule_fingerprint=fp,
                    scaffold_id=scaffold,
                    force_train=force_train,
                )
            except ValidationError as exc:
                raise ValidationError(f"line {line_number}: {exc}") from None
            peptides.append(pep)
        else:
            raise ParseError(f"unknown record kind {kind!r}", line_number)
    return Dataset(monomers=monomers, peptides=peptides)


def serialize_dataset(ds: Dataset, stream: IO[str]) -> None:
    """Write the JSONL form; parse_dataset(serialize_dataset(ds)) == ds."""
    for rec in ds.monomers.values():
        obj = {"kind": "monomer", "id": rec.monomer_id, "fp": rec.fingerprint.to_pairs()}
        stream.write(json.dumps(obj, separators=(",", ":")) + "\n")
    for pep in ds.peptides:
        obj = {
            "kind": "peptide",
            "id": pep.peptide_id,
            "monomers": list(pep.monomers),
            "perm": pep.permeability,
            "mol_fp": None
            if pep.molecule_fingerprint is None
            else pep.molecule_fingerprint.to_pairs(),
            "group": pep.group_id,
            "scaffold": pep.scaffold_id,
            "force_train": pep.force_train,
        }
        stream.write(json.dumps(obj, separators=(",", ":")) + "\n")


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_dataset(fh)


def save_dataset(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        serialize_dataset(ds, fh)


def binary_label(p: float) -> int:
    """1 iff the peptide counts as permeable (threshold is inclusive)."""
    return 1 if p >= PERMEABLE_THRESHOLD else 0


def labels_vector(ds: Dataset, peptide_ids: Iterable[str] | None = None) -> np.ndarray:
    if peptide_ids is None:
        peps = ds.peptides
    else:
        peps = [ds.peptide_by_id(pid) for pid in peptide_ids]
    return np.array([binary_label(p.permeability) for p in peps], dtype=np.int64)


def permeability_vector(ds: Dataset, peptide_ids: Iterable[str] | None = None) -> np.ndarray:
    if peptide_ids is None:
        peps = ds.peptides
    else:
        peps = [ds.peptide_by_id(pid) for pid in peptide_ids]
    return np.array([p.permeability for p in peps], dtype=np.float64)


def class_counts(ds: Dataset) -> tuple[int, int]:
    """(n_negative, n_positive) under the binary permeability label."""
    labels = labels_vector(ds)
    n_pos = int(labels.sum()) if labels.size else 0
    return len(ds.peptides) - n_pos, n_pos
