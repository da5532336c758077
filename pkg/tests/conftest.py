import io
from pathlib import Path

import numpy as np
import pytest

from pepgak import (
    Dataset,
    MonomerRecord,
    PeptideRecord,
    SparseCountVector,
    load_dataset,
)

FIXTURE_PATH = Path(__file__).parent / "fixtures" / "synthetic_motif.jsonl"


def random_fingerprint(rng, pool_size=50, n_features=(5, 15)):
    """Sparse count vector over a shared feature pool (overlapping supports)."""
    k = int(rng.integers(*n_features))
    ids = np.sort(rng.choice(pool_size, size=k, replace=False)).astype(np.uint64)
    counts = rng.integers(1, 5, size=k)
    return SparseCountVector(ids, counts)


def random_peptide_dataset(rng, n_monomers=15, n_peptides=20, lengths=(2, 16)):
    """Synthetic dataset with random sparse fingerprints, for property tests."""
    mids = [f"m{i}" for i in range(n_monomers)]
    monomers = {mid: MonomerRecord(mid, random_fingerprint(rng)) for mid in mids}
    peptides = []
    for i in range(n_peptides):
        length = int(rng.integers(lengths[0], lengths[1]))
        seq = tuple(rng.choice(mids, size=length))
        mol_fp = random_fingerprint(rng, pool_size=80)
        peptides.append(
            PeptideRecord(
                peptide_id=f"p{i}",
                monomers=seq,
                permeability=float(rng.uniform(-10, -4)),
                group_id=f"g{i}",
                molecule_fingerprint=mol_fp,
                scaffold_id=f"s{i % 5}",
            )
        )
    return Dataset(monomers=monomers, peptides=peptides)


@pytest.fixture(scope="session")
def motif_dataset():
    return load_dataset(FIXTURE_PATH)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def dataset_from_text(text: str) -> Dataset:
    from pepgak import parse_dataset

    return parse_dataset(io.StringIO(text))
