"""Checks that require the real CycPeptMPDB exports.

These run only when the corresponding JSONL exports exist (point
PEPGAK_SETTING_A / PEPGAK_SETTING_B at files produced by the ingest package);
the sandbox has no access to the public download, so they skip by default.
"""

import os

import pytest

from pepgak import binary_label, class_counts, load_dataset, split_random_811, split_scaffold_811

SETTING_A = os.environ.get("PEPGAK_SETTING_A")
SETTING_B = os.environ.get("PEPGAK_SETTING_B")

needs_a = pytest.mark.skipif(
    not (SETTING_A and os.path.exists(SETTING_A)),
    reason="Setting-A export not available (set PEPGAK_SETTING_A)",
)
needs_b = pytest.mark.skipif(
    not (SETTING_B and os.path.exists(SETTING_B)),
    reason="Setting-B export not available (set PEPGAK_SETTING_B)",
)


@needs_a
def test_setting_a_counts():
    ds = load_dataset(SETTING_A)
    assert len(ds.peptides) == 7221
    assert len(ds.monomers) == 276
    assert class_counts(ds) == (4801, 2420)


@needs_a
def test_setting_a_label_stratified_fold_shape():
    from pepgak import split_label_stratified

    ds = load_dataset(SETTING_A)
    plan = split_label_stratified(ds, 5, seed=0)
    sizes = sorted(
        sum(1 for tag in plan.assignments.values() if tag == fold) for fold in range(5)
    )
    assert sizes[0] >= 1444 and sizes[-1] <= 1445
    global_pos = sum(binary_label(p.permeability) for p in ds.peptides)
    for fold in range(5):
        _, test_ids = plan.fold_ids(fold)
        pos = sum(binary_label(ds.peptide_by_id(p).permeability) for p in test_ids)
        assert abs(pos - global_pos / 5) <= 1


@needs_b
def test_setting_b_random_split_sizes():
    ds = load_dataset(SETTING_B)
    assert len(ds.peptides) == 5826
    plan = split_random_811(ds, seed=0)
    parts = plan.partition_ids()
    assert len(parts["train"]) == 4674
    assert len(parts["val"]) == 576
    assert len(parts["test"]) == 576


@needs_b
def test_setting_b_scaffold_split_no_span():
    ds = load_dataset(SETTING_B)
    plan = split_scaffold_811(ds)
    part_of = {}
    for pep in ds.peptides:
        key = (pep.length, pep.scaffold_id)
        tag = plan.assignments[pep.peptide_id]
        if key in part_of:
            assert part_of[key] == tag
        part_of[key] = tag
