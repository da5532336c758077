"""Split generators: label-stratified and group-stratified k-fold, plus the
random and scaffold 8:1:1 train/validation/test partitions.

All plans are deterministic given (dataset, seed); the scaffold split takes no
seed at all. Group and scaffold schemes never place members of one group or
scaffold on both sides of a boundary.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .data import Dataset, binary_label
from .errors import ValidationError

TRAIN, VAL, TEST = "train", "val", "test"


class SplitScheme(str, Enum):
    LABEL_STRATIFIED_KFOLD = "label_stratified_kfold"
    GROUP_STRATIFIED_KFOLD = "group_stratified_kfold"
    RANDOM_811 = "random_811"
    SCAFFOLD_811 = "scaffold_811"


@dataclass
class SplitPlan:
    """peptide_id -> fold index (k-fold schemes) or partition tag (8:1:1)."""

    scheme: SplitScheme
    k_outer: int
    k_inner: int
    seed: int
    assignments: dict[str, int | str] = field(default_factory=dict)

    @property
    def n_folds(self) -> int:
        return self.k_outer

    @property
    def is_kfold(self) -> bool:
        return self.scheme in (
            SplitScheme.LABEL_STRATIFIED_KFOLD,
            SplitScheme.GROUP_STRATIFIED_KFOLD,
        )

    def fold_ids(self, fold: int) -> tuple[list[str], list[str]]:
        """(train_ids, test_ids) for one outer fold of a k-fold plan."""
        if not self.is_kfold:
            raise ValidationError(f"{self.scheme.value} plans have no folds")
        if not (0 <= fold < self.k_outer):
            raise ValidationError(f"fold {fold} outside [0,{self.k_outer})")
        train = [pid for pid, tag in self.assignments.items() if tag != fold]
        test = [pid for pid, tag in self.assignments.items() if tag == fold]
        return train, test

    def partition_ids(self) -> dict[str, list[str]]:
        """tag -> ids for 8:1:1 plans."""
        out: dict[str, list[str]] = {TRAIN: [], VAL: [], TEST: []}
        for pid, tag in self.assignments.items():
            out[tag].append(pid)
        return out

    def check_partition(self, ds: Dataset) -> None:
        """Disjointness and exhaustiveness over the dataset."""
        ids = set(ds.peptide_ids())
        assigned = set(self.assignments)
        if ids != assigned:
            raise ValidationError("split plan does not cover the dataset exactly")


def split_label_stratified(ds: Dataset, k: int, seed: int, k_inner: int = 5) -> SplitPlan:
    """k folds whose per-fold class ratio is within one sample of the global one."""
    labels = {p.peptide_id: binary_label(p.permeability) for p in ds.peptides}
    by_class: dict[int, list[str]] = {0: [], 1: []}
    for pid, lab in labels.items():
        by_class[lab].append(pid)
    if not by_class[0] or not by_class[1]:
        raise ValidationError("label stratification requires both classes present")
    if k > min(len(by_class[0]), len(by_class[1])):
        raise ValidationError(f"k={k} exceeds the size of the smaller class")
    rng = np.random.default_rng(seed)
    assignments: dict[str, int] = {}
    for lab in (0, 1):
        ids = np.array(by_class[lab], dtype=object)
        ids = ids[rng.permutation(len(ids))]
        offset = int(rng.integers(0, k))
        for t, pid in enumerate(ids):
            assignments[str(pid)] = (t + offset) % k
    # Report assignments in dataset order for reproducible serialization.
    ordered = {p.peptide_id: assignments[p.peptide_id] for p in ds.peptides}
    return SplitPlan(SplitScheme.LABEL_STRATIFIED_KFOLD, k, k_inner, seed, ordered)


def split_group_stratified(ds: Dataset, k: int, seed: int, k_inner: int = 5) -> SplitPlan:
    """Whole groups assigned greedily, largest first, balancing positives then size.

    No group ever spans two folds; a group larger than n/k only warns.
    """
    groups: dict[str, list[str]] = {}
    group_pos: dict[str, int] = {}
    for pep in ds.peptides:
        groups.setdefault(pep.group_id, []).append(pep.peptide_id)
        group_pos[pep.group_id] = group_pos.get(pep.group_id, 0) + binary_label(
            pep.permeability
        )
    if not groups:
        raise ValidationError("dataset has no peptides")
    n = len(ds.peptides)
    rng = np.random.default_rng(seed)
    gids = sorted(groups)
    tie_rank = {gid: int(r) for gid, r in zip(gids, rng.permutation(len(gids)))}
    order = sorted(gids, key=lambda g: (-len(groups[g]), tie_rank[g]))
    if len(groups[order[0]]) > n / k:
        warnings.warn(
            f"group {order[0]!r} has {len(groups[order[0]])} members, more than n/k; "
            "fold sizes will be uneven",
            stacklevel=2,
        )
    fold_size = np.zeros(k, dtype=np.int64)
    fold_pos = np.zeros(k, dtype=np.int64)
    assignments: dict[str, int] = {}
    for gid in order:
        # Positive-count balance takes priority over size balance.
        keys = [(fold_pos[f], fold_size[f]) for f in range(k)]
        best = min(keys)
        candidates = [f for f in range(k) if keys[f] == best]
        fold = int(candidates[rng.integers(0, len(candidates))])
        for pid in groups[gid]:
            assignments[pid] = fold
        fold_size[fold] += len(groups[gid])
        fold_pos[fold] += group_pos[gid]
    ordered = {p.peptide_id: assignments[p.peptide_id] for p in ds.peptides}
    return SplitPlan(SplitScheme.GROUP_STRATIFIED_KFOLD, k, k_inner, seed, ordered)


def split_random_811(ds: Dataset, seed: int, k_inner: int = 5) -> SplitPlan:
    """8:1:1 random partition; force_train records always land in train.

    Holdout sizes are 10% of the eligible (non-forced) records, rounded.
    """
    forced = [p.peptide_id for p in ds.peptides if p.force_train]
    eligible = [p.peptide_id for p in ds.peptides if not p.force_train]
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(eligible))
    shuffled = [eligible[i] for i in perm]
    n_hold = int(round(0.1 * len(eligible)))
    if n_hold == 0:
        warnings.warn("validation/test partitions are empty", stacklevel=2)
    test = set(shuffled[:n_hold])
    val = set(shuffled[n_hold : 2 * n_hold])
    assignments: dict[str, str] = {}
    for pep in ds.peptides:
        pid = pep.peptide_id
        if pep.force_train:
            assignments[pid] = TRAIN
        elif pid in test:
            assignments[pid] = TEST
        elif pid in val:
            assignments[pid] = VAL
        else:
            assignments[pid] = TRAIN
    return SplitPlan(SplitScheme.RANDOM_811, 1, k_inner, seed, assignments)


def split_scaffold_811(ds: Dataset, k_inner: int = 5) -> SplitPlan:
    """Deterministic scaffold holdout targeting 8:1:1 after merging length buckets.

    Within each length bucket, the most frequent scaffolds fill the training
    quota; the remaining scaffolds go to test in ascending size order until the
    test quota is met, and whatever is left fills validation. Scaffolds holding
    force_train records are pinned to train. No scaffold spans two partitions.
    """
    for pep in ds.peptides:
        if pep.scaffold_id is None:
            raise ValidationError(f"peptide {pep.peptide_id!r} is missing a scaffold id")
    buckets: dict[int, dict[str, list]] = {}
    for pep in ds.peptides:
        buckets.setdefault(pep.length, {}).setdefault(pep.scaffold_id, []).append(pep)
    assignments: dict[str, str] = {}
    for length in sorted(buckets):
        scaffolds = buckets[length]
        n_bucket = sum(len(members) for members in scaffolds.values())
        train_target = 0.8 * n_bucket
        test_target = 0.1 * n_bucket
        pinned = {sid for sid, members in scaffolds.items() if any(p.force_train for p in members)}
        train_count = 0
        for sid in pinned:
            for pep in scaffolds[sid]:
                assignments[pep.peptide_id] = TRAIN
            train_count += len(scaffolds[sid])
        free = sorted(
            (sid for sid in scaffolds if sid not in pinned),
            key=lambda s: (-len(scaffolds[s]), s),
        )
        cursor = 0
        while cursor < len(free) and train_count < train_target:
            sid = free[cursor]
            for pep in scaffolds[sid]:
                assignments[pep.peptide_id] = TRAIN
            train_count += len(scaffolds[sid])
            cursor += 1
        rest = sorted(free[cursor:], key=lambda s: (len(scaffolds[s]), s))
        test_count = 0
        cursor = 0
        while cursor < len(rest) and test_count < test_target:
            sid = rest[cursor]
            for pep in scaffolds[sid]:
                assignments[pep.peptide_id] = TEST
            test_count += len(scaffolds[sid])
            cursor += 1
        for sid in rest[cursor:]:
            for pep in scaffolds[sid]:
                assignments[pep.peptide_id] = VAL
    ordered = {p.peptide_id: assignments[p.peptide_id] for p in ds.peptides}
    plan = SplitPlan(SplitScheme.SCAFFOLD_811, 1, k_inner, 0, ordered)
    parts = plan.partition_ids()
    if not parts[TEST] or not parts[VAL]:
        warnings.warn("scaffold split produced an empty validation or test partition", stacklevel=2)
    return plan


def make_kfold_plan(
    ds: Dataset, scheme: SplitScheme, k: int, seed: int, k_inner: int = 5
) -> SplitPlan:
    if scheme is SplitScheme.LABEL_STRATIFIED_KFOLD:
        return split_label_stratified(ds, k, seed, k_inner)
    if scheme is SplitScheme.GROUP_STRATIFIED_KFOLD:
        return split_group_stratified(ds, k, seed, k_inner)
    raise ValidationError(f"{scheme.value} is not a k-fold scheme")
