"""Run the leakage-aware evaluation protocols on the bundled motif dataset:
nested CV under both stratification schemes, plus the two 8:1:1 holdouts,
comparing kernel families the way the experiment harness does.
"""

import warnings
from pathlib import Path

from pepgak import (
    GramBuilder,
    KernelFamily,
    KernelSpec,
    holdout_run,
    load_dataset,
    nested_cv,
    split_group_stratified,
    split_label_stratified,
    split_random_811,
    split_scaffold_811,
)

warnings.filterwarnings("ignore")

fixture = Path(__file__).parent.parent / "tests" / "fixtures" / "synthetic_motif.jsonl"
ds = load_dataset(fixture)
builder = GramBuilder(ds)

kernels = {
    "gated alignment": KernelSpec(KernelFamily.GAK),
    "decoupled alignment": KernelSpec(KernelFamily.MD_GAK),
    "positioned (beta=1, T=3)": KernelSpec(KernelFamily.PMD_GAK, beta=1.0, bandwidth=3),
    "whole-molecule Tanimoto": KernelSpec(KernelFamily.TANIMOTO_PEPTIDE),
}

print("=== nested 5x5 CV, label-stratified ===")
plan = split_label_stratified(ds, 5, seed=0)
for name, spec in kernels.items():
    _, agg = nested_cv(ds, plan, [spec], objective="roc_auc", builder=builder)
    print(f"  {name:28s} AUC {agg['roc_auc']['mean']:.3f} +/- {agg['roc_auc']['sem']:.3f}   "
          f"ACC {agg['accuracy']['mean']:.3f}   Brier {agg['brier']['mean']:.3f}   "
          f"ECE {agg['ece']['mean']:.3f}")

print("\n=== nested 5x5 CV, duplicate-group-stratified ===")
plan = split_group_stratified(ds, 5, seed=0)
for name, spec in kernels.items():
    _, agg = nested_cv(ds, plan, [spec], objective="roc_auc", builder=builder)
    print(f"  {name:28s} AUC {agg['roc_auc']['mean']:.3f} +/- {agg['roc_auc']['sem']:.3f}")

print("\n=== 8:1:1 holdouts (decoupled alignment) ===")
spec = KernelSpec(KernelFamily.MD_GAK)
for seed in range(3):
    plan = split_random_811(ds, seed)
    result = holdout_run(ds, plan, [spec], objective="roc_auc", builder=builder)
    print(f"  random seed {seed}: test AUC {result.metrics['roc_auc']:.3f}")
plan = split_scaffold_811(ds)
result = holdout_run(ds, plan, [spec], objective="roc_auc", builder=builder)
print(f"  scaffold split:  test AUC {result.metrics['roc_auc']:.3f} (deterministic)")
