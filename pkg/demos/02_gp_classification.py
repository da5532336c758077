"""Fit the Laplace-approximation GP classifier on the bundled motif dataset
and look at its calibrated probabilities and the PSD structure of the Gram.
"""

from pathlib import Path

import numpy as np

from pepgak import (
    GramBuilder,
    KernelFamily,
    KernelSpec,
    binary_label,
    fit_laplace,
    load_dataset,
    predict_laplace,
    psd_check,
)

fixture = Path(__file__).parent.parent / "tests" / "fixtures" / "synthetic_motif.jsonl"
ds = load_dataset(fixture)
print(f"dataset: {len(ds.peptides)} peptides, {len(ds.monomers)} monomers")

builder = GramBuilder(ds)
spec = KernelSpec(KernelFamily.MD_GAK, normalize=True)
g = builder.gram(spec)
rep = psd_check(g)
print(f"Gram eigenvalue range: [{rep.min_eig:.3e}, {rep.max_eig:.3f}], PSD: {rep.is_psd}")

ids = [p.peptide_id for p in ds.peptides]
labels = np.array([binary_label(p.permeability) for p in ds.peptides], dtype=float)
train_ids, test_ids = ids[:48], ids[48:]
y_train = labels[:48]
y_test = labels[48:]

g_train = g.submatrix(train_ids, train_ids)
state = fit_laplace(g_train, y_train)
print(f"Newton iterations: {state.iterations}, gradient at mode: {state.grad_at_mode:.2e}")

k_star = g.submatrix(test_ids, train_ids)
k_ss = np.ones(len(test_ids))
probs = predict_laplace(state, g_train, k_star, k_ss)
print("\nheld-out predictions:")
for pid, p, y in zip(test_ids, probs, y_test):
    marker = "ok " if (p >= 0.5) == (y == 1) else "MISS"
    print(f"  {pid}: p(permeable) = {p:.3f}   label = {int(y)}   {marker}")
acc = np.mean((probs >= 0.5) == (y_test == 1))
print(f"\nheld-out accuracy: {acc:.2f}")
