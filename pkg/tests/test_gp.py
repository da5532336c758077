import warnings

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import expit

from pepgak import (
    ConvergenceError,
    GramBuilder,
    GramMatrix,
    GridPoint,
    KernelFamily,
    KernelSpec,
    ValidationError,
    fit_laplace,
    fit_regressor,
    predict_laplace,
    predict_regressor,
    psd_check,
    select_hyperparams,
    split_label_stratified,
)
from pepgak.gp import logistic_gauss_integral, rebuild_laplace_state, rebuild_regressor
from conftest import random_peptide_dataset


def square_gram(values, spec=None, normalized=False):
    values = np.asarray(values, dtype=np.float64)
    ids = tuple(f"x{i}" for i in range(values.shape[0]))
    spec = spec or KernelSpec(KernelFamily.MD_GAK, jitter=0.0)
    return GramMatrix(ids, ids, values, spec, normalized)


def random_psd_gram(rng, n, jitter=0.0):
    A = rng.random((n, n)) - 0.5
    K = A @ A.T + 0.5 * np.eye(n)
    d = np.sqrt(np.diag(K))
    K = K / d[:, None] / d[None, :]
    np.fill_diagonal(K, 1.0)
    K = (K + K.T) / 2.0
    return square_gram(K, KernelSpec(KernelFamily.MD_GAK, jitter=jitter), normalized=True)


def _order_only_dataset():
    """Permutations of one multiset; the label is A-B adjacency."""
    from pepgak import Dataset, MonomerRecord, PeptideRecord, SparseCountVector

    rng = np.random.default_rng(5)

    def fp(uid):
        ids = sorted({1, 2, 3} | {50 + uid * 17 + t for t in range(8)})
        return SparseCountVector.from_pairs([(i, 1) for i in ids])

    mids = list("ABCDEF")
    monomers = {m: MonomerRecord(m, fp(i)) for i, m in enumerate(mids)}
    shared_molfp = SparseCountVector.from_pairs([(i, 1) for i in range(200, 240)])
    peptides = []
    index = 0
    while index < 24:
        positive = index % 2 == 0
        perm = list(rng.permutation(mids))
        ia, ib = perm.index("A"), perm.index("B")
        if positive:
            perm.pop(ib)
            perm.insert(perm.index("A") + 1, "B")
        elif abs(ia - ib) == 1:
            continue
        peptides.append(
            PeptideRecord(
                peptide_id=f"q{index}",
                monomers=tuple(perm),
                permeability=-5.0 if positive else -8.0,
                group_id=f"g{index}",
                molecule_fingerprint=shared_molfp,
            )
        )
        index += 1
    return Dataset(monomers=monomers, peptides=peptides)


class TestRegressor:
    def test_single_point_closed_form(self):
        g = square_gram([[1.0]])
        model = fit_regressor(g, [2.0], 1.0)
        assert model.alpha == pytest.approx([1.0])
        mean, var = predict_regressor(model, [[1.0]], [1.0])
        assert mean[0] == pytest.approx(1.0)
        assert var[0] == pytest.approx(0.5)

    def test_zero_targets_give_zero_weights(self, rng):
        g = random_psd_gram(rng, 6)
        model = fit_regressor(g, np.zeros(6), 0.5)
        assert np.allclose(model.alpha, 0.0)

    def test_large_noise_shrinks_to_prior(self, rng):
        g = random_psd_gram(rng, 6)
        y = rng.normal(size=6)
        model = fit_regressor(g, y, 1e12)
        mean, _ = predict_regressor(model, g.values, np.ones(6))
        assert np.abs(mean).max() < 1e-9

    def test_zero_cross_covariance_returns_prior(self, rng):
        g = random_psd_gram(rng, 5)
        model = fit_regressor(g, rng.normal(size=5), 0.3)
        mean, var = predict_regressor(model, np.zeros((2, 5)), np.array([1.0, 2.0]))
        assert np.allclose(mean, 0.0)
        assert np.allclose(var, [1.0, 2.0])

    def test_variance_never_exceeds_prior(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 15))
            g = random_psd_gram(rng, n)
            y = rng.normal(size=n)
            model = fit_regressor(g, y, float(rng.uniform(0.05, 2.0)))
            k_star = g.values[rng.integers(0, n, size=4)]
            prior = np.ones(4)
            _, var = predict_regressor(model, k_star, prior)
            assert np.all(var <= prior + 1e-10)

    def test_centering_toggle(self):
        g = square_gram([[1.0]])
        model = fit_regressor(g, [2.0], 1.0, center_targets=True)
        assert model.y_offset == pytest.approx(2.0)
        assert model.alpha == pytest.approx([0.0])
        mean, _ = predict_regressor(model, [[0.0]], [1.0])
        assert mean[0] == pytest.approx(2.0)

    def test_amplitude_scaling(self):
        spec = KernelSpec(KernelFamily.MD_GAK, amplitude=4.0, jitter=0.0)
        g = square_gram([[1.0]], spec)
        model = fit_regressor(g, [2.0], 1.0)
        # K = 4 -> alpha = 2/5; test mean = 4 * 2/5
        assert model.alpha == pytest.approx([0.4])
        mean, var = predict_regressor(model, [[1.0]], [1.0])
        assert mean[0] == pytest.approx(1.6)
        assert var[0] == pytest.approx(4.0 - 16.0 / 5.0)

    def test_dimension_mismatch(self, rng):
        g = random_psd_gram(rng, 4)
        model = fit_regressor(g, rng.normal(size=4), 0.1)
        with pytest.raises(ValidationError):
            predict_regressor(model, np.zeros((2, 3)), np.ones(2))

    def test_noise_must_be_positive(self, rng):
        g = random_psd_gram(rng, 3)
        with pytest.raises(ValidationError):
            fit_regressor(g, np.zeros(3), 0.0)


class TestLaplace:
    def test_single_point_stationarity(self):
        # f_hat solves f = 1 - logistic(f); independent bisection oracle.
        root = brentq(lambda f: f - (1.0 - expit(f)), -5.0, 5.0, xtol=1e-14)
        g = square_gram([[1.0]])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            state = fit_laplace(g, [1.0])
        assert state.f_hat[0] == pytest.approx(root, abs=1e-7)
        assert state.grad_at_mode <= 1e-6

    def test_two_point_single_class_side(self):
        g = square_gram(np.eye(2))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            state = fit_laplace(g, [1.0, 1.0])
        assert np.all(state.f_hat > 0)
        probs = predict_laplace(state, g, g.values, np.ones(2))
        assert np.all(probs > 0.5)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            state0 = fit_laplace(g, [0.0, 0.0])
        assert np.all(state0.f_hat < 0)

    def test_gradient_at_mode_random_problems(self, rng):
        for _ in range(50):
            n = 20
            g = random_psd_gram(rng, n, jitter=1e-6)
            y = rng.integers(0, 2, size=n).astype(float)
            if y.min() == y.max():
                y[0] = 1.0 - y[0]
            state = fit_laplace(g, y)
            assert state.grad_at_mode <= 1e-6
            assert np.all(state.W >= 0.0) and np.all(state.W <= 0.25)

    def test_predictive_matches_dense_reference(self, rng):
        # Naive dense-inverse implementation of the same posterior equations.
        for _ in range(10):
            n = 20
            g = random_psd_gram(rng, n, jitter=1e-6)
            y = rng.integers(0, 2, size=n).astype(float)
            if y.min() == y.max():
                y[0] = 1.0 - y[0]
            state = fit_laplace(g, y)
            K = g.values + 1e-6 * np.eye(n)
            k_star = g.values[:5]
            kss = np.ones(5)
            mu_ref = k_star @ np.linalg.solve(K, state.f_hat)
            cov_inner = np.linalg.inv(K + np.diag(1.0 / state.W))
            var_ref = kss - np.einsum("ij,jk,ik->i", k_star, cov_inner, k_star)
            probs_ref = logistic_gauss_integral(mu_ref, np.maximum(var_ref, 0.0))
            probs = predict_laplace(state, g, k_star, kss)
            assert np.allclose(probs, probs_ref, atol=1e-8)

    def test_quadrature_against_adaptive_oracle(self):
        cases = [(1.0, 1.0), (0.0, 4.0), (-2.0, 0.25), (3.0, 2.0)]
        for mu, var in cases:
            oracle, _ = quad(
                lambda z: expit(z) * np.exp(-((z - mu) ** 2) / (2 * var))
                / np.sqrt(2 * np.pi * var),
                mu - 30 * np.sqrt(var),
                mu + 30 * np.sqrt(var),
            )
            got = logistic_gauss_integral(np.array([mu]), np.array([var]))[0]
            assert got == pytest.approx(oracle, abs=1e-6)

    def test_zero_mean_gives_half(self):
        assert logistic_gauss_integral(np.array([0.0]), np.array([5.0]))[0] == pytest.approx(0.5)

    def test_zero_variance_degenerates_to_logistic(self):
        mus = np.array([-3.0, -0.5, 0.7, 4.0])
        got = logistic_gauss_integral(mus, np.zeros(4))
        assert np.allclose(got, expit(mus), atol=1e-12)

    def test_probabilities_strictly_inside_unit_interval(self, rng):
        g = random_psd_gram(rng, 10, jitter=1e-6)
        y = np.array([1.0] * 5 + [0.0] * 5)
        state = fit_laplace(g, y)
        probs = predict_laplace(state, g, 50.0 * g.values, 2500.0 * np.ones(10))
        assert np.all(probs > 0.0) and np.all(probs < 1.0)

    def test_nonconvergence_raises(self, rng):
        g = random_psd_gram(rng, 8, jitter=1e-6)
        y = rng.integers(0, 2, size=8).astype(float)
        with pytest.raises(ConvergenceError):
            fit_laplace(g, y, max_iter=1, objective_tol=0.0, gradient_tol=0.0)

    def test_bad_labels_rejected(self, rng):
        g = random_psd_gram(rng, 4)
        with pytest.raises(ValidationError):
            fit_laplace(g, [0.0, 1.0, 2.0, 0.0])

    def test_rebuild_state_matches(self, rng):
        g = random_psd_gram(rng, 12, jitter=1e-6)
        y = rng.integers(0, 2, size=12).astype(float)
        if y.min() == y.max():
            y[0] = 1.0 - y[0]
        state = fit_laplace(g, y)
        rebuilt = rebuild_laplace_state(g, state.f_hat, state.weight_vec, state.grad_at_mode)
        k_star = g.values[:3]
        kss = np.ones(3)
        assert np.allclose(
            predict_laplace(state, g, k_star, kss),
            predict_laplace(rebuilt, g, k_star, kss),
            atol=1e-14,
        )

    def test_rebuild_regressor_matches(self, rng):
        g = random_psd_gram(rng, 9, jitter=1e-6)
        y = rng.normal(size=9)
        model = fit_regressor(g, y, 0.2)
        rebuilt = rebuild_regressor(g, model.alpha, model.eta2, model.y_offset)
        k_star = g.values[:4]
        kss = np.ones(4)
        m1, v1 = predict_regressor(model, k_star, kss)
        m2, v2 = predict_regressor(rebuilt, k_star, kss)
        assert np.allclose(m1, m2) and np.allclose(v1, v2)


class TestSelectHyperparams:
    def test_single_entry_grid(self, motif_dataset):
        plan = split_label_stratified(motif_dataset, 3, seed=1)
        spec = KernelSpec(KernelFamily.MD_GAK)
        best, table = select_hyperparams(motif_dataset, [spec], plan, "roc_auc")
        assert best.spec == spec
        assert len(table) == 1

    def test_tie_breaks_toward_first(self, motif_dataset):
        plan = split_label_stratified(motif_dataset, 3, seed=1)
        spec = KernelSpec(KernelFamily.MD_GAK)
        best, table = select_hyperparams(motif_dataset, [spec, spec], plan, "roc_auc")
        assert table[0]["mean"] == table[1]["mean"]
        assert best is not None
        assert table[0]["index"] == 0

    def test_alpha_grid_prefers_generating_kernel(self):
        # Every peptide is a permutation of the same monomer multiset and all
        # share one molecule fingerprint, so the whole-molecule Tanimoto Gram
        # is constant (AUC pinned at 0.5 by the tie convention). The label is
        # pure adjacency (A next to B), visible only to the alignment kernel,
        # so the inner CV must pick alpha=1 (the alignment component).
        ds = _order_only_dataset()
        comps = (
            KernelSpec(KernelFamily.MD_GAK),
            KernelSpec(KernelFamily.TANIMOTO_PEPTIDE),
        )
        grid = [
            KernelSpec(KernelFamily.CONVEX, alpha=0.0, components=comps),
            KernelSpec(KernelFamily.CONVEX, alpha=1.0, components=comps),
        ]
        plan = split_label_stratified(ds, 3, seed=0)
        best, table = select_hyperparams(ds, grid, plan, "roc_auc")
        assert table[0]["mean"] == pytest.approx(0.5)
        assert table[1]["mean"] > table[0]["mean"]
        assert best.spec.alpha == 1.0

    def test_empty_grid_rejected(self, motif_dataset):
        plan = split_label_stratified(motif_dataset, 3, seed=1)
        with pytest.raises(ValidationError):
            select_hyperparams(motif_dataset, [], plan, "roc_auc")

    def test_unknown_objective_rejected(self, motif_dataset):
        plan = split_label_stratified(motif_dataset, 3, seed=1)
        with pytest.raises(ValidationError):
            select_hyperparams(motif_dataset, [KernelSpec(KernelFamily.MD_GAK)], plan, "nope")

    def test_regression_grid(self, motif_dataset):
        plan = split_label_stratified(motif_dataset, 3, seed=2)
        grid = [
            GridPoint(KernelSpec(KernelFamily.MD_GAK), eta2)
            for eta2 in (0.01, 0.1, 1.0)
        ]
        best, table = select_hyperparams(motif_dataset, grid, plan, "rmse", task="regress")
        assert best.eta2 in (0.01, 0.1, 1.0)
        assert all(entry["mean"] is not None for entry in table)


class TestMixturePsd:
    def test_builder_convex_mixture_psd(self, rng):
        ds = random_peptide_dataset(rng, n_peptides=15)
        builder = GramBuilder(ds)
        spec = KernelSpec(
            KernelFamily.CONVEX,
            alpha=0.5,
            components=(
                KernelSpec(KernelFamily.MD_GAK),
                KernelSpec(KernelFamily.TANIMOTO_PEPTIDE),
            ),
        )
        assert psd_check(builder.gram(spec)).is_psd
