"""Gaussian-process regression and Laplace-approximation classification over
precomputed Gram matrices, plus inner-CV hyperparameter selection.

Both models use a zero prior mean. Classification maps {0,1} labels to the
standard +/-1 logistic formulation internally and runs Newton iterations with
the numerically stable B = I + W^1/2 K W^1/2 parameterization. The predictive
logistic integral is evaluated with 32-node Gauss-Hermite quadrature.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import expit

from .data import Dataset, labels_vector, permeability_vector
from .errors import (
    ConvergenceError,
    FactorizationError,
    NumericalError,
    ValidationError,
)
from .gram import GramBuilder, GramMatrix, KernelSpec, mix_kernels
from .metrics import METRIC_DIRECTIONS, compute_metric
from .splits import SplitPlan

__all__ = [
    "GPRegressor",
    "LaplaceState",
    "GridPoint",
    "mix_kernels",
    "fit_regressor",
    "predict_regressor",
    "fit_laplace",
    "predict_laplace",
    "select_hyperparams",
]

MAX_NEWTON_ITER = 100
OBJECTIVE_TOL = 1e-10
GRADIENT_TOL = 1e-6
_GH_NODES, _GH_WEIGHTS = hermgauss(32)
_PROB_EPS = 1e-15


def _factor_with_jitter(K: np.ndarray, base_jitter: float):
    """Cholesky with the documented jitter policy: start at the spec value,
    double up to 3 times, then fail."""
    jitter = base_jitter
    for attempt in range(4):
        try:
            mat = K if jitter == 0.0 else K + jitter * np.eye(K.shape[0])
            return cho_factor(mat, lower=True), jitter
        except np.linalg.LinAlgError:
            if jitter == 0.0 or attempt == 3:
                break
            jitter *= 2.0
    raise FactorizationError(
        f"Cholesky failed (jitter up to {jitter:g}); min diagonal "
        f"{float(np.diag(K).min()):g}"
    )


@dataclass
class GPRegressor:
    """Fitted exact-GP regressor state; immutable once built."""

    train_ids: tuple[str, ...]
    spec: KernelSpec
    eta2: float
    alpha: np.ndarray  # (K + eta2 I)^-1 (y - offset)
    chol: tuple  # cho_factor output for K + eta2 I (+ jitter)
    y_offset: float
    jitter_used: float


def fit_regressor(
    g: GramMatrix, y: np.ndarray, eta2: float, center_targets: bool = False
) -> GPRegressor:
    """Factorize amplitude*K + eta2*I and solve for the weight vector.

    center_targets subtracts the training mean from y and re-adds it at
    prediction time; off by default so the zero-mean closed forms hold.
    """
    if not g.is_square:
        raise ValidationError("training Gram must be square")
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != len(g.row_ids):
        raise ValidationError("label vector length does not match Gram size")
    if not np.all(np.isfinite(y)):
        raise ValidationError("labels must be finite")
    if not eta2 > 0:
        raise ValidationError(f"noise variance must be > 0, got {eta2}")
    K = g.spec.amplitude * g.values + eta2 * np.eye(len(y))
    chol, jitter_used = _factor_with_jitter(K, g.spec.jitter)
    offset = float(y.mean()) if center_targets else 0.0
    alpha = cho_solve(chol, y - offset)
    if not np.all(np.isfinite(alpha)):
        raise NumericalError("regression weights are not finite")
    return GPRegressor(
        train_ids=g.row_ids,
        spec=g.spec,
        eta2=float(eta2),
        alpha=alpha,
        chol=chol,
        y_offset=offset,
        jitter_used=jitter_used,
    )


def predict_regressor(
    model: GPRegressor, k_star: GramMatrix | np.ndarray, k_star_star: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance for test points.

    k_star holds one row per test point over the training ids; k_star_star the
    prior self-similarities. Variances are clamped at zero (warning if the
    overshoot exceeds 1e-10).
    """
    ks = k_star.values if isinstance(k_star, GramMatrix) else np.asarray(k_star, dtype=np.float64)
    if ks.ndim != 2 or ks.shape[1] != len(model.train_ids):
        raise ValidationError("k_star must be (n_test, n_train)")
    kss = np.asarray(k_star_star, dtype=np.float64).ravel()
    if kss.shape[0] != ks.shape[0]:
        raise ValidationError("k_star_star length must match the number of test rows")
    amp = model.spec.amplitude
    ks = amp * ks
    kss = amp * kss
    mean = ks @ model.alpha + model.y_offset
    L = model.chol[0]
    v = solve_triangular(L, ks.T, lower=True)
    var = kss - np.sum(v * v, axis=0)
    if np.any(var < -1e-10):
        warnings.warn(
            f"clamped negative predictive variance (min {var.min():.3e})", stacklevel=2
        )
    return mean, np.maximum(var, 0.0)


@dataclass
class LaplaceState:
    """Laplace-approximate posterior at the mode of the latent logits."""

    train_ids: tuple[str, ...]
    spec: KernelSpec
    f_hat: np.ndarray
    W: np.ndarray  # diagonal of the negative log-likelihood Hessian, in [0, 0.25]
    sqrt_W: np.ndarray
    B_chol: np.ndarray  # lower Cholesky factor of I + W^1/2 K W^1/2
    weight_vec: np.ndarray  # K^-1 f_hat, by construction of the Newton update
    grad_at_mode: float
    jitter_used: float
    iterations: int


def _log_likelihood(y: np.ndarray, f: np.ndarray) -> float:
    # log Psi(f) for y=1, log(1 - Psi(f)) for y=0, in a saturation-safe form.
    return float(np.sum(y * f - np.logaddexp(0.0, f)))


def fit_laplace(
    g: GramMatrix,
    y: np.ndarray,
    max_iter: int = MAX_NEWTON_ITER,
    objective_tol: float = OBJECTIVE_TOL,
    gradient_tol: float = GRADIENT_TOL,
) -> LaplaceState:
    """Newton iteration on the latent-logit posterior with logistic likelihood.

    Stops when the objective change is <= 1e-10 or the posterior gradient
    infinity-norm is <= 1e-6; raises ConvergenceError after max_iter.
    """
    if not g.is_square:
        raise ValidationError("training Gram must be square")
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != len(g.row_ids):
        raise ValidationError("label vector length does not match Gram size")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValidationError("labels must be 0 or 1")
    if len(np.unique(y)) < 2:
        warnings.warn("training labels are single-class; posterior is one-sided", stacklevel=2)
    n = y.shape[0]
    jitter = g.spec.jitter
    K = g.spec.amplitude * g.values
    if jitter > 0.0:
        K = K + jitter * np.eye(n)
    f = np.zeros(n)
    a = np.zeros(n)
    eye = np.eye(n)
    objective = -np.inf
    converged = False
    iterations = 0
    grad_inf = np.inf
    for iterations in range(1, max_iter + 1):
        pi = expit(f)
        W = pi * (1.0 - pi)
        sW = np.sqrt(W)
        B = eye + sW[:, None] * K * sW[None, :]
        L = np.linalg.cholesky(B)
        grad_ll = y - pi
        b = W * f + grad_ll
        rhs = sW * (K @ b)
        half = solve_triangular(L, rhs, lower=True)
        a = b - sW * solve_triangular(L.T, half, lower=False)
        f = K @ a
        new_objective = -0.5 * float(a @ f) + _log_likelihood(y, f)
        grad_inf = float(np.max(np.abs((y - expit(f)) - a)))
        if abs(new_objective - objective) <= objective_tol or grad_inf <= gradient_tol:
            objective = new_objective
            converged = True
            break
        objective = new_objective
    if not converged:
        raise ConvergenceError(
            f"Laplace mode finding did not converge in {max_iter} iterations "
            f"(gradient inf-norm {grad_inf:.3e})"
        )
    pi = expit(f)
    W = pi * (1.0 - pi)
    sW = np.sqrt(W)
    B = eye + sW[:, None] * K * sW[None, :]
    L = np.linalg.cholesky(B)
    return LaplaceState(
        train_ids=g.row_ids,
        spec=g.spec,
        f_hat=f,
        W=W,
        sqrt_W=sW,
        B_chol=L,
        weight_vec=a,
        grad_at_mode=grad_inf,
        jitter_used=jitter,
        iterations=iterations,
    )


def rebuild_laplace_state(g: GramMatrix, f_hat: np.ndarray, weight_vec: np.ndarray,
                          grad_at_mode: float) -> LaplaceState:
    """Recompute the factorization of a serialized Laplace fit.

    Model files persist only the mode and weight vectors; the curvature terms
    and the Cholesky factor are cheap to rebuild from the training Gram.
    """
    n = len(g.row_ids)
    K = g.spec.amplitude * g.values
    if g.spec.jitter > 0.0:
        K = K + g.spec.jitter * np.eye(n)
    f_hat = np.asarray(f_hat, dtype=np.float64)
    pi = expit(f_hat)
    W = pi * (1.0 - pi)
    sW = np.sqrt(W)
    B = np.eye(n) + sW[:, None] * K * sW[None, :]
    return LaplaceState(
        train_ids=g.row_ids,
        spec=g.spec,
        f_hat=f_hat,
        W=W,
        sqrt_W=sW,
        B_chol=np.linalg.cholesky(B),
        weight_vec=np.asarray(weight_vec, dtype=np.float64),
        grad_at_mode=grad_at_mode,
        jitter_used=g.spec.jitter,
        iterations=0,
    )


def rebuild_regressor(g: GramMatrix, alpha: np.ndarray, eta2: float,
                      y_offset: float) -> GPRegressor:
    """Recompute the factorization of a serialized regression fit."""
    K = g.spec.amplitude * g.values + eta2 * np.eye(len(g.row_ids))
    chol, jitter_used = _factor_with_jitter(K, g.spec.jitter)
    return GPRegressor(
        train_ids=g.row_ids,
        spec=g.spec,
        eta2=float(eta2),
        alpha=np.asarray(alpha, dtype=np.float64),
        chol=chol,
        y_offset=float(y_offset),
        jitter_used=jitter_used,
    )


def logistic_gauss_integral(mu: np.ndarray, var: np.ndarray) -> np.ndarray:
    """E[Psi(z)] for z ~ N(mu, var), by 32-node Gauss-Hermite quadrature."""
    mu = np.asarray(mu, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    z = mu[..., None] + np.sqrt(2.0 * var)[..., None] * _GH_NODES
    return (expit(z) @ _GH_WEIGHTS) / np.sqrt(np.pi)


def predict_laplace(
    state: LaplaceState,
    g_train: GramMatrix,
    k_star: GramMatrix | np.ndarray,
    k_star_star: np.ndarray,
) -> np.ndarray:
    """Predictive class-1 probabilities, strictly inside (0, 1)."""
    if g_train.row_ids != state.train_ids:
        raise ValidationError("training Gram ids do not match the fitted state")
    ks = k_star.values if isinstance(k_star, GramMatrix) else np.asarray(k_star, dtype=np.float64)
    if ks.ndim != 2 or ks.shape[1] != len(state.train_ids):
        raise ValidationError("k_star must be (n_test, n_train)")
    kss = np.asarray(k_star_star, dtype=np.float64).ravel()
    if kss.shape[0] != ks.shape[0]:
        raise ValidationError("k_star_star length must match the number of test rows")
    amp = state.spec.amplitude
    ks = amp * ks
    kss = amp * kss
    mu = ks @ state.weight_vec
    v = solve_triangular(state.B_chol, state.sqrt_W[:, None] * ks.T, lower=True)
    var = kss - np.sum(v * v, axis=0)
    if np.any(var < -1e-8):
        raise NumericalError(f"negative latent variance beyond tolerance ({var.min():.3e})")
    var = np.maximum(var, 0.0)
    prob = logistic_gauss_integral(mu, var)
    return np.clip(prob, _PROB_EPS, 1.0 - _PROB_EPS)


@dataclass(frozen=True)
class GridPoint:
    """One hyperparameter candidate: a kernel spec plus, for regression, the
    observation noise variance."""

    spec: KernelSpec
    eta2: float | None = None

    def to_dict(self) -> dict:
        return {"spec": self.spec.to_dict(), "eta2": self.eta2}


def _fold_score(
    builder: GramBuilder,
    point: GridPoint,
    train_ids: Sequence[str],
    test_ids: Sequence[str],
    y_train: np.ndarray,
    y_test: np.ndarray,
    objective: str,
    task: str,
) -> float:
    full = builder.gram(point.spec)
    g_train = full.submatrix(train_ids, train_ids)
    k_star = full.submatrix(test_ids, train_ids)
    k_ss = np.diag(full.submatrix(test_ids, test_ids).values)
    if task == "classify":
        state = fit_laplace(g_train, y_train)
        preds = predict_laplace(state, g_train, k_star, k_ss)
    else:
        eta2 = point.eta2 if point.eta2 is not None else 0.1
        model = fit_regressor(g_train, y_train, eta2)
        preds, _ = predict_regressor(model, k_star, k_ss)
    return compute_metric(objective, preds, y_test)


def select_hyperparams(
    train: Dataset,
    grid: Sequence[GridPoint | KernelSpec],
    folds: SplitPlan,
    objective: str,
    task: str = "classify",
    builder: GramBuilder | None = None,
) -> tuple[GridPoint, list[dict]]:
    """Inner-CV grid selection.

    Each candidate is scored by the mean of the objective over the plan's
    folds; ties break deterministically toward the earlier grid entry. A
    candidate that fails to fit on any fold is scored as worst, not fatal.
    Returns the winner plus the full score table.
    """
    if not grid:
        raise ValidationError("hyperparameter grid must be nonempty")
    points = [p if isinstance(p, GridPoint) else GridPoint(p) for p in grid]
    if objective not in METRIC_DIRECTIONS:
        raise ValidationError(f"unknown objective {objective!r}")
    direction = METRIC_DIRECTIONS[objective]
    if builder is None:
        builder = GramBuilder(train)
    if task == "classify":
        targets = {p.peptide_id: float(l) for p, l in zip(train.peptides, labels_vector(train))}
    else:
        targets = {
            p.peptide_id: v for p, v in zip(train.peptides, permeability_vector(train))
        }
    table = []
    best_index = -1
    best_score = None
    for index, point in enumerate(points):
        fold_scores = []
        failed = False
        for fold in range(folds.n_folds):
            train_ids, test_ids = folds.fold_ids(fold)
            y_train = np.array([targets[p] for p in train_ids])
            y_test = np.array([targets[p] for p in test_ids])
            try:
                score = _fold_score(
                    builder, point, train_ids, test_ids, y_train, y_test, objective, task
                )
            except (NumericalError, ValidationError) as exc:
                warnings.warn(
                    f"grid point {index} failed on fold {fold}: {exc}", stacklevel=2
                )
                failed = True
                break
            fold_scores.append(score)
        if failed:
            mean_score = None
        else:
            valid = [s for s in fold_scores if not np.isnan(s)]
            if len(valid) < len(fold_scores):
                warnings.warn(
                    f"grid point {index}: {len(fold_scores) - len(valid)} fold(s) had an "
                    f"undefined {objective}; excluded from the mean",
                    stacklevel=2,
                )
            mean_score = float(np.mean(valid)) if valid else None
        table.append(
            {
                "index": index,
                "point": point.to_dict(),
                "fold_scores": fold_scores if not failed else None,
                "mean": mean_score,
            }
        )
        if mean_score is not None:
            better = best_score is None or direction * (mean_score - best_score) > 0
            if better:
                best_score = mean_score
                best_index = index
    if best_index < 0:
        raise NumericalError("every grid point failed during inner CV")
    return points[best_index], table
