"""Nested cross-validation driver, holdout evaluation, and result writers.

Every outer fold runs the inner-CV grid selection on its training slice,
refits the winner on the full outer-train set, and scores the untouched
outer-test slice. Aggregates report mean +/- standard error of the mean over
folds. A failed fold aborts the run; nothing is skipped silently.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset, labels_vector, permeability_vector
from .errors import IntegrityError, ValidationError
from .gp import (
    GridPoint,
    fit_laplace,
    fit_regressor,
    predict_laplace,
    predict_regressor,
    select_hyperparams,
)
from .gram import GramBuilder, KernelSpec
from .metrics import (
    CLASSIFICATION_METRICS,
    METRIC_DIRECTIONS,
    REGRESSION_METRICS,
    compute_metric,
)
from .splits import TEST, TRAIN, VAL, SplitPlan, SplitScheme, make_kfold_plan

DEFAULT_HISTOGRAM_BINS = 30


@dataclass
class FoldResult:
    """One outer fold: metric map plus the per-sample predictions it came from."""

    fold: int
    metrics: dict[str, float]
    predictions: list[tuple[str, float, float]]  # (peptide_id, prediction, truth)
    selected: dict

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "selected": self.selected,
            "metrics": self.metrics,
            "predictions": [[pid, pred, truth] for pid, pred, truth in self.predictions],
        }


def _targets(ds: Dataset, task: str) -> dict[str, float]:
    if task == "classify":
        values = labels_vector(ds)
    else:
        values = permeability_vector(ds)
    return {p.peptide_id: float(v) for p, v in zip(ds.peptides, values)}


def _fit_predict(
    builder: GramBuilder,
    point: GridPoint,
    train_ids: Sequence[str],
    test_ids: Sequence[str],
    y_train: np.ndarray,
    task: str,
) -> np.ndarray:
    full = builder.gram(point.spec)
    g_train = full.submatrix(train_ids, train_ids)
    k_star = full.submatrix(test_ids, train_ids)
    k_ss = np.diag(full.submatrix(test_ids, test_ids).values)
    if task == "classify":
        state = fit_laplace(g_train, y_train)
        return predict_laplace(state, g_train, k_star, k_ss)
    model = fit_regressor(g_train, y_train, point.eta2 if point.eta2 is not None else 0.1)
    mean, _ = predict_regressor(model, k_star, k_ss)
    return mean


def _evaluate(preds: np.ndarray, truth: np.ndarray, task: str) -> dict[str, float]:
    names = CLASSIFICATION_METRICS if task == "classify" else REGRESSION_METRICS
    return {name: compute_metric(name, preds, truth) for name in names}


def _guard_group_leakage(ds: Dataset, train_ids, test_ids):
    train_groups = {ds.peptide_by_id(pid).group_id for pid in train_ids}
    for pid in test_ids:
        if ds.peptide_by_id(pid).group_id in train_groups:
            raise IntegrityError(
                f"leakage guard: test peptide {pid!r} shares a group with the training set"
            )


def nested_cv(
    ds: Dataset,
    plan: SplitPlan,
    grid: Sequence[GridPoint | KernelSpec],
    objective: str,
    task: str = "classify",
    builder: GramBuilder | None = None,
) -> tuple[list[FoldResult], dict[str, dict[str, float]]]:
    """Outer-fold loop with per-fold inner selection; returns fold results and
    the mean +/- s.e.m. aggregate."""
    if not plan.is_kfold:
        raise ValidationError("nested_cv requires a k-fold outer plan")
    if not grid:
        raise ValidationError("hyperparameter grid must be nonempty")
    if builder is None:
        builder = GramBuilder(ds)
    targets = _targets(ds, task)
    results = []
    for fold in range(plan.n_folds):
        train_ids, test_ids = plan.fold_ids(fold)
        if plan.scheme is SplitScheme.GROUP_STRATIFIED_KFOLD:
            _guard_group_leakage(ds, train_ids, test_ids)
        inner_ds = ds.subset(train_ids)
        inner_seed = plan.seed + 1009 * (fold + 1)
        inner_plan = make_kfold_plan(inner_ds, plan.scheme, plan.k_inner, inner_seed)
        best, _table = select_hyperparams(
            inner_ds, grid, inner_plan, objective, task=task, builder=builder
        )
        y_train = np.array([targets[p] for p in train_ids])
        y_test = np.array([targets[p] for p in test_ids])
        preds = _fit_predict(builder, best, train_ids, test_ids, y_train, task)
        metrics = _evaluate(preds, y_test, task)
        results.append(
            FoldResult(
                fold=fold,
                metrics=metrics,
                predictions=list(zip(test_ids, preds.tolist(), y_test.tolist())),
                selected=best.to_dict(),
            )
        )
    return results, aggregate_results(results)


def holdout_run(
    ds: Dataset,
    plan: SplitPlan,
    grid: Sequence[GridPoint | KernelSpec],
    objective: str,
    task: str = "classify",
    builder: GramBuilder | None = None,
    run_index: int = 0,
) -> FoldResult:
    """Train/validation/test evaluation for the 8:1:1 protocols.

    Each grid point is fitted on train and scored on validation; the winner
    (earliest on ties) is refitted on train and scored once on test.
    """
    if plan.is_kfold:
        raise ValidationError("holdout_run requires an 8:1:1 plan")
    if not grid:
        raise ValidationError("hyperparameter grid must be nonempty")
    points = [p if isinstance(p, GridPoint) else GridPoint(p) for p in grid]
    if builder is None:
        builder = GramBuilder(ds)
    parts = plan.partition_ids()
    train_ids, val_ids, test_ids = parts[TRAIN], parts[VAL], parts[TEST]
    if not train_ids or not test_ids:
        raise ValidationError("holdout plan has an empty train or test partition")
    targets = _targets(ds, task)
    y_train = np.array([targets[p] for p in train_ids])
    direction = METRIC_DIRECTIONS[objective]
    best_point = None
    best_score = None
    if len(points) == 1 or not val_ids:
        if not val_ids and len(points) > 1:
            warnings.warn("empty validation partition; using the first grid point", stacklevel=2)
        best_point = points[0]
    else:
        y_val = np.array([targets[p] for p in val_ids])
        for point in points:
            preds = _fit_predict(builder, point, train_ids, val_ids, y_train, task)
            score = compute_metric(objective, preds, y_val)
            if math.isnan(score):
                continue
            if best_score is None or direction * (score - best_score) > 0:
                best_score = score
                best_point = point
        if best_point is None:
            best_point = points[0]
    y_test = np.array([targets[p] for p in test_ids])
    preds = _fit_predict(builder, best_point, train_ids, test_ids, y_train, task)
    metrics = _evaluate(preds, y_test, task)
    return FoldResult(
        fold=run_index,
        metrics=metrics,
        predictions=list(zip(test_ids, preds.tolist(), y_test.tolist())),
        selected=best_point.to_dict(),
    )


def aggregate_results(results: Sequence[FoldResult]) -> dict[str, dict[str, float]]:
    """metric -> {mean, sem, n}; undefined (NaN) fold values are excluded with
    a warning. s.e.m. is the sample standard deviation over folds / sqrt(k)."""
    if not results:
        raise ValidationError("nothing to aggregate")
    out: dict[str, dict[str, float]] = {}
    for name in results[0].metrics:
        values = np.array([r.metrics[name] for r in results], dtype=np.float64)
        valid = values[~np.isnan(values)]
        if valid.size < values.size:
            warnings.warn(
                f"{values.size - valid.size} fold(s) had undefined {name}; excluded",
                stacklevel=2,
            )
        if valid.size == 0:
            out[name] = {"mean": float("nan"), "sem": float("nan"), "n": 0}
            continue
        mean = float(valid.mean())
        sem = float(valid.std(ddof=1) / math.sqrt(valid.size)) if valid.size > 1 else 0.0
        out[name] = {"mean": mean, "sem": sem, "n": int(valid.size)}
    return out


def write_fold_results(results: Sequence[FoldResult], out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for result in results:
        path = out_dir / f"fold_{result.fold}.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        paths.append(path)
    return paths


def write_aggregate_csv(aggregate: dict[str, dict[str, float]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "mean", "sem"])
        for name, stats in aggregate.items():
            writer.writerow([name, repr(stats["mean"]), repr(stats["sem"])])


def write_probability_histogram(
    results: Sequence[FoldResult], path, bins: int = DEFAULT_HISTOGRAM_BINS
) -> None:
    """Bin counts of the pooled test-set predictions (the score-distribution data)."""
    preds = np.array(
        [pred for result in results for _, pred, _ in result.predictions], dtype=np.float64
    )
    counts, edges = np.histogram(preds, bins=bins, range=(0.0, 1.0))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_low", "bin_high", "count"])
        for low, high, count in zip(edges[:-1], edges[1:], counts):
            writer.writerow([repr(float(low)), repr(float(high)), int(count)])


def write_predictions_csv(result: FoldResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["peptide_id", "probability", "label"])
        for pid, pred, truth in result.predictions:
            writer.writerow([pid, repr(pred), int(truth) if truth in (0.0, 1.0) else repr(truth)])
