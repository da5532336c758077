"""Batch command-line interface.

Subcommands: gram, crossval, fit, predict, metrics, validate. Configuration
precedence is CLI flag > PEPGAK_* environment variable > config file (flat
key=value lines) > built-in default. Every command is deterministic given
(config, dataset, seed); exit codes are 0 success, 2 validation, 3 numerical,
4 I/O, with a machine-readable error JSON on stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .crossval import (
    FoldResult,
    aggregate_results,
    holdout_run,
    nested_cv,
    write_aggregate_csv,
    write_fold_results,
    write_predictions_csv,
    write_probability_histogram,
)
from .data import (
    Dataset,
    class_counts,
    labels_vector,
    load_dataset,
    permeability_vector,
    serialize_dataset,
)
from .errors import IntegrityError, PepgakError, ValidationError
from .gp import (
    GridPoint,
    fit_laplace,
    fit_regressor,
    predict_laplace,
    predict_regressor,
    rebuild_laplace_state,
    rebuild_regressor,
)
from .gram import GramBuilder, GramMatrix, KernelFamily, KernelSpec, load_gram, save_gram
from .metrics import CLASSIFICATION_METRICS, compute_metric
from .splits import (
    SplitScheme,
    make_kfold_plan,
    split_random_811,
    split_scaffold_811,
)

ENV_PREFIX = "PEPGAK_"

PROTOCOLS = ("nested_cv_label", "nested_cv_group", "random_811", "scaffold_811")

DEFAULT_GRID_BETA = (0.5, 1.0, 2.0, 5.0)
DEFAULT_GRID_BAND = (2, 3, 5, 8)
DEFAULT_GRID_ALPHA = tuple(round(0.1 * i, 1) for i in range(11))
DEFAULT_GRID_ETA2 = (0.01, 0.1, 1.0)


@dataclasses.dataclass
class RunConfig:
    dataset: str | None = None
    kernel: str = "md_gak"
    beta: float | None = None
    band: int | None = None
    alpha: float | None = None
    normalize: bool = True
    amplitude: float = 1.0
    jitter: float = 1e-6
    eta2: float | None = None
    task: str = "classify"
    protocol: str = "nested_cv_label"
    objective: str = "roc_auc"
    seed: tuple[int, ...] = (0,)
    k_outer: int = 5
    k_inner: int = 5
    workers: int | None = None
    out_dir: str | None = None
    gram_in: str | None = None
    gram_out: str | None = None
    model: str | None = None
    predictions: str | None = None
    out: str | None = None
    grid_beta: tuple[float, ...] = DEFAULT_GRID_BETA
    grid_band: tuple[int, ...] = DEFAULT_GRID_BAND
    grid_alpha: tuple[float, ...] = DEFAULT_GRID_ALPHA
    grid_eta2: tuple[float, ...] = DEFAULT_GRID_ETA2
    grid_amplitude: tuple[float, ...] | None = None

    def resolved_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in _BOOL_TRUE:
        return True
    if low in _BOOL_FALSE:
        return False
    raise ValidationError(f"expected a boolean, got {text!r}")


def _parse_listed(text: str, conv):
    return tuple(conv(part) for part in str(text).split(",") if part.strip() != "")


_FIELD_PARSERS = {
    "dataset": str,
    "kernel": str,
    "beta": float,
    "band": int,
    "alpha": float,
    "normalize": _parse_bool,
    "amplitude": float,
    "jitter": float,
    "eta2": float,
    "task": str,
    "protocol": str,
    "objective": str,
    "seed": lambda t: _parse_listed(t, int),
    "k_outer": int,
    "k_inner": int,
    "workers": int,
    "out_dir": str,
    "gram_in": str,
    "gram_out": str,
    "model": str,
    "predictions": str,
    "out": str,
    "grid_beta": lambda t: _parse_listed(t, float),
    "grid_band": lambda t: _parse_listed(t, int),
    "grid_alpha": lambda t: _parse_listed(t, float),
    "grid_eta2": lambda t: _parse_listed(t, float),
    "grid_amplitude": lambda t: _parse_listed(t, float),
}


def _read_config_file(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{line_number}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _FIELD_PARSERS:
                raise ValidationError(f"{path}:{line_number}: unknown config key {key!r}")
            values[key] = _FIELD_PARSERS[key](value.strip())
    return values


def _env_overrides() -> dict:
    values = {}
    for key, parser in _FIELD_PARSERS.items():
        env_key = ENV_PREFIX + key.upper()
        if env_key in os.environ:
            values[key] = parser(os.environ[env_key])
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    layers = []
    if getattr(args, "config", None):
        layers.append(_read_config_file(args.config))
    layers.append(_env_overrides())
    cli_layer = {}
    for key in _FIELD_PARSERS:
        value = getattr(args, key, None)
        if value is not None:
            cli_layer[key] = _FIELD_PARSERS[key](str(value)) if isinstance(value, str) else value
    layers.append(cli_layer)
    for layer in layers:
        for key, value in layer.items():
            setattr(config, key, value)
    if isinstance(config.seed, int):
        config.seed = (config.seed,)
    if config.protocol not in PROTOCOLS:
        raise ValidationError(f"unknown protocol {config.protocol!r}; expected one of {PROTOCOLS}")
    if config.task not in ("classify", "regress"):
        raise ValidationError(f"unknown task {config.task!r}")
    KernelFamily(config.kernel)  # validates the family name
    return config


def _apply_workers(config: RunConfig) -> None:
    if config.workers is None:
        return
    if config.workers < 1:
        raise ValidationError("workers must be >= 1")
    import numba

    numba.set_num_threads(min(config.workers, numba.config.NUMBA_NUM_THREADS))


def base_spec(config: RunConfig) -> KernelSpec:
    """The single kernel spec implied by the explicit flags (no grid)."""
    family = KernelFamily(config.kernel)
    if family is KernelFamily.PMD_GAK:
        beta = config.beta if config.beta is not None else 1.0
        band = config.band if config.band is not None else 3
        return KernelSpec(
            family,
            beta=beta,
            bandwidth=band,
            normalize=config.normalize,
            amplitude=config.amplitude,
            jitter=config.jitter,
        )
    if family is KernelFamily.CONVEX:
        alpha = config.alpha if config.alpha is not None else 0.5
        comps = (
            KernelSpec(
                KernelFamily.MD_GAK,
                normalize=config.normalize,
                amplitude=1.0,
                jitter=config.jitter,
            ),
            KernelSpec(
                KernelFamily.TANIMOTO_PEPTIDE,
                normalize=config.normalize,
                amplitude=1.0,
                jitter=config.jitter,
            ),
        )
        return KernelSpec(
            family,
            alpha=alpha,
            components=comps,
            normalize=config.normalize,
            amplitude=config.amplitude,
            jitter=config.jitter,
        )
    return KernelSpec(
        family,
        normalize=config.normalize,
        amplitude=config.amplitude,
        jitter=config.jitter,
    )


def build_grid(config: RunConfig) -> list[GridPoint]:
    """Hyperparameter grid for the configured kernel family and task.

    Explicit --beta/--band/--alpha flags collapse the corresponding grid axis
    to that single value.
    """
    family = KernelFamily(config.kernel)
    amplitudes = config.grid_amplitude if config.grid_amplitude else (config.amplitude,)
    specs = []
    if family is KernelFamily.PMD_GAK:
        betas = (config.beta,) if config.beta is not None else config.grid_beta
        bands = (config.band,) if config.band is not None else config.grid_band
        for beta in betas:
            for band in bands:
                for amp in amplitudes:
                    specs.append(
                        KernelSpec(
                            family,
                            beta=beta,
                            bandwidth=band,
                            normalize=config.normalize,
                            amplitude=amp,
                            jitter=config.jitter,
                        )
                    )
    elif family is KernelFamily.CONVEX:
        alphas = (config.alpha,) if config.alpha is not None else config.grid_alpha
        comps = (
            KernelSpec(
                KernelFamily.MD_GAK,
                normalize=config.normalize,
                amplitude=1.0,
                jitter=config.jitter,
            ),
            KernelSpec(
                KernelFamily.TANIMOTO_PEPTIDE,
                normalize=config.normalize,
                amplitude=1.0,
                jitter=config.jitter,
            ),
        )
        for alpha in alphas:
            for amp in amplitudes:
                specs.append(
                    KernelSpec(
                        family,
                        alpha=alpha,
                        components=comps,
                        normalize=config.normalize,
                        amplitude=amp,
                        jitter=config.jitter,
                    )
                )
    else:
        for amp in amplitudes:
            specs.append(
                KernelSpec(
                    family,
                    normalize=config.normalize,
                    amplitude=amp,
                    jitter=config.jitter,
                )
            )
    if config.task == "regress":
        eta2s = (config.eta2,) if config.eta2 is not None else config.grid_eta2
        return [GridPoint(s, eta2) for s in specs for eta2 in eta2s]
    return [GridPoint(s) for s in specs]


def _load_dataset(config: RunConfig) -> Dataset:
    if not config.dataset:
        raise ValidationError("no dataset given (use --dataset)")
    return load_dataset(config.dataset)


def _write_manifest(config: RunConfig, out_dir: Path) -> None:
    manifest = {
        "config": config.resolved_dict(),
        "config_hash": config.config_hash(),
        "library_version": __version__,
        "seeds": list(config.seed),
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_gram(config: RunConfig) -> int:
    if not config.gram_out:
        raise ValidationError("gram requires --gram-out")
    _apply_workers(config)
    ds = _load_dataset(config)
    builder = GramBuilder(ds)
    g = builder.gram(base_spec(config))
    save_gram(g, config.gram_out)
    print(json.dumps({"written": str(config.gram_out), "shape": list(g.values.shape)}))
    return 0


def _preload_gram(builder: GramBuilder, config: RunConfig, grid: list[GridPoint]) -> None:
    if not config.gram_in:
        return
    cached = load_gram(config.gram_in)
    specs = {point.spec.key() for point in grid}
    if cached.spec.key() not in specs:
        raise ValidationError(
            "--gram-in kernel spec does not match any grid point; "
            "rerun gram with the current kernel settings"
        )
    if tuple(cached.row_ids) != tuple(builder.ds.peptide_ids()):
        raise IntegrityError("--gram-in row ids do not match the dataset")
    builder._cache[cached.spec.key()] = cached


def cmd_crossval(config: RunConfig) -> int:
    if not config.out_dir:
        raise ValidationError("crossval requires --out-dir")
    _apply_workers(config)
    ds = _load_dataset(config)
    grid = build_grid(config)
    builder = GramBuilder(ds)
    _preload_gram(builder, config, grid)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results: list[FoldResult] = []
    if config.protocol in ("nested_cv_label", "nested_cv_group"):
        scheme = (
            SplitScheme.LABEL_STRATIFIED_KFOLD
            if config.protocol == "nested_cv_label"
            else SplitScheme.GROUP_STRATIFIED_KFOLD
        )
        offset = 0
        for seed in config.seed:
            plan = make_kfold_plan(ds, scheme, config.k_outer, seed, config.k_inner)
            fold_results, _ = nested_cv(
                ds, plan, grid, config.objective, task=config.task, builder=builder
            )
            for r in fold_results:
                r.fold += offset
            results.extend(fold_results)
            offset += len(fold_results)
    elif config.protocol == "random_811":
        for index, seed in enumerate(config.seed):
            plan = split_random_811(ds, seed)
            results.append(
                holdout_run(
                    ds, plan, grid, config.objective,
                    task=config.task, builder=builder, run_index=index,
                )
            )
    else:  # scaffold_811: deterministic, a single run regardless of seeds
        plan = split_scaffold_811(ds)
        results.append(
            holdout_run(ds, plan, grid, config.objective, task=config.task, builder=builder)
        )
    aggregate = aggregate_results(results)
    write_fold_results(results, out_dir)
    write_aggregate_csv(aggregate, out_dir / "aggregate.csv")
    write_probability_histogram(results, out_dir / "histogram.csv")
    _write_manifest(config, out_dir)
    print(json.dumps({"folds": len(results), "aggregate": aggregate}, sort_keys=True))
    return 0


_MODEL_MAGIC = "PEPGAKMODEL 1"


def save_model(path, task: str, spec: KernelSpec, ds: Dataset, state) -> None:
    """Versioned model file: header, embedded training records, training Gram."""
    import io

    buf = io.StringIO()
    serialize_dataset(ds, buf)
    dataset_lines = buf.getvalue()
    if task == "classify":
        vectors = {
            "f_hat": state["f_hat"].tolist(),
            "weight_vec": state["weight_vec"].tolist(),
            "grad_at_mode": state["grad_at_mode"],
        }
        eta2 = None
    else:
        vectors = {"alpha": state["alpha"].tolist(), "y_offset": state["y_offset"]}
        eta2 = state["eta2"]
    header = {
        "version": 1,
        "task": task,
        "spec": spec.to_dict(),
        "train_ids": list(state["train_ids"]),
        "vectors": vectors,
        "eta2": eta2,
        "n_dataset_bytes": len(dataset_lines.encode("utf-8")),
        "gram_shape": list(state["gram"].shape),
    }
    with open(path, "wb") as fh:
        fh.write((_MODEL_MAGIC + "\n").encode("utf-8"))
        fh.write((json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8"))
        fh.write(dataset_lines.encode("utf-8"))
        fh.write(np.ascontiguousarray(state["gram"], dtype="<f8").tobytes())


def load_model(path):
    from .data import parse_dataset

    with open(path, "rb") as fh:
        magic = fh.readline().decode("utf-8").rstrip("\n")
        if magic != _MODEL_MAGIC:
            raise ValidationError(f"not a model file (magic {magic!r})")
        header = json.loads(fh.readline().decode("utf-8"))
        dataset_text = fh.read(header["n_dataset_bytes"]).decode("utf-8")
        shape = tuple(header["gram_shape"])
        gram_values = (
            np.frombuffer(fh.read(8 * shape[0] * shape[1]), dtype="<f8").reshape(shape).copy()
        )
    ds = parse_dataset(dataset_text.splitlines())
    return header, ds, gram_values


def cmd_fit(config: RunConfig) -> int:
    if not config.model:
        raise ValidationError("fit requires --model (output path)")
    grid = build_grid(config)
    if len(grid) != 1:
        raise ValidationError(
            "fit requires a fully specified kernel (pass --beta/--band/--alpha/--eta2 "
            f"to collapse the grid; it currently has {len(grid)} points)"
        )
    _apply_workers(config)
    ds = _load_dataset(config)
    point = grid[0]
    builder = GramBuilder(ds)
    g = builder.gram(point.spec)
    if config.task == "classify":
        y = labels_vector(ds).astype(np.float64)
        st = fit_laplace(g, y)
        state = {
            "train_ids": st.train_ids,
            "f_hat": st.f_hat,
            "weight_vec": st.weight_vec,
            "grad_at_mode": st.grad_at_mode,
            "gram": g.values,
        }
    else:
        y = permeability_vector(ds)
        eta2 = point.eta2 if point.eta2 is not None else 0.1
        model = fit_regressor(g, y, eta2)
        state = {
            "train_ids": model.train_ids,
            "alpha": model.alpha,
            "y_offset": model.y_offset,
            "eta2": model.eta2,
            "gram": g.values,
        }
    save_model(config.model, config.task, point.spec, ds, state)
    print(json.dumps({"written": str(config.model), "n_train": len(ds.peptides)}))
    return 0


def _merge_datasets(train_ds: Dataset, query_ds: Dataset) -> tuple[Dataset, list[str]]:
    """Union of monomer tables and peptides; conflicting ids are errors."""
    monomers = dict(train_ds.monomers)
    for mid, rec in query_ds.monomers.items():
        if mid in monomers:
            if monomers[mid].fingerprint != rec.fingerprint:
                raise IntegrityError(
                    f"monomer {mid!r} has conflicting fingerprints in model and query datasets"
                )
        else:
            monomers[mid] = rec
    train_ids = {p.peptide_id for p in train_ds.peptides}
    peptides = list(train_ds.peptides)
    query_ids = []
    for pep in query_ds.peptides:
        if pep.peptide_id in train_ids:
            existing = next(
                p for p in train_ds.peptides if p.peptide_id == pep.peptide_id
            )
            if existing != pep:
                raise IntegrityError(
                    f"peptide {pep.peptide_id!r} differs between model and query datasets"
                )
        else:
            peptides.append(pep)
        query_ids.append(pep.peptide_id)
    return Dataset(monomers=monomers, peptides=peptides), query_ids


def cmd_predict(config: RunConfig) -> int:
    if not config.model:
        raise ValidationError("predict requires --model")
    out_path = config.out
    if not out_path:
        raise ValidationError("predict requires --out (CSV path)")
    _apply_workers(config)
    header, train_ds, gram_values = load_model(config.model)
    spec = KernelSpec.from_dict(header["spec"])
    query_ds = _load_dataset(config)
    merged, query_ids = _merge_datasets(train_ds, query_ds)
    builder = GramBuilder(merged)
    train_ids = tuple(header["train_ids"])
    g_train = GramMatrix(train_ids, train_ids, gram_values, spec, spec.normalize)
    k_star = builder.cross_gram(spec, tuple(query_ids), train_ids)
    k_ss = builder.self_similarities(spec, tuple(query_ids))
    rows: list[list] = []
    if header["task"] == "classify":
        state = rebuild_laplace_state(
            g_train,
            np.array(header["vectors"]["f_hat"]),
            np.array(header["vectors"]["weight_vec"]),
            header["vectors"]["grad_at_mode"],
        )
        probs = predict_laplace(state, g_train, k_star, k_ss)
        rows.append(["peptide_id", "probability"])
        rows.extend([pid, repr(float(p))] for pid, p in zip(query_ids, probs))
    else:
        model = rebuild_regressor(
            g_train,
            np.array(header["vectors"]["alpha"]),
            header["eta2"],
            header["vectors"]["y_offset"],
        )
        mean, var = predict_regressor(model, k_star, k_ss)
        rows.append(["peptide_id", "mean", "sd"])
        rows.extend(
            [pid, repr(float(m)), repr(float(np.sqrt(v)))]
            for pid, m, v in zip(query_ids, mean, var)
        )
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerows(rows)
    print(json.dumps({"written": str(out_path), "n": len(query_ids)}))
    return 0


def cmd_metrics(config: RunConfig) -> int:
    if not config.predictions:
        raise ValidationError("metrics requires --predictions (CSV path)")
    preds = []
    labels = []
    with open(config.predictions, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"probability", "label"} <= set(reader.fieldnames):
            raise ValidationError("predictions CSV must have probability and label columns")
        for row in reader:
            preds.append(float(row["probability"]))
            labels.append(float(row["label"]))
    values = {name: compute_metric(name, preds, labels) for name in CLASSIFICATION_METRICS}
    text = json.dumps(values, sort_keys=True, indent=2)
    print(text)
    if config.out:
        Path(config.out).write_text(text + "\n", encoding="utf-8")
    return 0


def cmd_validate(config: RunConfig) -> int:
    ds = _load_dataset(config)
    n_neg, n_pos = class_counts(ds)
    summary = {
        "peptides": len(ds.peptides),
        "monomers": len(ds.monomers),
        "class_counts": {"negative": n_neg, "positive": n_pos},
        "lengths": sorted({p.length for p in ds.peptides}),
        "with_molecule_fingerprint": sum(
            1 for p in ds.peptides if p.molecule_fingerprint is not None
        ),
        "with_scaffold": sum(1 for p in ds.peptides if p.scaffold_id is not None),
        "force_train": sum(1 for p in ds.peptides if p.force_train),
    }
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pepgak",
        description="Alignment-kernel Gaussian processes for peptide permeability",
    )
    parser.add_argument("--version", action="version", version=f"pepgak {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--dataset", help="JSONL dataset path")
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--kernel", help="gak | md_gak | pmd_gak | tanimoto_peptide | convex")
        p.add_argument("--beta", type=float, help="soft-kernel temperature (pmd_gak)")
        p.add_argument("--band", type=int, help="position window bandwidth (pmd_gak)")
        p.add_argument("--alpha", type=float, help="convex mixing weight")
        p.add_argument("--normalize", help="cosine-normalize Grams (true/false)")
        p.add_argument("--amplitude", type=float, help="kernel amplitude scale")
        p.add_argument("--jitter", type=float, help="training diagonal jitter")
        p.add_argument("--eta2", type=float, help="regression noise variance")
        p.add_argument("--task", help="classify | regress")
        p.add_argument("--seed", help="comma-separated seed list")
        p.add_argument("--workers", type=int, help="worker threads for Gram assembly")
        p.add_argument("--out-dir", dest="out_dir", help="output directory")
        p.add_argument("--out", help="output file path")
        p.add_argument("--gram-in", dest="gram_in", help="reuse a cached Gram file")
        p.add_argument("--gram-out", dest="gram_out", help="write the Gram cache here")
        p.add_argument("--grid-beta", dest="grid_beta", help="comma list for the beta grid")
        p.add_argument("--grid-band", dest="grid_band", help="comma list for the bandwidth grid")
        p.add_argument("--grid-alpha", dest="grid_alpha", help="comma list for the alpha grid")
        p.add_argument("--grid-eta2", dest="grid_eta2", help="comma list for the eta2 grid")
        p.add_argument(
            "--grid-amplitude", dest="grid_amplitude", help="comma list for the amplitude grid"
        )

    p_gram = sub.add_parser("gram", help="compute and cache a Gram matrix")
    add_common(p_gram)

    p_cv = sub.add_parser("crossval", help="run an evaluation protocol end to end")
    add_common(p_cv)
    p_cv.add_argument("--protocol", help=" | ".join(PROTOCOLS))
    p_cv.add_argument("--objective", help="inner-selection metric id")
    p_cv.add_argument("--k-outer", dest="k_outer", type=int, help="outer folds")
    p_cv.add_argument("--k-inner", dest="k_inner", type=int, help="inner folds")

    p_fit = sub.add_parser("fit", help="fit a model on the full dataset")
    add_common(p_fit)
    p_fit.add_argument("--model", help="model file to write")

    p_pred = sub.add_parser("predict", help="predict with a fitted model")
    add_common(p_pred)
    p_pred.add_argument("--model", help="model file to read")

    p_met = sub.add_parser("metrics", help="recompute metrics from a predictions CSV")
    add_common(p_met)
    p_met.add_argument("--predictions", help="CSV with peptide_id,probability,label")

    p_val = sub.add_parser("validate", help="lint a dataset file")
    add_common(p_val)
    return parser


_COMMANDS = {
    "gram": cmd_gram,
    "crossval": cmd_crossval,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "metrics": cmd_metrics,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        config = build_config(args)
        return _COMMANDS[args.command](config)
    except PepgakError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc), "code": exc.exit_code}
        print(json.dumps(payload), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc), "code": 4}
        print(json.dumps(payload), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
