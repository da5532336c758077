"""Monomer-aware global alignment kernels and Gaussian-process models for
cyclic peptide permeability prediction, with a leakage-aware evaluation
harness."""

from .alignment import (
    AlignmentFamily,
    AlignmentKernelKind,
    cosine_normalize,
    gak,
    gak_from_table,
    mdgak,
    mdgak_from_table,
    oracle_path_sum,
    pmdgak,
    pmdgak_from_table,
    windowed_table,
)
from .data import (
    Dataset,
    MonomerRecord,
    PeptideRecord,
    SparseCountVector,
    binary_label,
    class_counts,
    labels_vector,
    load_dataset,
    parse_dataset,
    permeability_vector,
    save_dataset,
    serialize_dataset,
)
from .errors import (
    ConvergenceError,
    FactorizationError,
    IntegrityError,
    NormalizationError,
    NumericalError,
    ParseError,
    PepgakError,
    ValidationError,
)
from .gp import (
    GPRegressor,
    GridPoint,
    LaplaceState,
    fit_laplace,
    fit_regressor,
    predict_laplace,
    predict_regressor,
    select_hyperparams,
)
from .gram import (
    GramBuilder,
    GramMatrix,
    KernelFamily,
    KernelSpec,
    PsdReport,
    gram,
    load_gram,
    mix_kernels,
    psd_check,
    save_gram,
)
from .local_kernels import (
    SoftKernelParams,
    WindowParams,
    position_local_kernel,
    soft_kernel,
    tanimoto,
    tanimoto_table,
    triangular_window,
)
from .metrics import accuracy, brier, compute_metric, ece, f1, mae, rmse, roc_auc
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
from .splits import (
    SplitPlan,
    SplitScheme,
    make_kfold_plan,
    split_group_stratified,
    split_label_stratified,
    split_random_811,
    split_scaffold_811,
)

__version__ = "0.1.0"
