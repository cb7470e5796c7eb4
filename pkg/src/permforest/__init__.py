"""Permutation significance tests for subsampled random forests.

Train two forests, one on the original data and one with the candidate
features muted, then build the null distribution of the test-set MSE
difference by reshuffling per-tree predictions between the ensembles.
Valid p-values and importance scores come out without estimating any
variance or covariance, at a cost independent of the test-set size.
"""

from .dataset import (
    DataError,
    Dataset,
    Exclude,
    FeatureKind,
    FeatureSubset,
    KnockoffColumns,
    NUMERIC,
    ParseError,
    PermuteRows,
    SchemaError,
    ValidationError,
    categorical,
    load_csv,
    mute_features,
    mute_with_permutation,
    split_indices,
    split_train_test,
    write_csv,
)
from .forest import (
    Forest,
    ForestConfig,
    PredictionMatrix,
    SubsampleDiagnostics,
    fit_forest,
    forest_mse,
    predict_matrix,
    subsample_diagnostics,
    subsample_size,
    write_prediction_matrix_csv,
)
from .permtest import (
    ImportanceEntry,
    ImportanceReport,
    NormalitySummary,
    PermTestConfig,
    PermTestResult,
    add_one_p_value,
    importance_all,
    overall_test,
    permutation_deltas,
    permutation_normality,
    run_test,
    selection_masks,
)
from .simbench import (
    Model1,
    Model2,
    Model3,
    PowerCurve,
    PowerPoint,
    SimConfig,
    bench_tree_config,
    desk_scale_config,
    expit,
    full_scale_config,
    gen_model1,
    gen_model2,
    gen_model3,
    generate,
    robustness_sweep,
    run_power_experiment,
    write_power_curve_csv,
)
from .svgplot import render_histogram
from .tree import (
    RegressionTree,
    TreeConfig,
    draw_subsample,
    fit_tree,
    predict_tree,
)

__version__ = "0.1.0"
