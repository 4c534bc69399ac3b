"""FDR-controlled feature selection via data splitting and mirror statistics.

The package provides a single-split selector (``ds_select``), its
multiple-split aggregation (``mds_select``), a nodewise-regression graph
estimator (``ggm_select``), the synthetic designs used to benchmark them,
and a reproducible Monte-Carlo harness with a CLI front end.
"""

from .errors import (
    BadDimension,
    ConfigError,
    ConstantColumn,
    DidNotConverge,
    MirrorSelectError,
    NotPositiveDefinite,
    RankDeficient,
    RepairFailed,
    TooFewRows,
    TooManyFeatures,
)
from .ggm import GraphEstimate, fdp_power_edges, ggm_select, nodewise_select
from .harness import (
    ExperimentConfig,
    MetricsRecord,
    bh_procedure,
    config_from_dict,
    fdp_power,
    normal_means_pvalues,
    run_experiment,
)
from .linalg import (
    Dataset,
    SplitIndex,
    cholesky_solve,
    make_dataset,
    random_split,
    standardize,
    substream,
    unstandardize,
)
from .mds import (
    InclusionRates,
    estimate_inclusion_rates,
    mds_cutoff,
    mds_select,
    normal_means_inclusion_rates,
    normal_means_mds,
)
from .mirror import (
    Contrast,
    MirrorVector,
    SelectionResult,
    SplitFit,
    ds_select,
    estimated_fdp,
    mirror_statistic,
    mirror_values,
    normal_means_ds,
    normal_means_mirror,
    select_cutoff,
)
from .regress import (
    LassoFit,
    OlsFit,
    kkt_violation,
    lasso_cv,
    lasso_fit,
    ols_fit,
    penalty_grid,
    soft_threshold,
)
from .synth import (
    CovarianceSpec,
    CovKind,
    DesignKind,
    DesignSpec,
    GraphKind,
    GraphSpec,
    LinearTruth,
    build_covariance,
    build_precision,
    sample_design,
    sample_design_raw,
    sample_gaussian_graph_data,
    sample_linear_truth,
    sample_response,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
