"""Mediation analysis pipelines for correlated exposure mixtures.

Four pipelines share one dataset model: single-exposure mediation (SE-MA),
principal-component mediation (PC-MA), environmental-risk-score mediation
(ERS-MA), and Bayesian kernel machine regression causal mediation
(BKMR-CMA), plus a simulation engine for benchmarking them.
"""

from .bkmr import (
    BkmrFit,
    KernelConfig,
    McmcChain,
    cluster_groups,
    extract_pips,
    gaussian_kernel,
    kmbayes,
    predictor_response_univar,
)
from .bkmr_cma import CmaConfig, PosteriorEffects, mediation_bkmr, posterior_summary
from .data import (
    ColumnSchema,
    Contrast,
    Dataset,
    load_dataset,
    split_train_analysis,
    standardize,
    write_dataset,
)
from .ersma import ErsModel, build_ers, cv_tune, elastic_net, ersma, fit_ers_model
from .linmod import LinearFit, bh_adjust, delta_product_interval, ols_fit
from .mediate import (
    MediationEffects,
    SemaResult,
    difference_mediation,
    product_mediation,
    sema,
)
from .pcma import PcaModel, pca, pcma, select_components
from .rng import SeededRng
from .sim import (
    MetricsReport,
    Scenario,
    StudyConfig,
    generate_dataset,
    run_study,
    solve_sigma_for_r2,
    true_global_nie,
)

__version__ = "0.1.0"

__all__ = [
    "BkmrFit",
    "CmaConfig",
    "ColumnSchema",
    "Contrast",
    "Dataset",
    "ErsModel",
    "KernelConfig",
    "LinearFit",
    "McmcChain",
    "MediationEffects",
    "MetricsReport",
    "PcaModel",
    "PosteriorEffects",
    "Scenario",
    "SeededRng",
    "SemaResult",
    "StudyConfig",
    "bh_adjust",
    "build_ers",
    "cluster_groups",
    "cv_tune",
    "delta_product_interval",
    "difference_mediation",
    "elastic_net",
    "ersma",
    "extract_pips",
    "fit_ers_model",
    "gaussian_kernel",
    "generate_dataset",
    "kmbayes",
    "load_dataset",
    "mediation_bkmr",
    "ols_fit",
    "pca",
    "pcma",
    "posterior_summary",
    "predictor_response_univar",
    "product_mediation",
    "run_study",
    "select_components",
    "sema",
    "solve_sigma_for_r2",
    "split_train_analysis",
    "standardize",
    "true_global_nie",
    "write_dataset",
]
