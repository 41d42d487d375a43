"""Sparse estimation and classification of multivariate Hawkes process paths."""

from .kernels import ExponentialKernel
from .model import (LabeledSample, LogDensity, ModelParams, Path, Posterior,
                    bayes_classify, intensity, kernel_convolution, log_density,
                    posterior)
from .simulate import (MixtureSpec, ScenarioSpec, expected_counts, make_scenario,
                       sample_dataset, sample_path, substream)
from .suffstats import (ClassStats, SuffStats, aggregate, compute_suff_stats,
                        contrast, contrast_gradient)
from .lasso import (LassoConfig, LassoFit, ebic, fit_all_classes, fit_class,
                    fista_row, kappa_grid, lipschitz_bound, soft_threshold)
from .classify import (ClassifierModel, ConstraintSet, ErmConfig, TrainResult,
                       empirical_l2_risk, error_rate, free_adagrad, prepare_features,
                       project, risk_gradient, score, train_ermlr)
from .harness import (BenchmarkConfig, MetricsRow, emit_report, hamming_distance,
                      l2_distance, run_benchmark)

__version__ = "0.1.0"

__all__ = [
    "ExponentialKernel",
    "LabeledSample", "LogDensity", "ModelParams", "Path", "Posterior",
    "bayes_classify", "intensity", "kernel_convolution", "log_density", "posterior",
    "MixtureSpec", "ScenarioSpec", "expected_counts", "make_scenario",
    "sample_dataset", "sample_path", "substream",
    "ClassStats", "SuffStats", "aggregate", "compute_suff_stats",
    "contrast", "contrast_gradient",
    "LassoConfig", "LassoFit", "ebic", "fit_all_classes", "fit_class",
    "fista_row", "kappa_grid", "lipschitz_bound", "soft_threshold",
    "ClassifierModel", "ConstraintSet", "ErmConfig", "TrainResult",
    "empirical_l2_risk", "error_rate", "free_adagrad", "prepare_features",
    "project", "risk_gradient", "score", "train_ermlr",
    "BenchmarkConfig", "MetricsRow", "emit_report", "hamming_distance",
    "l2_distance", "run_benchmark",
]
