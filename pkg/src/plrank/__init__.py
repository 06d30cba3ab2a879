"""Plackett-Luce distribution estimation from ranking labels."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .core import (
    log_likelihood,
    loss_gradient_scores,
    permutation_probability,
    pl_loss,
    rank_from_weights,
    softmax,
)
from .estimation import (
    FitConfig,
    FitResult,
    brute_force_mle,
    fit_mle,
    fit_mle_gradient,
    fit_mle_mm,
    sample_ranking,
    sample_rankings,
)
from .metrics import (
    EvaluationReport,
    average_overlap,
    distribution_entropy,
    evaluate,
    expected_random_overlap,
    kendall_tau,
)
from .ranker import (
    RankerModel,
    TrainConfig,
    TrainHistory,
    forward,
    gradient_check,
    init_model,
    load_model,
    predict_distribution,
    predict_ranking,
    save_model,
    train,
)
from .synth import LabelledInstance, SyntheticConfig, generate_dataset, split_by_object
