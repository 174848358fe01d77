"""Score-based sensitivity measures for elicitable functionals."""

from .functionals import FunctionalSpec, Prediction, empirical_functional
from .models import (
    ConditionalRule,
    MODEL_IDS,
    aggregate,
    analytic_sensitivity,
    conditional_functional,
    get_model,
)
from .neural import NetConfig, TrainConfig, TrainedNet, forward, loss_and_gradient, train
from .scores import (
    GeneratorSpec,
    MurphyGrid,
    ScoreSpec,
    convex_generator,
    evaluate,
    evaluate_many,
    increasing_generator,
    mixture_weight_check,
    murphy_grid_default,
)
from .sensitivity import (
    ConditionalModel,
    MurphyCurve,
    SensitivityEstimate,
    confidence_interval,
    dominance_check,
    estimate_sensitivity,
    interaction_information,
    murphy_elementary,
    murphy_homogeneous,
)
from .simulation import CopulaSpec, MarginalSpec, SampleSet, derive_seed, sample_factors, sample_model

__version__ = "0.1.0"

__all__ = [
    "CopulaSpec",
    "ConditionalModel",
    "ConditionalRule",
    "FunctionalSpec",
    "GeneratorSpec",
    "MarginalSpec",
    "MODEL_IDS",
    "MurphyCurve",
    "MurphyGrid",
    "NetConfig",
    "Prediction",
    "SampleSet",
    "ScoreSpec",
    "SensitivityEstimate",
    "TrainConfig",
    "TrainedNet",
    "aggregate",
    "analytic_sensitivity",
    "conditional_functional",
    "confidence_interval",
    "convex_generator",
    "derive_seed",
    "dominance_check",
    "empirical_functional",
    "estimate_sensitivity",
    "evaluate",
    "evaluate_many",
    "forward",
    "get_model",
    "increasing_generator",
    "interaction_information",
    "loss_and_gradient",
    "mixture_weight_check",
    "murphy_elementary",
    "murphy_grid_default",
    "murphy_homogeneous",
    "sample_factors",
    "sample_model",
    "train",
]
