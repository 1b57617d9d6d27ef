"""Safety value functions from mixed-quality demonstrations, plus a real-time
minimally invasive control safety filter over the learned function."""

from .demonstrations import (
    DemoCorpus,
    DemoPoint,
    Demonstration,
    PartitionedPoints,
    partition,
    validate,
)
from .dynamics import DynamicsModel, get_model, single_integrator_2d, unicycle
from .learner import LearnConfig, LearnResult, learn
from .rbf import SafetyModel, evaluate, gradient
from .safety_filter import FilterConfig, FilterDecision, filter_control
from .simgen import GenSpec, Scenario, generate

__all__ = [
    "DemoCorpus",
    "DemoPoint",
    "Demonstration",
    "DynamicsModel",
    "FilterConfig",
    "FilterDecision",
    "GenSpec",
    "LearnConfig",
    "LearnResult",
    "PartitionedPoints",
    "SafetyModel",
    "Scenario",
    "evaluate",
    "filter_control",
    "generate",
    "get_model",
    "gradient",
    "learn",
    "partition",
    "single_integrator_2d",
    "unicycle",
    "validate",
]

__version__ = "0.1.0"
