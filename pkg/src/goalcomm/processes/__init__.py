"""Source processes x(t) and exact Bayesian estimators."""

from goalcomm.processes.base import (
    Belief,
    CategoricalBelief,
    GaussianBelief,
    History,
    Observation,
    ProcessError,
    ProcessModel,
    UpdateRecord,
)
from goalcomm.processes.estimation import (
    ComponentFilter,
    belief,
    conditional_mean,
    conditional_mse,
    sample_path,
)
from goalcomm.processes.gaussian import GaussMarkovProcess, OrnsteinUhlenbeck, Wiener
from goalcomm.processes.markov import FiniteMarkov
from goalcomm.processes.sensors import Sensor, SensorField

__all__ = [
    "Belief",
    "CategoricalBelief",
    "ComponentFilter",
    "FiniteMarkov",
    "GaussMarkovProcess",
    "GaussianBelief",
    "History",
    "Observation",
    "OrnsteinUhlenbeck",
    "ProcessError",
    "ProcessModel",
    "Sensor",
    "SensorField",
    "UpdateRecord",
    "Wiener",
    "belief",
    "conditional_mean",
    "conditional_mse",
    "sample_path",
]
