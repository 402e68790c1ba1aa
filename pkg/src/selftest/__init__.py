"""Numerical verification of multipartite self-testing: reference states, ideal
strategies, correlation conditions and local isometries."""

from .conditions import ConditionSet, check, family_conditions
from .correlations import CorrelatorSpec, correlator, probability_table
from .isometry import factorization_check, qubit_swap_isometry, qudit_isometry
from .report import CheckReport
from .strategies import AdversarialTransform, Strategy, adversarial_embed, ideal_strategy, noise_mix
from .tensor import StateVector

__all__ = [
    "AdversarialTransform",
    "CheckReport",
    "ConditionSet",
    "CorrelatorSpec",
    "StateVector",
    "Strategy",
    "adversarial_embed",
    "check",
    "correlator",
    "factorization_check",
    "family_conditions",
    "ideal_strategy",
    "noise_mix",
    "probability_table",
    "qubit_swap_isometry",
    "qudit_isometry",
]
