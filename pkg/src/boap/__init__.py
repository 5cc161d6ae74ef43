"""Preference-guided Bayesian optimization: rank GPs learned from expert
pairwise comparisons feed an augmented-input surrogate that competes with
a plain surrogate under predictive-likelihood model selection."""

__version__ = "0.1.0"

from .engine import LoopConfig, RunTrace, run
from .searchspace import SearchSpace

__all__ = ["LoopConfig", "RunTrace", "run", "SearchSpace", "__version__"]
