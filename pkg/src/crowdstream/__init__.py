"""Streaming crowdsourced label aggregation from pairwise agreement rates."""

__version__ = "0.1.0"

from .agreement import (
    AgreementState,
    agreement_rates_exact,
    beta_heuristic,
    estimate_error_probs,
    stream_update,
    stream_update_ewma,
)
from .baselines import dawid_skene_em, majority_vote
from .core import CrowdModel, check_assumption, weighted_majority, weights_from_error_probs
from .diagnostics import model_diagnostics
from .estimators import (
    AgreementBasedClassifier,
    DawidSkeneClassifier,
    MajorityVoteClassifier,
    OracleClassifier,
)
from .fixedpoint import phi, solve_fixed_point

__all__ = [
    "AgreementBasedClassifier",
    "AgreementState",
    "CrowdModel",
    "DawidSkeneClassifier",
    "MajorityVoteClassifier",
    "OracleClassifier",
    "agreement_rates_exact",
    "beta_heuristic",
    "check_assumption",
    "dawid_skene_em",
    "estimate_error_probs",
    "majority_vote",
    "model_diagnostics",
    "phi",
    "solve_fixed_point",
    "stream_update",
    "stream_update_ewma",
    "weighted_majority",
    "weights_from_error_probs",
]
