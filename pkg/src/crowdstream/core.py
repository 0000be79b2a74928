"""Domain types, decoding weights and weighted majority decoders."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import check_alpha, check_error_probs, check_labels

DEFAULT_CLAMP = 1e-6


@dataclass(frozen=True)
class ObservationSummary:
    """Sum ``s`` and count ``m`` of the non-missing labels of one task."""

    s: int
    m: int

    @classmethod
    def from_labels(cls, x):
        x = np.asarray(x)
        return cls(int(x.sum()), int(np.count_nonzero(x)))


@dataclass(frozen=True)
class CrowdModel:
    """Labeller population: answer probability ``alpha`` and error probabilities ``p``."""

    p: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        p = check_error_probs(self.p)
        if p.size <= 2:
            raise ValueError("a crowd model needs n > 2 labellers")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "alpha", check_alpha(self.alpha))

    @property
    def n(self):
        return self.p.size


@dataclass(frozen=True)
class ErrorProfile:
    p: np.ndarray
    q: float
    w: np.ndarray
    gamma: float
    eta: float
    lambda_: Optional[float] = field(default=None)


def weights_from_error_probs(p, clamp=DEFAULT_CLAMP):
    """Log-odds weights ``log(1/p_i - 1)`` with ``p`` clamped to ``[clamp, 1 - clamp]``.

    Parameters
    ----------
    p : array-like, shape (n,) or (R, n)
        Error probabilities in [0, 1].
    clamp : float
        Must satisfy ``0 < clamp < 1/2``; keeps every weight finite.

    Returns
    -------
    w : ndarray, same shape as `p`
    """
    if not 0 < clamp < 0.5:
        raise ValueError("clamp must lie in (0, 1/2)")
    p = np.clip(check_error_probs(p, allow_2d=True), clamp, 1.0 - clamp)
    return np.log((1.0 - p) / p)


def _scores(X, w):
    w = np.asarray(w, dtype=float)
    if X.shape[-1] != w.size:
        raise ValueError(
            f"weight vector has length {w.size}, labels have {X.shape[-1]}")
    if not np.any(w):
        # all-zero weights are the equal-weight limit: plain majority vote
        w = np.ones_like(w)
    return X @ w


def weighted_majority(x, w, tie_rng):
    """Decode one task as the sign of ``w . x``, breaking exact ties at random.

    An all-zero weight vector (every labeller at p = 1/2) decodes as plain
    majority vote.
    """
    x = check_labels(x, allow_1d=True)
    if x.ndim != 1:
        raise ValueError("expected a single observation vector")
    score = float(_scores(x, w))
    if score > 0:
        return 1
    if score < 0:
        return -1
    return 1 if tie_rng.random() < 0.5 else -1


def weighted_majority_batch(X, w, tie_rng):
    """Row-wise `weighted_majority` for a task-labeller matrix."""
    X = check_labels(X)
    scores = _scores(X, w)
    out = np.sign(scores).astype(np.int8)
    ties = out == 0
    n_ties = int(ties.sum())
    if n_ties:
        out[ties] = np.where(tie_rng.random(n_ties) < 0.5, 1, -1)
    return out


def check_assumption(p):
    """True when the mean error probability is below ``1/2 - 1/n``."""
    p = check_error_probs(p)
    n = p.size
    if n <= 2:
        raise ValueError("need n > 2")
    return bool(p.mean() < 0.5 - 1.0 / n)
