"""Streaming agreement-rate estimation and its inversion to error probabilities.

The agreement rate of labeller ``i`` is the average, over the other
labellers, of the probability that both give the same answer when both
answer.  It is estimated online in O(n) time per task from the task's label
sum ``S`` and answer count ``N``::

    sum_{j != i} 1{x_i x_j = 1} = (x_i S + |x_i| (N - 2)) / 2
"""

from dataclasses import dataclass, replace
import math
from typing import Optional

import numpy as np

from ._validation import check_alpha, check_error_probs, check_labels
from .core import CrowdModel
from .fixedpoint import FixedPointError, solve_fixed_point

TOL_FLOOR = 1e-12
BETA_MIN = 1e-4
BETA_MAX = 0.5


def agreement_rates_exact(model):
    """Expected agreement rates ``a_i = mean_{j != i} (p_i p_j + (1-p_i)(1-p_j))``.

    Parameters
    ----------
    model : CrowdModel or array-like of error probabilities

    Returns
    -------
    a : ndarray, shape (n,)
    """
    p = model.p if isinstance(model, CrowdModel) else check_error_probs(model)
    n = p.size
    if n <= 2:
        raise ValueError("need n > 2")
    total = p.sum()
    # sum over j != i of p_j and (1 - p_j)
    others = total - p
    a = (p * others + (1.0 - p) * ((n - 1) - others)) / (n - 1)
    return np.clip(a, 0.0, 1.0)


@dataclass(frozen=True)
class DriftSpec:
    sigma: float = 0.0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("drift speed must be non-negative")


@dataclass(frozen=True)
class AgreementState:
    """Running agreement-rate estimate.

    ``beta=None`` selects the uniform running average; a value in (0, 1)
    selects exponential weighting.
    """

    a_hat: np.ndarray
    alpha: float = 1.0
    beta: Optional[float] = None
    t: int = 0

    @classmethod
    def fresh(cls, n, alpha=1.0, beta=None):
        if int(n) <= 2:
            raise ValueError("need n > 2")
        if beta is not None and not 0 < beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        return cls(np.zeros(int(n)), check_alpha(alpha), beta, 0)

    @property
    def n(self):
        return self.a_hat.size

    @property
    def mode(self):
        return "uniform" if self.beta is None else "ewma"

    def to_record(self):
        """Flat numeric record: t, mode flag, beta, alpha, then the n rates."""
        mode = 0.0 if self.beta is None else 1.0
        beta = 0.0 if self.beta is None else self.beta
        return [float(self.t), mode, float(beta), float(self.alpha),
                *map(float, self.a_hat)]

    @classmethod
    def from_record(cls, record):
        record = [float(r) for r in record]
        if len(record) < 7:
            raise ValueError("record too short for n > 2 labellers")
        t, mode, beta, alpha = record[:4]
        if mode not in (0.0, 1.0) or t < 0 or t != int(t):
            raise ValueError("malformed agreement-state record")
        return cls(np.array(record[4:]), check_alpha(alpha),
                   None if mode == 0.0 else beta, int(t))


def agreement_increment(X, alpha=1.0):
    """Per-task agreement fractions ``(x_i S + |x_i| (N - 2)) / (2 (n-1) alpha^2)``.

    Works on a single task or any stack of tasks, shape ``(..., n)``.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[-1]
    absx = np.abs(X)
    s = X.sum(axis=-1, keepdims=True)
    m = absx.sum(axis=-1, keepdims=True)
    return (X * s + absx * (m - 2.0)) / (2.0 * (n - 1) * alpha**2)


def _task_agreements(state, x):
    x = check_labels(x, n_labellers=state.n, allow_1d=True)
    if x.ndim != 1:
        raise ValueError("expected a single observation vector")
    return agreement_increment(x, state.alpha)


def stream_update(state, x):
    """Fold one task into a uniform running average of agreement rates."""
    if state.beta is not None:
        raise ValueError("stream_update needs a uniform-mode state")
    term = _task_agreements(state, x)
    t = state.t + 1
    a_hat = (t - 1) / t * state.a_hat + term / t
    return replace(state, a_hat=a_hat, t=t)


def stream_update_ewma(state, x):
    """Fold one task into an exponentially weighted agreement estimate.

    No warm-up renormalisation is applied, so the estimate starts biased
    towards zero for roughly ``1/beta`` tasks.
    """
    if state.beta is None:
        raise ValueError("stream_update_ewma needs an ewma-mode state")
    term = _task_agreements(state, x)
    a_hat = (1.0 - state.beta) * state.a_hat + state.beta * term
    return replace(state, a_hat=a_hat, t=state.t + 1)


def update(state, x):
    """Dispatch to the update matching the state's mode."""
    if state.beta is None:
        return stream_update(state, x)
    return stream_update_ewma(state, x)


def tolerance_schedule(t, n, beta=None):
    """Solver accuracy matched to the statistical error, ``sqrt(log n / t)``.

    Under exponential weighting the effective sample size is capped at
    ``1 / beta``.
    """
    t_eff = max(int(t), 1)
    if beta is not None:
        t_eff = min(t_eff, max(int(round(1.0 / beta)), 1))
    return max(math.sqrt(math.log(n) / t_eff), TOL_FLOOR)


def estimate_error_probs(state, tol=None):
    """Invert the current agreement estimate into error probabilities.

    Parameters
    ----------
    state : AgreementState
    tol : float, optional
        Solver tolerance; defaults to `tolerance_schedule`.

    Returns
    -------
    p_hat : ndarray, shape (n,)
        Estimates clipped to [0, 1], or all 1/2 when no unique fixed point
        exists.
    unique : bool
    """
    if tol is None:
        tol = tolerance_schedule(state.t, state.n, state.beta)
    fallback = np.full(state.n, 0.5)
    a_hat = state.a_hat
    if not np.all(np.isfinite(a_hat)):
        return fallback, False
    try:
        # the solver checks f(u, v0) <= v0 itself and raises otherwise
        sol = solve_fixed_point(a_hat, tol)
    except (FixedPointError, ValueError):
        return fallback, False
    return np.clip(sol.p_of_u, 0.0, 1.0), True


class AgreementStream:
    """Mutable, allocation-light counterpart of `AgreementState` for long streams.

    `push` does not validate its input; callers pass int8 rows already
    checked to lie in {-1, 0, +1}.
    """

    def __init__(self, n, alpha=1.0, beta=None):
        self._state = AgreementState.fresh(n, alpha, beta)
        self.a_hat = np.zeros(self._state.n)
        self.t = 0
        self._denom = 2.0 * (self._state.n - 1) * self._state.alpha**2

    @property
    def state(self):
        """Immutable snapshot of the current estimate."""
        return replace(self._state, a_hat=self.a_hat.copy(), t=self.t)

    def push(self, x):
        x = x.astype(float)
        absx = np.abs(x)
        term = (x * x.sum() + absx * (absx.sum() - 2.0)) / self._denom
        self.t += 1
        beta = self._state.beta
        if beta is None:
            self.a_hat *= (self.t - 1) / self.t
            self.a_hat += term / self.t
        else:
            self.a_hat *= 1.0 - beta
            self.a_hat += beta * term

    def estimate(self, tol=None):
        return estimate_error_probs(self.state, tol)


def beta_heuristic(sigma, alpha, n):
    """Averaging weight ``alpha^(4/3) sigma^(2/3) / (log n)^3`` clipped to [1e-4, 0.5]."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if int(n) <= 2:
        raise ValueError("need n > 2")
    alpha = check_alpha(alpha)
    beta = alpha ** (4 / 3) * sigma ** (2 / 3) / math.log(n) ** 3
    return min(max(beta, BETA_MIN), BETA_MAX)
