"""Scikit-learn style wrappers around the aggregators.

Every estimator consumes a task-labeller matrix with entries in {-1, 0, +1}
and predicts one ±1 label per row.  ``y`` is accepted and ignored by
``fit`` so the estimators slot into pipelines; ``score`` uses it as the
ground truth.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_alpha, check_error_probs, check_labels
from .agreement import AgreementState, estimate_error_probs, update
from .baselines import dawid_skene_em, majority_vote_batch
from .core import DEFAULT_CLAMP, weighted_majority, weights_from_error_probs, weighted_majority_batch


class _CrowdClassifier(ClassifierMixin, BaseEstimator):
    classes_ = np.array([-1, 1])

    def _tie_rng(self):
        if getattr(self, "rng_", None) is None:
            self.rng_ = np.random.default_rng(self.random_state)
        return self.rng_


class AgreementBasedClassifier(_CrowdClassifier):
    """Streaming weighted majority vote with weights learnt from agreement rates.

    Parameters
    ----------
    alpha : float
        Probability that a labeller answers a task.
    beta : float or None
        Exponential averaging weight for drifting labellers; ``None`` keeps a
        uniform running average.
    tol : float or None
        Fixed-point solver tolerance.  ``None`` shrinks it as
        ``sqrt(log n / t)``.
    clamp : float
        Error probabilities are clamped to ``[clamp, 1 - clamp]`` before
        taking log-odds.
    random_state : int, Generator or None
        Seeds the tie-breaking coin.

    Attributes
    ----------
    state_ : AgreementState
    error_probs_ : ndarray, shape (n_labellers,)
    weights_ : ndarray, shape (n_labellers,)
    unique_ : bool
        Whether the last inversion found a unique fixed point.
    unique_steps_ : int
        Rows of the last `predict_prequential` call decoded with learnt
        (rather than fallback) weights.
    """

    def __init__(self, alpha=1.0, beta=None, tol=None, clamp=DEFAULT_CLAMP,
                 random_state=None):
        self.alpha = alpha
        self.beta = beta
        self.tol = tol
        self.clamp = clamp
        self.random_state = random_state

    def _reset(self, n):
        self.state_ = AgreementState.fresh(n, check_alpha(self.alpha), self.beta)
        self.n_features_in_ = n
        self._refresh()

    def _refresh(self):
        self.error_probs_, self.unique_ = estimate_error_probs(self.state_, self.tol)
        self.weights_ = weights_from_error_probs(self.error_probs_, self.clamp)

    def fit(self, X, y=None):
        X = check_labels(X)
        self.rng_ = None
        self._reset(X.shape[1])
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        """Fold more tasks into the agreement estimate."""
        X = check_labels(X, getattr(self, "n_features_in_", None))
        if not hasattr(self, "state_"):
            self._reset(X.shape[1])
        state = self.state_
        for row in X:
            state = update(state, row)
        self.state_ = state
        self._refresh()
        return self

    def predict(self, X):
        """Decode every row with the current weights."""
        check_is_fitted(self, "state_")
        X = check_labels(X, self.n_features_in_)
        return weighted_majority_batch(X, self.weights_, self._tie_rng())

    def predict_prequential(self, X):
        """Predict each row from the tasks before it, then learn from it.

        Returns
        -------
        y_pred : ndarray of int8, shape (n_tasks,)
        """
        X = check_labels(X, getattr(self, "n_features_in_", None))
        if not hasattr(self, "state_"):
            self._reset(X.shape[1])
        rng = self._tie_rng()
        out = np.empty(X.shape[0], dtype=np.int8)
        self.unique_steps_ = 0
        for k, row in enumerate(X):
            out[k] = weighted_majority(row, self.weights_, rng)
            self.unique_steps_ += self.unique_
            self.state_ = update(self.state_, row)
            self._refresh()
        return out

    @property
    def n_tasks_seen_(self):
        return self.state_.t


class MajorityVoteClassifier(_CrowdClassifier):
    def __init__(self, random_state=None):
        self.random_state = random_state

    def fit(self, X, y=None):
        self.n_features_in_ = check_labels(X).shape[1]
        self.rng_ = None
        return self

    def predict(self, X):
        X = check_labels(X, getattr(self, "n_features_in_", None))
        return majority_vote_batch(X, self._tie_rng())


class OracleClassifier(_CrowdClassifier):
    """Weighted majority vote with known error probabilities."""

    def __init__(self, p=None, clamp=DEFAULT_CLAMP, random_state=None):
        self.p = p
        self.clamp = clamp
        self.random_state = random_state

    def fit(self, X=None, y=None):
        self.error_probs_ = check_error_probs(self.p)
        self.weights_ = weights_from_error_probs(self.error_probs_, self.clamp)
        self.n_features_in_ = self.error_probs_.size
        self.rng_ = None
        return self

    def predict(self, X):
        check_is_fitted(self, "weights_")
        return weighted_majority_batch(check_labels(X, self.n_features_in_),
                                       self.weights_, self._tie_rng())


class DawidSkeneClassifier(_CrowdClassifier):
    """Batch EM over the stored label matrix.

    ``predict`` decodes with the fitted error probabilities; ``posteriors_``
    holds P(G = +1) for the training rows.
    """

    def __init__(self, max_iters=200, ll_tol=1e-8, clamp=DEFAULT_CLAMP,
                 random_state=None):
        self.max_iters = max_iters
        self.ll_tol = ll_tol
        self.clamp = clamp
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_labels(X)
        res = dawid_skene_em(X, self.max_iters, self.ll_tol)
        self.result_ = res
        self.error_probs_ = res.p_hat
        self.posteriors_ = res.posteriors
        self.weights_ = weights_from_error_probs(res.p_hat, self.clamp)
        self.n_features_in_ = X.shape[1]
        self.rng_ = None
        return self

    def predict(self, X):
        check_is_fitted(self, "weights_")
        return weighted_majority_batch(check_labels(X, self.n_features_in_),
                                       self.weights_, self._tie_rng())
