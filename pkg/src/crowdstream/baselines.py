"""Reference aggregators: majority vote and symmetric-binary Dawid-Skene EM."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_labels

EM_CLAMP = 1e-6


def majority_vote(x, tie_rng):
    """Sign of the label sum; exact ties (and empty tasks) go to a fair coin."""
    x = check_labels(x, allow_1d=True)
    s = int(x.sum())
    if s > 0:
        return 1
    if s < 0:
        return -1
    return 1 if tie_rng.random() < 0.5 else -1


def majority_vote_batch(X, tie_rng):
    X = check_labels(X)
    out = np.sign(X.sum(axis=1, dtype=np.int64)).astype(np.int8)
    ties = out == 0
    n_ties = int(ties.sum())
    if n_ties:
        out[ties] = np.where(tie_rng.random(n_ties) < 0.5, 1, -1)
    return out


@dataclass(frozen=True)
class EmResult:
    p_hat: np.ndarray
    posteriors: np.ndarray
    log_likelihood_trace: list
    iterations: int
    converged: bool


def _log_evidence(X, p):
    """Per-task log-likelihoods under G = +1 and G = -1 (answer factors dropped)."""
    log_right = np.log1p(-p)
    log_wrong = np.log(p)
    pos = (X == 1)
    neg = (X == -1)
    ll_plus = pos @ log_right + neg @ log_wrong
    ll_minus = pos @ log_wrong + neg @ log_right
    return ll_plus, ll_minus


def _e_step(X, p):
    ll_plus, ll_minus = _log_evidence(X, p)
    joint = np.logaddexp(ll_plus, ll_minus) + np.log(0.5)
    posteriors = np.exp(ll_plus + np.log(0.5) - joint)
    return posteriors, float(joint.sum())


def _m_step(X, posteriors, clamp):
    answered = (X != 0).sum(axis=0)
    # expected disagreements with the latent truth
    wrong = (X == -1).T @ posteriors + (X == 1).T @ (1.0 - posteriors)
    p = np.full(X.shape[1], 0.5)
    has = answered > 0
    p[has] = wrong[has] / answered[has]
    return np.clip(p, clamp, 1.0 - clamp)


def log_likelihood(X, p, clamp=EM_CLAMP):
    """Marginal log-likelihood ``sum_t log(L+/2 + L-/2)`` of the labels."""
    X = check_labels(X)
    p = np.clip(np.asarray(p, dtype=float), clamp, 1.0 - clamp)
    return _e_step(X, p)[1]


def dawid_skene_em(m, max_iters=200, ll_tol=1e-8, clamp=EM_CLAMP):
    """Fit one error probability per labeller by EM.

    The latent truth has a uniform prior.  EM starts from the majority-vote
    pseudo-truth (ties count as 1/2), which picks the mode with mostly
    truthful labellers.  Missing labels drop out of both steps.  Error
    probabilities stay in ``[clamp, 1 - clamp]``; the constrained M-step
    keeps the likelihood non-decreasing.

    Parameters
    ----------
    m : array-like, shape (n_tasks, n_labellers)
    max_iters : int
    ll_tol : float
        Stop once an iteration gains less than this much log-likelihood.

    Returns
    -------
    EmResult
    """
    X = check_labels(m)
    if X.shape[0] < 1:
        raise ValueError("need at least one task")
    if X.shape[1] <= 2:
        raise ValueError("need n > 2 labellers")
    sums = X.sum(axis=1)
    posteriors = np.where(sums > 0, 1.0, np.where(sums < 0, 0.0, 0.5))
    p = _m_step(X, posteriors, clamp)
    trace = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        posteriors, ll = _e_step(X, p)
        trace.append(ll)
        if len(trace) > 1 and trace[-1] - trace[-2] < ll_tol:
            converged = True
            break
        p = _m_step(X, posteriors, clamp)
    return EmResult(p_hat=p, posteriors=posteriors, log_likelihood_trace=trace,
                    iterations=iterations, converged=converged)
