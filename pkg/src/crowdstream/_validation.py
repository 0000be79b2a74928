"""Input validation helpers shared by the estimators and free functions."""

import numpy as np


def check_labels(X, n_labellers=None, allow_1d=False):
    """Validate a label vector or task-labeller matrix.

    Parameters
    ----------
    X : array-like, shape (n_tasks, n_labellers) or (n_labellers,)
        Entries in {-1, 0, +1}; 0 marks a missing answer.
    n_labellers : int, optional
        Expected number of columns.
    allow_1d : bool
        Accept a single observation vector.

    Returns
    -------
    X : ndarray of int8
    """
    X = np.asarray(X)
    if X.ndim == 1 and not allow_1d:
        raise ValueError("expected a 2D task-labeller matrix, got a 1D array")
    if X.ndim not in (1, 2):
        raise ValueError(f"expected 1D or 2D labels, got ndim={X.ndim}")
    if X.size:
        bad = X.min() < -1 or X.max() > 1
        if not bad and X.dtype.kind not in "iub":
            bad = not np.array_equal(X, np.round(X))
        if bad:
            raise ValueError("labels must take values in {-1, 0, +1}")
    if n_labellers is not None and X.shape[-1] != n_labellers:
        raise ValueError(
            f"expected {n_labellers} labellers, got {X.shape[-1]}")
    return X.astype(np.int8, copy=False)


def check_error_probs(p, allow_2d=False):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 and not (allow_2d and p.ndim == 2):
        raise ValueError("error probabilities must be a 1D vector")
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueError("error probabilities must lie in [0, 1]")
    return p


def check_alpha(alpha):
    alpha = float(alpha)
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    return alpha


def check_n_labellers(n):
    n = int(n)
    if n <= 2:
        raise ValueError(f"need more than two labellers, got n={n}")
    return n
