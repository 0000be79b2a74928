"""Model-level diagnostics: identifiability margin and decoding margin."""

import numpy as np

from .agreement import agreement_rates_exact
from .core import DEFAULT_CLAMP, CrowdModel, ErrorProfile, weights_from_error_probs
from .fixedpoint import v0

LAMBDA_MAX_N = 12


def decoding_margin(w, rtol=1e-12):
    """Smallest non-zero ``|w . x|`` over ``x`` in {-1, 0, 1}^n.

    Enumerates the 3^n achievable scores, so keep n small.  Scores within
    ``rtol * sum|w|`` of zero are treated as exact cancellations.
    """
    w = np.asarray(w, dtype=float)
    scores = np.zeros(1)
    for wi in w:
        scores = np.concatenate((scores - wi, scores, scores + wi))
    mags = np.abs(scores)
    mags = mags[mags > rtol * max(1.0, float(np.abs(w).sum()))]
    return float(mags.min()) if mags.size else None


def model_diagnostics(model, lambda_max_n=LAMBDA_MAX_N, clamp=DEFAULT_CLAMP):
    """Summarise a crowd model.

    Returns an `ErrorProfile` holding the mean error ``q``, the decoding
    weights, ``gamma = (1 - 2q)^2 - v0(a)``, ``eta = min p_i (1 - p_i)`` and,
    when ``n <= lambda_max_n``, the decoding margin ``lambda``.
    """
    if not isinstance(model, CrowdModel):
        model = CrowdModel(model)
    p = model.p
    q = float(p.mean())
    w = weights_from_error_probs(p, clamp)
    a = agreement_rates_exact(model)
    gamma = (1.0 - 2.0 * q) ** 2 - v0(a)
    eta = float(np.min(p * (1.0 - p)))
    lam = decoding_margin(w) if model.n <= lambda_max_n else None
    return ErrorProfile(p=p, q=q, w=w, gamma=float(gamma), eta=eta, lambda_=lam)
