"""Inversion of agreement rates into error probabilities.

For an agreement vector ``u`` the squared centred accuracy ``v = (1 - 2q)^2``
solves ``v = f(u, v)``.  The map ``v -> f(u, v) - v`` is strictly increasing on
``[v0(u), inf)`` so the root is unique when it exists and plain bisection
finds it.  ``g(u, v)`` then returns the error probabilities.
"""

from dataclasses import dataclass
import math

import numpy as np

# Discriminants in (-DELTA_SLACK, 0) are rounding noise at v ~ v0 and are
# truncated to zero before the square root.
DELTA_SLACK = 1e-12
V_HI_LIMIT = 1e6
MAX_BISECTIONS = 10_000
SMALL_N = 32


class FixedPointError(ArithmeticError):
    """Raised when the fixed-point equation cannot be solved."""


class NonUniqueFixedPoint(FixedPointError):
    """The existence condition ``f(u, v0(u)) <= v0(u)`` does not hold."""


@dataclass(frozen=True)
class FixedPointSolution:
    v: float
    unique: bool
    p_of_u: np.ndarray
    iterations: int


def _spread(n):
    return 4.0 * (n - 1) / n**2


def discriminants(u, v):
    """Discriminants ``v + 4 (n-1)/n^2 (1 - 2 u_i)`` of the per-labeller quadratics."""
    u = np.asarray(u, dtype=float)
    return v + _spread(u.size) * (1.0 - 2.0 * u)


def v0(u):
    """Smallest ``v`` for which every discriminant is non-negative."""
    u = np.asarray(u, dtype=float)
    return max(_spread(u.size) * float(np.max(2.0 * u - 1.0)), 0.0)


def v1(u):
    """``(2/n) sum(2 u_i - 1)``.

    ``v1(u) >= 2 v0(u)`` is sufficient for a unique root, since
    ``f(u, v) - v <= 2 (n-1) (2v - v1(u)) / (n-2)^2``.  The weaker
    ``v1(u) >= v0(u)`` is not.
    """
    u = np.asarray(u, dtype=float)
    return 2.0 / u.size * float(np.sum(2.0 * u - 1.0))


def _sqrt_discriminants(u, v):
    delta = discriminants(u, v)
    low = delta.min()
    if low < 0:
        if low <= -DELTA_SLACK:
            raise ValueError(f"v={v!r} lies below v0(u)")
        delta = np.maximum(delta, 0.0)
    return np.sqrt(delta)


def f_eval(u, v):
    """Evaluate ``f(u, v) = (sum_i sqrt(delta_i(u, v)) / (n - 2))^2``."""
    u = np.asarray(u, dtype=float)
    n = u.size
    if n <= 2:
        raise ValueError("f is defined for n > 2 only")
    return (float(np.sum(_sqrt_discriminants(u, v))) / (n - 2)) ** 2


def g_eval(u, v):
    """Error probabilities ``1/2 + (n/4)(sqrt(delta_i(u, v)) - sqrt(v))``."""
    u = np.asarray(u, dtype=float)
    n = u.size
    return 0.5 + n / 4.0 * (_sqrt_discriminants(u, v) - np.sqrt(max(v, 0.0)))


def has_unique_fixed_point(u):
    """Check the existence condition ``f(u, v0(u)) <= v0(u)``.

    Equality counts as existence, with the root sitting at ``v0(u)``.
    """
    u = np.asarray(u, dtype=float)
    lo = v0(u)
    return f_eval(u, lo) <= lo


def solve_fixed_point(u, tol=1e-12):
    """Solve ``v = f(u, v)`` by bisection.

    The upper end of the bracket starts at ``max(v0 + 1, 1)`` and doubles
    until ``f(u, v) - v >= 0``; bisection then runs until the bracket is
    narrower than `tol` and the residual at the returned point is within
    `tol`, or floating point resolution is exhausted.

    Parameters
    ----------
    u : array-like, shape (n,)
        Agreement rates.
    tol : float
        Bracket width and residual tolerance.

    Returns
    -------
    FixedPointSolution

    Raises
    ------
    NonUniqueFixedPoint
        If the existence condition fails.
    FixedPointError
        If no sign change is found below ``V_HI_LIMIT``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    u = np.asarray(u, dtype=float)
    n = u.size
    if n <= 2:
        raise ValueError("need n > 2")

    base = _spread(n) * (1.0 - 2.0 * u)
    scale = 1.0 / (n - 2)

    if n <= SMALL_N:
        # plain floats beat numpy call overhead on short vectors
        base_list = base.tolist()

        def h(v):
            total = 0.0
            for b in base_list:
                d = v + b
                if d > 0:
                    total += math.sqrt(d)
            return (total * scale) ** 2 - v
    else:
        def h(v):
            delta = v + base
            np.maximum(delta, 0.0, out=delta)
            return (float(np.sqrt(delta).sum()) * scale) ** 2 - v

    lo = max(-float(base.min()), 0.0)
    h_lo = h(lo)
    if h_lo > 0:
        raise NonUniqueFixedPoint(
            f"f(u, v0) - v0 = {h_lo:.3g} > 0: no fixed point")
    iterations = 0
    if h_lo == 0:
        v = lo
    else:
        hi = max(lo + 1.0, 1.0)
        while h(hi) < 0:
            hi *= 2.0
            if hi > V_HI_LIMIT:
                raise FixedPointError("upper bracket exceeded 1e6")
        v = 0.5 * (lo + hi)
        while iterations < MAX_BISECTIONS:
            v = 0.5 * (lo + hi)
            if not lo < v < hi:
                break
            hv = h(v)
            iterations += 1
            if hv < 0:
                lo = v
            elif hv > 0:
                hi = v
            else:
                break
            if hi - lo <= tol and abs(hv) <= tol:
                break
    return FixedPointSolution(
        v=v, unique=True, p_of_u=g_eval(u, v), iterations=iterations)


def phi(u, tol=1e-12):
    """Map agreement rates to error probabilities, ``g(u, v(u))``."""
    return solve_fixed_point(u, tol).p_of_u


def solve_fixed_point_batch(U, tol=1e-12):
    """Row-wise `solve_fixed_point` for a stack of agreement vectors.

    Rows without a unique fixed point, or whose bracket search fails, get
    ``unique=False``, ``v=nan`` and error probabilities of 1/2.

    Parameters
    ----------
    U : array-like, shape (R, n)
    tol : float

    Returns
    -------
    v : ndarray, shape (R,)
    unique : ndarray of bool, shape (R,)
    p : ndarray, shape (R, n)
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    U = np.asarray(U, dtype=float)
    R, n = U.shape
    if n <= 2:
        raise ValueError("need n > 2")
    base = _spread(n) * (1.0 - 2.0 * U)
    scale = 1.0 / (n - 2)

    def h(v, rows):
        delta = v[:, None] + base[rows]
        np.maximum(delta, 0.0, out=delta)
        return (np.sqrt(delta).sum(axis=1) * scale) ** 2 - v

    every = np.arange(R)
    finite = np.all(np.isfinite(U), axis=1)
    lo = np.maximum(_spread(n) * np.max(2.0 * U - 1.0, axis=1), 0.0)
    lo[~finite] = 0.0
    h_lo = h(lo, every)
    unique = finite & (h_lo <= 0)
    v = lo.copy()

    hi = np.maximum(lo + 1.0, 1.0)
    pending = np.flatnonzero(unique & (h_lo < 0))
    grow = pending
    while grow.size:
        grow = grow[h(hi[grow], grow) < 0]
        hi[grow] *= 2.0
        over = grow[hi[grow] > V_HI_LIMIT]
        if over.size:
            unique[over] = False
            grow = np.setdiff1d(grow, over)
    active = pending[unique[pending]]
    for _ in range(MAX_BISECTIONS):
        if not active.size:
            break
        mid = 0.5 * (lo[active] + hi[active])
        v[active] = mid
        stuck = (mid <= lo[active]) | (mid >= hi[active])
        hm = h(mid, active)
        below = ~stuck & (hm < 0)
        above = ~stuck & (hm > 0)
        lo[active[below]] = mid[below]
        hi[active[above]] = mid[above]
        width = hi[active] - lo[active]
        done = stuck | (hm == 0) | ((width <= tol) & (np.abs(hm) <= tol))
        active = active[~done]

    p = np.full((R, n), 0.5)
    if unique.any():
        rows = np.flatnonzero(unique)
        delta = v[rows, None] + base[rows]
        np.maximum(delta, 0.0, out=delta)
        p[rows] = 0.5 + n / 4.0 * (np.sqrt(delta) - np.sqrt(v[rows])[:, None])
    v[~unique] = np.nan
    return v, unique, p
