"""Synthetic crowds, prequential experiment loop and regret bookkeeping."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import os
from typing import Callable, Optional

import numpy as np

from ._validation import check_alpha, check_error_probs, check_labels
from .agreement import agreement_increment, tolerance_schedule
from .baselines import dawid_skene_em
from .core import DEFAULT_CLAMP, weights_from_error_probs
from .fixedpoint import solve_fixed_point_batch

METHODS = ("ab", "mv", "oracle", "em")


def hammer_spammer_p(n, p1):
    """First half of the crowd errs with probability `p1`, second half guesses."""
    if n % 2:
        raise ValueError(f"hammer-spammer needs an even n, got {n}")
    if not 0 <= p1 < 0.5:
        raise ValueError("p1 must lie in [0, 1/2)")
    p = np.full(n, 0.5)
    p[: n // 2] = p1
    return p


@dataclass(frozen=True)
class Explicit:
    p: tuple

    def p_at(self, t, n):
        return np.asarray(self.p, dtype=float)


@dataclass(frozen=True)
class HammerSpammer:
    p1: float = 0.0

    def p_at(self, t, n):
        return hammer_spammer_p(n, self.p1)


@dataclass(frozen=True)
class Sinusoid:
    """``p_i(t) = (1 + sin(omega t + 2 pi i / n)) / 4`` with 0-based ``i``."""

    omega: float = 1e-2

    def p_at(self, t, n):
        phases = 2.0 * np.pi * np.arange(n) / n
        return 0.25 * (1.0 + np.sin(self.omega * np.asarray(t, dtype=float)[..., None] + phases))

    @property
    def sigma(self):
        # max |d/dt p_i(t)|
        return abs(self.omega) / 4.0


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    alpha: float = 1.0
    profile: object = field(default_factory=HammerSpammer)
    seed: int = 0
    tasks: int = 1000

    def __post_init__(self):
        if self.n <= 2:
            raise ValueError("need n > 2 labellers")
        if self.tasks < 1:
            raise ValueError("need at least one task")
        check_alpha(self.alpha)
        if isinstance(self.profile, Explicit) and len(self.profile.p) != self.n:
            raise ValueError("explicit p must have n entries")
        check_error_probs(self.p_path(np.array(1)))

    def p_path(self, t):
        """Error probabilities at task indices `t`, shape ``t.shape + (n,)``."""
        t = np.asarray(t)
        p = self.profile.p_at(t, self.n)
        return np.broadcast_to(p, t.shape + (self.n,))


@dataclass(frozen=True)
class DriftTrajectory:
    p_of_t: Callable
    sigma_bound: float


def drift_trajectory(config):
    sigma = getattr(config.profile, "sigma", 0.0)
    return DriftTrajectory(p_of_t=config.p_path, sigma_bound=sigma)


def generate_task(config, t, rng):
    """Draw the truth and the labels of task `t`.

    Returns
    -------
    truth : int, ±1
    x : ndarray of int8, shape (n,)
    """
    p = config.p_path(np.asarray(t))
    truth = 1 if rng.random() < 0.5 else -1
    answers = rng.random(config.n) < config.alpha
    wrong = rng.random(config.n) < p
    x = np.where(answers, np.where(wrong, -truth, truth), 0).astype(np.int8)
    return truth, x


def generate_tasks(config, rng, tasks=None):
    """Vectorised `generate_task` for tasks 1..T.

    Returns
    -------
    truth : ndarray, shape (T,)
    X : ndarray of int8, shape (T, n)
    P : ndarray, shape (T, n)
    """
    T = config.tasks if tasks is None else tasks
    t = np.arange(1, T + 1)
    P = np.array(config.p_path(t))
    truth = np.where(rng.random(T) < 0.5, 1, -1).astype(np.int8)
    answers = rng.random((T, config.n)) < config.alpha
    wrong = rng.random((T, config.n)) < P
    signs = np.where(wrong, -1, 1) * truth[:, None]
    X = np.where(answers, signs, 0).astype(np.int8)
    return truth, X, P


def oracle_error_known_truth(labels, truth):
    """Empirical disagreement rate of each labeller with the known truth."""
    X = check_labels(labels)
    truth = np.asarray(truth)
    if truth.shape != (X.shape[0],):
        raise ValueError("truth length must match the number of tasks")
    answered = (X != 0).sum(axis=0)
    wrong = ((X != 0) & (X != truth[:, None])).sum(axis=0)
    p = np.full(X.shape[1], 0.5)
    has = answered > 0
    p[has] = wrong[has] / answered[has]
    return p


@dataclass
class ExperimentMetrics:
    """Per-task series averaged over runs.

    ``errors[m][t-1]`` is the mean cumulative number of mistakes of method
    ``m`` over tasks 1..t; ``regret`` is the gap to the oracle.
    """

    t: np.ndarray
    linf_error: np.ndarray
    l1_error: np.ndarray
    errors: dict
    regret: np.ndarray
    p1_true: np.ndarray
    p1_hat: np.ndarray
    p1_abs_error: np.ndarray
    fallback_rate: np.ndarray
    runs: int
    seed: int
    config: GeneratorConfig
    beta: Optional[float] = None


def _decide(scores, coins):
    return np.where(scores > 0, 1, np.where(scores < 0, -1, np.where(coins < 0.5, 1, -1)))


def _run_batch(config, run_ids, methods, beta, tol, clamp, em_every):
    """Simulate several runs side by side; run ``r`` only reads its own streams."""
    data = []
    coins = []
    for run in run_ids:
        data_seq, tie_seq = np.random.SeedSequence(config.seed, spawn_key=(run,)).spawn(2)
        data.append(generate_tasks(config, np.random.default_rng(data_seq)))
        coins.append(np.random.default_rng(tie_seq).random((len(METHODS), config.tasks)))
    truth = np.stack([d[0] for d in data])
    X = np.stack([d[1] for d in data])
    P = data[0][2]
    coins = np.stack(coins, axis=1)
    R, T, n = X.shape
    Xf = X.astype(float)
    increments = agreement_increment(Xf, config.alpha)

    mistakes = {m: np.zeros((R, T), dtype=np.int8) for m in methods}
    linf = np.zeros((R, T))
    l1 = np.zeros((R, T))
    p1_hat = np.zeros((R, T))
    fallback = np.zeros((R, T), dtype=bool)

    A = np.zeros((R, n))
    W_ab = np.zeros((R, n))
    W_em = np.zeros((R, n))
    for k in range(T):
        x = Xf[:, k]
        g = truth[:, k]
        plain = x.sum(axis=1)
        if "ab" in methods:
            scores = np.where(W_ab.any(axis=1), np.einsum("rn,rn->r", x, W_ab), plain)
            mistakes["ab"][:, k] = _decide(scores, coins[0, :, k]) != g
        if "mv" in methods:
            mistakes["mv"][:, k] = _decide(plain, coins[1, :, k]) != g
        if "oracle" in methods:
            w = weights_from_error_probs(P[k], clamp)
            scores = x @ w if w.any() else plain
            mistakes["oracle"][:, k] = _decide(scores, coins[2, :, k]) != g
        if "em" in methods:
            if k and k % em_every == 0:
                W_em = np.stack([weights_from_error_probs(dawid_skene_em(X[r, :k]).p_hat, clamp)
                                 for r in range(R)])
            scores = np.where(W_em.any(axis=1), np.einsum("rn,rn->r", x, W_em), plain)
            mistakes["em"][:, k] = _decide(scores, coins[3, :, k]) != g

        t = k + 1
        if beta is None:
            A = (t - 1) / t * A + increments[:, k] / t
        else:
            A = (1.0 - beta) * A + beta * increments[:, k]
        step_tol = tolerance_schedule(t, n, beta) if tol is None else tol
        _, unique, p_hat = solve_fixed_point_batch(A, step_tol)
        np.clip(p_hat, 0.0, 1.0, out=p_hat)
        fallback[:, k] = ~unique
        W_ab = weights_from_error_probs(p_hat, clamp)
        diff = np.abs(p_hat - P[k])
        linf[:, k] = diff.max(axis=1)
        l1[:, k] = diff.mean(axis=1)
        p1_hat[:, k] = p_hat[:, 0]
    return {
        "mistakes": {m: np.cumsum(v, axis=1, dtype=np.int64) for m, v in mistakes.items()},
        "linf": linf, "l1": l1, "p1_hat": p1_hat, "p1_true": P[:, 0],
        "fallback": fallback,
    }


def _workers():
    try:
        return max(1, int(os.environ.get("CROWDSTREAM_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(config, methods=("ab", "mv", "oracle"), runs=1, beta=None,
                   tol=None, clamp=DEFAULT_CLAMP, em_every=50, regret_of="ab",
                   workers=None):
    """Run the prequential loop `runs` times and average the series.

    Every method decodes task t before the agreement estimate sees it.  All
    methods share the sampled tasks of a run (common random numbers); run
    ``r`` draws from ``SeedSequence(seed, spawn_key=(r,))`` so any subset
    of runs can be reproduced on its own.  The EM baseline is refitted on
    the stored prefix every `em_every` tasks.

    Parameters
    ----------
    config : GeneratorConfig
    methods : iterable of {"ab", "mv", "oracle", "em"}
    runs : int
    beta : float or None
        Exponential averaging weight for the agreement estimate.
    tol : float or None
        Solver tolerance, ``None`` for the ``sqrt(log n / t)`` schedule.
    regret_of : str
        Method whose cumulative mistakes are compared to the oracle.

    Returns
    -------
    ExperimentMetrics
    """
    methods = tuple(dict.fromkeys(methods))
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if em_every < 1:
        raise ValueError("em_every must be >= 1")
    needed = tuple(dict.fromkeys(methods + ("oracle", regret_of)))
    workers = _workers() if workers is None else workers
    args = (needed, beta, tol, clamp, em_every)
    chunks = [c for c in np.array_split(np.arange(runs), min(workers, runs)) if c.size]
    if len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(_run_batch, [config] * len(chunks), chunks,
                                  *[[a] * len(chunks) for a in args]))
    else:
        parts = [_run_batch(config, chunks[0], *args)]

    # deterministic reduction: chunks are concatenated in run order
    def stack(key):
        return np.concatenate([part[key] for part in parts])

    mistakes = {m: np.concatenate([part["mistakes"][m] for part in parts])
                for m in needed}
    errors = {m: v.mean(axis=0) for m, v in mistakes.items()}
    regret = errors[regret_of] - errors["oracle"]
    p1_true = parts[0]["p1_true"]
    p1_hat = stack("p1_hat")
    return ExperimentMetrics(
        t=np.arange(1, config.tasks + 1),
        linf_error=stack("linf").mean(axis=0),
        l1_error=stack("l1").mean(axis=0),
        errors={m: errors[m] for m in methods},
        regret=regret,
        p1_true=p1_true,
        p1_hat=p1_hat[0],
        p1_abs_error=np.abs(p1_hat - p1_true).mean(axis=0),
        fallback_rate=stack("fallback").mean(axis=0),
        runs=runs,
        seed=config.seed,
        config=config,
        beta=beta,
    )
