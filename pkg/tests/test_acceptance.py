"""One test per acceptance criterion; each records a PASS/FAIL/SKIPPED line."""

import itertools
import os
from pathlib import Path
import time

import numpy as np
import pytest

from crowdstream.agreement import (
    AgreementState,
    agreement_increment,
    agreement_rates_exact,
    estimate_error_probs,
    update,
)
from crowdstream.baselines import dawid_skene_em, majority_vote_batch
from crowdstream.core import weighted_majority_batch, weights_from_error_probs
from crowdstream.datasets import evaluate, load_labels
from crowdstream.estimators import (
    AgreementBasedClassifier,
    DawidSkeneClassifier,
    MajorityVoteClassifier,
)
from crowdstream.fixedpoint import f_eval, has_unique_fixed_point, phi, solve_fixed_point, v0
from crowdstream.simulator import GeneratorConfig, HammerSpammer, Sinusoid, generate_tasks, run_experiment

from conftest import ACCEPTANCE_LINES, random_admissible_p
from test_baselines import TOY, grid_argmax

REPO = Path(__file__).resolve().parents[1]


class Criterion:
    def __init__(self, number, name, budget):
        self.number, self.name, self.budget = number, name, budget

    def __enter__(self):
        self.start = time.perf_counter()
        self.detail = ""
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        status = "PASS" if exc_type is None else "FAIL"
        if exc_type is pytest.skip.Exception:
            status = "SKIPPED"
        line = (f"criterion {self.number:>2} {status:<7} {self.name} "
                f"[{elapsed:.1f}s / {self.budget}s] {self.detail}").rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        if exc_type is None:
            assert elapsed < self.budget, f"runtime {elapsed:.1f}s exceeds {self.budget}s"
        return False


def test_criterion_01_fixed_point_inversion():
    with Criterion(1, "fixed-point inversion", 5) as c:
        rng = np.random.default_rng(1)
        worst_p = worst_v = 0.0
        for _ in range(500):
            n = int(rng.integers(5, 41))
            p = random_admissible_p(rng, n)
            a = agreement_rates_exact(p)
            sol = solve_fixed_point(a, 1e-12)
            worst_p = max(worst_p, np.abs(sol.p_of_u - p).max())
            worst_v = max(worst_v, abs(sol.v - (1 - 2 * p.mean()) ** 2))
        c.detail = f"max|p-phi|={worst_p:.1e} max|v-(1-2q)^2|={worst_v:.1e}"
        assert worst_p <= 1e-8
        assert worst_v <= 1e-9


def test_criterion_02_monotonicity():
    with Criterion(2, "f(u,v)-v strictly increasing", 2) as c:
        rng = np.random.default_rng(2)
        worst = np.inf
        for _ in range(1000):
            n = int(rng.integers(3, 41))
            u = rng.uniform(0, 1, size=n)
            va = v0(u) + rng.uniform(0, 2)
            vb = va + rng.uniform(1e-6, 2)
            slope = (f_eval(u, vb) - f_eval(u, va)) / (vb - va)
            margin = slope - n**2 / (n - 2) ** 2
            worst = min(worst, margin)
            assert margin >= -1e-9
            assert f_eval(u, vb) - vb > f_eval(u, va) - va
        c.detail = f"min slope excess={worst:.1e}"


def test_criterion_03_update_form_equivalence():
    with Criterion(3, "O(n) update equals pairwise form", 5) as c:
        rng = np.random.default_rng(3)
        n, t, alpha = 25, 10_000, 0.6
        X = rng.integers(-1, 2, size=(t, n)) * (rng.random((t, n)) < alpha)
        state = AgreementState.fresh(n, alpha)
        # pairwise-count oracle: O(n^2) per task, accumulated separately
        agree = (X[:, :, None] * X[:, None, :] == 1).sum(axis=2) - (X != 0)
        ref = np.cumsum(agree, axis=0) / ((n - 1) * alpha**2) / np.arange(1, t + 1)[:, None]
        worst = 0.0
        for k, x in enumerate(X):
            state = update(state, x)
            worst = max(worst, np.abs(state.a_hat - ref[k]).max())
        c.detail = f"max deviation={worst:.1e}"
        assert worst <= 1e-12


def test_criterion_04_concentration_scaling():
    with Criterion(4, "estimation error ratio t=800/3200", 30) as c:
        config = GeneratorConfig(n=10, profile=HammerSpammer(0.0), tasks=3200, seed=4)
        m = run_experiment(config, methods=("ab",), runs=50)
        ratio = m.linf_error[799] / m.linf_error[3199]
        c.detail = f"ratio={ratio:.3f}"
        assert 1.4 <= ratio <= 2.8


def test_criterion_05_finite_regret():
    with Criterion(5, "finite regret", 120) as c:
        low = run_experiment(GeneratorConfig(n=10, profile=HammerSpammer(0.0), tasks=1000, seed=5),
                             methods=("ab", "oracle"), runs=100)
        high = run_experiment(GeneratorConfig(n=10, profile=HammerSpammer(0.12), tasks=1000, seed=5),
                              methods=("ab", "oracle"), runs=100)
        r_low, r_high = low.regret[999], high.regret[999]
        flat = low.regret[999] - low.regret[499]
        c.detail = f"R(q=.25)={r_low:.3f} R(q=.31)={r_high:.3f} R(1000)-R(500)={flat:.3f}"
        assert r_low <= 0.5
        assert r_high <= 3
        assert flat <= 0.2


def test_criterion_06_hoeffding_bounds():
    with Criterion(6, "Hoeffding bounds", 30) as c:
        n, T = 20, 100_000
        config = GeneratorConfig(n=n, profile=HammerSpammer(0.0), tasks=T, seed=6)
        truth, X, P = generate_tasks(config, np.random.default_rng(6))
        rng = np.random.default_rng(60)
        mv = evaluate(majority_vote_batch(X, rng), truth)
        oracle = evaluate(weighted_majority_batch(X, weights_from_error_probs(P[0]), rng), truth)
        mv_bound, oracle_bound = np.exp(-n / 8), np.exp(-n / 4)
        mv_slack = 3 * np.sqrt(mv_bound * (1 - mv_bound) / T)
        oracle_slack = 3 * np.sqrt(oracle_bound * (1 - oracle_bound) / T)
        c.detail = f"mv={mv:.4f} (<= {mv_bound + mv_slack:.4f}) oracle={oracle:.5f} (<= {oracle_bound + oracle_slack:.5f})"
        assert mv <= mv_bound + mv_slack
        assert oracle <= oracle_bound + oracle_slack


def test_criterion_07_drift_tracking():
    with Criterion(7, "non-stationary tracking", 30) as c:
        config = GeneratorConfig(n=10, profile=Sinusoid(1e-2), tasks=3000, seed=7)
        stat = {}
        for beta in (0.03, 1e-3, 0.5):
            m = run_experiment(config, methods=("ab",), runs=1, beta=beta)
            stat[beta] = float(np.abs(m.p1_hat[500:] - m.p1_true[500:]).mean())
        c.detail = " ".join(f"beta={b:g}:{v:.3f}" for b, v in stat.items())
        assert stat[0.03] <= 0.12
        assert stat[1e-3] > stat[0.03]
        assert stat[0.5] > stat[0.03]


def test_criterion_08_em_correctness():
    with Criterion(8, "EM monotone and matches grid oracle", 10) as c:
        rng = np.random.default_rng(8)
        worst = 0.0
        for _ in range(100):
            n, t = int(rng.integers(3, 10)), int(rng.integers(1, 200))
            X = rng.integers(-1, 2, size=(t, n))
            trace = np.array(dawid_skene_em(X).log_likelihood_trace)
            if trace.size > 1:
                worst = min(worst, np.diff(trace).min())
        gap = np.abs(dawid_skene_em(TOY).p_hat - grid_argmax(TOY)).max()
        c.detail = f"min ll step={worst:.1e} grid gap={gap:.1e}"
        assert worst >= -1e-9
        assert gap <= 1e-2


def test_criterion_09_fallback_semantics():
    with Criterion(9, "fallback equals majority vote", 5) as c:
        rng = np.random.default_rng(9)
        inputs = [np.zeros(5)]
        while len(inputs) < 50:
            u = rng.uniform(0, 1, size=5)
            if not has_unique_fixed_point(u):
                inputs.append(u)
        scan = np.array(list(itertools.product((-1, 0, 1), repeat=5)))
        mv_scores = scan.sum(axis=1)
        for u in inputs:
            p_hat, unique = estimate_error_probs(AgreementState(u, t=100))
            assert not unique
            np.testing.assert_array_equal(p_hat, 0.5)
            w = weights_from_error_probs(p_hat)
            # same decision everywhere, and the same tie set
            a = weighted_majority_batch(scan, w, np.random.default_rng(0))
            b = majority_vote_batch(scan, np.random.default_rng(0))
            np.testing.assert_array_equal(a, b)
            ties = np.flatnonzero(mv_scores == 0)
            draws = {tuple(weighted_majority_batch(scan, w, np.random.default_rng(s))[ties])
                     for s in range(3)}
            assert len(draws) > 1
        c.detail = f"{len(inputs)} failing inputs x {len(scan)} observation vectors"


REFERENCE_RATES = {
    # dataset: (mv, em, ab); Bird EM falls outside the symmetric model
    "web": (0.14, 0.06, 0.06),
    "rte": (0.10, 0.07, 0.08),
    "temp": (0.06, 0.06, 0.07),
    "duchenne": (0.28, 0.28, 0.26),
    "bird": (0.24, None, 0.23),
    "dog": (0.00, 0.00, 0.00),
}


def _find(directory, stem):
    for suffix in (".tsv", ".csv", ".txt", ""):
        path = directory / f"{stem}{suffix}"
        if path.is_file():
            return path
    return None


def _real_datasets():
    root = Path(os.environ.get("CROWDSTREAM_DATA_DIR", REPO / "data" / "real"))
    found = {}
    for name in REFERENCE_RATES:
        labels, truth = _find(root / name, "labels"), _find(root / name, "truth")
        if labels and truth:
            found[name] = (labels, truth)
    return found


def test_criterion_10_real_data():
    with Criterion(10, "real data error rates", 600) as c:
        found = _real_datasets()
        if not found:
            c.detail = "dataset files absent (set CROWDSTREAM_DATA_DIR)"
            pytest.skip("real datasets not provided")
        failures = []
        for name, (labels, truth) in found.items():
            data = load_labels(labels, truth)
            rates = {
                "mv": MajorityVoteClassifier(random_state=0).fit(data.matrix).predict(data.matrix),
                "em": DawidSkeneClassifier(random_state=0).fit(data.matrix).predict(data.matrix),
                "ab": AgreementBasedClassifier(alpha=data.alpha_hat, random_state=0)
                .fit(data.matrix).predict(data.matrix),
            }
            rates = {k: evaluate(v, data.truth) for k, v in rates.items()}
            for method, expected in zip(("mv", "em", "ab"), REFERENCE_RATES[name]):
                if expected is not None and abs(rates[method] - expected) > 0.03:
                    failures.append(f"{name}/{method}={rates[method]:.3f} vs {expected:.2f}")
        missing = sorted(set(REFERENCE_RATES) - set(found))
        c.detail = f"checked {sorted(found)}" + (f"; absent {missing}" if missing else "")
        assert not failures, "; ".join(failures)
