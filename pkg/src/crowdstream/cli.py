"""Command-line entry point: ``crowdstream {simulate,eval,predict}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 the fixed point was
never found (only with ``--strict``).
"""

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .agreement import AgreementStream, beta_heuristic
from .core import DEFAULT_CLAMP, weights_from_error_probs
from .datasets import DatasetError, evaluate, load_labels
from .estimators import AgreementBasedClassifier, DawidSkeneClassifier, MajorityVoteClassifier
from .simulator import Explicit, GeneratorConfig, HammerSpammer, Sinusoid, run_experiment

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

logger = logging.getLogger("crowdstream")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _probability_list(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text!r}")


def build_parser():
    parser = _Parser(prog="crowdstream", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="synthetic experiments, one row per task")
    sim.add_argument("--n", type=int, default=10)
    sim.add_argument("--alpha", type=float, default=1.0)
    sim.add_argument("--profile", choices=("hammer-spammer", "sinusoid", "explicit"),
                     default=None)
    sim.add_argument("--p1", type=float, default=0.0,
                     help="error probability of the informative half (hammer-spammer)")
    sim.add_argument("--p", type=_probability_list, default=None,
                     help="comma separated error probabilities (explicit profile)")
    sim.add_argument("--omega", type=float, default=1e-2, help="sinusoid frequency, rad/task")
    sim.add_argument("--beta", type=float, default=None)
    sim.add_argument("--sigma", type=float, default=None,
                     help="drift speed; picks beta when --beta is absent")
    sim.add_argument("--tasks", type=int, default=1000)
    sim.add_argument("--runs", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--tol", type=float, default=None)
    sim.add_argument("--methods", default="ab,mv,oracle")
    sim.add_argument("--em-every", type=int, default=50)
    sim.add_argument("--prequential", action="store_true",
                     help="accepted for symmetry; simulations are always prequential")
    sim.add_argument("--strict", action="store_true")
    sim.add_argument("--out", default="-")

    ev = sub.add_parser("eval", help="error rates on a labelled dataset")
    ev.add_argument("--labels", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument("--methods", default="mv,em,ab")
    ev.add_argument("--alpha", type=float, default=None,
                    help="answer probability; defaults to the empirical rate")
    ev.add_argument("--beta", type=float, default=None)
    ev.add_argument("--tol", type=float, default=None)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--prequential", action="store_true",
                    help="score each task with weights learnt from earlier tasks only")
    ev.add_argument("--strict", action="store_true")
    ev.add_argument("--out", default="-")

    pr = sub.add_parser("predict", help="stream task rows from stdin, print predictions")
    pr.add_argument("--tol", type=float, default=None)
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--clamp", type=float, default=DEFAULT_CLAMP)
    pr.add_argument("--final-probs", action="store_true",
                    help="print the final error probability estimates as a # line")
    pr.add_argument("--strict", action="store_true")
    return parser


def _open_out(path):
    if path == "-":
        return sys.stdout
    try:
        return open(path, "w", encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot write {path}: {exc}") from exc


def _fmt(x):
    return f"{x:.10g}"


def _methods(text, allowed):
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in methods if m not in allowed]
    if not methods or bad:
        raise UsageError(f"methods must be drawn from {','.join(allowed)}")
    return methods


def _check_positive(args, *names):
    for name in names:
        value = getattr(args, name)
        if value is not None and not value > 0:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")


def cmd_simulate(args):
    _check_positive(args, "tasks", "runs", "n", "tol", "em_every")
    if args.n <= 2:
        raise UsageError("--n must exceed 2")
    if not 0 < args.alpha <= 1:
        raise UsageError("--alpha must lie in (0, 1]")
    if args.beta is not None and not 0 < args.beta < 1:
        raise UsageError("--beta must lie in (0, 1)")
    if args.sigma is not None and args.sigma < 0:
        raise UsageError("--sigma must be non-negative")
    methods = _methods(args.methods, ("ab", "mv", "oracle", "em"))

    profile_name = args.profile or ("explicit" if args.p is not None else "hammer-spammer")
    if profile_name == "explicit":
        if args.p is None or len(args.p) != args.n:
            raise UsageError("--profile explicit needs --p with exactly n values")
        profile = Explicit(args.p)
    elif profile_name == "sinusoid":
        profile = Sinusoid(args.omega)
    else:
        if args.n % 2:
            raise UsageError("hammer-spammer needs an even --n")
        if not 0 <= args.p1 < 0.5:
            raise UsageError("--p1 must lie in [0, 1/2)")
        profile = HammerSpammer(args.p1)

    beta = args.beta
    if beta is None:
        sigma = args.sigma
        if sigma is None and isinstance(profile, Sinusoid):
            sigma = profile.sigma
        if sigma is not None:
            beta = beta_heuristic(sigma, args.alpha, args.n)
    try:
        config = GeneratorConfig(args.n, args.alpha, profile, args.seed, args.tasks)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    metrics = run_experiment(config, methods=methods, runs=args.runs, beta=beta,
                             tol=args.tol, em_every=args.em_every)
    columns = ["t", "linf_error", "l1_error", "regret"]
    columns += [f"{m}_errors" for m in methods]
    columns += ["fallback_rate", "p1_true", "p1_hat"]
    series = [metrics.t, metrics.linf_error, metrics.l1_error, metrics.regret]
    series += [metrics.errors[m] for m in methods]
    series += [metrics.fallback_rate, metrics.p1_true, metrics.p1_hat]

    out = _open_out(args.out)
    try:
        out.write(f"# crowdstream simulate n={args.n} alpha={args.alpha} "
                  f"profile={profile_name} tasks={args.tasks} runs={args.runs} "
                  f"seed={args.seed} beta={beta} tol={args.tol}\n")
        out.write("# regret = mean cumulative ab errors minus oracle errors; "
                  "*_errors are mean cumulative mistakes; p1 columns follow labeller 1 in run 0\n")
        out.write("# " + "\t".join(columns) + "\n")
        for k in range(args.tasks):
            out.write(str(k + 1) + "\t" + "\t".join(_fmt(s[k]) for s in series[1:]) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()

    if np.all(metrics.fallback_rate == 1.0):
        logger.warning("no unique fixed point on any task: AB reduced to majority vote")
        if args.strict:
            return EXIT_NUMERIC
    return 0


def cmd_eval(args):
    _check_positive(args, "tol")
    if args.alpha is not None and not 0 < args.alpha <= 1:
        raise UsageError("--alpha must lie in (0, 1]")
    if args.beta is not None and not 0 < args.beta < 1:
        raise UsageError("--beta must lie in (0, 1)")
    methods = _methods(args.methods, ("mv", "em", "ab"))
    data = load_labels(args.labels, args.truth)
    alpha = data.alpha_hat if args.alpha is None else args.alpha

    rates = {}
    never_unique = False
    for k, method in enumerate(methods):
        seed = np.random.SeedSequence(args.seed, spawn_key=(k,))
        rng = np.random.default_rng(seed)
        if method == "mv":
            pred = MajorityVoteClassifier(random_state=rng).fit(data.matrix).predict(data.matrix)
        elif method == "em":
            pred = DawidSkeneClassifier(random_state=rng).fit(data.matrix).predict(data.matrix)
        else:
            ab = AgreementBasedClassifier(alpha=alpha, beta=args.beta, tol=args.tol,
                                          random_state=rng)
            if args.prequential:
                pred = ab.predict_prequential(data.matrix)
                never_unique = ab.unique_steps_ == 0
            else:
                pred = ab.fit(data.matrix).predict(data.matrix)
                never_unique = not ab.unique_
        rates[method] = evaluate(pred, data.truth)

    out = _open_out(args.out)
    try:
        mode = "prequential" if args.prequential else "batch"
        out.write(f"# crowdstream eval labels={args.labels} truth={args.truth} "
                  f"mode={mode} alpha={alpha:.6g}\n")
        out.write("# method\terror_rate\n")
        for method in methods:
            out.write(f"{method}\t{rates[method]:.3f}\n")
        out.write(f"provenance\tn={data.n}\tt={data.t}\tlabels={data.label_count}"
                  f"\talpha_hat={data.alpha_hat:.4f}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if never_unique:
        logger.warning("no unique fixed point: AB reduced to majority vote")
        if args.strict:
            return EXIT_NUMERIC
    return 0


def _parse_header(line):
    fields = line.split()
    if len(fields) not in (2, 3):
        raise DatasetError("header must be 'n alpha [beta]'")
    try:
        n = int(fields[0])
        alpha = float(fields[1])
        beta = float(fields[2]) if len(fields) == 3 else None
    except ValueError as exc:
        raise DatasetError(f"bad header {line.strip()!r}") from exc
    if n <= 2:
        raise DatasetError("n must exceed 2")
    if not 0 < alpha <= 1:
        raise DatasetError("alpha must lie in (0, 1]")
    if beta is not None and not 0 < beta < 1:
        raise DatasetError("beta must lie in (0, 1)")
    return n, alpha, beta


def _parse_row(line, n):
    fields = line.split()
    if len(fields) != n:
        raise ValueError(f"expected {n} values, got {len(fields)}")
    try:
        row = [int(v) for v in fields]
    except ValueError:
        raise ValueError("values must be -1, 0 or 1") from None
    if any(v not in (-1, 0, 1) for v in row):
        raise ValueError("values must be -1, 0 or 1")
    return np.array(row, dtype=np.int8)


def run_predict(stdin, stdout, tol=None, seed=0, clamp=DEFAULT_CLAMP,
                final_probs=False):
    """Prequential predictions for a stream of task rows.

    Only the agreement state is kept, so memory does not grow with the
    number of rows.  Malformed rows are reported on stderr and skipped.

    Returns
    -------
    n_rows : int
        Rows predicted.
    n_unique : int
        Rows whose prediction used a unique fixed point.
    """
    header = stdin.readline()
    while header and not header.strip():
        header = stdin.readline()
    if not header:
        raise DatasetError("empty input: expected header 'n alpha [beta]'")
    n, alpha, beta = _parse_header(header)
    stream = AgreementStream(n, alpha, beta)
    rng = np.random.default_rng(seed)
    w = np.zeros(n)
    p_hat = np.full(n, 0.5)
    n_rows = n_unique = 0
    unique = False
    for lineno, line in enumerate(stdin, 2):
        if not line.strip():
            continue
        try:
            x = _parse_row(line, n)
        except ValueError as exc:
            print(f"crowdstream predict: line {lineno}: {exc}; row skipped", file=sys.stderr)
            continue
        score = float(x @ w) if w.any() else float(x.sum())
        if score == 0:
            score = rng.random() - 0.5
        stdout.write("1\n" if score > 0 else "-1\n")
        n_rows += 1
        n_unique += unique
        stream.push(x)
        p_hat, unique = stream.estimate(tol)
        w = weights_from_error_probs(p_hat, clamp)
    if final_probs:
        stdout.write("# p_hat\t" + "\t".join(_fmt(v) for v in p_hat) + "\n")
    return n_rows, n_unique


def cmd_predict(args):
    _check_positive(args, "tol")
    if not 0 < args.clamp < 0.5:
        raise UsageError("--clamp must lie in (0, 1/2)")
    n_rows, n_unique = run_predict(sys.stdin, sys.stdout, args.tol, args.seed,
                                   args.clamp, args.final_probs)
    if n_rows and n_unique == 0:
        logger.warning("no unique fixed point on any task: predictions were majority votes")
        if args.strict:
            return EXIT_NUMERIC
    return 0


COMMANDS = {"simulate": cmd_simulate, "eval": cmd_eval, "predict": cmd_predict}


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"crowdstream {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetError as exc:
        print(f"crowdstream {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
