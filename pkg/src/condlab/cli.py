"""The ``condlab`` command: reproducible experiment runs with CSV output.

Every subcommand writes a header row, one row per trial and a final row whose
first cell is ``summary``.  Trial ``i`` under root seed ``s`` uses the seed
``splitmix64(s XOR i)``; the root seed comes from ``--seed`` or, failing that,
the ``CONDLAB_SEED`` environment variable.  Exact rationals are written as
``num/den``.  Usage errors and malformed input files exit with status 2.
"""
import argparse
import csv
from fractions import Fraction
import io
import math
import statistics
import sys
import time

import numpy as np

from . import adapters, analysis, estimators, instances, protocols, testers
from ._random import env_seed, trial_seed
from .dist import IndexSet, format_distribution, load_distribution
from .errors import CondlabError
from .oracles import OracleSession, parse_oracle_kind
from .responses import Failure, Mass, Sample, SampleEval, SamplePr


def fmt(value):
    """CSV rendering: rationals as ``num/den``, floats with repr precision."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def fmt_response(r):
    if isinstance(r, Failure):
        return "FAILURE"
    if isinstance(r, Sample):
        return f"{r.j}"
    if isinstance(r, SamplePr):
        return f"{r.j};{fmt(r.p)}"
    if isinstance(r, SampleEval):
        return f"{r.j};{fmt(r.p)};{fmt(r.cp)}"
    if isinstance(r, Mass):
        return fmt(r.q)
    return str(r)


def fmt_set(S):
    return " ".join(str(j) for j in S)


class Table:
    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []
        self.summary = {}

    def add(self, **row):
        self.rows.append(row)

    def mean(self, col):
        vals = [float(r[col]) for r in self.rows if r.get(col) not in (None, "")]
        return statistics.fmean(vals) if vals else float("nan")

    def write(self, fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([fmt(r.get(c)) for c in self.columns])
        if self.summary:
            out = dict(self.summary)
            out[self.columns[0]] = "summary"
            w.writerow([fmt(out.get(c)) for c in self.columns])


def _seed(args):
    return env_seed(0) if args.seed is None else args.seed


def _rng(args, i):
    return np.random.default_rng(trial_seed(_seed(args), i))


def _emit(args, table):
    if args.output and args.output != "-":
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            table.write(fh)
    else:
        buf = io.StringIO()
        table.write(buf)
        sys.stdout.write(buf.getvalue())
    if getattr(args, "plot", None):
        _plot(args.plot, table)


def _plot(path, table):
    """Static chart of the per-trial query counts (or the first numeric column)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    col = next((c for c in ("queries", "bits", "length", "value") if c in table.columns), None)
    if col is None:
        return
    ys = [float(r[col]) for r in table.rows if r.get(col) not in (None, "")]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(range(len(ys)), ys, marker=".", linestyle="none")
    ax.set_xlabel("trial")
    ax.set_ylabel(col)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# -- gen ----------------------------------------------------------------------------

def cmd_gen(args):
    fam = args.family
    rng = np.random.default_rng(_seed(args))
    if fam == "geometric":
        D = instances.geometric_hard(args.n, args.i)
    elif fam == "polya":
        D = instances.polya_dirichlet(args.n, args.x, args.m, rng)
    elif fam == "gap-hamming":
        D = instances.gap_hamming_instance(args.xbits, args.ybits)
    elif fam == "l2-lower":
        r = math.isqrt(args.n)
        G = [j for j in range(1, args.n + 1) if j != args.k][: args.n - r]
        D = instances.l2_lower_instance(args.n, args.k, G)
    elif fam == "bounded":
        D = instances.bounded_cond_instances(args.n, args.variant, args.indices)
    elif fam == "perturbed":
        D = instances.intro_perturbed_uniform(args.n, args.i, args.j)
    elif fam == "uniform":
        s = args.support_size or args.n
        D = instances.random_uniform_support(args.n, s, rng) if s < args.n else \
            instances.DiscreteDistribution.uniform(args.n)
    else:  # pragma: no cover - argparse restricts the choices
        raise CondlabError(f"unknown family {fam}")
    text = format_distribution(D)
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# -- estimate -----------------------------------------------------------------------

def cmd_estimate(args):
    D = load_distribution(args.dist)
    kind, k = parse_oracle_kind(args.oracle)
    if kind not in ("cond", "cond-pr", "cond-eval"):
        raise CondlabError(f"the estimators need a conditional oracle, not {kind}")
    if k is not None and not args.constant_factor:
        raise CondlabError("bounded oracles are only supported with --constant-factor")
    true_s = D.support_size()
    table = Table(["trial", "seed", "n", "true_s", "estimate", "t_prime", "t_star", "queries", "success"])
    for i in range(args.trials):
        seed = trial_seed(_seed(args), i)
        rng = np.random.default_rng(seed)
        reports = []
        queries = 0
        for _ in range(args.median):
            session = OracleSession(D, rng)
            if k is not None:
                rep = adapters.estimate_support_bounded(session, k, rng)
            elif args.constant_factor:
                rep = estimators.estimate_support_constant(session, rng, oracle=kind)
            else:
                rep = estimators.estimate_support_eps(session, args.eps, rng, oracle=kind)
            queries += session.ledger.total
            reports.append(rep)
        est = estimators.median_estimate(reports)
        if args.constant_factor:
            t_prime = round(math.log2(est * math.sqrt(2)))
            success = 2.0 ** t_prime / 8 < true_s <= 4 * 2.0 ** t_prime
            t_star = None
        else:
            t_prime = reports[0].t_prime
            t_star = reports[0].t_star
            success = abs(est - true_s) <= args.eps * true_s
        table.add(trial=i, seed=seed, n=D.n, true_s=true_s, estimate=float(est), t_prime=t_prime,
                  t_star=t_star, queries=queries, success=success)
    table.summary = {"queries": table.mean("queries"), "success": table.mean("success"),
                     "estimate": table.mean("estimate"), "n": D.n, "true_s": true_s}
    _emit(args, table)
    return 0


# -- test ---------------------------------------------------------------------------

def cmd_test(args):
    D = load_distribution(args.dist)
    if args.which == "equivalence":
        if not args.dist2:
            raise CondlabError("equivalence testing needs --dist2")
        E = load_distribution(args.dist2)
        table = Table(["trial", "verdict", "queries_d", "queries_e"])
        for i in range(args.trials):
            rng = _rng(args, i)
            sd, se = OracleSession(D, rng), OracleSession(E, rng)
            v = testers.test_equivalence(sd, se, rng, args.repetitions)
            table.add(trial=i, verdict=str(v), queries_d=sd.ledger.set_eval, queries_e=se.ledger.set_eval)
        accepts = sum(r["verdict"] == "Accept" for r in table.rows)
        table.summary = {"verdict": f"accept_rate={accepts / max(1, args.trials)!r}",
                         "queries_d": table.mean("queries_d"), "queries_e": table.mean("queries_e")}
    elif args.which == "grained":
        if args.m is None:
            raise CondlabError("grained testing needs --m")
        table = Table(["trial", "verdict", "queries"])
        for i in range(args.trials):
            rng = _rng(args, i)
            s = OracleSession(D, rng)
            v = testers.test_grained(s, args.m, rng, args.repetitions)
            table.add(trial=i, verdict=str(v), queries=s.ledger.set_eval)
        accepts = sum(r["verdict"] == "Accept" for r in table.rows)
        table.summary = {"verdict": f"accept_rate={accepts / max(1, args.trials)!r}",
                         "queries": table.mean("queries")}
    else:
        truth = D.squared_l2()
        table = Table(["trial", "estimate", "exact", "rel_error", "queries", "success"])
        for i in range(args.trials):
            rng = _rng(args, i)
            s = OracleSession(D, rng)
            est = testers.estimate_l2_squared(s, args.eps, rng, args.optimize_complement)
            rel = abs(est - truth) / truth
            table.add(trial=i, estimate=est, exact=truth, rel_error=float(rel), queries=s.ledger.set_eval,
                      success=rel <= Fraction(repr(args.eps)))
        table.summary = {"exact": truth, "rel_error": table.mean("rel_error"),
                         "queries": table.mean("queries"), "success": table.mean("success")}
    _emit(args, table)
    return 0


# -- adapt --------------------------------------------------------------------------

def parse_query_script(text):
    """One query set per line: whitespace/comma separated indices or ranges ``a-b``."""
    sets = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        members = []
        for tok in line.replace(",", " ").split():
            lo, sep, hi = tok.partition("-")
            try:
                if sep:
                    members.extend(range(int(lo), int(hi) + 1))
                else:
                    members.append(int(tok))
            except ValueError:
                raise CondlabError(f"line {lineno}: cannot parse {tok!r} as an index or range") from None
        if any(j < 1 for j in members):
            raise CondlabError(f"line {lineno}: indices must be positive")
        sets.append((lineno, IndexSet(members)))
    return sets


def _script_algorithm(sets, kind):
    def algorithm(oracle, rng):
        ask = oracle.set_eval if kind == "set-eval" else oracle.cond_eval
        return tuple(ask(S) for _, S in sets)
    return algorithm


def cmd_adapt(args):
    D = load_distribution(args.dist)
    with open(args.script, encoding="utf-8") as fh:
        sets = parse_query_script(fh.read())
    for lineno, S in sets:
        if S.max > D.n:
            raise CondlabError(f"line {lineno}: index {S.max} is outside [1, {D.n}]")
    table = Table(["step", "set", "direct", "simulated", "inner_queries", "note"])
    seed = _seed(args)
    if args.mode == "laminar":
        kind = args.oracle
        if kind not in ("set-eval", "cond-eval"):
            raise CondlabError("laminar simulation handles set-eval or cond-eval scripts")
        alg = _script_algorithm(sets, kind)
        direct, _ = adapters.run_direct(alg, OracleSession(D, np.random.default_rng(seed)), kind, None)
        sim = adapters.laminarize_set_eval if kind == "set-eval" else adapters.laminarize_cond_eval
        session = OracleSession(D, np.random.default_rng(trial_seed(seed, 1)))
        out, tr = sim(alg, session, None)
        notes = dict(tr.flags)
        inner_per_step = tr.inner_per_step()
        for step, ((lineno, S), d, s) in enumerate(zip(sets, direct, out)):
            table.add(step=step, set=fmt_set(S), direct=fmt_response(d), simulated=fmt_response(s),
                      inner_queries=inner_per_step[step], note=notes.get(step, ""))
        table.summary = {"inner_queries": len(tr.inner), "note": f"laminar={adapters.is_laminar(tr.inner)}"}
    else:
        if args.k is None:
            raise CondlabError("bounded simulation needs --k")
        rng_d = np.random.default_rng(seed)
        rng_s = np.random.default_rng(trial_seed(seed, 1))
        direct_session = OracleSession(D, rng_d)
        session = OracleSession(D, rng_s)
        for step, (lineno, S) in enumerate(sets):
            if not len(S):
                raise CondlabError(f"line {lineno}: empty query set")
            d = direct_session.cond_eval(S)
            before = session.ledger.bounded_total()
            s = adapters.simulate_bounded_cond_eval(session, S, args.k, rng_s)
            table.add(step=step, set=fmt_set(S), direct=fmt_response(d), simulated=fmt_response(s),
                      inner_queries=session.ledger.bounded_total() - before, note="")
        table.summary = {"inner_queries": session.ledger.bounded_total()}
    _emit(args, table)
    return 0


# -- protocol -----------------------------------------------------------------------

def cmd_protocol(args):
    if args.which == "guessing":
        rng = np.random.default_rng(_seed(args))
        algorithm = protocols.hash_search_guesser if args.guesser == "hash" else protocols.interval_guesser
        rep = protocols.run_integer_guessing(args.n, args.trials, algorithm, rng)
        table = Table(["trial", "x", "guess", "steps", "length", "max_rank", "round_trip", "short", "correct"])
        for r in rep.rows:
            table.add(short=r["length"] <= 16 * r["steps"], correct=r["guess"] == r["x"], **r)
        table.summary = {"length": table.mean("length"), "short": rep.frac_short, "correct": rep.accuracy,
                         "round_trip": rep.round_trip_ok, "steps": rep.queries_per_trial,
                         "max_rank": f"mean_rank={rep.mean_rank!r};mean_rank_sq={rep.mean_rank_sq!r}"}
    else:
        if args.g is None:
            raise CondlabError("ghd needs --g")
        n = args.n
        table = Table(["trial", "d_h", "promise", "decision", "correct", "bits", "queries", "bits_per_query_max", "c_measured"])
        for i in range(args.trials):
            rng = _rng(args, i)
            y = rng.integers(0, 2, n).astype(bool)
            far = i % 2 == 0
            d = min(n, int(math.ceil(n / 2 + args.g))) if far else max(0, int(math.floor(n / 2 - args.g)) - 1)
            flip = np.zeros(n, dtype=bool)
            flip[rng.choice(n, size=d, replace=False)] = True
            x = y ^ flip
            if not x.any() and not y.any():
                y[0] = x[0] = True
            res = protocols.ghd_two_party(x, y, args.g, rng=rng)
            table.add(trial=i, d_h=int(flip.sum()), promise=res.promise, decision=res.decision,
                      correct=res.decision == res.promise, bits=res.bits, queries=res.queries,
                      bits_per_query_max=res.bits_per_query_max, c_measured=res.c_measured)
        table.summary = {"correct": table.mean("correct"), "bits": table.mean("bits"),
                         "queries": table.mean("queries"),
                         "c_measured": max((r["c_measured"] for r in table.rows), default=0.0)}
    _emit(args, table)
    return 0


# -- analyze ------------------------------------------------------------------------

def cmd_analyze(args):
    rng = np.random.default_rng(_seed(args))
    table = Table(["check", "value", "threshold", "passed"])
    if args.which == "digamma":
        m = analysis.check_digamma_bound(args.points)
        table.add(check="max|w psi(w)| on (0,1]", value=m, threshold=3.0, passed=m <= 3)
    elif args.which == "klscan":
        scan = analysis.kl_bound_scan(args.trials, rng)
        table.add(check="max Beta KL", value=scan.max_kl, threshold=10.0, passed=scan.max_kl <= 10)
    elif args.which == "betatail":
        b = args.a / args.c
        res = analysis.beta_tail_check(args.a, b, args.c, args.delta, args.samples, rng)
        table.add(check="Pr[Y <= 1 - delta]", value=res.tail, threshold=res.bound + 3 * res.mc_sigma,
                  passed=res.passed)
        table.add(check="E[Y]", value=res.mean, threshold=res.exact_mean, passed=res.mean_ok)
    elif args.which == "dirichlet":
        alphas = args.alphas or [1.0, 1.0, 1.0]
        draws = analysis.dirichlet_sample(alphas, rng, size=args.samples)
        target = np.asarray(alphas) / np.sum(alphas)
        se = draws.std(axis=0, ddof=1) / math.sqrt(args.samples)
        for i, (mu, t, s) in enumerate(zip(draws.mean(axis=0), target, se), start=1):
            table.add(check=f"E[P_{i}]", value=float(mu), threshold=float(t), passed=abs(mu - t) <= 3 * s)
    else:
        alphas = args.alphas or [1.0, 1.0, 1.0]
        res = analysis.independence_property_check(alphas, args.A, args.B, (args.d, args.width), args.samples, rng)
        table.add(check="KS p-value", value=res.p_value, threshold=0.01,
                  passed=res.passed(0.01))
    table.summary = {"passed": all(r["passed"] for r in table.rows)}
    _emit(args, table)
    return 0


# -- bench --------------------------------------------------------------------------

def cmd_bench(args):
    n = args.n
    table = Table(["trial", "true_s", "estimator", "seconds", "queries", "success"])
    for i in range(args.trials):
        rng = _rng(args, i)
        s = int(rng.integers(1, n + 1))
        D = instances.random_uniform_support(n, s, rng)
        for name in ("constant", "eps"):
            session = OracleSession(D, rng)
            t0 = time.perf_counter()
            if name == "constant":
                rep = estimators.estimate_support_constant(session, rng)
                ok = rep.in_window(s)
            else:
                rep = estimators.estimate_support_eps(session, args.eps, rng)
                ok = abs(rep.estimate - s) <= args.eps * s
            table.add(trial=i, true_s=s, estimator=name, seconds=time.perf_counter() - t0,
                      queries=session.ledger.total, success=ok)
    table.summary = {"seconds": table.mean("seconds"), "queries": table.mean("queries"),
                     "success": table.mean("success")}
    _emit(args, table)
    return 0


# -- parser -------------------------------------------------------------------------

def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _eps(text):
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("eps must lie in (0, 1]")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="condlab", description="Conditional-sampling distribution testing experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, output=True, plot=True):
        sp.add_argument("--seed", type=_u64, default=None, help="root seed (default: $CONDLAB_SEED or 0)")
        if output:
            sp.add_argument("-o", "--output", default="-", help="output path (default: stdout)")
        if plot:
            sp.add_argument("--plot", default=None, help="also write a chart of the per-trial counts to this path")

    g = sub.add_parser("gen", help="write an instance in the distribution text format")
    g.add_argument("family", choices=["geometric", "polya", "gap-hamming", "l2-lower", "bounded", "perturbed", "uniform"])
    g.add_argument("--n", type=int, default=None, help="domain size")
    g.add_argument("--i", type=int, default=None, help="level (geometric) or heavy index (perturbed)")
    g.add_argument("--j", type=int, default=None, help="emptied index (perturbed)")
    g.add_argument("--x", type=int, default=None, help="log2 of the number of colours (polya)")
    g.add_argument("--m", type=int, default=None, help="urn steps (polya)")
    g.add_argument("--k", type=int, default=None, help="heavy element (l2-lower)")
    g.add_argument("--xbits", default=None, help="Alice's bit string (gap-hamming)")
    g.add_argument("--ybits", default=None, help="Bob's bit string (gap-hamming)")
    g.add_argument("--variant", choices=["single", "pair"], default="single", help="bounded family variant")
    g.add_argument("--indices", type=int, nargs="+", default=None, help="indices of the bounded family")
    g.add_argument("--support-size", type=int, default=None, help="support size (uniform)")
    common(g, plot=False)
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("estimate", help="support-size estimation")
    e.add_argument("--dist", required=True)
    e.add_argument("--oracle", default="cond", help="cond, cond-pr, cond-eval, or cond@k for a bounded oracle")
    e.add_argument("--eps", type=_eps, default=0.25)
    e.add_argument("--constant-factor", action="store_true", help="only the O(log log n) constant-factor estimate")
    e.add_argument("--trials", type=int, default=1)
    e.add_argument("--median", type=int, default=1, help="median of this many independent runs per trial")
    common(e)
    e.set_defaults(func=cmd_estimate)

    t = sub.add_parser("test", help="SET-EVAL property testers")
    t.add_argument("which", choices=["equivalence", "grained", "l2"])
    t.add_argument("--dist", required=True)
    t.add_argument("--dist2", default=None)
    t.add_argument("--m", type=int, default=None)
    t.add_argument("--eps", type=_eps, default=0.1)
    t.add_argument("--trials", type=int, default=1)
    t.add_argument("--repetitions", type=int, default=1)
    t.add_argument("--optimize-complement", action="store_true", help="derive D(S-) from D(S+) instead of querying")
    common(t)
    t.set_defaults(func=cmd_test)

    a = sub.add_parser("adapt", help="direct versus simulated transcripts of a query script")
    a.add_argument("mode", choices=["laminar", "bounded"])
    a.add_argument("--dist", required=True)
    a.add_argument("--script", required=True, help="one query set per line, e.g. '1 2 5-7'")
    a.add_argument("--oracle", default="set-eval", choices=["set-eval", "cond-eval"], help="laminar mode query kind")
    a.add_argument("--k", type=int, default=None, help="set-size bound (bounded mode)")
    common(a)
    a.set_defaults(func=cmd_adapt)

    pr = sub.add_parser("protocol", help="communication protocols")
    pr.add_argument("which", choices=["guessing", "ghd"])
    pr.add_argument("--n", type=int, required=True)
    pr.add_argument("--trials", type=int, default=100)
    pr.add_argument("--g", type=float, default=None, help="Gap-Hamming gap")
    pr.add_argument("--guesser", choices=["interval", "hash"], default="interval")
    common(pr)
    pr.set_defaults(func=cmd_protocol)

    an = sub.add_parser("analyze", help="numeric checks of the special-function bounds")
    an.add_argument("which", choices=["digamma", "klscan", "betatail", "dirichlet", "independence"])
    an.add_argument("--points", type=int, default=10_000)
    an.add_argument("--trials", type=int, default=10_000)
    an.add_argument("--samples", type=int, default=100_000)
    an.add_argument("--a", type=float, default=1.0)
    an.add_argument("--c", type=float, default=1e7)
    an.add_argument("--delta", type=float, default=1e-3)
    an.add_argument("--alphas", type=float, nargs="+", default=None)
    an.add_argument("--A", type=int, nargs="+", default=[1, 2])
    an.add_argument("--B", type=int, nargs="+", default=[1])
    an.add_argument("--d", type=float, default=0.5)
    an.add_argument("--width", type=float, default=0.05)
    common(an, plot=False)
    an.set_defaults(func=cmd_analyze)

    b = sub.add_parser("bench", help="time both estimators on random uniform supports")
    b.add_argument("--n", type=int, default=1 << 16)
    b.add_argument("--eps", type=_eps, default=0.25)
    b.add_argument("--trials", type=int, default=10)
    common(b)
    b.set_defaults(func=cmd_bench)
    return p


_REQUIRED_GEN = {
    "geometric": ("n", "i"), "polya": ("n", "x", "m"), "gap-hamming": ("xbits", "ybits"),
    "l2-lower": ("n", "k"), "bounded": ("n", "indices"), "perturbed": ("n", "i", "j"), "uniform": ("n",),
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen":
        missing = [f"--{name.replace('_', '-')}" for name in _REQUIRED_GEN[args.family] if getattr(args, name) is None]
        if missing:
            parser.error(f"gen {args.family} needs {', '.join(missing)}")
    try:
        return args.func(args)
    except (CondlabError, OSError) as exc:
        print(f"condlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
