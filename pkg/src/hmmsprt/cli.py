"""Command-line entry point.

Every subcommand builds a report ``{command, model_digest, results, seed,
timing}``. ``--format structured`` prints it as JSON, ``csv`` prints the
command's table and ``text`` a readable summary. Exact rationals appear as
``p/q``, Monte Carlo floats with 12 significant digits and minus infinity as
``-inf``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

from .deterministic import exact_exponents
from .equivalence import DEFAULT_BUDGET, DEFAULT_TV_CAP, distinguishability, tv_mass_series
from .errors import HmmError, ModelFormatError, UnknownSymbol
from .examples import paper_examples
from .gadgets import is_mortal, mortality_to_e0_gadget, mortality_to_einf_gadget, parse_instance
from .lyapunov import DEFAULT_REPLICAS, DEFAULT_STEPS, candidate_exponents
from .model import as_dist, dump_model, fraction_str, make_rng, parse_model, sample_run
from .sprt import DEFAULT_MAX_STEPS, loglik_series, mc_sprt, slope_estimate, thresholds, thresholds_from_log
from .support_chain import (
    DEFAULT_NODE_CAP,
    ExponentClass,
    build_support_chain,
    exponent_profile,
    prob_E0,
    prob_Einf,
    sample_bottom_slopes,
    to_dot,
)


class UsageError(Exception):
    pass


# rendering


def fmt(x):
    """Scalar to its report form."""
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, Fraction):
        return fraction_str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "-inf" if x < 0 else "inf"
        return float(f"{x:.12g}")
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):  # enums
        return x.value
    return x


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return fmt(x)


def cell(x) -> str:
    v = fmt(x)
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


class Table:
    def __init__(self, header, rows):
        self.header = list(header)
        self.rows = [list(r) for r in rows]

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([cell(x) for x in r])
        return buf.getvalue()

    def text(self) -> str:
        cols = [self.header] + [[cell(x) for x in r] for r in self.rows]
        widths = [max(len(str(row[i])) for row in cols) for i in range(len(self.header))]
        lines = ["  ".join(str(v).ljust(w) for v, w in zip(row, widths)).rstrip() for row in cols]
        return "\n".join(lines) + "\n"

    def records(self) -> list[dict]:
        return [dict(zip(self.header, (jsonable(x) for x in r))) for r in self.rows]


# input


def load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ModelFormatError(f"file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path} is not valid JSON: {e}") from None


def load_model(path: str):
    raw = load_json(path)
    h, dists = parse_model(raw)
    digest = hashlib.sha256(json.dumps(dump_model(h, dists), sort_keys=True).encode()).hexdigest()
    return h, dists, digest


def resolve(h, dists, name: str):
    """A named initial distribution, or a Dirac distribution on the state called ``name``."""
    if name in dists:
        return dists[name]
    if name in h.state_index:
        return as_dist(h, name)
    raise UnknownSymbol(name, "distribution or state")


def write_model(path: str, h, dists):
    Path(path).write_text(json.dumps(dump_model(h, dists), indent=2) + "\n")


# subcommands; each returns (results dict, Table or None, text summary lines, digest)


def cmd_validate(a):
    h, dists, digest = load_model(a.file)
    res = {"valid": True, "states": h.n_states, "letters": h.n_letters, "distributions": sorted(dists)}
    text = [f"ok: {h.n_states} states, {h.n_letters} letters, distributions {sorted(dists) or 'none'}"]
    return res, None, text, digest


def cmd_sample(a):
    h, dists, digest = load_model(a.file)
    pi = resolve(h, dists, a.pi)
    run = sample_run(h, pi, a.steps, make_rng(a.seed))
    states, word = run.states, run.word
    rows = [(0, states[0], "")] + [(k, states[k], word[k - 1]) for k in range(1, len(states))]
    table = Table(["step", "state", "letter"], rows)
    res = {"states": list(states), "word": list(word)}
    text = ["word: " + " ".join(map(str, word)), "states: " + " ".join(map(str, states))]
    return res, table, text, digest


def _sprt_thresholds(a):
    if a.log_alpha is not None or a.log_beta is not None:
        if a.log_alpha is None or a.log_beta is None:
            raise UsageError("--log-alpha and --log-beta go together")
        return thresholds_from_log(a.log_alpha, a.log_beta)
    if a.alpha is None or a.beta is None:
        raise UsageError("give --alpha and --beta (or --log-alpha and --log-beta)")
    return thresholds(a.alpha, a.beta)


def cmd_sprt(a):
    h, dists, digest = load_model(a.file)
    pi1, pi2 = resolve(h, dists, a.pi1), resolve(h, dists, a.pi2)
    th = _sprt_thresholds(a)
    st = mc_sprt(
        h, pi1, pi2, replicas=a.replicas, max_steps=a.max_steps, seed=a.seed,
        sampler=a.sampler, threads=a.threads, th=th,
    )
    table = Table(
        ["replica", "verdict", "stopped_at", "final_log_ratio"],
        [(r.replica, r.verdict, r.stopped_at, r.final_log_ratio) for r in st.records],
    )
    res = {
        "thresholds": {"lower": th.lower, "upper": th.upper, "alpha": th.alpha, "beta": th.beta},
        "sampler": st.sampler,
        "replicas": st.replicas,
        "counts": st.counts,
        "error_rate": st.error_rate,
        "error_stderr": st.error_stderr,
        "undecided_fraction": st.undecided_fraction,
        "mean_n": st.mean_n,
        "stderr_n": st.stderr_n,
        "quantiles_n": st.quantiles_n,
        "by_kind": {k: {"count": c.count, "mean_n": c.mean_n, "stderr_n": c.stderr_n} for k, c in st.by_kind.items()},
    }
    text = [
        f"thresholds: A = {cell(th.lower)}, B = {cell(th.upper)}",
        f"sampler {st.sampler}, {st.replicas} replicas: " + ", ".join(f"{k} {v}" for k, v in st.counts.items()),
        f"error rate {cell(st.error_rate)} ± {cell(st.error_stderr)}",
        f"mean N {cell(st.mean_n)} ± {cell(st.stderr_n)}",
    ]
    for k, c in st.by_kind.items():
        text.append(f"  {k}: {c.count} runs, mean N {cell(c.mean_n)}")
    return res, table, text, digest


def cmd_loglik(a):
    h, dists, digest = load_model(a.file)
    pi1, pi2 = resolve(h, dists, a.pi1), resolve(h, dists, a.pi2)
    sampler = pi1 if a.sampler == "pi1" else pi2
    series = loglik_series(h, sampler, pi1, pi2, a.steps, seed=a.seed, exact=a.exact)
    table = Table(["step", "log_likelihood"], [(k, float(v)) for k, v in enumerate(series)])
    res = {"steps": a.steps, "final_log_likelihood": float(series[-1])}
    try:
        est = slope_estimate(series)
        res.update(slope=est.slope, slope_stderr=est.stderr)
    except HmmError:
        res["slope"] = float("-inf")
    if a.out:
        Path(a.out).write_text(table.csv())
        res["out"] = a.out
    text = [f"ln L_{a.steps} = {cell(float(series[-1]))}", f"slope {cell(res['slope'])} ± {cell(res.get('slope_stderr'))}"]
    return res, table, text, digest


def cmd_exponents(a):
    h, dists, digest = load_model(a.file)
    pi1, pi2 = resolve(h, dists, a.pi1), resolve(h, dists, a.pi2)
    prof = exponent_profile(h, pi1, pi2, node_cap=a.node_cap, budget=a.budget)
    slopes = {}
    if a.mc_refine:
        by_scc: dict[int, list[float]] = {}
        for s in sample_bottom_slopes(h, pi1, pi2, prof.chain, n=a.refine_steps, runs=a.refine_runs, seed=a.seed):
            if s.scc is not None:
                by_scc.setdefault(s.scc, []).append(s.slope)
        for e in prof.entries:
            vals = [v for k in e.sccs for v in by_scc.get(k, [])]
            if vals:
                slopes[e.sccs] = sum(vals) / len(vals)
    rows = []
    for e in prof.entries:
        exact = {ExponentClass.NEG_INF: float("-inf"), ExponentClass.ZERO: 0.0}.get(e.cls)
        est = exact if exact is not None else slopes.get(e.sccs)
        rows.append((e.cls, e.probability, ";".join(map(str, e.sccs)), est))
    table = Table(["class", "probability", "sccs", "exponent_estimate"], rows)
    res = {
        "entries": table.records(),
        "by_class": {c.value: p for c, p in prof.by_class().items()},
        "handles": prof.handle_count(),
        "bound": prof.bound,
        "chain_nodes": len(prof.chain),
    }
    text = [table.text().rstrip(), f"{prof.handle_count()} exponent(s); bound |Q|^2 + 1 = {prof.bound}"]
    return res, table, text, digest


def cmd_support_chain(a):
    h, dists, digest = load_model(a.file)
    pi1, pi2 = resolve(h, dists, a.pi1), resolve(h, dists, a.pi2)
    chain = build_support_chain(h, pi1, pi2, node_cap=a.node_cap, budget=a.budget)
    if a.dot:
        Path(a.dot).write_text(to_dot(chain))
    rows = []
    for i in range(len(chain)):
        s, q = chain.label(i)
        k = chain.scc.component_of[i]
        cls = chain.class_of_bottom.get(k)
        rows.append((i, "{" + ",".join(str(x) for x in h.states if x in s) + "}", q, k, cls.value if cls else ""))
    table = Table(["node", "support", "state", "scc", "bottom_class"], rows)
    supports = sorted(("{" + ",".join(str(x) for x in h.states if x in s) + "}") for s in chain.supports())
    res = {
        "nodes": table.records(),
        "supports": supports,
        "bottom_sccs": {str(k): {"class": c, "members": chain.members(k)} for k, c in sorted(chain.class_of_bottom.items())},
    }
    if a.dot:
        res["dot"] = a.dot
    text = [table.text().rstrip(), "supports: " + " ".join(supports)]
    return res, table, text, digest


def cmd_lyapunov(a):
    h, dists, digest = load_model(a.file)
    cands = candidate_exponents(h, n=a.n, replicas=a.replicas, seed=a.seed, threads=a.threads)
    rows = []
    for k, c in enumerate(cands):
        e1, e2 = c.numerator, c.denominator
        rows.append((
            k,
            e1.mean if e1.mean is not None else float("-inf"), e1.stderr,
            e2.mean if e2.mean is not None else float("-inf"), e2.stderr,
            c.diff if c.diff is not None else float("-inf"), c.diff_stderr,
        ))
    table = Table(["scc_id", "lambda1", "stderr1", "lambda2", "stderr2", "diff", "stderr_diff"], rows)
    res = {
        "candidates": table.records(),
        "sccs": {str(k): [list(p) for p in c.scc.labels(h)] for k, c in enumerate(cands)},
        "n": a.n,
        "replicas": a.replicas,
    }
    return res, table, [table.text().rstrip()], digest


def cmd_det_exponents(a):
    h, dists, digest = load_model(a.file)
    exps = exact_exponents(h, a.q1, a.q2)
    table = Table(
        ["exponent", "value", "probability", "class"],
        [(str(e.value), float(e.value), e.probability, e.cls) for e in exps],
    )
    res = {"exponents": table.records()}
    return res, table, [table.text().rstrip()], digest


def cmd_distance(a):
    h, dists, digest = load_model(a.file)
    pi1, pi2 = resolve(h, dists, a.pi1), resolve(h, dists, a.pi2)
    verdict = distinguishability(h, pi1, pi2, a.budget)
    masses = tv_mass_series(h, pi1, pi2, a.depth, cap=a.cap)
    table = Table(["n", "B_n"], list(enumerate(masses)))
    res = {"verdict": str(verdict), "explored": verdict.explored, "B": masses}
    if hasattr(verdict, "witness"):
        res["witness"] = list(verdict.witness)
    text = [f"verdict: {verdict}", table.text().rstrip()]
    return res, table, text, digest


def cmd_gadget(a):
    raw = load_json(a.instance)
    inst = parse_instance(raw)
    digest = hashlib.sha256(json.dumps(inst.to_dict(), sort_keys=True).encode()).hexdigest()
    mortal = is_mortal(inst)
    res = {"kind": a.kind, "mortal": mortal}
    if a.kind == "mortality-einf":
        h, p1, p2 = mortality_to_einf_gadget(inst)
        res["prob_Einf"] = prob_Einf(h, p1, p2)
    else:
        h, p1, p2 = mortality_to_e0_gadget(inst)
        res["prob_E0"] = prob_E0(h, p1, p2)
    res["model"] = dump_model(h, {"pi1": p1, "pi2": p2})
    if a.out:
        write_model(a.out, h, {"pi1": p1, "pi2": p2})
        res["out"] = a.out
    key = "prob_Einf" if "prob_Einf" in res else "prob_E0"
    text = [f"mortal (brute force): {mortal}", f"{key} = {fraction_str(res[key])}"]
    if a.out:
        text.append(f"model written to {a.out}")
    return res, None, text, digest


def cmd_example(a):
    examples = paper_examples()
    if a.list or a.name is None:
        table = Table(["name", "states", "letters", "description"],
                      [(f.name, f.hmm.n_states, f.hmm.n_letters, f.citation) for f in examples.values()])
        return {"examples": table.records()}, table, [table.text().rstrip()], None
    if a.name not in examples:
        raise UsageError(f"unknown example {a.name!r}; choose from {', '.join(examples)}")
    f = examples[a.name]
    model = dump_model(f.hmm, f.dists)
    digest = hashlib.sha256(json.dumps(model, sort_keys=True).encode()).hexdigest()
    if a.out:
        write_model(a.out, f.hmm, f.dists)
        text = [f"wrote {a.name} to {a.out}"]
    else:
        text = [json.dumps(model, indent=2)]
    return {"name": f.name, "description": f.citation, "model": model}, None, text, digest


# parser


def build_parser() -> argparse.ArgumentParser:
    def globals_parser(defaults: bool):
        g = argparse.ArgumentParser(add_help=False)
        # subcommands repeat the flags without defaults so they do not mask the top-level ones
        d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
        g.add_argument("--seed", type=int, default=d(0), help="master seed for Monte Carlo (default 0)")
        g.add_argument("--threads", type=int, default=d(1), help="worker threads for replica loops")
        g.add_argument("--format", choices=("text", "csv", "structured"), default=d("text"))
        return g

    common = globals_parser(False)
    p = argparse.ArgumentParser(
        prog="hmmsprt", description="Analyse pairs of HMMs under the SPRT.", parents=[globals_parser(True)]
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(func=fn)
        return sp

    def pair(sp):
        sp.add_argument("--pi1", required=True, help="named distribution or state label")
        sp.add_argument("--pi2", required=True)

    sp = add("validate", cmd_validate, "check a model file")
    sp.add_argument("file")

    sp = add("sample", cmd_sample, "sample one run")
    sp.add_argument("file")
    sp.add_argument("--pi", required=True)
    sp.add_argument("--steps", type=int, default=20)

    sp = add("sprt", cmd_sprt, "Monte Carlo SPRT")
    sp.add_argument("file")
    pair(sp)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--log-alpha", type=float, default=None, help="ln alpha, for tiny error bounds")
    sp.add_argument("--log-beta", type=float, default=None)
    sp.add_argument("--sampler", choices=("pi1", "pi2"), default="pi2")
    sp.add_argument("--replicas", type=int, default=1000)
    sp.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)

    sp = add("loglik", cmd_loglik, "log-likelihood-ratio series of one run")
    sp.add_argument("file")
    pair(sp)
    sp.add_argument("--sampler", choices=("pi1", "pi2"), default="pi2")
    sp.add_argument("--steps", type=int, default=1000)
    sp.add_argument("--out", default=None, help="write the series as CSV")
    sp.add_argument("--exact", action="store_true", default=False)

    sp = add("exponents", cmd_exponents, "exact exponent-class probabilities")
    sp.add_argument("file")
    pair(sp)
    sp.add_argument("--mc-refine", action="store_true", default=False, help="estimate finite exponents by simulation")
    sp.add_argument("--refine-steps", type=int, default=10**4)
    sp.add_argument("--refine-runs", type=int, default=20)
    sp.add_argument("--node-cap", type=int, default=DEFAULT_NODE_CAP)
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    sp = add("support-chain", cmd_support_chain, "build the support chain")
    sp.add_argument("file")
    pair(sp)
    sp.add_argument("--dot", default=None, help="write Graphviz output")
    sp.add_argument("--node-cap", type=int, default=DEFAULT_NODE_CAP)
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    sp = add("lyapunov", cmd_lyapunov, "candidate exponents from Lyapunov systems")
    sp.add_argument("file")
    sp.add_argument("--n", type=int, default=DEFAULT_STEPS)
    sp.add_argument("--replicas", type=int, default=DEFAULT_REPLICAS)

    sp = add("det-exponents", cmd_det_exponents, "exact exponents of a deterministic HMM")
    sp.add_argument("file")
    sp.add_argument("--q1", required=True)
    sp.add_argument("--q2", required=True)

    sp = add("distance", cmd_distance, "distinguishability and total-variation mass series")
    sp.add_argument("file")
    pair(sp)
    sp.add_argument("--depth", type=int, default=10)
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    sp.add_argument("--cap", type=int, default=DEFAULT_TV_CAP)

    sp = add("gadget", cmd_gadget, "build a reduction from a mortality instance")
    sp.add_argument("kind", choices=("mortality-einf", "mortality-e0"))
    sp.add_argument("instance")
    sp.add_argument("--out", default=None)

    sp = add("example", cmd_example, "export a built-in example model")
    sp.add_argument("name", nargs="?", default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--list", action="store_true", default=False)
    return p


def _positive(a, *names):
    for n in names:
        if hasattr(a, n) and getattr(a, n) < 1:
            raise UsageError(f"--{n.replace('_', '-')} must be >= 1")


def render(report: dict, table, text, form: str) -> str:
    if form == "structured":
        return json.dumps(jsonable(report), indent=2, sort_keys=False) + "\n"
    if form == "csv":
        if table is None:
            rows = [(k, json.dumps(jsonable(v)) if isinstance(v, (dict, list)) else v) for k, v in report["results"].items()]
            table = Table(["key", "value"], rows)
        return table.csv()
    return "\n".join(text) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        _positive(a, "steps", "replicas", "max_steps", "n", "refine_steps", "refine_runs", "threads", "node_cap", "budget")
        if hasattr(a, "depth") and a.depth < 0:
            raise UsageError("--depth must be >= 0")
        t0 = time.perf_counter()
        results, table, text, digest = a.func(a)
        elapsed = time.perf_counter() - t0
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except HmmError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    argv_echo = list(sys.argv[1:] if argv is None else argv)
    report = {
        "command": {"name": a.command, "argv": argv_echo},
        "model_digest": digest,
        "results": results,
        "seed": a.seed,
        "timing": {"seconds": elapsed},
    }
    sys.stdout.write(render(report, table, text, a.format))
    return 0


if __name__ == "__main__":
    sys.exit(main())
