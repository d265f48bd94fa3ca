"""Command line front end.

Exit codes: 0 valid or pass, 1 invalid or mismatch, 2 usage or resource
error.  Every command prints one JSON document with sorted keys on
stdout; warnings go to stderr.  Commands that take ``--report DIR`` also
write the JSON there together with PNG figures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import ast as A
from .harness import THEOREMS, HarnessError, check_theorem, default_config
from .its import ITSError, ResourceError, is_trace_of, local_component, state_space
from .parser import ParseError, parse_formula
from .rewriting import (ComponentSymbols, RewriteError, RewriteMode, rewrite_base, rewrite_fair,
                        rewrite_opt, rewrite_top)
from .semantics import FiniteEvaluator, LassoEvaluator
from .specfile import MODES, SpecError, load_spec
from .trace import Trace, TraceError, project
from .transform import UnsupportedConstruct, formula_size, simplify, to_text
from .verify import ENUMERATE, PRODUCT, verify_system

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(doc: dict, report_dir=None, name: str = "report.json") -> None:
    text = json.dumps(doc, sort_keys=True, indent=2)
    print(text)
    if report_dir is not None:
        Path(report_dir).mkdir(parents=True, exist_ok=True)
        (Path(report_dir) / name).write_text(text + "\n", encoding="utf-8")


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _cap(args):
    return getattr(args, "state_cap", None)


def _mode(text: str) -> RewriteMode:
    if text not in MODES:
        raise UsageError(f"unknown mode {text!r}")
    return MODES[text]


def _component(spec, name):
    if name not in spec.components:
        raise UsageError(f"unknown component {name!r}; the file defines {', '.join(spec.order)}")
    return spec.components[name]


# ---------------------------------------------------------------- rewrite


def cmd_rewrite(args) -> int:
    spec = load_spec(args.file)
    comp = _component(spec, args.component)
    f = comp.property
    if args.formula:
        f = parse_formula(args.formula, comp.its.vocab)
    if f is None:
        raise UsageError(f"component {args.component} has no property; pass --formula")
    run = args.run or f"run_{args.component}"
    end = args.end or f"end_{args.component}"
    cs = ComponentSymbols(comp.its.vocab, run, end, args.component)
    mode = _mode(args.mode)
    if args.polarity == "top":
        g = rewrite_top(f, cs, mode)
    else:
        pol = A.WEAK if args.polarity == "weak" else A.STRONG
        if mode is RewriteMode.BASE:
            g = rewrite_base(f, pol, cs)
        elif mode is RewriteMode.OPTIMIZED:
            g = rewrite_opt(f, pol, cs)
        elif pol is A.WEAK:
            g = rewrite_fair(f, cs)
        else:
            raise UsageError("the fairness rewriting has no strong polarity")
    if args.simplify:
        g = simplify(g)
    _emit({"component": args.component, "mode": mode.value, "polarity": args.polarity,
           "input": to_text(f), "output": to_text(g),
           "size": {"input": formula_size(f), "output": formula_size(g)}})
    return EXIT_OK


# ---------------------------------------------------------------- check-trace


def _load_trace(path, vocab=None) -> Trace:
    with open(path, encoding="utf-8") as fh:
        return Trace.from_json(json.load(fh), vocab)


def cmd_check_trace(args) -> int:
    spec = load_spec(args.file) if args.file else None
    if args.component:
        if spec is None:
            raise UsageError("--component needs a spec file")
        comp = _component(spec, args.component)
        vocab = comp.its.vocab
        f = comp.property
    elif spec is not None and spec.components:
        vocab = spec.vocab
        f = spec.property
    else:
        vocab, f = None, None
    t = _load_trace(args.trace, vocab)
    if args.formula:
        f = parse_formula(args.formula, t.vocab)
    if f is None:
        raise UsageError("no formula: pass --formula, --component with a property, or a system property")
    sem = args.semantics
    if sem == "ltl":
        if not t.is_lasso:
            raise UsageError("ltl semantics needs a lasso trace")
        verdict = LassoEvaluator(t).sat(f, 0)
    else:
        if t.is_lasso:
            # truncated and standard semantics coincide on infinite traces
            verdict = LassoEvaluator(t).sat(f, 0)
        else:
            pol = A.WEAK if sem == "truncated-weak" else A.STRONG
            verdict = FiniteEvaluator(t).sat(f, 0, pol)
    _emit({"formula": to_text(f), "semantics": sem, "holds": verdict,
           "trace": {"lasso": t.is_lasso, "positions": t.positions()}})
    return EXIT_OK if verdict else EXIT_FAIL


# ---------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    spec = load_spec(args.file)
    mode = _mode(args.mode) if args.mode else spec.mode
    composed = spec.composed()
    goal = spec.property
    if goal is None:
        raise UsageError("the system block has no property")
    extra = [spec.assumptions] if spec.assumptions != A.TRUE else []
    if args.assume_gf:
        extra += [A.Always(A.Eventually(cs.run_f)) for cs in composed.symbols]
    report = verify_system(composed, spec.local_checks(), spec.wired_properties(), spec.schedule,
                           goal, mode, args.stem, args.loop, args.method, _cap(args),
                           tuple(extra), infinite_local=args.assume_gf)
    for w in report.warnings:
        _warn(w + " (G F run_i added to the assumption)")
    doc = report.to_json()
    doc["file"] = os.path.basename(args.file)
    if args.report:
        Path(args.report).mkdir(parents=True, exist_ok=True)
        figs = []
        cex = report.composition.counterexample
        if cex is not None:
            from .plotting import plot_trace
            figs.append(plot_trace(cex, Path(args.report) / "counterexample.png",
                                   title="composition counterexample"))
        for r in report.locals:
            if r.verdict.counterexample is not None:
                from .plotting import plot_trace
                figs.append(plot_trace(r.verdict.counterexample,
                                       Path(args.report) / f"local-{r.component}.png",
                                       title=f"{r.component} counterexample"))
        doc["figures"] = [os.path.basename(p) for p in figs]
    _emit(doc, args.report, "verify.json")
    return EXIT_OK if report.valid else EXIT_FAIL


# ---------------------------------------------------------------- fuzz


def cmd_fuzz(args) -> int:
    if args.theorem not in THEOREMS:
        raise UsageError(f"unknown theorem {args.theorem!r}; expected one of {', '.join(THEOREMS)}")
    cfg = default_config(args.theorem)
    over = {}
    for key, attr in (("depth", "depth"), ("len", "length"), ("gaps", "max_gap"), ("stem", "stem"),
                      ("loop", "loop"), ("k", "k"), ("samples", "samples"), ("toys", "toys")):
        v = getattr(args, key)
        if v is not None:
            over[attr] = v
    if args.no_terms:
        over["terms"] = False
    over["seed"] = args.seed
    cfg = replace(cfg, **over)
    rep = check_theorem(args.theorem, cfg)
    doc = rep.to_json(timing=not args.no_timing)
    if args.report:
        Path(args.report).mkdir(parents=True, exist_ok=True)
        figs = []
        from . import plotting
        if args.theorem == "size-ite-blowup":
            figs.append(plotting.plot_ite_blowup(rep.details["rows"], Path(args.report) / "ite-blowup.png",
                                                 rep.details.get("plain")))
        elif args.theorem == "size-linear":
            from .harness import enumerate_formulas
            from .rewriting import rewrite_base_top
            cs = ComponentSymbols(cfg.vocab)
            pts = [(formula_size(f), formula_size(rewrite_base_top(f, cs)))
                   for f in enumerate_formulas(cfg.vocab, cfg.depth, "core", cfg.terms, ite=False)]
            figs.append(plotting.plot_size_scatter(pts, rep.details["c"], rep.details["d"],
                                                   Path(args.report) / "size-linear.png"))
        elif rep.mismatches and rep.mismatches[0].local is not None:
            m = rep.mismatches[0]
            figs.append(plotting.plot_trace(Trace.from_json(m.local), Path(args.report) / "witness.png",
                                            title=f"witness: {m.formula}"))
        doc["figures"] = [os.path.basename(p) for p in figs]
    _emit(doc, args.report, f"fuzz-{args.theorem}.json")
    if args.theorem == "size-ite-blowup" and not args.report:
        for r in rep.details["rows"]:
            print(f"k={r['k']} size={r['size']} rewritten={r['rewritten']} "
                  f"factor={r.get('factor', '-')}", file=sys.stderr)
    return EXIT_OK if rep.ok else EXIT_FAIL


# ---------------------------------------------------------------- project / compose-dump


def cmd_project(args) -> int:
    spec = load_spec(args.file)
    composed = spec.composed()
    _component(spec, args.component)
    t = _load_trace(args.trace, composed.its.vocab)
    local_its = composed.component(args.component)
    p = project(t, local_component(composed, args.component))
    member = is_trace_of(state_space(local_its, _cap(args)), p)
    _emit({"component": args.component, "projection": p.to_json(),
           "member": bool(member), "reason": member.reason, "index": member.index})
    return EXIT_OK if member else EXIT_FAIL


def _its_json(its) -> dict:
    return {
        "name": its.name,
        "inputs": {d.name: str(d.sort) for d in its.inputs},
        "outputs": {d.name: str(d.sort) for d in its.outputs},
        "init": to_text(its.init),
        "trans": to_text(its.trans),
        "fairness": [[to_text(a), to_text(g)] for a, g in its.fairness],
    }


def cmd_compose_dump(args) -> int:
    spec = load_spec(args.file)
    composed = spec.composed()
    doc = _its_json(composed.its)
    doc["components"] = [{"name": cs.name, "run": cs.run, "end": cs.end} for cs in composed.symbols]
    doc["shared"] = sorted(composed.shared)
    _emit(doc)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asyncltl", description=__doc__.split("\n")[0])
    p.add_argument("--state-cap", type=int, default=None,
                   help="explicit-state cap (default: $ASYNCLTL_STATE_CAP or 1000000)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("rewrite", help="rewrite a component property")
    r.add_argument("file")
    r.add_argument("component")
    r.add_argument("--mode", default="opt", help="base | opt | fair")
    r.add_argument("--polarity", default="top", choices=("top", "weak", "strong"))
    r.add_argument("--formula", help="rewrite this formula instead of the component property")
    r.add_argument("--run", help="name of the run symbol (default run_<component>)")
    r.add_argument("--end", help="name of the end symbol (default end_<component>)")
    r.add_argument("--simplify", action="store_true")
    r.set_defaults(fn=cmd_rewrite)

    c = sub.add_parser("check-trace", help="evaluate a formula on a trace")
    c.add_argument("file", nargs="?", help="spec file providing the formula and vocabulary")
    c.add_argument("trace", help="trace JSON")
    c.add_argument("--component")
    c.add_argument("--formula")
    c.add_argument("--semantics", default="truncated-weak",
                   choices=("truncated-weak", "truncated-strong", "ltl"))
    c.set_defaults(fn=cmd_check_trace)

    v = sub.add_parser("verify", help="compositional verification of a system block")
    v.add_argument("file")
    v.add_argument("--mode", help="override the mode of the system block")
    v.add_argument("--stem", type=int, default=8)
    v.add_argument("--loop", type=int, default=4)
    v.add_argument("--method", choices=(PRODUCT, ENUMERATE), default=PRODUCT)
    v.add_argument("--assume-gf", action="store_true",
                   help="add G F run_i for every component to the assumption")
    v.add_argument("--report", metavar="DIR", help="write JSON and figures to DIR")
    v.set_defaults(fn=cmd_verify)

    f = sub.add_parser("fuzz", help="run a differential theorem check")
    f.add_argument("theorem")
    f.add_argument("--depth", type=int)
    f.add_argument("--len", type=int)
    f.add_argument("--gaps", type=int)
    f.add_argument("--stem", type=int)
    f.add_argument("--loop", type=int)
    f.add_argument("--k", type=int)
    f.add_argument("--samples", type=int, help="random subset of the formula suite")
    f.add_argument("--toys", type=int)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--no-terms", action="store_true")
    f.add_argument("--no-timing", action="store_true", help="omit elapsed_ms (byte-stable output)")
    f.add_argument("--report", metavar="DIR", help="write JSON and figures to DIR")
    f.set_defaults(fn=cmd_fuzz)

    pr = sub.add_parser("project", help="project a composed trace onto a component")
    pr.add_argument("file")
    pr.add_argument("trace")
    pr.add_argument("component")
    pr.set_defaults(fn=cmd_project)

    d = sub.add_parser("compose-dump", help="print the composed ITS")
    d.add_argument("file")
    d.set_defaults(fn=cmd_compose_dump)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    saved = os.environ.get("ASYNCLTL_STATE_CAP")
    if args.state_cap is not None:
        if args.state_cap < 1:
            parser.error("--state-cap must be positive")
        os.environ["ASYNCLTL_STATE_CAP"] = str(args.state_cap)
    try:
        return _dispatch(args)
    finally:
        if saved is None:
            os.environ.pop("ASYNCLTL_STATE_CAP", None)
        else:
            os.environ["ASYNCLTL_STATE_CAP"] = saved


def _dispatch(args) -> int:
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SpecError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, HarnessError, ITSError, TraceError, RewriteError,
            UnsupportedConstruct, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
