"""The nine acceptance criteria at their full bounds.

Each test records one PASS/FAIL line, printed at the end of the pytest
run (and immediately with ``-s``).  Criterion 9 is unattainable as stated
for formulas with terms; see ``test_criterion_9_prefix_weakening_with_terms``.
"""

import time
from importlib import resources

import pytest

from asyncltl import ast as A
from asyncltl.harness import SIZE_C, SIZE_D, check_theorem, default_config
from asyncltl.its import is_trace_of, state_space
from asyncltl.rewriting import RewriteMode
from asyncltl.semantics import holds
from asyncltl.specfile import load_spec
from asyncltl.verify import INVALID, VALID_UP_TO_BOUND, verify_system

from conftest import ACCEPTANCE

pytestmark = pytest.mark.slow


def record(k, ok, text):
    ACCEPTANCE[k] = (ok, text)
    print(f"{'PASS' if ok else 'FAIL'} criterion {k}: {text}")


def run(name, **over):
    cfg = default_config(name)
    if over:
        from dataclasses import replace
        cfg = replace(cfg, **over)
    return check_theorem(name, cfg)


def summary(rep):
    return f"{rep.theorem}: {rep.cases} cases, {len(rep.mismatches)} mismatches, {rep.elapsed_ms / 1000:.0f}s"


def test_criterion_1_base_rewrite():
    rep = run("base-rewrite")
    ok = rep.ok and rep.details["formulas"] == 11371 and rep.elapsed_ms < 300_000
    record(1, ok, summary(rep))
    assert ok, rep.mismatches[:1]


def test_criterion_2_opt_agrees_base():
    rep = run("opt-agrees-base")
    record(2, rep.ok, summary(rep))
    assert rep.ok, rep.mismatches[:1]


def test_criterion_3_fairness():
    rep = run("fair-rewrite")
    record(3, rep.ok, summary(rep))
    assert rep.ok, rep.mismatches[:1]


def test_criterion_4_tr():
    rep = run("tr")
    record(4, rep.ok, summary(rep))
    assert rep.ok, rep.mismatches[:1]


def test_criterion_5_w2s():
    rep = run("w2s")
    record(5, rep.ok, summary(rep))
    assert rep.ok, rep.mismatches[:1]


def test_criterion_6_projection():
    rep = run("projection")
    ok = rep.ok and len(rep.details["systems"]) == 22
    record(6, ok, summary(rep))
    assert ok, rep.mismatches[:3]


def _spec(name):
    return load_spec(str(resources.files("asyncltl") / "data" / f"{name}.spec"))


def _verify(spec, mode, gf=False):
    c = spec.composed()
    extra = tuple(A.Always(A.Eventually(cs.run_f)) for cs in c.symbols) if gf else ()
    return verify_system(c, spec.local_checks(), spec.wired_properties(), spec.schedule,
                         spec.property, mode, stem=8, loop=4, extra_assumptions=extra,
                         infinite_local=gf)


def test_criterion_7_sender_verdicts():
    start = time.perf_counter()
    two, three = _spec("sender-2comp"), _spec("sender-3comp")
    verdicts = {}
    base = _verify(two, RewriteMode.BASE)
    verdicts["2/base"] = base.composition.status
    cex = base.composition.counterexample
    cex_ok = False
    if cex is not None:
        c = two.composed()
        # c1 runs only finitely often and the message is never delivered
        cex_ok = (cex.is_lasso and not any(s["run_c1"] for s in cex.loop)
                  and bool(is_trace_of(state_space(c), cex)) and not holds(cex, two.property))
    verdicts["2/fair"] = _verify(two, RewriteMode.FAIRNESS).composition.status
    verdicts["2/base+GF"] = _verify(two, RewriteMode.BASE, gf=True).composition.status
    for label, mode in (("base", RewriteMode.BASE), ("opt", RewriteMode.OPTIMIZED),
                        ("fair", RewriteMode.FAIRNESS)):
        rep = _verify(three, mode)
        verdicts[f"3/{label}"] = rep.composition.status if rep.valid else INVALID
    elapsed = time.perf_counter() - start
    expected = {"2/base": INVALID, "2/fair": VALID_UP_TO_BOUND, "2/base+GF": VALID_UP_TO_BOUND,
                "3/base": VALID_UP_TO_BOUND, "3/opt": VALID_UP_TO_BOUND, "3/fair": VALID_UP_TO_BOUND}
    ok = verdicts == expected and cex_ok and elapsed < 600
    record(7, ok, ", ".join(f"{k}={v}" for k, v in verdicts.items()) + f"; {elapsed:.0f}s")
    assert ok, (verdicts, cex_ok, elapsed)


def test_criterion_8_size():
    lin = run("size-linear")
    blow = run("size-ite-blowup")
    factors = [r["factor"] for r in blow.details["rows"][1:]]
    ok = lin.ok and blow.ok and len(factors) == 5 and min(factors) >= 2
    record(8, ok, f"size(R*) <= {SIZE_C}*size+{SIZE_D} on {lin.cases} formulas "
                  f"(max slope {lin.details['max_slope']}); ite factors {factors}")
    assert ok


CORE_LEMMAS = ("end-of-trace", "duality", "ite-flip")


def test_criterion_9_core_lemmas():
    reps = [run(name) for name in CORE_LEMMAS]
    prefix = run("prefix-weakening", terms=False)
    ok = all(r.ok for r in reps) and prefix.ok
    full = run("prefix-weakening")
    text = "; ".join(summary(r) for r in reps) + f"; prefix-weakening term-free: {len(prefix.mismatches)} " \
           f"mismatches, with terms: {full.details['violating_formulas']['with_terms']} violating formulas"
    # the whole criterion needs the unrestricted prefix check as well
    record(9, ok and full.ok, text)
    assert ok, [r.mismatches[:1] for r in reps + [prefix]]


@pytest.mark.xfail(strict=True, reason="unattainable: @F/ite on a cut prefix pick the default where "
                                       "the lasso has a later hit (see the decisions ledger)")
def test_criterion_9_prefix_weakening_with_terms():
    rep = run("prefix-weakening")
    assert rep.ok, rep.mismatches[:2]
