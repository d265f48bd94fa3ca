import json
from dataclasses import replace

import pytest

from asyncltl import ast as A
from asyncltl.harness import (CORE_BINARY, CORE_UNARY, SIZE_C, SIZE_D, THEOREMS, HarnessError,
                              SuiteConfig, Witness, check_theorem, default_config,
                              enumerate_formulas, finite_traces, formula_count, ite_family,
                              ite_sizes, lasso_traces, shrink, suite_vocab)
from asyncltl.parser import parse_formula
from asyncltl.trace import Trace
from asyncltl.transform import formula_size

V = suite_vocab()
SMALL = dict(depth=2, length=2, max_gap=1, stem=1, loop=1)


def small(name, **kw):
    return replace(default_config(name), **{**SMALL, **kw})


# ---------------------------------------------------------------- enumeration


def _recount(leaves, depth):
    """Formulas of depth <= d over the core grammar, built bottom-up as a set."""
    level = set(leaves)
    for _ in range(depth - 1):
        nxt = set(leaves)
        nxt |= {op(a) for op in CORE_UNARY for a in level}
        nxt |= {op(a, b) for op in CORE_BINARY for a in level for b in level}
        level = nxt
    return level


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_formula_count_matches_enumeration(depth):
    fs = enumerate_formulas(V, depth, "core", terms=False)
    assert len(fs) == formula_count(3, 3, 3, depth)
    assert len(set(fs)) == len(fs)
    assert set(fs) == _recount([A.TRUE, A.var("i"), A.var("o")], depth)


def test_formula_count_examples():
    assert formula_count(3, 3, 3, 2) == 39
    assert formula_count(3, 3, 3, 3) == 3 + 3 * 39 + 3 * 39 * 39


def test_suite_sizes_at_acceptance_depth():
    assert len(enumerate_formulas(V, 3, "core")) == 11371


def test_nnf_grammar_is_term_free_nnf():
    from asyncltl.transform import is_nnf
    fs = enumerate_formulas(V, 2, "nnf")
    assert all(is_nnf(f) for f in fs)
    assert all(isinstance(n, (A.Formula, A.Var)) for f in fs for n in A.walk(f))


def test_trace_enumeration_counts():
    # 4 full states per body position and 2 output-only final states
    assert len(list(finite_traces(V, 3))) == 2 + 4 * 2 + 16 * 2
    lassos = list(lasso_traces(V, 1, 2))
    assert all(t.is_lasso for t in lassos)
    assert len(set(lassos)) == len(lassos)


def test_bad_grammar():
    with pytest.raises(HarnessError):
        enumerate_formulas(V, 2, "weird")


# ---------------------------------------------------------------- config


def test_suite_config_validation():
    with pytest.raises(HarnessError):
        SuiteConfig(theorem="nope")
    with pytest.raises(HarnessError):
        SuiteConfig(depth=0)
    with pytest.raises(HarnessError):
        SuiteConfig(max_gap=-1)
    with pytest.raises(HarnessError):
        SuiteConfig(depth=9)
    with pytest.raises(HarnessError):
        SuiteConfig(filler="some")


def test_unknown_theorem():
    with pytest.raises(HarnessError):
        check_theorem("fermat")


def test_default_configs_exist():
    for name in THEOREMS:
        assert default_config(name).theorem == name


# ---------------------------------------------------------------- checks at small bounds


@pytest.mark.parametrize("name", ["base-rewrite", "opt-agrees-base", "fair-rewrite", "tr", "w2s",
                                  "end-of-trace", "duality", "ite-flip"])
def test_small_suites_pass(name):
    rep = check_theorem(name, small(name))
    assert rep.ok, rep.mismatches[:1]
    assert rep.cases > 0


def test_prefix_weakening_term_free_small():
    rep = check_theorem("prefix-weakening", small("prefix-weakening", terms=False))
    assert rep.ok


def test_size_checks():
    rep = check_theorem("size-linear", replace(default_config("size-linear"), depth=2))
    assert rep.ok
    assert rep.details["c"] == SIZE_C and rep.details["d"] == SIZE_D
    assert check_theorem("size-ite-blowup", replace(default_config("size-ite-blowup"), k=3)).ok


def test_ite_family_growth():
    rows = ite_sizes(4)
    assert [r["k"] for r in rows] == [0, 1, 2, 3, 4]
    sizes = [formula_size(ite_family(k)) for k in range(5)]
    # the family itself grows linearly
    assert len({b - a for a, b in zip(sizes, sizes[1:])}) == 1
    assert all(r["factor"] >= 2 for r in rows[1:])


def test_projection_small():
    rep = check_theorem("projection", replace(default_config("projection"), stem=2, loop=1, toys=2))
    assert rep.ok
    assert "sender-2comp" in rep.details["systems"]


def test_report_is_deterministic_without_timing():
    cfg = small("base-rewrite", samples=40, seed=7)
    a = check_theorem("base-rewrite", cfg).dumps(timing=False)
    b = check_theorem("base-rewrite", cfg).dumps(timing=False)
    assert a == b
    doc = json.loads(a)
    assert "elapsed_ms" not in doc and doc["seed"] == 7


def test_sampling_selects_subset():
    full = check_theorem("end-of-trace", small("end-of-trace"))
    part = check_theorem("end-of-trace", small("end-of-trace", samples=10))
    assert part.cases < full.cases


# ---------------------------------------------------------------- mutation and shrinking


def _no_state_guard(f, cs):
    """R* without the relativisation to local positions."""
    return f


def test_mutated_rewriter_is_caught_and_shrunk():
    rep = check_theorem("base-rewrite", small("base-rewrite"), rewriter=_no_state_guard)
    assert not rep.ok
    m = rep.mismatches[0]
    assert m.local is not None and m.embedded is not None
    # the shrunk witness is small
    assert formula_size(parse_formula(m.formula, V)) <= 3
    local = Trace.from_json(m.local)
    assert len(local) <= 2


def test_mutated_w2s_is_caught():
    rep = check_theorem("w2s", small("w2s"), rewriter=lambda f: A.TRUE)
    assert not rep.ok


def test_shrink_contract():
    o, i = A.var("o"), A.var("i")
    big = A.Or(A.Next(A.Until(i, o)), A.Not(A.Yesterday(i)))
    local = Trace.finite(V, [{"i": True, "o": False}, {"i": False, "o": False}, {"o": True}])

    def fails(w):
        return any(isinstance(n, A.Until) for n in A.walk(w.formula)) and len(w.local) >= 2

    w = shrink(Witness(big, local, (0, 0)), fails)
    assert fails(w)
    assert isinstance(w.formula, A.Until)
    assert len(w.local) == 2
    # a non-failing witness is returned unchanged
    w0 = Witness(A.TRUE, local, (0, 0))
    assert shrink(w0, lambda w: False) == w0
