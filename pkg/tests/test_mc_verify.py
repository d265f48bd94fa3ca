import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asyncltl import ast as A
from asyncltl.harness import random_toy
from asyncltl.its import compose, is_trace_of, state_space
from asyncltl.parser import parse_formula
from asyncltl.rewriting import RewriteMode
from asyncltl.semantics import holds
from asyncltl.specfile import parse_spec
from asyncltl.verify import (ENUMERATE, INVALID, PRODUCT, VALID_UP_TO_BOUND, bounded_entailment,
                             verify_system)

from conftest import IO, formulas


def toy(seed):
    return random_toy(random.Random(seed), "t", ["i"], ["o"])


@settings(max_examples=40)
@given(st.integers(0, 10_000), formulas(max_leaves=5, past=False), formulas(max_leaves=4, past=False))
def test_product_agrees_with_enumeration(seed, goal, assumption):
    m = toy(seed)
    prod = bounded_entailment(m, assumption, goal, method=PRODUCT)
    enum = bounded_entailment(m, assumption, goal, stem=3, loop=3, method=ENUMERATE)
    # enumeration is a sound under-approximation of the product search
    if enum.status == INVALID:
        assert prod.status == INVALID
    for v in (prod, enum):
        if v.counterexample is not None:
            t = v.counterexample
            assert is_trace_of(m, t)
            assert holds(t, assumption) and not holds(t, goal)


def test_false_assumption_is_valid():
    m = toy(3)
    v = bounded_entailment(m, A.FALSE, A.FALSE)
    assert v.status == VALID_UP_TO_BOUND and v.valid


def test_simple_invalid_and_valid():
    spec = parse_spec("""
component k
  output o : boolean
  init !o
  trans o' != o
end
""")
    m = spec.components["k"].its
    assert bounded_entailment(m, A.TRUE, parse_formula("G F o", m.vocab)).valid
    v = bounded_entailment(m, A.TRUE, parse_formula("G !o", m.vocab))
    assert v.status == INVALID
    assert not holds(v.counterexample, parse_formula("G !o", m.vocab))
    # truncated semantics: the one-state trace [!o] satisfies X o weakly
    assert bounded_entailment(m, A.TRUE, parse_formula("X o", m.vocab)).valid


def test_finite_counterexample_for_strong_obligation():
    spec = parse_spec("""
component k
  output o : boolean
  init !o
  trans !o'
end
""")
    m = spec.components["k"].its
    v = bounded_entailment(m, A.TRUE, parse_formula("!o", m.vocab))
    assert v.valid
    v = bounded_entailment(m, A.TRUE, parse_formula("F o", m.vocab))
    # F o holds weakly on every finite prefix but fails on the lasso
    assert v.status == INVALID and v.counterexample.is_lasso


def test_verdict_json():
    v = bounded_entailment(toy(1), A.TRUE, A.TRUE, stem=5, loop=2)
    doc = v.to_json()
    assert doc["status"] == VALID_UP_TO_BOUND
    assert doc["bounds"] == {"stem": 5, "loop": 2}
    assert doc["counterexample"] is None


def test_unknown_method():
    with pytest.raises(ValueError):
        bounded_entailment(toy(1), A.TRUE, A.TRUE, method="magic")


TOY_SYSTEM = """
component a
  input x : boolean
  output y : boolean
  init !y
  trans y' = x
  property G (x -> X y)
end

component b
  input y : boolean
  output z : boolean
  init !z
  trans z' = y
  property G (y -> X z)
end

system
  components a b
  schedule G (x -> run_a) & G (y -> run_b)
  property G (x -> F z)
  mode fair
end
"""


def test_verify_system_small_pipeline():
    spec = parse_spec(TOY_SYSTEM)
    c = spec.composed()
    rep = verify_system(c, spec.local_checks(), spec.wired_properties(), spec.schedule,
                        spec.property, RewriteMode.FAIRNESS)
    assert all(r.verdict.valid for r in rep.locals)
    assert rep.valid
    weak = parse_spec(TOY_SYSTEM.replace(" & G (y -> run_b)", ""))
    c = weak.composed()
    base = verify_system(c, weak.local_checks(), weak.wired_properties(), weak.schedule,
                         weak.property, RewriteMode.BASE)
    # b need not run again, so z may never be set
    assert base.composition.status == INVALID
    cex = base.composition.counterexample
    assert is_trace_of(state_space(c), cex)
    assert cex.is_lasso and not any(s["run_b"] for s in cex.loop)
    assert base.to_json()["valid"] is False


def test_past_over_future_is_rejected():
    from asyncltl.transform import UnsupportedConstruct
    with pytest.raises(UnsupportedConstruct):
        bounded_entailment(toy(0), A.Yesterday(A.Next(A.TRUE)), A.TRUE)
    # past over state formulas is fine
    assert bounded_entailment(toy(0), A.TRUE, A.Not(A.Yesterday(A.FALSE))).valid
