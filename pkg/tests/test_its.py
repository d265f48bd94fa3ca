import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asyncltl import ast as A
from asyncltl.harness import literal_projection, random_toy_pair, sender_systems
from asyncltl.its import (ITS, ComposedStateSpace, ITSError, ResourceError, StateSpace, compatible,
                          compose, enumerate_traces, incompatibilities, is_trace_of, local_component,
                          projection_check, state_space, validate)
from asyncltl.parser import parse_formula
from asyncltl.semantics import LassoEvaluator
from asyncltl.trace import Trace, project

B = A.BOOL


def decl(name, io, sort=B):
    return A.VarDecl(name, sort, io)


def make(name, inputs, outputs, init="true", trans="true", fairness=()):
    ins = tuple(decl(n, A.INPUT) for n in inputs)
    outs = tuple(decl(n, A.OUTPUT) for n in outputs)
    v = A.Vocabulary(ins + outs)
    p = lambda s: parse_formula(s, v)
    return ITS(name, ins, outs, p(init), p(trans), tuple((p(a), p(g)) for a, g in fairness))


C2 = make("c2", ["rec_2", "in_2"], ["out_2", "send_2"], "!out_2 & !send_2",
          "(rec_2 -> out_2' = in_2 & send_2') & (!rec_2 -> out_2' = out_2 & !send_2')")


# ---------------------------------------------------------------- validation


def test_sender_component_is_valid():
    assert validate(C2) == []


def _codes(its):
    return {i.code for i in validate(its)}


def test_init_over_inputs():
    its = ITS("m", (decl("x", A.INPUT),), (decl("y", A.OUTPUT),), A.var("x"), A.TRUE)
    assert "init-over-inputs" in _codes(its)


def test_primed_input_in_trans():
    its = ITS("m", (decl("x", A.INPUT),), (decl("y", A.OUTPUT),), A.TRUE,
              A.Atom(A.NextVal(A.Var("x"))))
    assert "trans-primed-input" in _codes(its)


def test_io_overlap():
    its = ITS("m", (decl("x", A.INPUT),), (decl("x", A.OUTPUT),))
    assert "io-overlap" in _codes(its)


def test_unknown_symbol():
    its = ITS("m", (), (decl("y", A.OUTPUT),), A.var("zz"), A.TRUE)
    assert "unknown-symbol" in _codes(its)


def test_temporal_operator_in_trans():
    its = ITS("m", (), (decl("y", A.OUTPUT),), A.TRUE, A.Next(A.var("y")))
    assert "trans-temporal" in _codes(its)


def test_state_space_rejects_invalid():
    with pytest.raises(ITSError):
        StateSpace(ITS("m", (decl("x", A.INPUT),), (decl("x", A.OUTPUT),)))


# ---------------------------------------------------------------- compatibility and composition


def test_compatibility():
    a = make("a", ["x"], ["y"])
    b = make("b", ["y"], ["z"])
    c = make("c", ["x"], ["y"])
    assert compatible([a, b])
    assert not compatible([a, c])
    assert "both have 'y' as output" in incompatibilities([a, c])[0]
    # two readers of one variable are fine
    assert compatible([a, make("d", ["y"], ["w"]), b])


def test_sort_disagreement():
    a = make("a", ["x"], ["y"])
    b = ITS("b", (A.VarDecl("y", A.int_sort(0, 3), A.INPUT),), (decl("z", A.OUTPUT),))
    assert incompatibilities([a, b])


def test_compose_names_and_fairness():
    a = make("a", ["x"], ["y"], fairness=[("x", "y")])
    b = make("b", ["y"], ["z"])
    c = compose([a, b])
    its = c.its
    assert set(its.input_names) == {"x", "run_a", "run_b"}
    assert set(its.output_names) == {"y", "z", "end_a", "end_b"}
    assert c.shared == ("y",)
    # one scheduling pair per component, plus the lifted local pair
    assert len(its.fairness) == 3
    assert validate(its) == []


def test_compose_single_component():
    c = compose([C2])
    assert c.symbols[0].run == "run_c2"
    assert set(c.its.input_names) == {"rec_2", "in_2", "run_c2"}


def test_compose_rejects_incompatible_and_duplicates():
    a = make("a", ["x"], ["y"])
    with pytest.raises(ITSError):
        compose([a, make("b", ["x"], ["y"])])
    with pytest.raises(ITSError):
        compose([a, a])
    with pytest.raises(ITSError):
        compose([])


def test_compose_symbol_collision():
    a = make("a", ["run_b"], ["y"])
    with pytest.raises(ITSError):
        compose([a, make("b", ["y"], ["z"])])


# ---------------------------------------------------------------- traces


def test_enumerate_constant_system():
    its = make("k", [], ["o"], "o", "o' = o")
    seen = [[s["o"] for s in t.stem] for t in enumerate_traces(its, 3)]
    assert seen == [[True], [True, True], [True, True, True]]


def test_enumerate_lassos_unique_and_fair():
    its = make("t", [], ["o"], "!o", "true", fairness=[("true", "o")])
    ts = list(enumerate_traces(its, 1, 2, finite=False))
    assert ts
    for t in ts:
        assert t.is_lasso
        assert any(s["o"] for s in t.loop)
    words = {tuple(t.state(k)["o"] for k in range(8)) for t in ts}
    assert len(words) == len(ts)


def test_is_trace_of_reports_index_and_reason():
    v = C2.vocab
    good = Trace.finite(v, [dict(rec_2=True, in_2=True, out_2=False, send_2=False),
                            dict(out_2=True, send_2=True)])
    assert is_trace_of(C2, good)
    bad = Trace.finite(v, [dict(rec_2=True, in_2=True, out_2=False, send_2=False),
                           dict(rec_2=False, in_2=False, out_2=True, send_2=True),
                           dict(out_2=False, send_2=True)])
    r = is_trace_of(C2, bad)
    assert not r and r.index == 1
    init_bad = Trace.finite(v, [dict(out_2=True, send_2=False)])
    assert is_trace_of(C2, init_bad).index == 0


def test_is_trace_of_fairness():
    its = make("t", [], ["o"], "!o", "true", fairness=[("true", "o")])
    unfair = Trace.lasso(its.vocab, [], [{"o": False}])
    r = is_trace_of(its, unfair)
    assert not r and "fairness" in r.reason


def test_enumerated_traces_are_members():
    for t in enumerate_traces(C2, 3, 1):
        assert is_trace_of(C2, t)


def test_state_cap():
    big = make("big", [f"x{k}" for k in range(6)], [f"y{k}" for k in range(6)])
    with pytest.raises(ResourceError):
        list(enumerate_traces(big, 2, cap=50))


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_factorized_successors_match_generic(seed):
    c = compose(random_toy_pair(seed))
    fast, slow = ComposedStateSpace(c), StateSpace(c.its)
    for s in fast.initial_states():
        assert sorted(fast.next_outputs(s)) == sorted(slow.next_outputs(s))
        for t in fast.successors(s)[:8]:
            assert sorted(fast.next_outputs(t)) == sorted(slow.next_outputs(t))


# ---------------------------------------------------------------- projection


def test_projection_check_senders():
    for name, c in sender_systems().items():
        rep = projection_check(c, 4)
        assert rep.ok, (name, rep.violations[:2])
        assert rep.transitions > 0


def test_projection_check_toys_literal():
    for seed in range(4):
        c = compose(random_toy_pair(seed))
        assert projection_check(c, 5).ok
        n, bad = literal_projection(c, 2, 1)
        assert bad == []


def test_projection_check_flags_broken_composition():
    a = make("a", ["x"], ["y"], "!y", "y' = x")
    c = compose([a])
    # drop the frame condition: outputs may now change while a is idle
    broken = ITS(c.its.name, c.its.inputs, c.its.outputs, c.its.init, A.TRUE, c.its.fairness)
    rep = projection_check(type(c)(broken, c.components, c.symbols, c.shared), 2)
    assert not rep.ok
    assert {v.kind for v in rep.violations} & {"trans", "frame", "end"}


def test_end_prophecy_on_composed_lassos():
    c = compose([C2])
    cs = c.symbols[0]
    f = A.Always(A.Iff(cs.end_f, A.Always(A.Not(cs.run_f))))
    for t in itertools.islice(enumerate_traces(c, 2, 2, finite=False), 300):
        assert LassoEvaluator(t).sat(f, 0)
        p = project(t, local_component(c, "c2"))
        assert is_trace_of(C2, p)
