import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from asyncltl import ast as A
from asyncltl.parser import parse_formula
from asyncltl.rewriting import (ComponentSymbols, RewriteError, RewriteMode, build_psi_cond,
                                extend_with_tail, extend_with_tail_all, gamma_p, rewrite_base,
                                rewrite_base_top, rewrite_fair, rewrite_fair_top, rewrite_opt,
                                rewrite_opt_top, tr_rewrite, w2s)
from asyncltl.semantics import FiniteEvaluator, LassoEvaluator, holds
from asyncltl.trace import (FINITE_CUT, INFINITE_TAIL, StutterPlan, Trace, TraceError, embed,
                            embed_slots, run_map)
from asyncltl.transform import (UnsupportedConstruct, desugar, is_syntactically_stutter_tolerant,
                                to_nnf, to_text)

from conftest import IO, finite_traces, formulas, lassos

SENDER = A.Vocabulary.of(["rec_2", "in_2"], ["out_2", "send_2"])
C2_PROPERTY = "G (rec_2 -> out_2' = in_2 & X send_2)"
CS = ComponentSymbols(IO)
GV = CS.global_vocab()
SCS = ComponentSymbols(SENDER)
SGV = SCS.global_vocab()
RUN, END = A.var("run"), A.var("end")
STATE = CS.state
POLS = st.sampled_from([A.WEAK, A.STRONG])


def P(text, vocab=IO):
    return parse_formula(text, vocab)


def G(text, vocab=GV):
    return parse_formula(text, vocab)


# ---------------------------------------------------------------- symbols


def test_state_is_defining_formula():
    assert STATE == A.Or(RUN, A.And(A.WeakYesterday(RUN), END))
    assert ComponentSymbols.named(IO, "c2").run == "run_c2"


def test_symbol_collision():
    with pytest.raises(RewriteError):
        ComponentSymbols(A.Vocabulary.of(["run"], ["o"]))
    with pytest.raises(RewriteError):
        rewrite_base(A.Or(A.var("o"), A.var("end")), A.WEAK, CS)


# ---------------------------------------------------------------- Tr


def test_tr_examples():
    v = A.Vocabulary.of(["in_p"], ["out_p"])
    tail = A.var("Tail")
    assert tr_rewrite(A.var("in_p"), A.WEAK, v) == A.Or(tail, A.var("in_p"))
    assert tr_rewrite(A.var("in_p"), A.STRONG, v) == A.And(A.Not(tail), A.var("in_p"))
    for p in (A.WEAK, A.STRONG):
        assert tr_rewrite(A.var("out_p"), p, v) == A.var("out_p")
    assert tr_rewrite(A.Next(A.var("out_p")), A.WEAK, v) == A.Or(tail, A.Next(A.var("out_p")))
    assert tr_rewrite(A.Next(A.var("out_p")), A.STRONG, v) == A.And(A.Not(tail), A.Next(A.var("out_p")))


def test_tr_rejects_tail_in_formula():
    v = A.Vocabulary.of(["i"], ["Tail"])
    with pytest.raises(RewriteError):
        tr_rewrite(A.var("Tail"), A.WEAK, v)


def test_extend_with_tail_examples():
    one = extend_with_tail(Trace.finite(IO, [{"o": True}]))
    assert one.is_lasso and one.state(0)["Tail"] and one.state(1)["Tail"]
    assert one.state(0)["o"] == one.state(5)["o"] is True
    t = Trace.finite(IO, [{"i": True, "o": False}, {"i": False, "o": True}, {"o": False}])
    ext = extend_with_tail(t)
    assert [ext.state(k)["Tail"] for k in range(3)] == [False, False, True]
    assert [dict(s)["Tail"] for s in ext.loop] == [True]
    assert all(ext.state(k)["o"] is False for k in range(2, 6))
    assert len(list(extend_with_tail_all(t))) == 4
    with pytest.raises(TraceError):
        extend_with_tail(Trace.lasso(IO, [], [{"i": True, "o": True}]))


@given(formulas(max_leaves=7), finite_traces(), POLS)
def test_tr_theorem(f, t, pol):
    ev = FiniteEvaluator(t)
    expected = ev.sat(f, 0, pol)
    g = tr_rewrite(f, pol, IO)
    for ext in extend_with_tail_all(t):
        assert LassoEvaluator(ext).sat(g, 0) == expected


def test_literal_tr_fails_on_eventually_false():
    t = Trace.finite(IO, [{"o": True}])
    f = P("F false")
    assert holds(t, f)
    assert not holds(extend_with_tail(t), tr_rewrite(f, A.WEAK, IO, literal=True))
    assert holds(extend_with_tail(t), tr_rewrite(f, A.WEAK, IO))


# ---------------------------------------------------------------- W2S


def test_w2s_examples():
    pq = A.Vocabulary.of([], ["p", "q"])
    p, q = A.var("p"), A.var("q")
    assert w2s(P("p U q", pq)) == A.Release(q, A.Or(p, q))
    assert w2s(p) == p
    assert w2s(to_nnf(desugar(P("F p", pq)))) == A.Release(p, A.Or(A.TRUE, p))


def test_w2s_rejects_unsupported():
    with pytest.raises(UnsupportedConstruct):
        w2s(P("o S i"))
    with pytest.raises(UnsupportedConstruct):
        w2s(P("!(o U i)"))
    with pytest.raises(UnsupportedConstruct):
        w2s(parse_formula("out_2' = in_2", SENDER))


@given(formulas(max_leaves=7, past=False), finite_traces())
def test_w2s_theorem_finite(f, t):
    n = to_nnf(f)
    assert holds(t, f) == holds(t, w2s(n))


@given(formulas(max_leaves=6, past=False), lassos())
def test_w2s_on_lassos_is_standard(f, t):
    n = to_nnf(f)
    assert holds(t, n) == holds(t, f)


# ---------------------------------------------------------------- R examples


def test_base_examples():
    assert rewrite_base(A.var("rec_2"), A.STRONG, SCS) == A.And(A.var("run"), A.var("rec_2"))
    assert rewrite_base(A.var("rec_2"), A.WEAK, SCS) == A.Or(A.Not(A.var("run")), A.var("rec_2"))
    for p in (A.WEAK, A.STRONG):
        assert rewrite_base(A.var("send_2"), p, SCS) == A.var("send_2")
    assert rewrite_base_top(A.var("o"), CS) == A.Release(STATE, A.Or(A.Not(STATE), A.var("o")))


def test_base_sender_contains_frozen_next():
    r = to_text(rewrite_base(P(C2_PROPERTY, SENDER), A.WEAK, SCS))
    assert "out_2 @F (run | Z run & end)" in r
    assert "X ((run | Z run & end) R (!(run | Z run & end) | send_2))" in r
    top = rewrite_base_top(P(C2_PROPERTY, SENDER), SCS)
    assert isinstance(top, A.Release) and top.left == SCS.state


def test_opt_examples():
    assert rewrite_opt(P("X send_2", SENDER), A.WEAK, SCS) == A.Or(A.var("end"), P("X send_2", SENDER))
    assert rewrite_opt(P("X send_2", SENDER), A.STRONG, SCS) == \
        A.And(A.Not(A.var("end")), P("X send_2", SENDER))
    text = to_text(rewrite_opt(P(C2_PROPERTY, SENDER), A.WEAK, SCS))
    assert "out_2 @F (!Y end) = in_2" in text
    assert "end | X send_2" in text


def test_opt_top_wrapper_choice():
    g = rewrite_opt_top(P("G o"), CS)
    assert not isinstance(g, A.Release) or g.left != STATE
    wrapped = rewrite_opt_top(P("X o"), CS)
    assert isinstance(wrapped, A.Release) and wrapped.left == STATE
    assert rewrite_opt_top(A.var("o"), CS) == A.var("o")
    c2 = rewrite_opt_top(P(C2_PROPERTY, SENDER), SCS)
    assert c2 == rewrite_opt(P(C2_PROPERTY, SENDER), A.WEAK, SCS)


@given(lassos(vocab=GV, max_stem=3, max_loop=3))
def test_opt_globally_output(t):
    expected = G("G (Y end | o)")
    assert holds(t, rewrite_opt_top(P("G o"), CS)) == holds(t, expected)


def test_fair_examples():
    assert rewrite_fair(A.var("o"), CS) == A.var("o")
    assert rewrite_fair(A.var("i"), CS) == A.var("i")
    f = P(C2_PROPERTY, SENDER)
    assert is_syntactically_stutter_tolerant(f, SENDER)
    text = to_text(rewrite_fair_top(f, SCS))
    assert "X send_2" in text and "out_2' = in_2" in text


@given(lassos(vocab=SGV, max_stem=2, max_loop=3))
def test_fair_sender_matches_expected_shape(t):
    expected = parse_formula("G (!run | (rec_2 -> out_2' = in_2 & X send_2))", SGV)
    assert holds(t, rewrite_fair_top(P(C2_PROPERTY, SENDER), SCS)) == holds(t, expected)


@st.composite
def no_end_lassos(draw):
    stem = draw(st.lists(st.fixed_dictionaries({"i": st.booleans(), "o": st.booleans(),
                                                "run": st.booleans()}), max_size=2))
    loop = draw(st.lists(st.fixed_dictionaries({"i": st.booleans(), "o": st.booleans(),
                                                "run": st.booleans()}), min_size=1, max_size=3))
    return Trace.lasso(GV, [dict(s, end=False) for s in stem], [dict(s, end=False) for s in loop])


@given(formulas(max_leaves=6), no_end_lassos())
def test_fair_is_opt_with_end_false(f, t):
    # substituting end := false (so state := run) in the optimized rewrite;
    # the two agree wherever the component runs, which is all the top-level
    # wrapper looks at
    ev = LassoEvaluator(t)
    if not any(s["run"] for s in t.loop):
        return
    for k in range(t.positions()):
        if t.state(k)["run"]:
            assert ev.sat(rewrite_fair(f, CS), k) == ev.sat(rewrite_opt(f, A.WEAK, CS), k)
    assert ev.sat(rewrite_fair_top(f, CS), 0) == ev.sat(rewrite_opt_top(f, CS), 0)


# ---------------------------------------------------------------- frame condition and gamma_p


def test_psi_cond_examples():
    assert build_psi_cond([CS]) == A.Always(A.Implies(A.Not(RUN), A.Cmp("=", A.Var("o"), A.NextVal(A.Var("o")))))
    assert build_psi_cond([ComponentSymbols(A.Vocabulary.of(["i"], []))]) == A.TRUE
    other = ComponentSymbols(A.Vocabulary.of([], ["q"]), "run2", "end2")
    both = build_psi_cond([CS, other])
    assert both == A.And(build_psi_cond([CS]), build_psi_cond([other]))
    with pytest.raises(RewriteError):
        build_psi_cond([CS, ComponentSymbols(A.Vocabulary.of([], ["q"]))])


def test_gamma_p_examples():
    g = gamma_p([(A.var("o"), CS)], RewriteMode.BASE)
    assert g.formula == A.And(rewrite_base_top(A.var("o"), CS), build_psi_cond([CS]))
    assert g.assumptions == () and g.warnings == ()
    assert gamma_p([], RewriteMode.BASE).formula == A.TRUE
    fair = gamma_p([(A.var("o"), CS)], RewriteMode.FAIRNESS)
    assert fair.assumptions == (A.Always(A.Eventually(RUN)),)
    assert fair.warnings
    assert not gamma_p([(A.var("o"), CS)], RewriteMode.FAIRNESS, infinite_local=True).warnings


# ---------------------------------------------------------------- theorems on random cases

COMP_GAPS = st.integers(0, 2)


def _embedding(data, local, tail):
    gaps = tuple(data.draw(COMP_GAPS) for _ in range(embed_slots(local)))
    seed = data.draw(st.integers(0, 1000))
    return embed(local, StutterPlan(gaps, tail, filler=("random", seed)))


@given(formulas(max_leaves=7), finite_traces(max_len=3), st.sampled_from([FINITE_CUT, INFINITE_TAIL]),
       st.data())
def test_base_and_opt_theorems_random(f, local, tail, data):
    g = _embedding(data, local, tail)
    expected = holds(local, f)
    assert holds(g, rewrite_base_top(f, CS)) == expected
    assert holds(g, rewrite_opt_top(f, CS)) == expected


@given(formulas(max_leaves=7), lassos(max_stem=2, max_loop=2), st.data())
def test_fair_theorem_random(f, local, data):
    g = _embedding(data, local, INFINITE_TAIL)
    assert run_map(g, "run").infinite
    assert holds(g, rewrite_fair_top(f, CS)) == holds(local, f)


@given(formulas(max_leaves=6), finite_traces(max_len=3), POLS, st.data())
def test_stutter_tolerant_formulas_keep_value_in_gaps(f, local, pol, data):
    if not is_syntactically_stutter_tolerant(f, IO):
        return
    g = _embedding(data, local, FINITE_CUT)
    r = rewrite_base(f, pol, CS)
    ev = FiniteEvaluator(g)
    m = run_map(g, "run")
    maps = list(m.positions) + [m.final]
    prev = -1
    for pos in maps:
        for j in range(prev + 1, pos + 1):
            assert ev.sat(r, j, pol) == ev.sat(r, pos, pol)
        prev = pos


def test_exhaustive_small_base_rewrite():
    """Every depth-2 formula over one input and one output, every local
    trace of length <= 2, every gap plan <= 1."""
    from asyncltl.harness import enumerate_formulas, finite_traces as all_locals
    fs = enumerate_formulas(IO, 2, terms=False)
    locals_ = list(all_locals(IO, 2))
    for local in locals_:
        for gaps in itertools.product(range(2), repeat=embed_slots(local)):
            for tail in (FINITE_CUT, INFINITE_TAIL):
                g = embed(local, StutterPlan(gaps, tail, filler={"i": True}))
                for f in fs:
                    assert holds(g, rewrite_base_top(f, CS)) == holds(local, f), (to_text(f), g)
