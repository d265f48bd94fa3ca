import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from asyncltl import ast as A
from asyncltl.parser import ParseError, parse_formula, parse_term
from asyncltl.semantics import FiniteEvaluator
from asyncltl.sorts import SortError, UnknownIdentifier
from asyncltl.transform import (INPUT_PRED, OUTPUT_PRED, UnsupportedConstruct, desugar, formula_size,
                                is_core, is_nnf, is_syntactically_stutter_tolerant, predicate_class,
                                simplify, to_nnf, to_text)
from asyncltl.trace import Trace

from conftest import IO, derived_formulas, formulas

SENDER = A.Vocabulary.of(["rec_2", "in_2"], ["out_2", "send_2"])
PQ = A.Vocabulary.of([], ["p", "q"])


def P(text, vocab=PQ):
    return parse_formula(text, vocab)


def all_finite(vocab, max_len):
    full = [dict(zip(vocab.names, bits)) for bits in itertools.product([False, True], repeat=len(vocab))]
    outs = [dict(zip(vocab.outputs, bits)) for bits in itertools.product([False, True], repeat=len(vocab.outputs))]
    for n in range(1, max_len + 1):
        for body in itertools.product(full, repeat=n - 1):
            for last in outs:
                yield Trace.finite(vocab, list(body) + [last])


TRACES_IO_4 = list(all_finite(IO, 4))


# ---------------------------------------------------------------- parse


def test_parse_sender_property():
    f = parse_formula("G (rec_2 -> next(out_2) = in_2 & X send_2)", SENDER)
    assert isinstance(f, A.Always)
    body = f.arg
    assert isinstance(body, A.Implies)
    assert body.left == A.var("rec_2")
    eq, nxt = body.right.left, body.right.right
    assert eq == A.Cmp("=", A.NextVal(A.Var("out_2")), A.Var("in_2"))
    assert nxt == A.Next(A.var("send_2"))


def test_primed_variable_is_next():
    a = parse_formula("out_2' = in_2", SENDER)
    b = parse_formula("next(out_2) = in_2", SENDER)
    assert a == b


def test_parse_true():
    assert parse_formula("true") == A.TRUE
    assert parse_formula("false") == A.FALSE


def test_parse_at_last():
    v = A.Vocabulary.of(["x"], ["correct"])
    u = parse_term("x @P (correct)", v)
    assert u == A.AtLast(A.Var("x"), A.var("correct"))


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as e:
        parse_formula("p & (q", PQ)
    assert e.value.line == 1 and e.value.col >= 1


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier):
        parse_formula("G zz", PQ)


def test_sort_mismatch():
    v = A.Vocabulary((A.VarDecl("n", A.int_sort(0, 3), A.OUTPUT), A.VarDecl("p", A.BOOL, A.OUTPUT)))
    with pytest.raises(SortError):
        parse_formula("n = p", v)


@given(derived_formulas())
def test_text_roundtrip(f):
    assert parse_formula(to_text(f), IO) == f


# ---------------------------------------------------------------- desugar and nnf


def test_desugar_examples():
    assert desugar(P("G p")) == A.Not(A.Until(A.TRUE, A.Not(A.var("p"))))
    p = A.var("p")
    assert desugar(P("F<=2 p")) == A.Or(p, A.Or(A.Next(p), A.Next(A.Next(p))))
    assert desugar(p) == p


@given(derived_formulas())
def test_desugar_yields_core(f):
    assert is_core(desugar(f))


@given(derived_formulas(), st.sampled_from([A.WEAK, A.STRONG]))
def test_desugar_preserves_truncated_semantics(f, pol):
    d = desugar(f)
    for t in TRACES_IO_4:
        ev = FiniteEvaluator(t)
        for i in range(len(t) + 1):
            assert ev.sat(f, i, pol) == ev.sat(d, i, pol)


def test_nnf_examples():
    assert to_nnf(P("!(p U q)")) == A.Release(A.Not(A.var("p")), A.Not(A.var("q")))
    assert to_nnf(P("!!p")) == A.var("p")
    assert to_nnf(P("!X p")) == A.Next(A.Not(A.var("p")))


def test_nnf_neg_x_both_polarities_length_3():
    f, g = P("!X p"), P("X !p")
    for t in all_finite(PQ, 3):
        ev = FiniteEvaluator(t)
        for i in range(len(t) + 1):
            for pol in (A.WEAK, A.STRONG):
                assert ev.sat(f, i, pol) == ev.sat(g, i, pol)


@given(formulas(), st.sampled_from([A.WEAK, A.STRONG]))
def test_nnf_preserves_truncated_semantics(f, pol):
    n = to_nnf(f)
    assert is_nnf(n)
    for t in TRACES_IO_4:
        ev = FiniteEvaluator(t)
        for i in range(len(t) + 1):
            assert ev.sat(f, i, pol) == ev.sat(n, i, pol)


def test_nnf_for_w2s_rejects_terms():
    with pytest.raises(UnsupportedConstruct):
        to_nnf(parse_formula("out_2' = in_2", SENDER), term_free=True)


# ---------------------------------------------------------------- classifiers


def test_predicate_class_examples():
    assert predicate_class(A.var("rec_2"), SENDER) == INPUT_PRED
    v = A.Vocabulary((A.VarDecl("out_1", A.int_sort(0, 4), A.OUTPUT),))
    assert predicate_class(parse_formula("out_1 = 3", v), v) == OUTPUT_PRED
    v2 = SENDER.extend(A.VarDecl("state", A.BOOL, A.OUTPUT))
    assert predicate_class(parse_formula("out_2 @F state = in_2", v2), v2) == INPUT_PRED
    # next term alone makes a predicate an input one
    assert predicate_class(parse_formula("out_2' = out_2", SENDER), SENDER) == INPUT_PRED


def test_predicate_class_unresolved():
    with pytest.raises(KeyError):
        predicate_class(A.var("nope"), SENDER)


def test_mixed_atoms_are_input():
    assert predicate_class(parse_formula("out_2 = in_2", SENDER), SENDER) == INPUT_PRED


def test_stutter_tolerance_examples():
    v = A.Vocabulary((A.VarDecl("out_1", A.int_sort(0, 4), A.OUTPUT),))
    assert is_syntactically_stutter_tolerant(parse_formula("out_1 = 3", v), v)
    assert not is_syntactically_stutter_tolerant(parse_formula("X send_2", SENDER), SENDER)
    assert is_syntactically_stutter_tolerant(P("G p"), PQ)
    assert is_syntactically_stutter_tolerant(parse_formula("rec_2 U X rec_2", SENDER), SENDER)
    assert not is_syntactically_stutter_tolerant(A.var("rec_2"), SENDER)
    assert not is_syntactically_stutter_tolerant(P("p S q"), PQ)
    assert is_syntactically_stutter_tolerant(P("Y p"), PQ)


# ---------------------------------------------------------------- size


def test_size_examples():
    assert formula_size(A.var("p")) == 1
    assert formula_size(P("p U q")) == 3
    assert formula_size(A.TRUE) == 1


def _subterms(n):
    return [c for c in A.walk(n) if c is not n]


@given(derived_formulas())
def test_size_positive_and_monotone(f):
    s = formula_size(f)
    assert s >= 1
    for sub in _subterms(f):
        # the Atom wrapper around a variable is not counted on its own
        if isinstance(sub, A.Formula):
            assert formula_size(sub) < s
        else:
            assert formula_size(sub) <= s


def test_simplify_folds_constants():
    assert simplify(A.Or(A.TRUE, A.var("p"))) == A.TRUE
    assert simplify(A.Not(A.Not(A.var("p")))) == A.var("p")
