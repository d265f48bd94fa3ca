"""Syntactic transformations: desugaring, negation normal form,
predicate classification, stutter-tolerance, size and printing."""

from __future__ import annotations

from functools import lru_cache

from . import ast as A
from .sorts import _map

INPUT_PRED = "input-pred"
OUTPUT_PRED = "output-pred"


# ---------------------------------------------------------------- desugar


def desugar(node):
    """Rewrite derived operators into {true, pred, !, |, X, U, Y, S}."""
    return _desugar(node)


def expand_once(n):
    """Replace a derived operator at the root by its definition, leaving
    the operands untouched.  Core nodes are returned unchanged."""
    if isinstance(n, A.And):
        return A.Not(A.Or(A.Not(n.left), A.Not(n.right)))
    if isinstance(n, A.Implies):
        return A.Or(A.Not(n.left), n.right)
    if isinstance(n, A.Iff):
        return A.And(A.Implies(n.left, n.right), A.Implies(n.right, n.left))
    if isinstance(n, A.Release):
        return A.Not(A.Until(A.Not(n.left), A.Not(n.right)))
    if isinstance(n, A.WeakYesterday):
        return A.Not(A.Yesterday(A.Not(n.arg)))
    if isinstance(n, A.Eventually):
        return A.Until(A.TRUE, n.arg)
    if isinstance(n, A.Always):
        return A.Not(A.Until(A.TRUE, A.Not(n.arg)))
    if isinstance(n, A.Once):
        return A.Since(A.TRUE, n.arg)
    if isinstance(n, A.Historically):
        return A.Not(A.Since(A.TRUE, A.Not(n.arg)))
    if isinstance(n, (A.Repeated, A.Bounded)):
        return _desugar_shallow(n)
    return n


def _desugar_shallow(n):
    if isinstance(n, A.Repeated):
        out = n.arg
        for _ in range(n.count):
            out = {"X": A.Next, "Y": A.Yesterday, "Z": A.WeakYesterday}[n.op](out)
        return out
    step = {"F": "X", "G": "X", "O": "Y", "H": "Z"}[n.op]
    parts = [A.Repeated(step, k, n.arg) if k else n.arg for k in range(n.bound + 1)]
    return A.disj(*parts) if n.op in ("F", "O") else A.conj(*parts)


@lru_cache(maxsize=1 << 18)
def _desugar(n):
    d = _desugar
    if isinstance(n, (A.Var, A.Lit, A.Const)):
        return n
    if isinstance(n, A.And):
        return A.Not(A.Or(A.Not(d(n.left)), A.Not(d(n.right))))
    if isinstance(n, A.Implies):
        return A.Or(A.Not(d(n.left)), d(n.right))
    if isinstance(n, A.Iff):
        return d(A.And(A.Implies(n.left, n.right), A.Implies(n.right, n.left)))
    if isinstance(n, A.Release):
        return A.Not(A.Until(A.Not(d(n.left)), A.Not(d(n.right))))
    if isinstance(n, A.WeakYesterday):
        return A.Not(A.Yesterday(A.Not(d(n.arg))))
    if isinstance(n, A.Eventually):
        return A.Until(A.TRUE, d(n.arg))
    if isinstance(n, A.Always):
        return A.Not(A.Until(A.TRUE, A.Not(d(n.arg))))
    if isinstance(n, A.Once):
        return A.Since(A.TRUE, d(n.arg))
    if isinstance(n, A.Historically):
        return A.Not(A.Since(A.TRUE, A.Not(d(n.arg))))
    if isinstance(n, A.Repeated):
        out = d(n.arg)
        for _ in range(n.count):
            if n.op == "X":
                out = A.Next(out)
            elif n.op == "Y":
                out = A.Yesterday(out)
            else:
                out = A.Not(A.Yesterday(A.Not(out)))
        return out
    if isinstance(n, A.Bounded):
        step = {"F": "X", "G": "X", "O": "Y", "H": "Z"}[n.op]
        parts = [A.Repeated(step, k, n.arg) if k else n.arg for k in range(n.bound + 1)]
        joined = A.disj(*parts) if n.op in ("F", "O") else A.conj(*parts)
        return d(joined)
    return _map(n, d)


def is_core(node) -> bool:
    core = A.CORE + (A.Var, A.Lit, A.Func, A.NextVal, A.AtNext, A.AtLast, A.Ite)
    return all(isinstance(n, core) for n in A.walk(node))


# ---------------------------------------------------------------- NNF


class UnsupportedConstruct(ValueError):
    def __init__(self, message: str, nodes=()):
        self.nodes = tuple(nodes)
        super().__init__(message)


def to_nnf(node: A.Formula, term_free: bool = False) -> A.Formula:
    """Push negations to the atoms.  Introduces And, Release and
    WeakYesterday.  A negated Since has no dual in the node set and is kept
    as ``!(a S b)`` with normalised operands."""
    if term_free:
        bad = [n for n in A.walk(node) if isinstance(n, (A.NextVal, A.AtNext, A.AtLast, A.Ite))]
        if bad:
            raise UnsupportedConstruct(
                "terms next/at-next/at-last/ite are not allowed here", bad)
    return _nnf(node, False)


@lru_cache(maxsize=1 << 18)
def _nnf(n, neg: bool):
    if isinstance(n, (A.Const, A.Atom, A.Cmp)):
        return A.Not(n) if neg else n
    if isinstance(n, A.Not):
        return _nnf(n.arg, not neg)
    if isinstance(n, (A.Implies, A.Iff, A.Eventually, A.Always, A.Once, A.Historically,
                      A.Bounded, A.Repeated)):
        return _nnf(desugar(n), neg)
    if isinstance(n, A.Or):
        cls = A.And if neg else A.Or
        return cls(_nnf(n.left, neg), _nnf(n.right, neg))
    if isinstance(n, A.And):
        cls = A.Or if neg else A.And
        return cls(_nnf(n.left, neg), _nnf(n.right, neg))
    if isinstance(n, A.Next):
        return A.Next(_nnf(n.arg, neg))
    if isinstance(n, A.Until):
        cls = A.Release if neg else A.Until
        return cls(_nnf(n.left, neg), _nnf(n.right, neg))
    if isinstance(n, A.Release):
        cls = A.Until if neg else A.Release
        return cls(_nnf(n.left, neg), _nnf(n.right, neg))
    if isinstance(n, A.Yesterday):
        cls = A.WeakYesterday if neg else A.Yesterday
        return cls(_nnf(n.arg, neg))
    if isinstance(n, A.WeakYesterday):
        cls = A.Yesterday if neg else A.WeakYesterday
        return cls(_nnf(n.arg, neg))
    if isinstance(n, A.Since):
        inner = A.Since(_nnf(n.left, False), _nnf(n.right, False))
        return A.Not(inner) if neg else inner
    raise TypeError(f"not a formula: {n!r}")


def is_nnf(node: A.Formula) -> bool:
    for n in A.walk(node):
        if isinstance(n, A.Not) and not isinstance(n.arg, (A.Const, A.Atom, A.Cmp, A.Since)):
            return False
        if isinstance(n, (A.Implies, A.Iff)):
            return False
    return True


# ---------------------------------------------------------------- classification


def predicate_class(atom: A.Formula, vocab: A.Vocabulary) -> str:
    if isinstance(atom, A.Const):
        return OUTPUT_PRED
    if not isinstance(atom, (A.Atom, A.Cmp)):
        raise TypeError("predicate_class expects a predicate node")
    return _pred_class(atom, vocab)


@lru_cache(maxsize=1 << 18)
def _pred_class(atom, vocab):
    return INPUT_PRED if _reads_input(atom, vocab) else OUTPUT_PRED


def _reads_input(n, vocab) -> bool:
    # Only the term structure counts.  Conditions of ite/@P are formulas
    # that the semantics evaluates with their own polarity, so variables
    # occurring there do not make the enclosing predicate an input one.
    if isinstance(n, (A.NextVal, A.AtNext)):
        return True
    if isinstance(n, A.Var):
        d = vocab.get(n.name)
        if d is None:
            raise KeyError(f"unresolved variable {n.name!r}")
        return d.io == A.INPUT
    if isinstance(n, A.AtLast):
        _check_resolved(n.cond, vocab)
        return _reads_input(n.arg, vocab)
    if isinstance(n, A.Ite):
        _check_resolved(n.cond, vocab)
        return _reads_input(n.then, vocab) or _reads_input(n.other, vocab)
    return any(_reads_input(c, vocab) for c in A.children(n))


def _check_resolved(n, vocab) -> None:
    for v in A.walk(n):
        if isinstance(v, A.Var) and v.name not in vocab:
            raise KeyError(f"unresolved variable {v.name!r}")


def is_input_pred(atom, vocab) -> bool:
    return not isinstance(atom, A.Const) and _pred_class(atom, vocab) == INPUT_PRED


def is_syntactically_stutter_tolerant(node, vocab: A.Vocabulary) -> bool:
    return _st(desugar(node), vocab)


@lru_cache(maxsize=1 << 18)
def _st(n, vocab) -> bool:
    if isinstance(n, A.Const):
        return True
    if isinstance(n, (A.Atom, A.Cmp)):
        return _pred_class(n, vocab) == OUTPUT_PRED and all(_st(c, vocab) for c in A.children(n))
    if isinstance(n, A.Or):
        return _st(n.left, vocab) and _st(n.right, vocab)
    if isinstance(n, A.Not):
        return _st(n.arg, vocab)
    if isinstance(n, (A.Until, A.Yesterday)):
        return True
    if isinstance(n, (A.Next, A.Since)):
        return False
    # terms
    if isinstance(n, A.Var):
        d = vocab.get(n.name)
        return d is not None and d.io == A.OUTPUT
    if isinstance(n, A.Lit):
        return True
    if isinstance(n, A.Func):
        return all(_st(a, vocab) for a in n.args)
    if isinstance(n, A.Ite):
        return _st(n.cond, vocab) and _st(n.then, vocab) and _st(n.other, vocab)
    if isinstance(n, A.AtLast):
        return True
    if isinstance(n, (A.NextVal, A.AtNext)):
        return False
    raise TypeError(f"unexpected node {n!r}")


# ---------------------------------------------------------------- size


def formula_size(node) -> int:
    """Node count; every operator, atom, constant and variable counts 1.
    The Atom wrapper around a boolean term is not counted separately."""
    return _size(node)


@lru_cache(maxsize=1 << 18)
def _size(n) -> int:
    if isinstance(n, A.Atom):
        return _size(n.term)
    return 1 + sum(_size(c) for c in A.children(n))


# ---------------------------------------------------------------- simplification


def simplify(node):
    """Boolean constant folding and double-negation removal.  Temporal
    operators are never folded: a strong X true is false at the trace end."""
    return _simp(node)


@lru_cache(maxsize=1 << 18)
def _simp(n):
    if isinstance(n, (A.Var, A.Lit, A.Const)):
        return n
    n = _map(n, _simp)
    if isinstance(n, A.Not):
        a = n.arg
        if isinstance(a, A.Const):
            return A.Const(not a.value)
        if isinstance(a, A.Not):
            return a.arg
    if isinstance(n, A.Or):
        if n.left == A.TRUE or n.right == A.TRUE:
            return A.TRUE
        if n.left == A.FALSE:
            return n.right
        if n.right == A.FALSE:
            return n.left
    if isinstance(n, A.And):
        if n.left == A.FALSE or n.right == A.FALSE:
            return A.FALSE
        if n.left == A.TRUE:
            return n.right
        if n.right == A.TRUE:
            return n.left
    return n


# ---------------------------------------------------------------- printing

_LEVEL = {
    A.Iff: 1, A.Implies: 2, A.Or: 3, A.And: 4,
    A.Until: 5, A.Release: 5, A.Since: 5,
}
_BIN_TEXT = {A.Iff: "<->", A.Implies: "->", A.Or: "|", A.And: "&",
             A.Until: "U", A.Release: "R", A.Since: "S"}
_UN_TEXT = {A.Not: "!", A.Next: "X", A.Yesterday: "Y", A.WeakYesterday: "Z",
            A.Eventually: "F", A.Always: "G", A.Once: "O", A.Historically: "H"}
_UNARY_LEVEL = 6
_CMP_LEVEL = 7
_ADD_LEVEL = 8
_MUL_LEVEL = 9
_POSTFIX_LEVEL = 10
_PRIMARY_LEVEL = 11


def to_text(node) -> str:
    """Concrete syntax accepted by :func:`asyncltl.parser.parse_formula`."""
    return _text(node)[0]


def _wrap(pair, need: int) -> str:
    text, level = pair
    return text if level >= need else f"({text})"


def _lit(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _default_suffix(n) -> str:
    return "" if n.default is None else f" default {_lit(n.default)}"


@lru_cache(maxsize=1 << 18)
def _text(n):
    if isinstance(n, A.Const):
        return ("true" if n.value else "false"), _PRIMARY_LEVEL
    if isinstance(n, A.Atom):
        return _text(n.term)
    if isinstance(n, A.Cmp):
        return f"{_wrap(_text(n.left), _ADD_LEVEL)} {n.op} {_wrap(_text(n.right), _ADD_LEVEL)}", _CMP_LEVEL
    if type(n) in _LEVEL:
        lv = _LEVEL[type(n)]
        if isinstance(n, A.Iff):
            left, right = _wrap(_text(n.left), lv), _wrap(_text(n.right), lv + 1)
        else:
            left, right = _wrap(_text(n.left), lv + 1), _wrap(_text(n.right), lv)
        return f"{left} {_BIN_TEXT[type(n)]} {right}", lv
    if type(n) in _UN_TEXT:
        return f"{_UN_TEXT[type(n)]}{'' if isinstance(n, A.Not) else ' '}{_wrap(_text(n.arg), _UNARY_LEVEL)}", _UNARY_LEVEL
    if isinstance(n, A.Bounded):
        return f"{n.op}<={n.bound} {_wrap(_text(n.arg), _UNARY_LEVEL)}", _UNARY_LEVEL
    if isinstance(n, A.Repeated):
        return f"{n.op}^{n.count} {_wrap(_text(n.arg), _UNARY_LEVEL)}", _UNARY_LEVEL
    # terms
    if isinstance(n, A.Var):
        return n.name, _PRIMARY_LEVEL
    if isinstance(n, A.Lit):
        if isinstance(n.value, int) and not isinstance(n.value, bool) and n.value < 0:
            return f"({n.value})", _PRIMARY_LEVEL
        return _lit(n.value), _PRIMARY_LEVEL
    if isinstance(n, A.Func):
        if n.op == "neg":
            return f"-({_text(n.args[0])[0]})", _PRIMARY_LEVEL
        lv = _MUL_LEVEL if n.op == "*" else _ADD_LEVEL
        return f"{_wrap(_text(n.args[0]), lv)} {n.op} {_wrap(_text(n.args[1]), lv + 1)}", lv
    if isinstance(n, A.NextVal):
        if n.default is None and isinstance(n.arg, A.Var):
            return f"{n.arg.name}'", _POSTFIX_LEVEL
        return f"next({_text(n.arg)[0]}){_default_suffix(n)}", (
            _PRIMARY_LEVEL if n.default is None else _POSTFIX_LEVEL - 1)
    if isinstance(n, (A.AtNext, A.AtLast)):
        op = "@F" if isinstance(n, A.AtNext) else "@P"
        cond = _text(n.cond)
        simple = isinstance(n.cond, A.Const) or (
            isinstance(n.cond, A.Atom) and isinstance(n.cond.term, A.Var))
        cond_text = cond[0] if simple else f"({cond[0]})"
        level = _POSTFIX_LEVEL if n.default is None else _POSTFIX_LEVEL - 1
        return f"{_wrap(_text(n.arg), _POSTFIX_LEVEL)} {op} {cond_text}{_default_suffix(n)}", level
    if isinstance(n, A.Ite):
        return (f"ite({_text(n.cond)[0]}, {_text(n.then)[0]}, {_text(n.other)[0]})"
                f"{_default_suffix(n)}"), (_PRIMARY_LEVEL if n.default is None else _POSTFIX_LEVEL - 1)
    raise TypeError(f"cannot print {n!r}")
