"""Formula rewritings.

* ``tr_rewrite``: finite-trace formulas to LTL over traces extended with a
  ``Tail`` marker.
* ``w2s``: weak finite-trace formulas to safety formulas.
* ``rewrite_base`` / ``rewrite_opt`` / ``rewrite_fair``: local component
  properties to properties of the asynchronous composition, plus their
  top-level wrappers.
* ``build_psi_cond`` and ``gamma_p`` assemble the global property.

All rewritings take formulas over the operators produced by the parser.
Derived operators other than ``&`` and ``->`` are expanded one level at a
time before a clause is applied, so the output keeps the input's shape
where possible.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache

from . import ast as A
from .sorts import sort_of
from .trace import Assignment, Trace, TraceError
from .transform import (
    UnsupportedConstruct,
    expand_once,
    is_input_pred,
    is_syntactically_stutter_tolerant,
)

WEAK, STRONG = A.WEAK, A.STRONG


class RewriteError(ValueError):
    pass


class RewriteMode(str, enum.Enum):
    BASE = "base"
    OPTIMIZED = "optimized"
    FAIRNESS = "fairness"


def _not(f):
    return A.Not(f)


def _default_lit(u, vocab) -> A.Lit:
    d = u.default if getattr(u, "default", None) is not None else sort_of(u, vocab).default()
    return A.Lit(d)


def _check_fresh(f, names, vocab=None) -> None:
    used = A.variables(f)
    for name in names:
        if name in used or (vocab is not None and name in vocab):
            raise RewriteError(f"symbol collision: {name!r} already occurs")


def _map_terms(pred, fn):
    """Apply ``fn`` to the terms directly below a predicate node."""
    if isinstance(pred, A.Atom):
        return A.Atom(fn(pred.term))
    if isinstance(pred, A.Cmp):
        return A.Cmp(pred.op, fn(pred.left), fn(pred.right))
    return pred


# ====================================================================== Tr


def tr_rewrite(f: A.Formula, p: A.Polarity, vocab: A.Vocabulary, tail: str = "Tail",
               literal: bool = False) -> A.Formula:
    """Tail reduction.

    With ``literal=True`` the Until clause is purely homomorphic.  That
    version is kept for differential testing: it is wrong on the last
    position, e.g. ``F false`` holds weakly on every finite trace but its
    image does not hold on the extension.  The default clauses are

        weak   Tr(a U b) = Tr(a) U (Tr(b) | (Tail & Tr(a)))
        strong Tr(a U b) = (!Tail & Tr(a)) U Tr(b)
    """
    _check_fresh(f, [tail], vocab)
    return _Tr(vocab, tail, literal).formula(f, p)


class _Tr:
    def __init__(self, vocab, tail, literal):
        self.vocab = vocab
        self.tail = A.var(tail)
        self.literal = literal
        self.memo = {}

    def formula(self, f, p):
        key = (f, p)
        r = self.memo.get(key)
        if r is None:
            r = self._formula(f, p)
            self.memo[key] = r
        return r

    def _formula(self, f, p):
        T = self.tail
        weak = p is WEAK
        if isinstance(f, A.Const):
            return f
        if isinstance(f, (A.Atom, A.Cmp)):
            g = _map_terms(f, self.term)
            if is_input_pred(f, self.vocab):
                return A.Or(T, g) if weak else A.And(_not(T), g)
            return g
        if isinstance(f, A.Not):
            return _not(self.formula(f.arg, p.flip))
        if isinstance(f, A.Or):
            return A.Or(self.formula(f.left, p), self.formula(f.right, p))
        if isinstance(f, A.And):
            return A.And(self.formula(f.left, p), self.formula(f.right, p))
        if isinstance(f, A.Implies):
            return A.Implies(self.formula(f.left, p.flip), self.formula(f.right, p))
        if isinstance(f, A.Next):
            x = A.Next(self.formula(f.arg, p))
            return A.Or(T, x) if weak else A.And(_not(T), x)
        if isinstance(f, A.Until):
            a, b = self.formula(f.left, p), self.formula(f.right, p)
            if self.literal:
                return A.Until(a, b)
            if weak:
                return A.Until(a, A.Or(b, A.And(T, a)))
            return A.Until(A.And(_not(T), a), b)
        if isinstance(f, A.Yesterday):
            return A.Yesterday(self.formula(f.arg, p))
        if isinstance(f, A.Since):
            return A.Since(self.formula(f.left, p), self.formula(f.right, p))
        g = expand_once(f)
        if g == f:
            raise RewriteError(f"no Tr clause for {type(f).__name__}")
        return self.formula(g, p)

    def term(self, u):
        T = self.tail
        if isinstance(u, (A.Var, A.Lit)):
            return u
        if isinstance(u, A.Func):
            return A.Func(u.op, tuple(self.term(a) for a in u.args))
        d = _default_lit(u, self.vocab)
        if isinstance(u, A.NextVal):
            return A.Ite(T, d, A.NextVal(self.term(u.arg), u.default), u.default)
        if isinstance(u, A.AtNext):
            # a position past the end of the finite trace is not a hit
            y_tail = A.Yesterday(T)
            hit = A.And(self.formula(u.cond, STRONG), _not(y_tail))
            stop = A.Or(self.formula(u.cond, WEAK), y_tail)
            return A.AtNext(A.Ite(hit, self.term(u.arg), d, u.default), stop, u.default)
        if isinstance(u, A.AtLast):
            hit = self.formula(u.cond, STRONG)
            return A.AtLast(A.Ite(hit, self.term(u.arg), d, u.default),
                            self.formula(u.cond, WEAK), u.default)
        if isinstance(u, A.Ite):
            return A.Ite(self.formula(u.cond, STRONG), self.term(u.then),
                         A.Ite(self.formula(u.cond, WEAK), d, self.term(u.other), u.default),
                         u.default)
        raise RewriteError(f"no Tr clause for term {type(u).__name__}")


def tr_top(f: A.Formula, vocab: A.Vocabulary, tail: str = "Tail") -> A.Formula:
    """Closed form for model-checking export: the marker starts false,
    stays true once set and freezes the outputs."""
    T = A.var(tail)
    frozen = A.conj(*(A.Cmp("=", A.Var(o), A.NextVal(A.Var(o))) for o in vocab.outputs))
    behaviour = A.Always(A.Implies(T, A.And(A.Next(T), frozen)))
    return A.And(_not(T), A.And(behaviour, tr_rewrite(f, WEAK, vocab, tail)))


def tail_vocab(vocab: A.Vocabulary, tail: str = "Tail") -> A.Vocabulary:
    if tail in vocab:
        raise RewriteError(f"symbol collision: {tail!r} already in the vocabulary")
    return vocab.extend(A.VarDecl(tail, A.BOOL, A.OUTPUT))


def extend_with_tail(t: Trace, filler="default", tail: str = "Tail") -> Trace:
    """Lasso over V + {Tail}: the original positions with Tail false, the
    last one with Tail true, then a one-state loop repeating it.  Inputs
    of the last position and of the loop come from ``filler`` (a dict or
    ``"default"``)."""
    if not t.is_finite:
        raise TraceError("extend_with_tail needs a finite trace")
    vocab = tail_vocab(t.vocab, tail)
    if filler == "default":
        filler = {i: t.vocab[i].sort.default() for i in t.vocab.inputs}
    states = [Assignment(s, **{tail: False}) for s in t.stem[:-1]]
    last = Assignment(t.stem[-1], **{i: filler[i] for i in t.vocab.inputs}, **{tail: True})
    return Trace(vocab, tuple(states) + (last,), (last,))


def extend_with_tail_all(t: Trace, tail: str = "Tail"):
    """All extensions, ranging over input values at the last position and in
    the loop independently."""
    if not t.is_finite:
        raise TraceError("extend_with_tail needs a finite trace")
    vocab = tail_vocab(t.vocab, tail)
    inputs = t.vocab.inputs
    fills = [dict(zip(inputs, vals))
             for vals in itertools.product(*(t.vocab[i].sort.values() for i in inputs))]
    head = tuple(Assignment(s, **{tail: False}) for s in t.stem[:-1])
    final = t.stem[-1]
    for a, b in itertools.product(fills, repeat=2):
        yield Trace(vocab, head + (Assignment(final, **a, **{tail: True}),),
                    (Assignment(final, **b, **{tail: True}),))


# ====================================================================== W2S


def w2s(f: A.Formula) -> A.Formula:
    """Weak-to-safety translation of an NNF formula without terms."""
    bad = [n for n in A.walk(f) if isinstance(n, (A.Since, A.Once, A.Historically, A.Term))
           and not isinstance(n, (A.Var, A.Lit))]
    if bad:
        raise UnsupportedConstruct("w2s does not support " + ", ".join(sorted({type(n).__name__ for n in bad})), bad)
    return _w2s(f)


@lru_cache(maxsize=1 << 16)
def _w2s(f):
    if isinstance(f, (A.Const, A.Atom, A.Cmp)):
        return f
    if isinstance(f, A.Not):
        if isinstance(f.arg, (A.Const, A.Atom, A.Cmp)):
            return f
        raise UnsupportedConstruct("w2s expects negation normal form", [f])
    if isinstance(f, A.Or):
        return A.Or(_w2s(f.left), _w2s(f.right))
    if isinstance(f, A.And):
        return A.And(_w2s(f.left), _w2s(f.right))
    if isinstance(f, A.Next):
        return A.Next(_w2s(f.arg))
    if isinstance(f, A.Yesterday):
        return A.Yesterday(_w2s(f.arg))
    if isinstance(f, A.WeakYesterday):
        return A.WeakYesterday(_w2s(f.arg))
    if isinstance(f, A.Until):
        a, b = _w2s(f.left), _w2s(f.right)
        return A.Release(b, A.Or(a, b))
    if isinstance(f, A.Release):
        return A.Release(_w2s(f.left), _w2s(f.right))
    raise UnsupportedConstruct(f"w2s expects negation normal form, found {type(f).__name__}", [f])


# ====================================================================== components


@dataclass(frozen=True)
class ComponentSymbols:
    """Scheduling symbols of one component of a composition."""

    vocab: A.Vocabulary
    run: str = "run"
    end: str = "end"
    name: str = ""

    def __post_init__(self):
        for s in (self.run, self.end):
            if s in self.vocab:
                raise RewriteError(f"symbol collision: {s!r} already in the local vocabulary")
        if self.run == self.end:
            raise RewriteError("run and end must differ")

    @classmethod
    def named(cls, vocab: A.Vocabulary, name: str) -> "ComponentSymbols":
        return cls(vocab, f"run_{name}", f"end_{name}", name)

    @property
    def run_f(self) -> A.Formula:
        return A.var(self.run)

    @property
    def end_f(self) -> A.Formula:
        return A.var(self.end)

    @property
    def state(self) -> A.Formula:
        return A.Or(self.run_f, A.And(A.WeakYesterday(self.run_f), self.end_f))

    def global_vocab(self) -> A.Vocabulary:
        return self.vocab.extend(A.VarDecl(self.run, A.BOOL, A.INPUT),
                                 A.VarDecl(self.end, A.BOOL, A.OUTPUT))


class _Rewriter:
    """Shared traversal; subclasses override individual clauses."""

    def __init__(self, cs: ComponentSymbols):
        self.cs = cs
        self.vocab = cs.vocab
        self.memo = {}

    def st(self, node) -> bool:
        return is_syntactically_stutter_tolerant(node, self.vocab)

    def formula(self, f, p):
        key = (f, p)
        r = self.memo.get(key)
        if r is None:
            r = self._formula(f, p)
            self.memo[key] = r
        return r

    def _formula(self, f, p):
        if isinstance(f, A.Const):
            return f
        if isinstance(f, (A.Atom, A.Cmp)):
            return self.pred(f, p)
        if isinstance(f, A.Not):
            return _not(self.formula(f.arg, p.flip))
        if isinstance(f, A.Or):
            return A.Or(self.formula(f.left, p), self.formula(f.right, p))
        if isinstance(f, A.And):
            return A.And(self.formula(f.left, p), self.formula(f.right, p))
        if isinstance(f, A.Implies):
            return A.Implies(self.formula(f.left, p.flip), self.formula(f.right, p))
        if isinstance(f, A.Next):
            return self.next(f, p)
        if isinstance(f, A.Until):
            return self.until(f, p)
        if isinstance(f, A.Yesterday):
            return self.yesterday(f, p)
        if isinstance(f, A.Since):
            return self.since(f, p)
        g = expand_once(f)
        if g == f:
            raise RewriteError(f"no clause for {type(f).__name__}")
        return self.formula(g, p)

    def term(self, u):
        key = ("term", u)
        r = self.memo.get(key)
        if r is None:
            r = self._term(u)
            self.memo[key] = r
        return r

    def _term(self, u):
        if isinstance(u, (A.Var, A.Lit)):
            return u
        if isinstance(u, A.Func):
            return A.Func(u.op, tuple(self.term(a) for a in u.args))
        if isinstance(u, A.NextVal):
            return self.next_val(u)
        if isinstance(u, A.AtNext):
            return self.at_next(u)
        if isinstance(u, A.AtLast):
            return self.at_last(u)
        if isinstance(u, A.Ite):
            return self.ite(u)
        raise RewriteError(f"no clause for term {type(u).__name__}")


class _Base(_Rewriter):
    def pred(self, f, p):
        g = _map_terms(f, self.term)
        if is_input_pred(f, self.vocab):
            run = self.cs.run_f
            return A.Or(_not(run), g) if p is WEAK else A.And(run, g)
        return g

    def next(self, f, p):
        state = self.cs.state
        inner = self.formula(f.arg, p)
        if p is WEAK:
            return A.Next(A.Release(state, A.Or(_not(state), inner)))
        return A.Next(A.Until(_not(state), A.And(state, inner)))

    def until(self, f, p):
        state = self.cs.state
        a, b = self.formula(f.left, p), self.formula(f.right, p)
        right = A.And(state, b)
        if p is WEAK:
            right = A.Or(right, A.Yesterday(self.cs.end_f))
        return A.Until(A.Or(_not(state), a), right)

    def yesterday(self, f, p):
        run = self.cs.run_f
        return A.Yesterday(A.Since(_not(run), A.And(run, self.formula(f.arg, p))))

    def since(self, f, p):
        state = self.cs.state
        return A.Since(A.Or(_not(state), self.formula(f.left, p)),
                       A.And(state, self.formula(f.right, p)))

    def next_val(self, u):
        return A.AtNext(self.term(u.arg), self.cs.state, u.default)

    def at_next(self, u):
        return A.AtNext(self.term(u.arg), A.And(self.cs.state, self.formula(u.cond, STRONG)), u.default)

    def at_last(self, u):
        return A.AtLast(self.term(u.arg), A.And(self.cs.state, self.formula(u.cond, STRONG)), u.default)

    def ite(self, u):
        d = _default_lit(u, self.vocab)
        inner = A.Ite(_not(self.formula(u.cond, WEAK)), self.term(u.other), d, u.default)
        return A.Ite(self.formula(u.cond, STRONG), self.term(u.then), inner, u.default)


class _Opt(_Base):
    def next(self, f, p):
        if not self.st(f.arg):
            return super().next(f, p)
        end = self.cs.end_f
        x = A.Next(self.formula(f.arg, p))
        return A.Or(end, x) if p is WEAK else A.And(_not(end), x)

    def until(self, f, p):
        if not (self.st(f.left) and self.st(f.right)):
            return super().until(f, p)
        y_end = A.Yesterday(self.cs.end_f)
        a, b = self.formula(f.left, p), self.formula(f.right, p)
        if p is WEAK:
            return A.Until(a, A.Or(y_end, b))
        return A.Until(a, A.And(_not(y_end), b))

    # A hit may land on a stutter position, so the frozen term must be
    # stutter tolerant too.  Positions after the local trace has ended are
    # excluded with !Y end; plain !end would also exclude the last local
    # position (see ``literal_end_guard``).
    literal_end_guard = False

    def _after_end(self):
        return self.cs.end_f if self.literal_end_guard else A.Yesterday(self.cs.end_f)

    def next_val(self, u):
        # next(u) is u @F true
        if not self.st(u.arg):
            return super().next_val(u)
        return A.AtNext(self.term(u.arg), _not(self._after_end()), u.default)

    def at_next(self, u):
        if not (self.st(u.cond) and self.st(u.arg)):
            return super().at_next(u)
        cond = A.And(self.formula(u.cond, STRONG), _not(self._after_end()))
        return A.AtNext(self.term(u.arg), cond, u.default)


class _OptLiteral(_Opt):
    literal_end_guard = True


class _Fair(_Rewriter):
    """Sign-free; the polarity argument is carried but ignored."""

    def pred(self, f, p):
        return _map_terms(f, self.term)

    def _guarded_binary(self, f, cls, p):
        a, b = self.formula(f.left, p), self.formula(f.right, p)
        if self.st(f.left) and self.st(f.right):
            return cls(a, b)
        run = self.cs.run_f
        return cls(A.Or(_not(run), a), A.And(run, b))

    def next(self, f, p):
        inner = self.formula(f.arg, p)
        if self.st(f.arg):
            return A.Next(inner)
        run = self.cs.run_f
        return A.Next(A.Release(run, A.Or(_not(run), inner)))

    def until(self, f, p):
        return self._guarded_binary(f, A.Until, p)

    def since(self, f, p):
        return self._guarded_binary(f, A.Since, p)

    def yesterday(self, f, p):
        run = self.cs.run_f
        return A.Yesterday(A.Since(_not(run), A.And(run, self.formula(f.arg, p))))

    def next_val(self, u):
        # values of output terms survive stuttering unchanged
        if self.st(u.arg):
            return A.NextVal(self.term(u.arg), u.default)
        return A.AtNext(self.term(u.arg), self.cs.run_f, u.default)

    def at_next(self, u):
        cond = self.formula(u.cond, STRONG)
        if not (self.st(u.cond) and self.st(u.arg)):
            cond = A.And(self.cs.run_f, cond)
        return A.AtNext(self.term(u.arg), cond, u.default)

    def at_last(self, u):
        return A.AtLast(self.term(u.arg), A.And(self.cs.run_f, self.formula(u.cond, STRONG)), u.default)

    def ite(self, u):
        return A.Ite(self.formula(u.cond, STRONG), self.term(u.then), self.term(u.other), u.default)


def _prepare(f, cs):
    _check_fresh(f, [cs.run, cs.end])
    return f


def rewrite_base(f: A.Formula, p: A.Polarity, cs: ComponentSymbols) -> A.Formula:
    return _Base(cs).formula(_prepare(f, cs), p)


def rewrite_base_top(f: A.Formula, cs: ComponentSymbols) -> A.Formula:
    state = cs.state
    return A.Release(state, A.Or(_not(state), rewrite_base(f, WEAK, cs)))


def rewrite_opt(f: A.Formula, p: A.Polarity, cs: ComponentSymbols,
                literal_end_guard: bool = False) -> A.Formula:
    cls = _OptLiteral if literal_end_guard else _Opt
    return cls(cs).formula(_prepare(f, cs), p)


def rewrite_opt_top(f: A.Formula, cs: ComponentSymbols) -> A.Formula:
    g = rewrite_opt(f, WEAK, cs)
    if is_syntactically_stutter_tolerant(f, cs.vocab):
        return g
    state = cs.state
    return A.Release(state, A.Or(_not(state), g))


def rewrite_fair(f: A.Formula, cs: ComponentSymbols) -> A.Formula:
    return _Fair(cs).formula(_prepare(f, cs), WEAK)


def rewrite_fair_top(f: A.Formula, cs: ComponentSymbols) -> A.Formula:
    g = rewrite_fair(f, cs)
    if is_syntactically_stutter_tolerant(f, cs.vocab):
        return g
    run = cs.run_f
    return A.Release(run, A.Or(_not(run), g))


_TOP = {
    RewriteMode.BASE: rewrite_base_top,
    RewriteMode.OPTIMIZED: rewrite_opt_top,
    RewriteMode.FAIRNESS: rewrite_fair_top,
}


def rewrite_top(f: A.Formula, cs: ComponentSymbols, mode) -> A.Formula:
    return _TOP[RewriteMode(mode)](f, cs)


# ====================================================================== assembly


def frame_condition(cs: ComponentSymbols) -> A.Formula:
    """Outputs keep their value while the component does not run."""
    eqs = [A.Cmp("=", A.Var(o), A.NextVal(A.Var(o))) for o in cs.vocab.outputs]
    if not eqs:
        return A.TRUE
    return A.Implies(_not(cs.run_f), A.conj(*eqs))


def build_psi_cond(components) -> A.Formula:
    """Conjunction of ``G(!run_i -> o = o')`` over components."""
    runs = [cs.run for cs in components]
    if len(set(runs)) != len(runs):
        raise RewriteError("run symbols must be distinct")
    parts = [A.Always(frame_condition(cs)) for cs in components if cs.vocab.outputs]
    return A.conj(*parts) if parts else A.TRUE


@dataclass(frozen=True)
class ModeWarning:
    mode: str
    message: str


@dataclass(frozen=True)
class GlobalProperty:
    formula: A.Formula
    assumptions: tuple = ()
    warnings: tuple = ()


def gamma_p(props, mode=RewriteMode.OPTIMIZED, infinite_local: bool = False) -> GlobalProperty:
    """Global property for a list of ``(formula, ComponentSymbols)`` pairs.

    In fairness mode the scheduling obligations ``G F run_i`` are returned
    separately; the caller conjoins them as assumptions.  Using fairness
    mode without asserting ``infinite_local`` produces a warning."""
    mode = RewriteMode(mode)
    comps = []
    for _, cs in props:
        if cs not in comps:
            comps.append(cs)
    syms = [s for cs in comps for s in (cs.run, cs.end)]
    if len(set(syms)) != len(syms):
        raise RewriteError("run/end symbols must be pairwise distinct")
    parts = [rewrite_top(f, cs, mode) for f, cs in props]
    frame_cond = build_psi_cond(comps)
    formula = A.conj(*parts, frame_cond) if parts else frame_cond
    assumptions = ()
    warnings = ()
    if mode is RewriteMode.FAIRNESS:
        assumptions = tuple(A.Always(A.Eventually(cs.run_f)) for cs in comps)
        if not infinite_local:
            warnings = (ModeWarning(mode.value, "fairness rewriting is only sound when every "
                                    "component runs infinitely often"),)
    return GlobalProperty(formula, assumptions, warnings)
