"""Reference evaluator.

Finite traces are interpreted under the truncated weak/strong semantics,
lassos under the standard semantics.  Each clause is written out
directly, with memoisation on (node, position, polarity).  The batch
engine in :mod:`asyncltl.fasteval` is tested against this module.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import Optional

from . import ast as A
from .sorts import sort_of
from .trace import Trace
from .transform import is_input_pred

SINCE_CONSISTENT = "consistent"
# strong Since reads its right operand weakly, as printed in the source
# definition; only used for differential testing
SINCE_LITERAL = "literal"

_CMP = {
    "=": operator.eq, "!=": operator.ne, "<": operator.lt,
    "<=": operator.le, ">": operator.gt, ">=": operator.ge,
}
_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul}


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class EvalContext:
    trace: Trace
    polarity: A.Polarity = A.WEAK
    position: int = 0
    defaults: dict = field(default_factory=dict)
    since_mode: str = SINCE_CONSISTENT


class _Base:
    def __init__(self, trace: Trace, defaults=None):
        self.trace = trace
        self.vocab = trace.vocab
        self.defaults = defaults or {}
        self.memo = {}
        self.base = {}

    def freeze(self) -> None:
        """Move the memo into a read-only base that survives ``memo.clear()``."""
        self.base = {**self.base, **self.memo}
        self.memo = {}

    def default(self, term):
        if term in self.defaults:
            return self.defaults[term]
        if term.default is not None:
            return term.default
        return sort_of(term, self.vocab).default()

    def value_of(self, name: str, i: int):
        s = self.trace.state(i)
        if name in s:
            return s[name]
        d = self.vocab.get(name)
        if d is None:
            raise EvalError(f"unresolved variable {name!r}")
        # inputs are not recorded in the last assignment of a finite trace
        return d.sort.default()

    def apply(self, n, i):
        if isinstance(n, A.Var):
            return self.value_of(n.name, i)
        if isinstance(n, A.Lit):
            return n.value
        if isinstance(n, A.Func):
            args = [self.term(a, i) for a in n.args]
            if n.op == "neg":
                return -args[0]
            return _ARITH[n.op](*args)
        raise TypeError(f"not a term: {n!r}")

    def pred_value(self, n, i) -> bool:
        if isinstance(n, A.Const):
            return n.value
        if isinstance(n, A.Atom):
            return bool(self.term(n.term, i))
        return _CMP[n.op](self.term(n.left, i), self.term(n.right, i))


class FiniteEvaluator(_Base):
    """Truncated semantics on a finite trace."""

    def __init__(self, trace: Trace, defaults=None, since_mode: str = SINCE_CONSISTENT):
        if not trace.is_finite:
            raise EvalError("truncated evaluation needs a finite trace")
        super().__init__(trace, defaults)
        self.n = len(trace)
        self.since_mode = since_mode

    def sat(self, f, i: int, pol: A.Polarity) -> bool:
        key = (f, i, pol)
        r = self.memo.get(key)
        if r is None:
            r = self.base.get(key)
        if r is None:
            r = self._sat(f, i, pol)
            self.memo[key] = r
        return r

    def _sat(self, f, i, pol):
        n = self.n
        weak = pol is A.WEAK
        if isinstance(f, (A.Const, A.Atom, A.Cmp)):
            bound = n - 1 if is_input_pred(f, self.vocab) else n
            if weak:
                return i >= bound or self.pred_value(f, i)
            return i < bound and self.pred_value(f, i)
        if isinstance(f, A.Not):
            return not self.sat(f.arg, i, pol.flip)
        if isinstance(f, A.Or):
            return self.sat(f.left, i, pol) or self.sat(f.right, i, pol)
        if isinstance(f, A.And):
            return self.sat(f.left, i, pol) and self.sat(f.right, i, pol)
        if isinstance(f, A.Next):
            return self.sat(f.arg, i + 1, pol)
        if isinstance(f, A.Until):
            for k in range(i, max(i, n) + 1):
                if self.sat(f.right, k, pol):
                    return True
                if not self.sat(f.left, k, pol):
                    return False
            return False
        if isinstance(f, A.Release):
            return not self.sat(A.Until(A.Not(f.left), A.Not(f.right)), i, pol.flip)
        if isinstance(f, A.Yesterday):
            if weak:
                return i >= n or (i > 0 and self.sat(f.arg, i - 1, A.WEAK))
            return 0 < i < n and self.sat(f.arg, i - 1, A.STRONG)
        if isinstance(f, A.WeakYesterday):
            return not self.sat(A.Yesterday(A.Not(f.arg)), i, pol.flip)
        if isinstance(f, A.Since):
            if weak and i >= n:
                return True
            if not weak and i >= n:
                return False
            right_pol = pol
            if not weak and self.since_mode == SINCE_LITERAL:
                right_pol = A.WEAK
            for k in range(i, -1, -1):
                if self.sat(f.right, k, right_pol):
                    return True
                if not self.sat(f.left, k, pol):
                    return False
            return False
        return self.sat(_derived(f), i, pol)

    def term(self, u, i: int):
        key = (u, i)
        r = self.memo.get(key)
        if r is None:
            r = self.base.get(key)
        if r is None:
            r = self._term(u, i)
            self.memo[key] = r
        return r

    def _term(self, u, i):
        n = self.n
        if isinstance(u, A.NextVal):
            return self.term(u.arg, i + 1) if n > i + 1 else self.default(u)
        if isinstance(u, A.AtNext):
            k = i + 1
            while k < n:
                if self.sat(u.cond, k, A.STRONG):
                    return self.term(u.arg, k)
                if self.sat(u.cond, k, A.WEAK):  # neither the condition nor its negation strongly
                    return self.default(u)
                k += 1
            return self.default(u)
        if isinstance(u, A.AtLast):
            if i >= n:
                return self.default(u)
            for k in range(i - 1, -1, -1):
                if self.sat(u.cond, k, A.STRONG):
                    return self.term(u.arg, k)
                if self.sat(u.cond, k, A.WEAK):
                    return self.default(u)
            return self.default(u)
        if isinstance(u, A.Ite):
            if self.sat(u.cond, i, A.STRONG):
                return self.term(u.then, i)
            if not self.sat(u.cond, i, A.WEAK):
                return self.term(u.other, i)
            return self.default(u)
        return self.apply(u, i)


class LassoEvaluator(_Base):
    """Standard semantics on ``stem . loop^omega``.

    Positions are real positions of the infinite word.  A subformula with
    k nested past operators has a value sequence that is periodic from
    ``len(stem) + k * len(loop)`` on, so future searches stop one loop
    length after that point."""

    def __init__(self, trace: Trace, defaults=None):
        if not trace.is_lasso:
            raise EvalError("standard evaluation needs a lasso")
        super().__init__(trace, defaults)
        self.s = len(trace.stem)
        self.p = len(trace.loop)

    def horizon(self, node, i: int) -> int:
        return max(i, self.s + self._depth(node) * self.p) + self.p

    def sat(self, f, i: int) -> bool:
        key = (f, i)
        r = self.memo.get(key)
        if r is None:
            r = self.base.get(key)
        if r is None:
            # past depth d makes the value periodic from s + d*p on
            j = i - self.s - self.p
            if j >= 0:
                j -= self._depth(f) * self.p
            if j >= 0:
                r = self.sat(f, i - (j // self.p + 1) * self.p)
            else:
                r = self._sat(f, i)
            self.memo[key] = r
        return r

    @staticmethod
    def _depth(node) -> int:
        return A.past_depth(node)

    def _sat(self, f, i):
        if isinstance(f, (A.Const, A.Atom, A.Cmp)):
            return self.pred_value(f, i)
        if isinstance(f, A.Not):
            return not self.sat(f.arg, i)
        if isinstance(f, A.Or):
            return self.sat(f.left, i) or self.sat(f.right, i)
        if isinstance(f, A.And):
            return self.sat(f.left, i) and self.sat(f.right, i)
        if isinstance(f, A.Next):
            return self.sat(f.arg, i + 1)
        if isinstance(f, (A.Until, A.Release)):
            until = isinstance(f, A.Until)
            for k in range(i, self.horizon(f, i) + 1):
                right = self.sat(f.right, k)
                left = self.sat(f.left, k)
                if until:
                    if right:
                        return True
                    if not left:
                        return False
                else:
                    if not right:
                        return False
                    if left:
                        return True
            return not until
        if isinstance(f, A.Yesterday):
            return i > 0 and self.sat(f.arg, i - 1)
        if isinstance(f, A.WeakYesterday):
            return i == 0 or self.sat(f.arg, i - 1)
        if isinstance(f, A.Since):
            for k in range(i, -1, -1):
                if self.sat(f.right, k):
                    return True
                if not self.sat(f.left, k):
                    return False
            return False
        return self.sat(_derived(f), i)

    def term(self, u, i: int):
        key = (u, i)
        r = self.memo.get(key)
        if r is None:
            r = self.base.get(key)
        if r is None:
            r = self._term(u, i)
            self.memo[key] = r
        return r

    def _term(self, u, i):
        if isinstance(u, A.NextVal):
            return self.term(u.arg, i + 1)
        if isinstance(u, A.AtNext):
            for k in range(i + 1, self.horizon(u, i + 1) + 1):
                if self.sat(u.cond, k):
                    return self.term(u.arg, k)
            return self.default(u)
        if isinstance(u, A.AtLast):
            for k in range(i - 1, -1, -1):
                if self.sat(u.cond, k):
                    return self.term(u.arg, k)
            return self.default(u)
        if isinstance(u, A.Ite):
            return self.term(u.then, i) if self.sat(u.cond, i) else self.term(u.other, i)
        return self.apply(u, i)


def _derived(f):
    from .transform import desugar
    d = desugar(f)
    if d == f:
        raise TypeError(f"cannot evaluate {f!r}")
    return d


# ------------------------------------------------------------- public API


def eval_truncated(f: A.Formula, ctx: EvalContext) -> bool:
    ev = FiniteEvaluator(ctx.trace, ctx.defaults, ctx.since_mode)
    return ev.sat(f, ctx.position, ctx.polarity)


def eval_term(u: A.Term, ctx: EvalContext):
    if ctx.trace.is_lasso:
        return LassoEvaluator(ctx.trace, ctx.defaults).term(u, ctx.position)
    return FiniteEvaluator(ctx.trace, ctx.defaults, ctx.since_mode).term(u, ctx.position)


def eval_ltl_lasso(f: A.Formula, t: Trace, i: int = 0, defaults=None) -> bool:
    return LassoEvaluator(t, defaults).sat(f, i)


def holds(t: Trace, f: A.Formula, defaults=None) -> bool:
    """Weak satisfaction at 0 for finite traces, standard for lassos."""
    if t.is_lasso:
        return LassoEvaluator(t, defaults).sat(f, 0)
    return FiniteEvaluator(t, defaults).sat(f, 0, A.WEAK)


def evaluator(t: Trace, defaults=None, since_mode: str = SINCE_CONSISTENT):
    if t.is_lasso:
        return LassoEvaluator(t, defaults)
    return FiniteEvaluator(t, defaults, since_mode)
