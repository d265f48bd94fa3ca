"""Bit-parallel evaluation of boolean-vocabulary formulas over many traces.

All positions of all traces in a batch are packed into one Python integer
(bit j is global position j).  Each formula node evaluates to a pair of
masks (weak, strong); on lasso positions both masks coincide.  A lasso is
unrolled into its stem followed by ``copies`` copies of the loop, and the
last copy wraps onto itself.  This is exact as long as ``copies`` exceeds
the number of nested past operators of the evaluated formula.
"""

from __future__ import annotations

from . import ast as A
from .sorts import sort_of
from .trace import Trace
from .transform import desugar, is_input_pred


class Unsupported(ValueError):
    pass


def _to_int(buf: bytearray) -> int:
    """Integer whose bit j is set iff ``buf[j]`` is the digit 1."""
    return int(bytes(reversed(buf)), 2) if buf else 0


def _marks(size: int, positions) -> bytearray:
    buf = bytearray(b"0" * size)
    for p in positions:
        buf[p] = 49
    return buf


def bits(mask: int, positions) -> list:
    """The bits of ``mask`` at ``positions``, read in one pass."""
    digits = bin(mask)[:1:-1]
    n = len(digits)
    return [p < n and digits[p] == "1" for p in positions]


class Batch:
    def __init__(self, traces, copies: int = 4, since_literal: bool = False):
        traces = list(traces)
        if not traces:
            raise ValueError("empty batch")
        self.vocab = traces[0].vocab
        for t in traces:
            if t.vocab != self.vocab:
                raise ValueError("all traces in a batch must share a vocabulary")
            for d in t.vocab:
                if d.sort.kind != "bool":
                    raise Unsupported("the batch engine handles boolean variables only")
        self.traces = traces
        self.copies = copies
        self.since_literal = since_literal
        self.offsets = []
        self.lengths = []
        unrolled = []
        wrap_pos = {}
        off = 0
        for t in traces:
            if t.is_finite:
                states = list(t.stem)
            else:
                states = list(t.stem) + list(t.loop) * copies
                p = len(t.loop)
                wrap_pos.setdefault(p, []).append(off + len(states) - p)
            self.offsets.append(off)
            self.lengths.append(len(states))
            unrolled.append(states)
            off += len(states)
        # masks are assembled as digit strings; setting bits one at a time
        # on a growing integer is quadratic
        bufs = {name: bytearray(b"0" * off) for name in self.vocab.names}
        firsts, lasts, lasts_fin = bytearray(b"0" * off), bytearray(b"0" * off), bytearray(b"0" * off)
        for t, base, states in zip(traces, self.offsets, unrolled):
            for j, s in enumerate(states):
                for name, v in s.items():
                    if v:
                        bufs[name][base + j] = 49
            firsts[base] = 49
            lasts[base + len(states) - 1] = 49
            if t.is_finite:
                lasts_fin[base + len(states) - 1] = 49
        var_masks = {name: _to_int(b) for name, b in bufs.items()}
        first, last, last_fin = _to_int(firsts), _to_int(lasts), _to_int(lasts_fin)
        wraps = {p: _to_int(_marks(off, ps)) for p, ps in wrap_pos.items()}
        self.size = off
        self.all = (1 << off) - 1
        self.first = first
        self.not_first = self.all & ~first
        self.not_last = self.all & ~last
        self.last_fin = last_fin
        self.not_last_fin = self.all & ~last_fin
        self.wraps = sorted(wraps.items())
        self.var_masks = var_masks
        self.memo = {}
        self._pd = {}

    # ------------------------------------------------------- shifts

    def succ(self, v: int) -> int:
        """Value at the successor position; 0 where there is none."""
        out = (v >> 1) & self.not_last
        for p, start in self.wraps:
            out |= (v & start) << (p - 1)
        return out

    def pred(self, v: int) -> int:
        return (v << 1) & self.not_first

    # ------------------------------------------------------- evaluation

    def check_depth(self, f) -> None:
        pd = self._pd.get(f)
        if pd is None:
            pd = A.past_depth(f)
            self._pd[f] = pd
        if pd >= self.copies and any(t.is_lasso for t in self.traces):
            raise Unsupported(f"formula has {pd} nested past operators; batch unrolls {self.copies}")

    def eval(self, f) -> tuple:
        r = self.memo.get(f)
        if r is None:
            r = self._eval(f)
            self.memo[f] = r
        return r

    def _eval(self, f):
        ALL = self.all
        if isinstance(f, A.Const):
            m = ALL if f.value else 0
            return m, m
        if isinstance(f, (A.Atom, A.Cmp)):
            v = self.pred_mask(f)
            if is_input_pred(f, self.vocab):
                return v | self.last_fin, v & self.not_last_fin
            return v, v
        if isinstance(f, A.Not):
            w, s = self.eval(f.arg)
            return ALL & ~s, ALL & ~w
        if isinstance(f, A.Or):
            (w1, s1), (w2, s2) = self.eval(f.left), self.eval(f.right)
            return w1 | w2, s1 | s2
        if isinstance(f, A.And):
            (w1, s1), (w2, s2) = self.eval(f.left), self.eval(f.right)
            return w1 & w2, s1 & s2
        if isinstance(f, A.Next):
            w, s = self.eval(f.arg)
            return self.succ(w) | self.last_fin, self.succ(s)
        if isinstance(f, A.Until):
            (w1, s1), (w2, s2) = self.eval(f.left), self.eval(f.right)
            return self._until(w1, w2, self.last_fin), self._until(s1, s2, 0)
        if isinstance(f, A.Release):
            return self.eval(A.Not(A.Until(A.Not(f.left), A.Not(f.right))))
        if isinstance(f, A.Yesterday):
            w, s = self.eval(f.arg)
            return self.pred(w), self.pred(s)
        if isinstance(f, A.WeakYesterday):
            return self.eval(A.Not(A.Yesterday(A.Not(f.arg))))
        if isinstance(f, A.Since):
            (w1, s1), (w2, s2) = self.eval(f.left), self.eval(f.right)
            strong_right = w2 if self.since_literal else s2
            return self._since(w1, w2), self._since(s1, strong_right)
        d = desugar(f)
        if d == f:
            raise Unsupported(f"cannot evaluate {f!r}")
        return self.eval(d)

    def _until(self, a, b, end_fill):
        r = b
        while True:
            nr = b | (a & (self.succ(r) | end_fill))
            if nr == r:
                return r
            r = nr

    def _since(self, a, b):
        r = b
        while True:
            nr = b | (a & self.pred(r))
            if nr == r:
                return r
            r = nr

    def pred_mask(self, f) -> int:
        if isinstance(f, A.Atom):
            return self.term(f.term)
        a, b = self.term(f.left), self.term(f.right)
        if f.op == "=":
            return self.all & ~(a ^ b)
        if f.op == "!=":
            return a ^ b
        raise Unsupported(f"comparison {f.op!r} on booleans")

    def term(self, u) -> int:
        r = self.memo.get(u)
        if r is None:
            r = self._term(u)
            self.memo[u] = r
        return r

    def _default_mask(self, u) -> int:
        d = u.default if u.default is not None else sort_of(u, self.vocab).default()
        return self.all if d else 0

    def _term(self, u):
        ALL = self.all
        if isinstance(u, A.Var):
            return self.var_masks[u.name]
        if isinstance(u, A.Lit):
            if not isinstance(u.value, bool):
                raise Unsupported("non-boolean literal")
            return ALL if u.value else 0
        if isinstance(u, A.NextVal):
            dm = self._default_mask(u)
            has_next = self.not_last_fin
            return (self.succ(self.term(u.arg)) & has_next) | (dm & ~has_next & ALL)
        if isinstance(u, A.AtNext):
            w, s = self.eval(u.cond)
            val = self.term(u.arg)
            dm = self._default_mask(u)
            hit = self.succ(s & val)
            on = self.succ(s)
            skip = self.succ(ALL & ~w)
            neither = ALL & ~on & ~skip
            v = dm
            while True:
                nv = hit | (skip & self.succ(v)) | (neither & dm)
                if nv == v:
                    return v
                v = nv
        if isinstance(u, A.AtLast):
            w, s = self.eval(u.cond)
            val = self.term(u.arg)
            dm = self._default_mask(u)
            hit = self.pred(s & val)
            on = self.pred(s)
            skip = self.pred(ALL & ~w)
            neither = ALL & ~on & ~skip
            v = dm
            while True:
                nv = hit | (skip & self.pred(v)) | (neither & dm)
                if nv == v:
                    return v
                v = nv
        if isinstance(u, A.Ite):
            w, s = self.eval(u.cond)
            a, b = self.term(u.then), self.term(u.other)
            dm = self._default_mask(u)
            return (s & a) | (ALL & ~w & b) | (w & ~s & dm)
        raise Unsupported(f"term {type(u).__name__} outside the boolean fragment")

    # ------------------------------------------------------- results

    def holds_mask(self, f) -> int:
        """Mask over first positions: weak satisfaction at position 0."""
        self.check_depth(f)
        return self.eval(f)[0] & self.first

    def verdicts(self, f) -> list:
        return bits(self.holds_mask(f), self.offsets)

    def at(self, f, trace_index: int, pos: int, polarity: A.Polarity = A.WEAK) -> bool:
        """Value at a position of one trace; lasso positions are folded into
        the unrolled window."""
        self.check_depth(f)
        t = self.traces[trace_index]
        n = self.lengths[trace_index]
        if t.is_finite:
            if pos >= n:
                return polarity is A.WEAK
        elif pos >= n:
            p = len(t.loop)
            pos = n - p + (pos - (n - p)) % p
        w, s = self.eval(f)
        m = w if polarity is A.WEAK else s
        return bool((m >> (self.offsets[trace_index] + pos)) & 1)

    def forget(self, keep=None) -> None:
        if keep is None:
            self.memo.clear()
        else:
            self.memo = {k: v for k, v in self.memo.items() if k in keep}


def batch_holds(traces, f, copies: int = None) -> list:
    f = desugar(f)
    if copies is None:
        copies = A.past_depth(f) + 1
    return Batch(traces, copies=copies).verdicts(f)
