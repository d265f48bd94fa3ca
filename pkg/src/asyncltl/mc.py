"""Explicit-state entailment checking for ITS models.

``find_lasso`` looks for a fair lasso of a system satisfying a formula
under the standard semantics.  The formula is split into a future
skeleton (and/or/X/U/R over atoms) and maximal future-free atoms; atoms
are evaluated by a deterministic past monitor, the skeleton by an
on-the-fly tableau.  Non-emptiness of the product is decided with an SCC
search (transition-based generalized Buchi acceptance), so the search is
exhaustive over the reachable state space.

Future terms (next, at-next, ite with future conditions) are removed
first by case-splitting over the values of the term.  At-last terms and
past operators must not contain future operators.

Finite traces are handled by extending each one with a frozen Tail
suffix and checking the Tail-rewritten formulas (see
:func:`asyncltl.rewriting.tr_rewrite`).
"""

from __future__ import annotations

import itertools
import operator
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from . import ast as A
from .its import ResourceError, StateSpace
from .sorts import sort_of
from .transform import UnsupportedConstruct, desugar

_CMP = {"=": operator.eq, "!=": operator.ne, "<": operator.lt, "<=": operator.le,
        ">": operator.gt, ">=": operator.ge}
_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul}

_FUTURE = (A.NextVal, A.AtNext, A.Next, A.Until, A.Release, A.Eventually, A.Always)


def _is_future(n) -> bool:
    if isinstance(n, _FUTURE):
        return True
    if isinstance(n, (A.Bounded, A.Repeated)):
        return n.op in ("F", "G", "X")
    return False


@lru_cache(maxsize=1 << 16)
def has_future(node) -> bool:
    return _is_future(node) or any(has_future(c) for c in A.children(node))


# ---------------------------------------------------------------- term lowering


class _Lowering:
    def __init__(self, vocab: A.Vocabulary):
        self.vocab = vocab
        self.memo = {}

    def values(self, u):
        return sort_of(u, self.vocab).values()

    def default(self, u):
        if u.default is not None:
            return u.default
        return sort_of(u, self.vocab).default()

    def eq(self, u, c) -> A.Formula:
        """Formula stating that term u has value c at the current position."""
        if not has_future(u):
            return A.Cmp("=", u, A.Lit(c))
        if isinstance(u, A.NextVal):
            return A.Next(self.eq(u.arg, c))
        if isinstance(u, A.AtNext):
            cond = self.formula(u.cond)
            hit = A.Next(A.Until(A.Not(cond), A.And(cond, self.eq(u.arg, c))))
            if self.default(u) == c:
                return A.Or(hit, A.Next(A.Always(A.Not(cond))))
            return hit
        if isinstance(u, A.AtLast):
            raise UnsupportedConstruct("at-last over a future operator is not supported", [u])
        if isinstance(u, A.Ite):
            cond = self.formula(u.cond)
            return A.Or(A.And(cond, self.eq(u.then, c)), A.And(A.Not(cond), self.eq(u.other, c)))
        if isinstance(u, A.Func):
            return self._split(u.args, lambda args: A.Cmp("=", A.Func(u.op, args), A.Lit(c)))
        raise UnsupportedConstruct(f"cannot lower {type(u).__name__}", [u])

    def _split(self, args, build) -> A.Formula:
        fut = [k for k, a in enumerate(args) if has_future(a)]
        parts = []
        for combo in itertools.product(*(self.values(args[k]) for k in fut)):
            new = list(args)
            guards = []
            for k, c in zip(fut, combo):
                new[k] = A.Lit(c)
                guards.append(self.eq(args[k], c))
            body = _fold(build(tuple(new)))
            if body == A.FALSE:
                continue
            parts.append(A.conj(*guards, body))
        return A.disj(*parts)

    def formula(self, f) -> A.Formula:
        r = self.memo.get(f)
        if r is None:
            r = self._formula(f)
            self.memo[f] = r
        return r

    def _formula(self, f):
        if not has_future(f):
            return f
        if isinstance(f, A.Atom):
            return self._split((f.term,), lambda a: A.Atom(a[0]))
        if isinstance(f, A.Cmp):
            return self._split((f.left, f.right), lambda a: A.Cmp(f.op, a[0], a[1]))
        kids = A.children(f)
        new = [self.formula(k) for k in kids]
        return _rebuild(f, new)


def _rebuild(f, kids):
    if isinstance(f, (A.Bounded, A.Repeated)):
        return type(f)(f.op, getattr(f, "bound", getattr(f, "count", 0)), kids[0])
    return type(f)(*kids)


def _fold(f):
    """Evaluate a predicate whose operands are all literals."""
    if isinstance(f, A.Cmp) and isinstance(f.left, A.Lit) and isinstance(f.right, A.Lit):
        return A.Const(_CMP[f.op](f.left.value, f.right.value))
    if isinstance(f, A.Atom) and isinstance(f.term, A.Lit):
        return A.Const(bool(f.term.value))
    if isinstance(f, A.Cmp) and all(isinstance(x, (A.Lit, A.Func)) for x in (f.left, f.right)):
        try:
            return A.Const(_CMP[f.op](_const_value(f.left), _const_value(f.right)))
        except _NotConst:
            return f
    return f


class _NotConst(Exception):
    pass


def _const_value(u):
    if isinstance(u, A.Lit):
        return u.value
    if isinstance(u, A.Func):
        args = [_const_value(a) for a in u.args]
        return -args[0] if u.op == "neg" else _ARITH[u.op](*args)
    raise _NotConst


# ---------------------------------------------------------------- past monitor


class PastMonitor:
    """Evaluates future-free formulas position by position.

    Only a few values of the previous position are ever consulted (the
    arguments of Y, Since nodes and at-last terms with their operands);
    these form the monitor memory.  ``step(state, memory)`` returns the
    atom values at the current position and the memory to pass on;
    ``memory`` is None at position 0."""

    def __init__(self, atoms, index: dict, vocab: A.Vocabulary):
        self.vocab = vocab
        self.index = index
        self.slot = {}
        self.nodes = []
        self.atom_slots = [self._add(desugar(a)) for a in atoms]
        remembered = set()
        for k, (n, kids) in enumerate(self.nodes):
            if isinstance(n, A.Yesterday):
                remembered.add(kids[0])
            elif isinstance(n, A.Since):
                remembered.add(k)
            elif isinstance(n, A.AtLast):
                remembered.update((kids[0], kids[1], k))
        self.memory_slots = tuple(sorted(remembered))
        self.mem_index = {k: j for j, k in enumerate(self.memory_slots)}
        self.ops = [self._compile(n, kids, k) for k, (n, kids) in enumerate(self.nodes)]
        self.cache = {}

    def _add(self, n) -> int:
        k = self.slot.get(n)
        if k is not None:
            return k
        kids = [self._add(c) for c in A.children(n)]
        k = len(self.nodes)
        self.nodes.append((n, kids))
        self.slot[n] = k
        return k

    def _compile(self, n, kids, k):
        m = self.mem_index
        if isinstance(n, A.Var):
            i = self.index[n.name]
            return lambda s, p, c: s[i]
        if isinstance(n, (A.Lit, A.Const)):
            v = n.value
            return lambda s, p, c: v
        if isinstance(n, A.Func):
            if n.op == "neg":
                a = kids[0]
                return lambda s, p, c: -c[a]
            op, a, b = _ARITH[n.op], kids[0], kids[1]
            return lambda s, p, c: op(c[a], c[b])
        if isinstance(n, A.Ite):
            q, a, b = kids
            return lambda s, p, c: c[a] if c[q] else c[b]
        if isinstance(n, A.AtLast):
            a, q, me = m[kids[0]], m[kids[1]], m[k]
            d = n.default if n.default is not None else sort_of(n, self.vocab).default()
            return lambda s, p, c: d if p is None else (p[a] if p[q] else p[me])
        if isinstance(n, A.Atom):
            a = kids[0]
            return lambda s, p, c: bool(c[a])
        if isinstance(n, A.Cmp):
            op, a, b = _CMP[n.op], kids[0], kids[1]
            return lambda s, p, c: op(c[a], c[b])
        if isinstance(n, A.Not):
            a = kids[0]
            return lambda s, p, c: not c[a]
        if isinstance(n, A.Or):
            a, b = kids
            return lambda s, p, c: c[a] or c[b]
        if isinstance(n, A.Yesterday):
            a = m[kids[0]]
            return lambda s, p, c: p is not None and p[a]
        if isinstance(n, A.Since):
            a, b, me = kids[0], kids[1], m[k]
            return lambda s, p, c: c[b] or (c[a] and p is not None and p[me])
        raise UnsupportedConstruct(f"{type(n).__name__} in a past atom", [n])

    def step(self, s, memory):
        key = (s, memory)
        r = self.cache.get(key)
        if r is None:
            cur = [None] * len(self.ops)
            for k, op in enumerate(self.ops):
                cur[k] = op(s, memory, cur)
            r = (tuple(cur[k] for k in self.atom_slots), tuple(cur[k] for k in self.memory_slots))
            self.cache[key] = r
        return r


# ---------------------------------------------------------------- skeleton + tableau

TRUE_ID, FALSE_ID = 0, 1


class Skeleton:
    """Hash-consed NNF future skeleton.  Nodes are tuples
    ('T',), ('F',), ('lit', atom, positive), ('and'|'or'|'U'|'R', a, b), ('X', a)."""

    def __init__(self):
        self.nodes = [("T",), ("F",)]
        self.ids = {("T",): 0, ("F",): 1}
        self.atoms = []
        self.atom_ids = {}

    def mk(self, node) -> int:
        k = self.ids.get(node)
        if k is None:
            k = len(self.nodes)
            self.nodes.append(node)
            self.ids[node] = k
        return k

    def atom(self, f) -> int:
        k = self.atom_ids.get(f)
        if k is None:
            k = len(self.atoms)
            self.atoms.append(f)
            self.atom_ids[f] = k
        return k

    def build(self, f, neg: bool = False) -> int:
        if not has_future(f):
            if isinstance(f, A.Const):
                return FALSE_ID if f.value == neg else TRUE_ID
            if isinstance(f, A.Not):
                return self.build(f.arg, not neg)
            return self.mk(("lit", self.atom(f), not neg))
        if isinstance(f, A.Not):
            return self.build(f.arg, not neg)
        if isinstance(f, (A.And, A.Or)):
            kind = "and" if isinstance(f, A.And) != neg else "or"
            return self._bin(kind, self.build(f.left, neg), self.build(f.right, neg))
        if isinstance(f, A.Implies):
            return self.build(A.Or(A.Not(f.left), f.right), neg)
        if isinstance(f, A.Iff):
            both = A.Or(A.And(f.left, f.right), A.And(A.Not(f.left), A.Not(f.right)))
            return self.build(both, neg)
        if isinstance(f, A.Next):
            return self.mk(("X", self.build(f.arg, neg)))
        if isinstance(f, (A.Until, A.Release)):
            kind = "U" if isinstance(f, A.Until) != neg else "R"
            return self.mk((kind, self.build(f.left, neg), self.build(f.right, neg)))
        if isinstance(f, A.Eventually):
            return self.build(A.Until(A.TRUE, f.arg), neg)
        if isinstance(f, A.Always):
            return self.build(A.Release(A.FALSE, f.arg), neg)
        if isinstance(f, (A.Bounded, A.Repeated)) and f.op in ("F", "G", "X"):
            from .transform import expand_once
            return self.build(expand_once(f), neg)
        raise UnsupportedConstruct(
            f"{type(f).__name__} over a future operator is not supported", [f])

    def _bin(self, kind, a, b):
        absorb, unit = (FALSE_ID, TRUE_ID) if kind == "and" else (TRUE_ID, FALSE_ID)
        if a == absorb or b == absorb:
            return absorb
        if a == unit:
            return b
        if b == unit or a == b:
            return a
        return self.mk((kind, min(a, b), max(a, b)))

    def until_ids(self) -> list:
        return [k for k, n in enumerate(self.nodes) if n[0] == "U"]


class Tableau:
    """Covers of obligation sets, computed bottom-up with subsumption."""

    def __init__(self, skel: Skeleton):
        self.skel = skel
        self.memo = {}
        self.node_memo = {}

    def expand(self, obligations: frozenset, atoms: tuple) -> tuple:
        """Alternatives (next obligations, pending untils) for a state that
        must satisfy ``obligations`` under the given atom values."""
        key = (obligations, atoms)
        r = self.memo.get(key)
        if r is None:
            r = ((frozenset(), frozenset()),)
            for f in sorted(obligations):
                r = _product(r, self._alts(f, atoms))
                if not r:
                    break
            self.memo[key] = r
        return r

    def _alts(self, f, atoms):
        table = self.node_memo.setdefault(atoms, {})
        r = table.get(f)
        if r is not None:
            return r
        n = self.skel.nodes[f]
        kind = n[0]
        if kind == "T":
            r = ((frozenset(), frozenset()),)
        elif kind == "F":
            r = ()
        elif kind == "lit":
            r = ((frozenset(), frozenset()),) if atoms[n[1]] == n[2] else ()
        elif kind == "X":
            r = ((frozenset([n[1]]), frozenset()),)
        elif kind == "and":
            r = _product(self._alts(n[1], atoms), self._alts(n[2], atoms))
        elif kind == "or":
            r = _prune(self._alts(n[1], atoms) + self._alts(n[2], atoms))
        elif kind == "U":
            me = frozenset([f])
            later = tuple((nx | me, pd | me) for nx, pd in self._alts(n[1], atoms))
            r = _prune(self._alts(n[2], atoms) + later)
        else:  # R
            me = frozenset([f])
            right = self._alts(n[2], atoms)
            now = _product(right, self._alts(n[1], atoms))
            r = _prune(now + tuple((nx | me, pd) for nx, pd in right))
        table[f] = r
        return r


def _product(xs, ys) -> tuple:
    if not xs or not ys:
        return ()
    return _prune(tuple((a | c, b | d) for a, b in xs for c, d in ys))


def _prune(alts) -> tuple:
    """Drop duplicates and alternatives subsumed by a weaker one."""
    alts = sorted(set(alts), key=lambda r: (len(r[0]) + len(r[1]), sorted(r[0]), sorted(r[1])))
    kept = []
    for nx, pd in alts:
        if any(kn <= nx and kp <= pd for kn, kp in kept):
            continue
        kept.append((nx, pd))
    return tuple(kept)


# ---------------------------------------------------------------- product search


@dataclass(frozen=True)
class Lasso:
    stem: tuple
    loop: tuple


class SystemView:
    """What the product search needs from a system.  Nodes carry output
    values only; inputs are chosen on the outgoing edge, so a full state is
    ``inputs + outputs``."""

    def __init__(self, space: StateSpace):
        self.space = space
        self.index = space.index

    def initial_outputs(self):
        return self.space.initial_outputs()

    def input_choices(self, outputs):
        return self.space.input_values

    def next_outputs(self, full):
        return self.space.next_outputs(full)


class TailView(SystemView):
    """The system extended with a frozen suffix marked by a boolean Tail
    output: from any state the run may move to a Tail state whose outputs
    are a valid successor, whose inputs are the defaults, and which repeats
    forever."""

    def __init__(self, space: StateSpace, tail: str):
        super().__init__(space)
        self.tail = tail
        self.index = dict(space.index)
        self.index[tail] = len(space.names)
        self.default_inputs = (tuple(space.vocab[n].sort.default() for n in space.inputs),)

    def initial_outputs(self):
        outs = self.space.initial_outputs()
        return [o + (False,) for o in outs] + [o + (True,) for o in outs]

    def input_choices(self, outputs):
        return self.default_inputs if outputs[-1] else self.space.input_values

    def next_outputs(self, full):
        if full[-1]:
            return [full[self.space.n_in:]]
        outs = self.space.next_outputs(full[:-1])
        return [o + (False,) for o in outs] + [o + (True,) for o in outs]


def find_lasso(view: SystemView, formula: A.Formula, vocab: A.Vocabulary, cap: int) -> Optional[Lasso]:
    """A lasso through the system (as full state tuples) on which
    ``formula`` holds under the standard semantics, or None."""
    formula = _Lowering(vocab).formula(formula)
    skel = Skeleton()
    root = skel.build(formula)
    if root == FALSE_ID:
        return None
    monitor = PastMonitor(skel.atoms, view.index, vocab)
    tab = Tableau(skel)

    ids = {}
    info = []       # node id -> (outputs, monitor memory before the node, obligations)
    edges = []      # node id -> list of (target, pending, inputs)
    parent = []     # node id -> (predecessor, inputs) in the BFS tree
    queue = deque()

    def node(o, mem, obl, par):
        key = (o, mem, obl)
        k = ids.get(key)
        if k is None:
            k = len(info)
            if k >= cap:
                raise ResourceError(f"product search exceeded the state cap {cap}")
            ids[key] = k
            info.append(key)
            edges.append(None)
            parent.append(par)
            queue.append(k)
        return k

    root_set = frozenset([root]) if root != TRUE_ID else frozenset()
    for o in view.initial_outputs():
        node(o, None, root_set, None)
    while queue:
        k = queue.popleft()
        o, mem, obl = info[k]
        out = []
        for i in view.input_choices(o):
            full = i + o
            atoms, mem2 = monitor.step(full, mem)
            alts = tab.expand(obl, atoms)
            if not alts:
                continue
            for o2 in view.next_outputs(full):
                for nx, pd in alts:
                    out.append((node(o2, mem2, nx, (k, i)), pd, i))
        edges[k] = out
    return _accepting_lasso(info, edges, parent)


def _accepting_lasso(info, edges, parent) -> Optional[Lasso]:
    for comp in _sccs(edges):
        members = set(comp)
        pending = None
        inner = False
        for u in comp:
            for v, pd, _ in edges[u]:
                if v in members:
                    inner = True
                    pending = pd if pending is None else pending & pd
        if not inner or pending:
            continue
        return _extract(info, edges, parent, members)
    return None


def _sccs(edges):
    """Iterative Tarjan; yields SCCs as lists of node ids."""
    n = len(edges)
    index = [-1] * n
    low = [0] * n
    on = [False] * n
    stack = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on[root] = True
        while work:
            v, i = work[-1]
            succ = edges[v]
            if i < len(succ):
                work[-1] = (v, i + 1)
                w = succ[i][0]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on[w] = True
                    work.append((w, 0))
                elif on[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on[w] = False
                    comp.append(w)
                    if w == v:
                        break
                yield comp


def _path_within(edges, members, src, accept) -> list:
    """Shortest edge path inside ``members`` from src whose last edge
    satisfies ``accept``; returns a list of (source, target, inputs)."""
    prev = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v, pd, inp in edges[u]:
            if v not in members:
                continue
            if accept(v, pd):
                path = [(u, v, inp)]
                while prev[u] is not None:
                    path.append(prev[u])
                    u = prev[u][0]
                return path[::-1]
            if v not in prev:
                prev[v] = (u, v, inp)
                queue.append(v)
    raise AssertionError("no path inside an SCC")


def _extract(info, edges, parent, members) -> Lasso:
    entry = min(members)
    stem = []
    k = entry
    while parent[k] is not None:
        pk, inp = parent[k]
        stem.append(inp + info[pk][0])
        k = pk
    stem.reverse()
    needed = set()
    for u in members:
        for v, pd, _ in edges[u]:
            if v in members:
                needed |= pd
    # visit one accepting edge per until obligation, then close the loop
    loop_edges = []
    cur = entry
    for u in sorted(needed):
        path = _path_within(edges, members, cur, lambda v, pd, u=u: u not in pd)
        loop_edges += path
        cur = path[-1][1]
    loop_edges += _path_within(edges, members, cur, lambda v, pd: v == entry)
    loop = [inp + info[a][0] for a, _, inp in loop_edges]
    return Lasso(tuple(stem), tuple(loop))


def fairness_formula(space: StateSpace) -> A.Formula:
    parts = [A.Or(A.Eventually(A.Always(A.Not(a))), A.Always(A.Eventually(g)))
             for a, g in space.its.fairness]
    return A.conj(*parts)
