"""Interface transition systems over finite domains.

An ITS has disjoint input and output variables, an initial condition over
the outputs, a transition condition over the current variables and the
primed outputs, and strong fairness pairs.  ``compose`` builds the
asynchronous (interleaving) product; ``StateSpace`` gives explicit
successor functions used by trace enumeration, membership and the
entailment check in :mod:`asyncltl.mc`.
"""

from __future__ import annotations

import itertools
import operator
import os
from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import ast as A
from .rewriting import ComponentSymbols
from .sorts import _map
from .trace import Assignment, Trace

DEFAULT_STATE_CAP = 10 ** 6
STATE_CAP_ENV = "ASYNCLTL_STATE_CAP"


class ITSError(ValueError):
    pass


class ResourceError(RuntimeError):
    """An explicit-state computation exceeded the configured state cap."""


def state_cap(override: Optional[int] = None) -> int:
    if override is not None:
        return override
    raw = os.environ.get(STATE_CAP_ENV)
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise ITSError(f"{STATE_CAP_ENV} must be an integer, got {raw!r}")
    return DEFAULT_STATE_CAP


# ---------------------------------------------------------------- structure


@dataclass(frozen=True)
class ITS:
    name: str
    inputs: tuple = ()
    outputs: tuple = ()
    init: A.Formula = A.TRUE
    trans: A.Formula = A.TRUE
    fairness: tuple = ()

    @property
    def vocab(self) -> A.Vocabulary:
        return A.Vocabulary(tuple(self.inputs) + tuple(self.outputs))

    @property
    def input_names(self) -> tuple:
        return tuple(d.name for d in self.inputs)

    @property
    def output_names(self) -> tuple:
        return tuple(d.name for d in self.outputs)

    def rename(self, mapping: dict) -> "ITS":
        """Rename variables; used to wire an input to another component's
        output."""
        def decl(d):
            return A.VarDecl(mapping.get(d.name, d.name), d.sort, d.io)
        return ITS(
            self.name,
            tuple(decl(d) for d in self.inputs),
            tuple(decl(d) for d in self.outputs),
            rename_vars(self.init, mapping),
            rename_vars(self.trans, mapping),
            tuple((rename_vars(a, mapping), rename_vars(g, mapping)) for a, g in self.fairness),
        )


def rename_vars(node, mapping: dict):
    if not mapping:
        return node

    def go(n):
        if isinstance(n, A.Var):
            return A.Var(mapping.get(n.name, n.name))
        return _map(n, go)

    return go(node)


@dataclass(frozen=True)
class Issue:
    code: str
    symbol: str
    message: str


_TEMPORAL = (A.Next, A.Until, A.Release, A.Yesterday, A.WeakYesterday, A.Since, A.Eventually,
             A.Always, A.Once, A.Historically, A.Bounded, A.Repeated, A.AtNext, A.AtLast)


def validate(its: ITS) -> list:
    issues = []
    ins, outs = set(its.input_names), set(its.output_names)
    names = list(its.input_names) + list(its.output_names)
    for n in sorted({n for n in names if names.count(n) > 1} - (ins & outs)):
        issues.append(Issue("duplicate", n, f"variable {n!r} declared twice"))
    for n in sorted(ins & outs):
        issues.append(Issue("io-overlap", n, f"{n!r} is both an input and an output"))
    known = ins | outs

    def scan(f, where, allow_next):
        for node in A.walk(f):
            if isinstance(node, A.Var) and node.name not in known:
                issues.append(Issue("unknown-symbol", node.name, f"{where} mentions unknown {node.name!r}"))
            elif isinstance(node, _TEMPORAL):
                issues.append(Issue(f"{where}-temporal", type(node).__name__,
                                    f"{where} must not contain temporal operators"))
            elif isinstance(node, A.NextVal):
                arg = node.arg
                if not allow_next:
                    issues.append(Issue(f"{where}-primed", _sym(arg), f"{where} must not mention primed variables"))
                elif not isinstance(arg, A.Var):
                    issues.append(Issue("trans-primed-term", _sym(arg), "only variables may be primed"))
                elif arg.name in ins:
                    issues.append(Issue("trans-primed-input", arg.name, f"primed input {arg.name!r} in trans"))

    scan(its.init, "init", False)
    for v in sorted(A.variables(its.init) & ins):
        issues.append(Issue("init-over-inputs", v, f"init mentions input {v!r}"))
    scan(its.trans, "trans", True)
    for a, g in its.fairness:
        scan(a, "fairness", False)
        scan(g, "fairness", False)
    return issues


def _sym(n) -> str:
    return n.name if isinstance(n, A.Var) else type(n).__name__


def compatible(systems) -> bool:
    return not incompatibilities(systems)


def incompatibilities(systems) -> list:
    """Reasons why the systems cannot be composed: a variable that is an
    output of two of them, or a shared variable with different sorts.
    Several components may read the same variable (fan-out)."""
    out = []
    for m1, m2 in itertools.combinations(systems, 2):
        v1, v2 = m1.vocab, m2.vocab
        for n in sorted(set(v1.names) & set(v2.names)):
            d1, d2 = v1[n], v2[n]
            if d1.io == A.OUTPUT and d2.io == A.OUTPUT:
                out.append(f"{m1.name} and {m2.name} both have {n!r} as output")
            elif d1.sort != d2.sort:
                out.append(f"{m1.name} and {m2.name} disagree on the sort of {n!r}")
    return out


# ---------------------------------------------------------------- composition


@dataclass(frozen=True)
class ComposedITS:
    its: ITS
    components: tuple
    symbols: tuple
    shared: tuple

    def symbols_for(self, name: str) -> ComponentSymbols:
        for cs in self.symbols:
            if cs.name == name:
                return cs
        raise KeyError(name)

    def component(self, name: str) -> ITS:
        for m in self.components:
            if m.name == name:
                return m
        raise KeyError(name)


def frame(cs: ComponentSymbols) -> A.Formula:
    eqs = [A.Cmp("=", A.Var(o), A.NextVal(A.Var(o))) for o in cs.vocab.outputs]
    return A.Implies(A.Not(cs.run_f), A.conj(*eqs)) if eqs else A.TRUE


def compose(systems, name: str = "system") -> ComposedITS:
    systems = list(systems)
    if not systems:
        raise ITSError("nothing to compose")
    names = [m.name for m in systems]
    if len(set(names)) != len(names) or not all(names):
        raise ITSError("components need distinct non-empty names")
    bad = incompatibilities(systems)
    if bad:
        raise ITSError("incompatible components: " + "; ".join(bad))
    all_names = set()
    for m in systems:
        all_names |= set(m.vocab.names)
    symbols = []
    for m in systems:
        cs = ComponentSymbols.named(m.vocab, m.name)
        for s in (cs.run, cs.end):
            if s in all_names:
                raise ITSError(f"generated symbol {s!r} collides with a variable")
        symbols.append(cs)
    shared = set()
    for m1, m2 in itertools.combinations(systems, 2):
        shared |= set(m1.vocab.names) & set(m2.vocab.names)
    decls = {}
    for m in systems:
        for d in m.vocab:
            decls.setdefault(d.name, d)
    driven = {n for m in systems for n in m.output_names}
    inputs = [A.VarDecl(n, decls[n].sort, A.INPUT) for m in systems for n in m.input_names
              if n not in driven]
    inputs += [A.VarDecl(cs.run, A.BOOL, A.INPUT) for cs in symbols]
    outputs = [A.VarDecl(n, decls[n].sort, A.OUTPUT) for m in systems for n in m.output_names]
    outputs += [A.VarDecl(cs.end, A.BOOL, A.OUTPUT) for cs in symbols]
    inputs = list(dict((d.name, d) for d in inputs).values())
    trans_parts, fair = [], []
    for m, cs in zip(systems, symbols):
        end_next = A.NextVal(A.Var(cs.end))
        prophecy = A.Iff(cs.end_f, A.And(A.Atom(end_next), A.Not(cs.run_f)))
        trans_parts.append(A.conj(A.Implies(cs.run_f, m.trans), frame(cs), prophecy))
        fair.append((A.TRUE, A.Or(cs.run_f, cs.end_f)))
        fair += [(A.And(cs.run_f, a), A.And(cs.run_f, g)) for a, g in m.fairness]
    its = ITS(name, tuple(inputs), tuple(outputs),
              A.conj(*(m.init for m in systems)), A.conj(*trans_parts), tuple(fair))
    return ComposedITS(its, tuple(systems), tuple(symbols), tuple(sorted(shared)))


# ---------------------------------------------------------------- compiled state formulas

_CMP = {"=": operator.eq, "!=": operator.ne, "<": operator.lt, "<=": operator.le,
        ">": operator.gt, ">=": operator.ge}
_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul}


def compile_state(node, index: dict, next_index: Optional[dict] = None, vocab=None):
    """Compile a temporal-free formula or term into ``fn(cur, nxt)`` where
    ``cur`` and ``nxt`` are tuples indexed through ``index`` and
    ``next_index``.  Primed variables are only allowed when ``next_index``
    is given."""

    def term(u):
        if isinstance(u, A.Var):
            i = index[u.name]
            return lambda c, n: c[i]
        if isinstance(u, A.Lit):
            v = u.value
            return lambda c, n: v
        if isinstance(u, A.NextVal) and isinstance(u.arg, A.Var) and next_index is not None:
            j = next_index[u.arg.name]
            return lambda c, n: n[j]
        if isinstance(u, A.Func):
            args = [term(a) for a in u.args]
            if u.op == "neg":
                a0 = args[0]
                return lambda c, n: -a0(c, n)
            op = _ARITH[u.op]
            a0, a1 = args
            return lambda c, n: op(a0(c, n), a1(c, n))
        if isinstance(u, A.Ite):
            cond, a, b = form(u.cond), term(u.then), term(u.other)
            return lambda c, n: a(c, n) if cond(c, n) else b(c, n)
        raise ITSError(f"{type(u).__name__} is not allowed in a state formula")

    def form(f):
        if isinstance(f, A.Const):
            v = f.value
            return lambda c, n: v
        if isinstance(f, A.Atom):
            t = term(f.term)
            return lambda c, n: bool(t(c, n))
        if isinstance(f, A.Cmp):
            op, l, r = _CMP[f.op], term(f.left), term(f.right)
            return lambda c, n: op(l(c, n), r(c, n))
        if isinstance(f, A.Not):
            a = form(f.arg)
            return lambda c, n: not a(c, n)
        if isinstance(f, (A.Or, A.And, A.Implies, A.Iff)):
            a, b = form(f.left), form(f.right)
            if isinstance(f, A.Or):
                return lambda c, n: a(c, n) or b(c, n)
            if isinstance(f, A.And):
                return lambda c, n: a(c, n) and b(c, n)
            if isinstance(f, A.Implies):
                return lambda c, n: (not a(c, n)) or b(c, n)
            return lambda c, n: a(c, n) == b(c, n)
        raise ITSError(f"{type(f).__name__} is not allowed in a state formula")

    return form(node) if isinstance(node, A.Formula) else term(node)


# ---------------------------------------------------------------- explicit state space


class StateSpace:
    """Explicit states of an ITS.

    A full state is a tuple of values in ``its.vocab`` order (inputs first,
    then outputs); an output state is the tuple of output values."""

    def __init__(self, its: ITS, cap: Optional[int] = None):
        issues = validate(its)
        if issues:
            raise ITSError("; ".join(i.message for i in issues))
        self.its = its
        self.vocab = its.vocab
        self.cap = state_cap(cap)
        self.inputs = its.input_names
        self.outputs = its.output_names
        self.names = self.inputs + self.outputs
        self.index = {n: k for k, n in enumerate(self.names)}
        self.out_index = {n: k for k, n in enumerate(self.outputs)}
        self.n_in = len(self.inputs)
        self._in_domains = [self.vocab[n].sort.values() for n in self.inputs]
        self._out_domains = [self.vocab[n].sort.values() for n in self.outputs]
        self.input_values = self._product(self._in_domains)
        self._init = compile_state(its.init, self.out_index)
        self._trans = compile_state(its.trans, self.index, self.out_index)
        self.fairness = [(compile_state(a, self.index), compile_state(g, self.index))
                         for a, g in its.fairness]
        self._succ = {}

    def _product(self, domains) -> list:
        size = 1
        for d in domains:
            size *= len(d)
        if size > self.cap:
            raise ResourceError(f"{size} valuations exceed the state cap {self.cap}")
        return list(itertools.product(*domains))

    @property
    def all_outputs(self) -> list:
        r = getattr(self, "_all_outputs", None)
        if r is None:
            r = self._all_outputs = self._product(self._out_domains)
        return r

    def initial_outputs(self) -> list:
        return [o for o in self.all_outputs if self._init(o, None)]

    def initial_states(self) -> list:
        return [i + o for o in self.initial_outputs() for i in self.input_values]

    def next_outputs(self, s: tuple) -> list:
        r = self._succ.get(s)
        if r is None:
            r = self._compute_next_outputs(s)
            self._succ[s] = r
            if len(self._succ) > self.cap:
                raise ResourceError(f"more than {self.cap} states explored")
        return r

    def _compute_next_outputs(self, s):
        return [o for o in self.all_outputs if self._trans(s, o)]

    def successors(self, s: tuple) -> list:
        return [i + o for o in self.next_outputs(s) for i in self.input_values]

    def outputs_of(self, s: tuple) -> tuple:
        return s[self.n_in:]

    def is_fair_loop(self, loop) -> bool:
        for a, g in self.fairness:
            if any(a(s, None) for s in loop) and not any(g(s, None) for s in loop):
                return False
        return True

    # conversions
    def assignment(self, s: tuple) -> Assignment:
        return Assignment(zip(self.names, s))

    def output_assignment(self, o: tuple) -> Assignment:
        return Assignment(zip(self.outputs, o))

    def to_tuple(self, a) -> tuple:
        return tuple(a[n] for n in self.names)

    def to_trace(self, stem, loop=None, final_outputs=None) -> Trace:
        states = [self.assignment(s) for s in stem]
        if loop is not None:
            return Trace(self.vocab, tuple(states), tuple(self.assignment(s) for s in loop))
        states.append(self.output_assignment(final_outputs))
        return Trace(self.vocab, tuple(states), None)


class ComposedStateSpace(StateSpace):
    """Successors of a composition computed component by component: a
    running component takes a local transition, an idle one keeps its
    outputs, and end follows end <-> (end' & !run)."""

    def __init__(self, composed: ComposedITS, cap: Optional[int] = None):
        super().__init__(composed.its, cap)
        self.composed = composed
        self._parts = []
        for m, cs in zip(composed.components, composed.symbols):
            local = StateSpace(m, cap)
            local_idx = [self.index[n] for n in local.names]
            out_pos = [self.out_index[n] for n in m.output_names]
            self._parts.append((local, local_idx, out_pos, self.index[cs.run],
                                self.index[cs.end], self.out_index[cs.end]))

    def _compute_next_outputs(self, s):
        choices = []
        for local, local_idx, out_pos, run_i, end_i, end_o in self._parts:
            run, end = s[run_i], s[end_i]
            if run:
                if end:
                    return []
                ls = tuple(s[k] for k in local_idx)
                opts = [(o, e) for o in local.next_outputs(ls) for e in (False, True)]
            else:
                opts = [(tuple(s[k + self.n_in] for k in out_pos), end)]
            choices.append(opts)
        n_out = len(self.outputs)
        result = []
        for combo in itertools.product(*choices):
            nxt = [None] * n_out
            for (local, _, out_pos, _, _, end_o), (o, e) in zip(self._parts, combo):
                for k, v in zip(out_pos, o):
                    nxt[k] = v
                nxt[end_o] = e
            result.append(tuple(nxt))
        return result


def state_space(system, cap: Optional[int] = None) -> StateSpace:
    if isinstance(system, ComposedITS):
        return ComposedStateSpace(system, cap)
    return StateSpace(system, cap)


# ---------------------------------------------------------------- traces


def _canonical(stem: tuple, loop: tuple) -> tuple:
    p = len(loop)
    for d in range(1, p + 1):
        if p % d == 0 and loop == loop[:d] * (p // d):
            loop = loop[:d]
            break
    while stem and stem[-1] == loop[-1]:
        loop = (stem[-1],) + loop[:-1]
        stem = stem[:-1]
    return stem, loop


def enumerate_traces(system, stem_bound: int, loop_bound: Optional[int] = None,
                     finite: bool = True, cap: Optional[int] = None) -> Iterator[Trace]:
    """All finite traces of length <= stem_bound and, if ``loop_bound`` is
    given, all fair lassos with stem <= stem_bound and loop <= loop_bound
    (each infinite word once)."""
    space = system if isinstance(system, StateSpace) else state_space(system, cap)
    budget = [space.cap]

    def tick():
        budget[0] -= 1
        if budget[0] < 0:
            raise ResourceError(f"trace enumeration exceeded the state cap {space.cap}")

    if finite:
        for o in space.initial_outputs():
            tick()
            yield space.to_trace((), None, o)

        def grow(prefix):
            last = prefix[-1]
            for o in space.next_outputs(last):
                tick()
                yield space.to_trace(prefix, None, o)
                if len(prefix) + 1 < stem_bound:
                    for i in space.input_values:
                        yield from grow(prefix + (i + o,))

        if stem_bound >= 2:
            for s0 in space.initial_states():
                yield from grow((s0,))

    if loop_bound is None:
        return
    seen = set()
    total = stem_bound + loop_bound

    def paths(prefix):
        tick()
        yield prefix
        if len(prefix) < total:
            for s in space.successors(prefix[-1]):
                yield from paths(prefix + (s,))

    for s0 in space.initial_states():
        for path in paths((s0,)):
            n = len(path)
            last_out = space.next_outputs(path[-1])
            for stem_len in range(max(0, n - loop_bound), min(stem_bound, n - 1) + 1):
                loop = path[stem_len:]
                if space.outputs_of(loop[0]) not in last_out:
                    continue
                if not space.is_fair_loop(loop):
                    continue
                key = _canonical(path[:stem_len], loop)
                if key in seen:
                    continue
                seen.add(key)
                yield space.to_trace(path[:stem_len], loop)


@dataclass(frozen=True)
class Membership:
    ok: bool
    index: Optional[int] = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def is_trace_of(system, t: Trace, cap: Optional[int] = None) -> Membership:
    space = system if isinstance(system, StateSpace) else state_space(system, cap)
    if set(t.vocab.names) != set(space.names):
        raise ITSError("trace vocabulary does not match the system")
    states = [t.stem[i] for i in range(len(t.stem))]
    if t.is_finite:
        full = [space.to_tuple(s) for s in states[:-1]]
        final = tuple(states[-1][n] for n in space.outputs)
        first_out = space.outputs_of(full[0]) if full else final
    else:
        full = [space.to_tuple(s) for s in list(t.stem) + list(t.loop)]
        first_out = space.outputs_of(full[0])
    if not space._init(first_out, None):
        return Membership(False, 0, "initial condition violated")
    nxt_outs = [space.outputs_of(s) for s in full[1:]]
    if t.is_finite:
        nxt_outs.append(final)
    else:
        nxt_outs.append(space.outputs_of(full[len(t.stem)]))
    for k, (s, o) in enumerate(zip(full, nxt_outs)):
        if not space._trans(s, o):
            return Membership(False, k, f"transition condition violated at {k}")
    if t.is_lasso and not space.is_fair_loop(full[len(t.stem):]):
        return Membership(False, len(t.stem), "strong fairness violated on the loop")
    return Membership(True)


# ---------------------------------------------------------------- projection


@dataclass(frozen=True)
class ProjectionViolation:
    component: str
    kind: str
    path: tuple
    message: str


@dataclass(frozen=True)
class ProjectionReport:
    states: int
    transitions: int
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def projection_check(composed: ComposedITS, depth: int, generic: bool = True,
                     cap: Optional[int] = None) -> ProjectionReport:
    """Check that every composed trace whose transitions lie within
    ``depth`` steps of an initial state projects into every local language.

    Membership of a projection decomposes into local conditions: the
    first local state satisfies the local init, every local step is the
    composed step taken at a run position (outputs are frozen in between),
    and the local fairness pairs hold on the run positions of the loop.
    So it suffices to check init on initial states, the local transition
    relation on every reachable composed transition at a run position, the
    frame and end conditions on the others, and that each local fairness
    pair is matched on every reachable state by a composed pair equivalent
    to (run & a, run & g).  With ``generic`` the composed successors are
    computed from the product transition formula, independently of the
    component-wise successor function."""
    space = StateSpace(composed.its, cap) if generic else ComposedStateSpace(composed, cap)
    parts = []
    for m, cs in zip(composed.components, composed.symbols):
        local = StateSpace(m, cap)
        parts.append((m.name, local, [space.index[n] for n in local.names],
                      [space.out_index[n] for n in m.output_names],
                      space.index[cs.run], space.index[cs.end], space.out_index[cs.end]))
    violations = []

    def report(name, kind, path, msg):
        violations.append(ProjectionViolation(name, kind, tuple(path), msg))

    parent = {}
    frontier = []
    for s in space.initial_states():
        if s not in parent:
            parent[s] = None
            frontier.append(s)
            for name, local, idx, _, _, _, _ in parts:
                if not local._init(tuple(s[k] for k in idx[local.n_in:]), None):
                    report(name, "init", [s], "initial state violates the local init")

    def path_to(s):
        out = []
        while s is not None:
            out.append(s)
            s = parent[s]
        return out[::-1]

    transitions = 0
    for _ in range(depth):
        nxt = []
        for s in frontier:
            for o in space.next_outputs(s):
                transitions += 1
                for name, local, idx, out_pos, run_i, end_i, end_o in parts:
                    mine = tuple(o[k] for k in out_pos)
                    if s[run_i]:
                        if not local._trans(tuple(s[k] for k in idx), mine):
                            report(name, "trans", path_to(s), f"local step {mine} not allowed")
                    else:
                        if mine != tuple(s[k + space.n_in] for k in out_pos):
                            report(name, "frame", path_to(s), "outputs change while not running")
                        if o[end_o] != s[end_i]:
                            report(name, "end", path_to(s), "end changes while not running")
                for i in space.input_values:
                    t = i + o
                    if t not in parent:
                        parent[t] = s
                        nxt.append(t)
        frontier = nxt
        if not frontier:
            break

    reachable = list(parent)
    for name, local, idx, _, run_i, _, _ in parts:
        for la, lg in local.fairness:
            def lifted(s, f=la):
                return s[run_i] and f(tuple(s[k] for k in idx), None)

            def lifted_g(s, f=lg):
                return s[run_i] and f(tuple(s[k] for k in idx), None)

            if not any(all(bool(ca(s, None)) == bool(lifted(s)) and bool(cg(s, None)) == bool(lifted_g(s))
                           for s in reachable) for ca, cg in space.fairness):
                report(name, "fairness", (), "no composed fairness pair matches a local pair")
    return ProjectionReport(len(parent), transitions, tuple(violations))


def local_component(composed: ComposedITS, name: str):
    """The projection view (trace.Component) of one component."""
    from .trace import Component
    cs = composed.symbols_for(name)
    return Component(composed.component(name).vocab, cs.run, cs.end)
