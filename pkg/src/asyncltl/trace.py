"""Finite and lasso traces, restriction, projection onto a component and
the inverse direction (embedding a local trace into a global one)."""

from __future__ import annotations

import itertools
import json
import random
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterator, Optional

from . import ast as A

FINITE_CUT = "finite-cut"
INFINITE_TAIL = "infinite-no-run-loop"
TAIL_MODES = (FINITE_CUT, INFINITE_TAIL)


class TraceError(ValueError):
    pass


class InvalidProjectionInput(TraceError):
    pass


class IllFormedGlobal(TraceError):
    pass


class Assignment(Mapping):
    """Immutable variable -> value map."""

    __slots__ = ("_d", "_h")

    def __init__(self, bindings=(), **kw):
        d = dict(bindings._d) if isinstance(bindings, Assignment) else dict(bindings)
        d.update(kw)
        self._d = d
        self._h = None

    def __getitem__(self, k):
        return self._d[k]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def __contains__(self, k):
        return k in self._d

    def get(self, k, default=None):
        return self._d.get(k, default)

    def items(self):
        return self._d.items()

    def keys(self):
        return self._d.keys()

    def values(self):
        return self._d.values()

    def __hash__(self):
        if self._h is None:
            self._h = hash(frozenset(self._d.items()))
        return self._h

    def __eq__(self, other):
        if isinstance(other, Assignment):
            return self._d == other._d
        if isinstance(other, Mapping):
            return self._d == dict(other)
        return NotImplemented

    def __repr__(self):
        return "{" + ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(self._d.items())) + "}"

    def restrict(self, names) -> "Assignment":
        return Assignment({k: v for k, v in self._d.items() if k in names})

    def update(self, **kw) -> "Assignment":
        d = dict(self._d)
        d.update(kw)
        return Assignment(d)


def _fmt(v):
    if isinstance(v, bool):
        return "T" if v else "F"
    return str(v)


@dataclass(frozen=True)
class Trace:
    """A finite trace (``loop is None``) or a lasso ``stem . loop^omega``.

    The last assignment of a finite trace binds only output variables."""

    vocab: A.Vocabulary
    stem: tuple
    loop: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "stem", tuple(Assignment(s) for s in self.stem))
        if self.loop is not None:
            object.__setattr__(self, "loop", tuple(Assignment(s) for s in self.loop))
            if not self.loop:
                raise TraceError("a lasso needs a non-empty loop")
        elif not self.stem:
            raise TraceError("a finite trace needs at least one assignment")
        else:
            outs = set(self.vocab.outputs)
            last = self.stem[-1]
            if set(last) - outs:
                object.__setattr__(self, "stem", self.stem[:-1] + (last.restrict(outs),))
        self._validate()

    def _validate(self):
        full = set(self.vocab.names)
        outs = set(self.vocab.outputs)
        states = list(self.stem) + list(self.loop or ())
        for idx, s in enumerate(states):
            final = self.loop is None and idx == len(self.stem) - 1
            expected = outs if final else full
            if set(s) != expected:
                missing = sorted(expected - set(s))
                extra = sorted(set(s) - expected)
                raise TraceError(
                    f"assignment {idx} binds the wrong variables (missing {missing}, extra {extra})")
            for k, v in s.items():
                if not self.vocab[k].sort.contains(v):
                    raise TraceError(f"value {v!r} of {k} at {idx} is outside {self.vocab[k].sort}")

    # constructors
    @classmethod
    def finite(cls, vocab, states) -> "Trace":
        return cls(vocab, tuple(states), None)

    @classmethod
    def lasso(cls, vocab, stem, loop) -> "Trace":
        return cls(vocab, tuple(stem), tuple(loop))

    @property
    def is_finite(self) -> bool:
        return self.loop is None

    @property
    def is_lasso(self) -> bool:
        return self.loop is not None

    def __bool__(self):
        return True

    def __len__(self):
        if self.loop is not None:
            raise TraceError("a lasso has no finite length")
        return len(self.stem)

    def state(self, i: int) -> Assignment:
        if self.loop is None:
            return self.stem[i]
        if i < len(self.stem):
            return self.stem[i]
        return self.loop[(i - len(self.stem)) % len(self.loop)]

    def positions(self) -> int:
        """Number of distinct stored positions (stem + loop)."""
        return len(self.stem) + len(self.loop or ())

    def normalize(self, i: int) -> int:
        """Index of the stored assignment that position ``i`` refers to."""
        if self.loop is None or i < len(self.stem):
            return i
        return len(self.stem) + (i - len(self.stem)) % len(self.loop)

    def __str__(self):
        parts = [repr(s) for s in self.stem]
        if self.loop is not None:
            parts.append("(" + " ".join(repr(s) for s in self.loop) + ")^w")
        return " ".join(parts)

    # --------------------------------------------------------- JSON

    def to_json(self) -> dict:
        def enc(s):
            return {k: s[k] for k in sorted(s)}
        out = {
            "vocab": {"inputs": list(self.vocab.inputs), "outputs": list(self.vocab.outputs)},
            "stem": [enc(s) for s in self.stem],
        }
        if self.loop is not None:
            out["loop"] = [enc(s) for s in self.loop]
        out["final_outputs_only"] = self.loop is None
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data, vocab: A.Vocabulary = None) -> "Trace":
        if isinstance(data, str):
            data = json.loads(data)
        stem = data["stem"]
        loop = data.get("loop")
        if vocab is None:
            vocab = _infer_vocab(data["vocab"], list(stem) + list(loop or ()))
        else:
            names = list(data["vocab"].get("inputs", [])) + list(data["vocab"].get("outputs", []))
            unknown = [n for n in names if n not in vocab]
            if unknown:
                raise TraceError(f"trace mentions unknown variables {unknown}")
            vocab = vocab.restrict(names)
        if loop is not None and data.get("final_outputs_only"):
            raise TraceError("a lasso cannot end in an output-only assignment")
        return cls(vocab, tuple(stem), None if loop is None else tuple(loop))


def _infer_vocab(vocab_json, states) -> A.Vocabulary:
    decls = []
    for io, key in ((A.INPUT, "inputs"), (A.OUTPUT, "outputs")):
        for name in vocab_json.get(key, []):
            vals = [s[name] for s in states if name in s]
            if all(isinstance(v, bool) for v in vals):
                sort = A.BOOL
            elif all(isinstance(v, int) and not isinstance(v, bool) for v in vals):
                sort = A.int_sort(min(vals), max(vals))
            elif all(isinstance(v, str) for v in vals):
                sort = A.enum_sort(*sorted(set(vals)))
            else:
                raise TraceError(f"cannot infer a sort for {name}")
            decls.append(A.VarDecl(name, sort, io))
    return A.Vocabulary(tuple(decls))


# ------------------------------------------------------------- restriction


def restrict(t: Trace, names) -> Trace:
    names = list(names)
    unknown = [n for n in names if n not in t.vocab]
    if unknown:
        raise TraceError(f"unknown variables {unknown}")
    vocab = t.vocab.restrict(names)
    keep = set(names)
    stem = tuple(s.restrict(keep) for s in t.stem)
    loop = None if t.loop is None else tuple(s.restrict(keep) for s in t.loop)
    return Trace(vocab, stem, loop)


# ------------------------------------------------------------- projection


@dataclass(frozen=True)
class MapSequence:
    """Global positions of a component's local states.

    ``positions`` lists run positions inside stem + one loop pass.  When
    ``period`` is set the positions in the loop repeat every ``period``
    steps and there is no final index.  Otherwise ``final`` is the index of
    the output-only final local state."""

    positions: tuple
    final: Optional[int] = None
    period: Optional[int] = None
    loop_start: Optional[int] = None

    @property
    def infinite(self) -> bool:
        return self.period is not None

    def take(self, n: int) -> list:
        if not self.infinite:
            seq = list(self.positions) + ([self.final] if self.final is not None else [])
            return seq[:n]
        head = [p for p in self.positions if p < self.loop_start]
        cyc = [p for p in self.positions if p >= self.loop_start]
        out = list(head)
        k = 0
        while len(out) < n:
            out.extend(p + k * self.period for p in cyc)
            k += 1
        return out[:n]


def _run_value(s: Assignment, run_var: str) -> bool:
    return bool(s.get(run_var, False))


def run_map(g: Trace, run_var: str) -> MapSequence:
    if run_var not in g.vocab:
        raise TraceError(f"unknown run variable {run_var!r}")
    if g.is_finite:
        n = len(g)
        runs = tuple(i for i in range(n - 1) if _run_value(g.stem[i], run_var))
        final = runs[-1] + 1 if runs else 0
        if final > n - 1:
            raise IllFormedGlobal("final run position has no successor")
        return MapSequence(runs, final)
    s, p = len(g.stem), len(g.loop)
    runs = tuple(i for i in range(s + p) if _run_value(g.state(i), run_var))
    if any(i >= s for i in runs):
        return MapSequence(runs, None, p, s)
    final = runs[-1] + 1 if runs else 0
    return MapSequence(runs, final)


@dataclass(frozen=True)
class Component:
    """What projection needs to know about a component."""
    vocab: A.Vocabulary  # the local V_i with its input/output split
    run: str
    end: Optional[str] = None


def check_frame(g: Trace, comp: Component) -> Optional[int]:
    """First position where a local output changes while the component is
    not running, or None."""
    outs = comp.vocab.outputs
    count = len(g) - 1 if g.is_finite else g.positions()
    for i in range(count):
        s = g.state(i)
        if not _run_value(s, comp.run):
            nxt = g.state(i + 1)
            if any(s[o] != nxt[o] for o in outs):
                return i
    return None


def project(g: Trace, comp: Component) -> Trace:
    bad = check_frame(g, comp)
    if bad is not None:
        raise InvalidProjectionInput(
            f"outputs of the component change at position {bad} while it is not running")
    m = run_map(g, comp.run)
    names = set(comp.vocab.names)
    outs = set(comp.vocab.outputs)
    if m.infinite:
        stem = [g.state(i).restrict(names) for i in m.positions if i < m.loop_start]
        loop = [g.state(i).restrict(names) for i in m.positions if i >= m.loop_start]
        return Trace(comp.vocab, tuple(stem), tuple(loop))
    states = [g.state(i).restrict(names) for i in m.positions]
    states.append(g.state(m.final).restrict(outs))
    return Trace(comp.vocab, tuple(states), None)


# ------------------------------------------------------------- embedding


@dataclass(frozen=True)
class StutterPlan:
    """How to embed a local trace into a global one.

    ``gaps[k]`` is the number of stutter positions inserted before the
    k-th local full state.  For a lasso local trace the gaps cover the stem
    states followed by the loop states (loop gaps repeat every lap).
    ``filler`` gives input values on stutter positions: ``"default"``, a
    dict of fixed values, or ``("random", seed)``.  ``tail_loop`` is the
    number of non-running positions in the loop of an infinite tail."""

    gaps: tuple = ()
    tail: str = INFINITE_TAIL
    filler: object = "default"
    tail_loop: int = 1


def fresh_symbols(vocab: A.Vocabulary, run: str = "run", end: str = "end") -> tuple:
    if run in vocab or end in vocab:
        raise TraceError(f"symbol collision: {run!r}/{end!r} already in the vocabulary")
    return run, end


def global_vocab(local: A.Vocabulary, run: str = "run", end: str = "end") -> A.Vocabulary:
    fresh_symbols(local, run, end)
    return local.extend(A.VarDecl(run, A.BOOL, A.INPUT), A.VarDecl(end, A.BOOL, A.OUTPUT))


def _filler_fn(policy, inputs, vocab):
    if policy == "default":
        vals = {i: vocab[i].sort.default() for i in inputs}
        return lambda: dict(vals)
    if isinstance(policy, dict):
        return lambda: {i: policy[i] for i in inputs}
    if isinstance(policy, tuple) and policy[0] == "random":
        rng = random.Random(policy[1])
        return lambda: {i: rng.choice(vocab[i].sort.values()) for i in inputs}
    raise TraceError(f"unknown filler policy {policy!r}")


def _skeleton(local: Trace, plan: StutterPlan, run: str, end: str):
    """Global positions as (kind, local index) pairs plus the loop start."""
    if local.is_lasso:
        if plan.tail == FINITE_CUT:
            raise TraceError("a lasso local trace cannot be embedded with a finite cut")
        full = list(local.stem) + list(local.loop)
        if len(plan.gaps) != len(full):
            raise TraceError(f"need {len(full)} gap lengths, got {len(plan.gaps)}")
        cells = []
        loop_start = None
        for k, _ in enumerate(full):
            if k == len(local.stem):
                loop_start = len(cells)
            cells += [("gap", k)] * plan.gaps[k] + [("run", k)]
        return cells, loop_start
    n = len(local)
    if len(plan.gaps) != n - 1:
        raise TraceError(f"need {n - 1} gap lengths, got {len(plan.gaps)}")
    cells = []
    for k in range(n - 1):
        cells += [("gap", k)] * plan.gaps[k] + [("run", k)]
    if plan.tail == FINITE_CUT:
        cells.append(("final", n - 1))
        return cells, None
    loop_start = len(cells)
    cells += [("tail", n - 1)] * plan.tail_loop
    return cells, loop_start


def embed(local: Trace, plan: StutterPlan, run: str = "run", end: str = "end") -> Trace:
    gv = global_vocab(local.vocab, run, end)
    fill = _filler_fn(plan.filler, local.vocab.inputs, local.vocab)
    cells, loop_start = _skeleton(local, plan, run, end)
    return _build(local, gv, cells, loop_start, lambda idx: fill(), run, end)


def _local_state(local: Trace, k: int) -> Assignment:
    if local.is_lasso:
        full = list(local.stem) + list(local.loop)
        return full[k]
    return local.stem[k]


def _build(local, gv, cells, loop_start, fill_at, run, end):
    outs = local.vocab.outputs
    states = []
    for idx, (kind, k) in enumerate(cells):
        ls = _local_state(local, k)
        out_vals = {o: ls[o] for o in outs}
        if kind == "run":
            states.append(Assignment(ls, **{run: True, end: False}))
        elif kind == "gap":
            states.append(Assignment(fill_at(idx), **out_vals, **{run: False, end: False}))
        elif kind == "final":
            states.append(Assignment(out_vals, **{end: True}))
        else:  # tail
            states.append(Assignment(fill_at(idx), **out_vals, **{run: False, end: True}))
    if loop_start is None:
        return Trace(gv, tuple(states), None)
    return Trace(gv, tuple(states[:loop_start]), tuple(states[loop_start:]))


def embed_all(local: Trace, gaps: tuple, tail: str, run: str = "run", end: str = "end",
              tail_loop: int = 1) -> Iterator[Trace]:
    """Every embedding for the given gaps, enumerating all input values on
    stutter and tail positions."""
    gv = global_vocab(local.vocab, run, end)
    plan = StutterPlan(tuple(gaps), tail, tail_loop=tail_loop)
    cells, loop_start = _skeleton(local, plan, run, end)
    free = [idx for idx, (kind, _) in enumerate(cells) if kind in ("gap", "tail")]
    inputs = local.vocab.inputs
    domains = [local.vocab[i].sort.values() for i in inputs]
    per_pos = list(itertools.product(*domains))
    for choice in itertools.product(per_pos, repeat=len(free)):
        table = {idx: dict(zip(inputs, vals)) for idx, vals in zip(free, choice)}
        yield _build(local, gv, cells, loop_start, table.__getitem__, run, end)


def gap_plans(n_slots: int, max_gap: int) -> Iterator[tuple]:
    return itertools.product(range(max_gap + 1), repeat=n_slots)


def embed_slots(local: Trace) -> int:
    """Number of gap lengths a plan for ``local`` needs."""
    if local.is_lasso:
        return len(local.stem) + len(local.loop)
    return len(local) - 1


# ------------------------------------------------------------- state signal


def state_signal(g: Trace, run: str, end: str) -> list:
    """``run | (Z run & end)`` at each stored position.  A position without a
    run binding (the output-only end of a finite trace) reads run as false."""
    out = []
    for i in range(g.positions()):
        s = g.state(i)
        prev_run = True if i == 0 else _run_value(g.state(i - 1), run)
        out.append(_run_value(s, run) or (prev_run and bool(s.get(end, False))))
    return out
