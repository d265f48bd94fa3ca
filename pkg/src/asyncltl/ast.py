"""Abstract syntax for LTL with past operators and event-freezing terms.

Every node is an immutable dataclass.  Hashes are cached on first use so
that large rewritten formulas can be used as dictionary keys cheaply.
"""

from __future__ import annotations

import enum
from functools import lru_cache
from dataclasses import dataclass, field, fields
from typing import Iterator, Optional, Union


def _node(cls):
    cls = dataclass(frozen=True)(cls)
    generated = cls.__hash__

    def __hash__(self):
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = generated(self)
            self.__dict__["_hash"] = cached
        return cached

    cls.__hash__ = __hash__
    return cls


# ---------------------------------------------------------------- sorts


@dataclass(frozen=True)
class Sort:
    kind: str  # "bool", "enum" or "int"
    literals: tuple = ()
    lo: int = 0
    hi: int = 0

    def __post_init__(self):
        if self.kind not in ("bool", "enum", "int"):
            raise ValueError(f"unknown sort kind {self.kind!r}")
        if self.kind == "enum":
            if not self.literals:
                raise ValueError("enum sort needs at least one literal")
            if len(set(self.literals)) != len(self.literals):
                raise ValueError("duplicate enum literal")
        if self.kind == "int" and self.lo > self.hi:
            raise ValueError(f"empty integer range {self.lo}..{self.hi}")

    def default(self):
        if self.kind == "bool":
            return False
        if self.kind == "enum":
            return self.literals[0]
        return self.lo

    def values(self) -> tuple:
        if self.kind == "bool":
            return (False, True)
        if self.kind == "enum":
            return tuple(self.literals)
        return tuple(range(self.lo, self.hi + 1))

    def contains(self, value) -> bool:
        if self.kind == "bool":
            return isinstance(value, bool)
        if self.kind == "enum":
            return isinstance(value, str) and value in self.literals
        return isinstance(value, int) and not isinstance(value, bool) and self.lo <= value <= self.hi

    def __str__(self):
        if self.kind == "bool":
            return "boolean"
        if self.kind == "enum":
            return "{" + ", ".join(self.literals) + "}"
        return f"{self.lo}..{self.hi}"


BOOL = Sort("bool")


def enum_sort(*literals: str) -> Sort:
    return Sort("enum", literals=tuple(literals))


def int_sort(lo: int, hi: int) -> Sort:
    return Sort("int", lo=lo, hi=hi)


INPUT = "input"
OUTPUT = "output"


@dataclass(frozen=True)
class VarDecl:
    name: str
    sort: Sort
    io: str

    def __post_init__(self):
        if self.io not in (INPUT, OUTPUT):
            raise ValueError(f"io must be input or output, got {self.io!r}")


@dataclass(frozen=True)
class Vocabulary:
    decls: tuple = ()
    _index: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        index = {}
        for d in self.decls:
            if d.name in index:
                raise ValueError(f"duplicate variable {d.name!r}")
            index[d.name] = d
        object.__setattr__(self, "_index", index)

    @classmethod
    def of(cls, inputs=(), outputs=(), sort: Sort = BOOL) -> "Vocabulary":
        """Boolean (or single-sort) vocabulary from two name lists."""
        decls = [VarDecl(n, sort, INPUT) for n in inputs]
        decls += [VarDecl(n, sort, OUTPUT) for n in outputs]
        return cls(tuple(decls))

    def __contains__(self, name) -> bool:
        return name in self._index

    def __getitem__(self, name) -> VarDecl:
        return self._index[name]

    def __iter__(self):
        return iter(self.decls)

    def __len__(self):
        return len(self.decls)

    def get(self, name):
        return self._index.get(name)

    @property
    def names(self) -> tuple:
        return tuple(d.name for d in self.decls)

    @property
    def inputs(self) -> tuple:
        return tuple(d.name for d in self.decls if d.io == INPUT)

    @property
    def outputs(self) -> tuple:
        return tuple(d.name for d in self.decls if d.io == OUTPUT)

    def is_input(self, name) -> bool:
        d = self._index.get(name)
        return d is not None and d.io == INPUT

    def extend(self, *decls: VarDecl) -> "Vocabulary":
        return Vocabulary(self.decls + tuple(decls))

    def restrict(self, names) -> "Vocabulary":
        keep = set(names)
        return Vocabulary(tuple(d for d in self.decls if d.name in keep))

    def enum_literals(self) -> dict:
        table = {}
        for d in self.decls:
            if d.sort.kind == "enum":
                for lit in d.sort.literals:
                    table.setdefault(lit, d.sort)
        return table


class Polarity(enum.Enum):
    WEAK = "weak"
    STRONG = "strong"

    @property
    def flip(self) -> "Polarity":
        return Polarity.STRONG if self is Polarity.WEAK else Polarity.WEAK

    def __str__(self):
        return self.value


WEAK = Polarity.WEAK
STRONG = Polarity.STRONG


# ---------------------------------------------------------------- terms


class Term:
    __slots__ = ()


@_node
class Var(Term):
    name: str


@_node
class Lit(Term):
    value: Union[bool, int, str]
    # keeps Lit(True) and Lit(1) apart under == and hash
    tag: str = field(default="", repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tag", type(self.value).__name__)


@_node
class Func(Term):
    op: str  # "+", "-", "*", "neg"
    args: tuple


@_node
class NextVal(Term):
    arg: Term
    default: Optional[object] = None


@_node
class AtNext(Term):
    arg: Term
    cond: "Formula"
    default: Optional[object] = None


@_node
class AtLast(Term):
    arg: Term
    cond: "Formula"
    default: Optional[object] = None


@_node
class Ite(Term):
    cond: "Formula"
    then: Term
    other: Term
    default: Optional[object] = None


# ---------------------------------------------------------------- formulas


class Formula:
    __slots__ = ()


@_node
class Const(Formula):
    value: bool


@_node
class Atom(Formula):
    """A boolean-sorted term used as a formula."""
    term: Term


CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")


@_node
class Cmp(Formula):
    op: str
    left: Term
    right: Term


@_node
class Not(Formula):
    arg: Formula


@_node
class Or(Formula):
    left: Formula
    right: Formula


@_node
class And(Formula):
    left: Formula
    right: Formula


@_node
class Implies(Formula):
    left: Formula
    right: Formula


@_node
class Iff(Formula):
    left: Formula
    right: Formula


@_node
class Next(Formula):
    arg: Formula


@_node
class Until(Formula):
    left: Formula
    right: Formula


@_node
class Release(Formula):
    left: Formula
    right: Formula


@_node
class Yesterday(Formula):
    arg: Formula


@_node
class WeakYesterday(Formula):
    arg: Formula


@_node
class Since(Formula):
    left: Formula
    right: Formula


@_node
class Eventually(Formula):
    arg: Formula


@_node
class Always(Formula):
    arg: Formula


@_node
class Once(Formula):
    arg: Formula


@_node
class Historically(Formula):
    arg: Formula


@_node
class Bounded(Formula):
    """F<=n, G<=n, O<=n or H<=n."""
    op: str
    bound: int
    arg: Formula


@_node
class Repeated(Formula):
    """X^n, Y^n or Z^n."""
    op: str
    count: int
    arg: Formula


TRUE = Const(True)
FALSE = Const(False)

UNARY = (Not, Next, Yesterday, WeakYesterday, Eventually, Always, Once, Historically)
BINARY = (Or, And, Implies, Iff, Until, Release, Since)
CORE = (Const, Atom, Cmp, Not, Or, Next, Until, Yesterday, Since)


# ---------------------------------------------------------------- helpers


def var(name: str) -> Atom:
    return Atom(Var(name))


def conj(*parts: Formula) -> Formula:
    parts = [p for p in parts if p != TRUE]
    if not parts:
        return TRUE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def disj(*parts: Formula) -> Formula:
    parts = [p for p in parts if p != FALSE]
    if not parts:
        return FALSE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


_FIELD_NAMES = {}


def _field_names(cls) -> tuple:
    names = _FIELD_NAMES.get(cls)
    if names is None:
        names = tuple(f.name for f in fields(cls))
        _FIELD_NAMES[cls] = names
    return names


def children(node) -> tuple:
    """Direct sub-nodes (formulas and terms) in field order."""
    out = []
    for name in _field_names(type(node)):
        v = getattr(node, name)
        if isinstance(v, (Formula, Term)):
            out.append(v)
        elif isinstance(v, tuple):
            out.extend(x for x in v if isinstance(x, (Formula, Term)))
    return tuple(out)


def walk(node) -> Iterator:
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def variables(node) -> set:
    return {n.name for n in walk(node) if isinstance(n, Var)}


def depth(node) -> int:
    """Nesting depth: a bare atom has depth 1, each operator or term
    constructor (next, at-next, at-last, ite) adds one level."""
    if isinstance(node, (Var, Lit)):
        return 0
    sub = max((depth(c) for c in children(node)), default=0)
    if isinstance(node, Func):
        return sub
    return 1 + sub


@lru_cache(maxsize=1 << 18)
def past_depth(node) -> int:
    """Largest number of past operators (including at-last) on any path."""
    own = 1 if isinstance(node, (Yesterday, WeakYesterday, Since, Once, Historically, AtLast)) else 0
    if isinstance(node, Repeated) and node.op in ("Y", "Z"):
        own = node.count
    if isinstance(node, Bounded) and node.op in ("O", "H"):
        own = node.bound
    return own + max((past_depth(c) for c in children(node)), default=0)


# ---------------------------------------------------------------- s-expressions

_SEXPR_NAMES = {
    Not: "not", Or: "or", And: "and", Implies: "implies", Iff: "iff",
    Next: "X", Until: "U", Release: "R", Yesterday: "Y", WeakYesterday: "Z",
    Since: "S", Eventually: "F", Always: "G", Once: "O", Historically: "H",
}


def _lit_text(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def sexpr(node) -> str:
    """Canonical S-expression used by golden tests."""
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Lit):
        return _lit_text(node.value)
    if isinstance(node, Const):
        return "true" if node.value else "false"
    if isinstance(node, Atom):
        return sexpr(node.term)
    if isinstance(node, Cmp):
        return f"({node.op} {sexpr(node.left)} {sexpr(node.right)})"
    if isinstance(node, Func):
        return "(" + " ".join([node.op] + [sexpr(a) for a in node.args]) + ")"
    if isinstance(node, NextVal):
        return _with_default(f"(next {sexpr(node.arg)}", node.default)
    if isinstance(node, AtNext):
        return _with_default(f"(at-next {sexpr(node.arg)} {sexpr(node.cond)}", node.default)
    if isinstance(node, AtLast):
        return _with_default(f"(at-last {sexpr(node.arg)} {sexpr(node.cond)}", node.default)
    if isinstance(node, Ite):
        return _with_default(
            f"(ite {sexpr(node.cond)} {sexpr(node.then)} {sexpr(node.other)}", node.default)
    if isinstance(node, Bounded):
        return f"({node.op}<={node.bound} {sexpr(node.arg)})"
    if isinstance(node, Repeated):
        return f"({node.op}^{node.count} {sexpr(node.arg)})"
    name = _SEXPR_NAMES[type(node)]
    return "(" + " ".join([name] + [sexpr(c) for c in children(node)]) + ")"


def _with_default(head: str, default) -> str:
    if default is None:
        return head + ")"
    return f"{head} :default {_lit_text(default)})"
