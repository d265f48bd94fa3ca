"""Name resolution and sort checking for terms and formulas."""

from __future__ import annotations

from functools import lru_cache

from . import ast as A
from .parser import ParseError


class SortError(ParseError):
    pass


class UnknownIdentifier(ParseError):
    pass


def _map(node, fn):
    """Rebuild ``node`` with ``fn`` applied to every direct sub-node."""
    kwargs = {}
    changed = False
    for name in node.__dataclass_fields__:
        v = getattr(node, name)
        if isinstance(v, (A.Formula, A.Term)):
            nv = fn(v)
        elif isinstance(v, tuple) and any(isinstance(x, (A.Formula, A.Term)) for x in v):
            nv = tuple(fn(x) for x in v)
        else:
            nv = v
        changed = changed or nv is not v
        kwargs[name] = nv
    return type(node)(**kwargs) if changed else node


def resolve_names(node, vocab: A.Vocabulary):
    literals = vocab.enum_literals()

    def go(n):
        if isinstance(n, A.Var):
            if n.name in vocab:
                return n
            if n.name in literals:
                return A.Lit(n.name)
            raise UnknownIdentifier(f"unknown identifier {n.name!r}")
        return _map(n, go)

    return go(node)


def _join(a: A.Sort, b: A.Sort) -> A.Sort:
    if a.kind == "int" and b.kind == "int":
        return A.int_sort(min(a.lo, b.lo), max(a.hi, b.hi))
    if a.kind != b.kind or (a.kind == "enum" and a != b):
        raise SortError(f"incompatible sorts {a} and {b}")
    return a


def sort_of(term: A.Term, vocab: A.Vocabulary) -> A.Sort:
    return _sort_of(term, vocab)


@lru_cache(maxsize=65536)
def _sort_of(term, vocab):
    if isinstance(term, A.Var):
        d = vocab.get(term.name)
        if d is None:
            raise UnknownIdentifier(f"unknown identifier {term.name!r}")
        return d.sort
    if isinstance(term, A.Lit):
        v = term.value
        if isinstance(v, bool):
            return A.BOOL
        if isinstance(v, int):
            return A.int_sort(v, v)
        sort = vocab.enum_literals().get(v)
        if sort is None:
            raise UnknownIdentifier(f"unknown enum literal {v!r}")
        return sort
    if isinstance(term, A.Func):
        sorts = [_sort_of(a, vocab) for a in term.args]
        for s in sorts:
            if s.kind != "int":
                raise SortError(f"arithmetic on non-integer sort {s}")
        if term.op == "neg":
            return A.int_sort(-sorts[0].hi, -sorts[0].lo)
        a, b = sorts
        if term.op == "+":
            return A.int_sort(a.lo + b.lo, a.hi + b.hi)
        if term.op == "-":
            return A.int_sort(a.lo - b.hi, a.hi - b.lo)
        corners = [x * y for x in (a.lo, a.hi) for y in (b.lo, b.hi)]
        return A.int_sort(min(corners), max(corners))
    if isinstance(term, (A.NextVal, A.AtNext, A.AtLast)):
        return _sort_of(term.arg, vocab)
    if isinstance(term, A.Ite):
        return _join(_sort_of(term.then, vocab), _sort_of(term.other, vocab))
    raise TypeError(f"not a term: {term!r}")


def default_of(term: A.Term, vocab: A.Vocabulary):
    """Default value used by next, at-next, at-last and ite terms."""
    explicit = getattr(term, "default", None)
    if explicit is not None:
        return explicit
    return sort_of(term, vocab).default()


def check_sorts(node, vocab: A.Vocabulary) -> None:
    for n in A.walk(node):
        if isinstance(n, A.Atom):
            s = sort_of(n.term, vocab)
            if s.kind != "bool":
                raise SortError(f"non-boolean term used as a formula: {A.sexpr(n.term)}")
        elif isinstance(n, A.Cmp):
            a, b = sort_of(n.left, vocab), sort_of(n.right, vocab)
            _join(a, b)
            if n.op not in ("=", "!=") and a.kind != "int":
                raise SortError(f"ordering comparison {n.op!r} on sort {a}")
        elif isinstance(n, A.Term):
            s = sort_of(n, vocab)
            d = getattr(n, "default", None)
            if d is not None and not _default_fits(s, d):
                raise SortError(f"default {d!r} does not fit sort {s}")


def _default_fits(sort: A.Sort, value) -> bool:
    if sort.kind == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    return sort.contains(value)
