"""Text format for systems of components.

::

    -- comment
    component c2
      input rec_2, in_2 : boolean
      output out_2, send_2 : boolean
      init !out_2 & !send_2
      trans rec_2 -> out_2' = in_2 & send_2'
      trans !rec_2 -> out_2' = out_2 & !send_2'
      fairness !send_2 ; send_2        -- strong fairness pair (assumption ; guarantee)
      property G (rec_2 -> out_2' = in_2 & X send_2)
    end

    system
      components c1 c2
      connect c1.send_1 -> c2.rec_2    -- renames c2's input rec_2 to send_1
      schedule G (rec_1 -> run_c1)
      assume G F run_c1                -- optional extra assumption
      property G (rec_1 -> F send_2)
      mode base                        -- base | opt | fair
    end

A line that does not start with a keyword continues the previous clause.
Repeated ``init``, ``trans``, ``schedule`` and ``assume`` clauses are
conjoined.  Sorts are ``boolean``, ``{a, b, c}`` or ``lo..hi``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import ast as A
from .its import ITS, ComposedITS, compose, validate
from .parser import ParseError, Parser, resolve
from .rewriting import RewriteMode

MODES = {"base": RewriteMode.BASE, "opt": RewriteMode.OPTIMIZED,
         "optimized": RewriteMode.OPTIMIZED, "fair": RewriteMode.FAIRNESS,
         "fairness": RewriteMode.FAIRNESS}

_COMPONENT_KEYS = {"input", "output", "init", "trans", "fairness", "property"}
_SYSTEM_KEYS = {"components", "connect", "schedule", "assume", "property", "mode"}


class SpecError(ParseError):
    pass


@dataclass(frozen=True)
class Clause:
    key: str
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class ComponentSpec:
    its: ITS
    property: Optional[A.Formula]
    line: int = 0


@dataclass(frozen=True)
class Connection:
    src: str
    src_var: str
    dst: str
    dst_var: str
    line: int = 0


@dataclass
class SystemSpec:
    components: dict
    order: tuple
    connections: tuple = ()
    mode: RewriteMode = RewriteMode.OPTIMIZED
    _schedule: tuple = ()
    _assume: tuple = ()
    _property: Optional[Clause] = None
    _composed: Optional[ComposedITS] = field(default=None, repr=False)

    # wiring
    def renaming(self, name: str) -> dict:
        return {c.dst_var: c.src_var for c in self.connections if c.dst == name}

    def wired(self, name: str) -> ITS:
        return self.components[name].its.rename(self.renaming(name))

    def wired_property(self, name: str) -> Optional[A.Formula]:
        from .its import rename_vars
        p = self.components[name].property
        return None if p is None else rename_vars(p, self.renaming(name))

    def composed(self) -> ComposedITS:
        if self._composed is None:
            self._composed = compose([self.wired(n) for n in self.order])
        return self._composed

    @property
    def vocab(self) -> A.Vocabulary:
        return self.composed().its.vocab

    def _formulas(self, clauses) -> A.Formula:
        return A.conj(*(_formula(c, self.vocab) for c in clauses))

    @property
    def schedule(self) -> A.Formula:
        return self._formulas(self._schedule)

    @property
    def assumptions(self) -> A.Formula:
        return self._formulas(self._assume)

    @property
    def property(self) -> Optional[A.Formula]:
        return None if self._property is None else _formula(self._property, self.vocab)

    def local_checks(self) -> list:
        return [(self.components[n].its, self.components[n].property) for n in self.order
                if self.components[n].property is not None]

    def wired_properties(self) -> dict:
        return {n: self.wired_property(n) for n in self.order
                if self.components[n].property is not None}


# ---------------------------------------------------------------- parsing


def _formula(c: Clause, vocab: A.Vocabulary) -> A.Formula:
    try:
        p = Parser(c.text, c.line, c.col)
        f = p.formula()
        p.done()
        return resolve(f, vocab)
    except SpecError:
        raise
    except ParseError as e:
        raise SpecError(e.message, e.line or c.line, e.col or c.col) from None


_SORT_INT = re.compile(r"^(-?\d+)\s*\.\.\s*(-?\d+)$")
_SORT_ENUM = re.compile(r"^\{(.*)\}$")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def parse_sort(text: str, line: int = 0) -> A.Sort:
    text = text.strip()
    if text == "boolean":
        return A.BOOL
    m = _SORT_INT.match(text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if lo > hi:
            raise SpecError(f"empty range {text}", line)
        return A.int_sort(lo, hi)
    m = _SORT_ENUM.match(text)
    if m:
        lits = [x.strip() for x in m.group(1).split(",")]
        if not lits or not all(_IDENT.match(x) for x in lits):
            raise SpecError(f"bad enumeration {text}", line)
        try:
            return A.enum_sort(*lits)
        except ValueError as e:
            raise SpecError(str(e), line) from None
    raise SpecError(f"unknown sort {text!r}", line)


def _blocks(text: str):
    """Yield (kind, name, header_line, clauses)."""
    block = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("--", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1
        words = stripped.split(None, 1)
        head = words[0]
        rest = words[1] if len(words) > 1 else ""
        if block is None:
            if head == "component":
                if not _IDENT.match(rest.strip()):
                    raise SpecError("component needs a name", lineno, col)
                block = ("component", rest.strip(), lineno, [])
            elif head == "system":
                block = ("system", rest.strip() or "system", lineno, [])
            else:
                raise SpecError(f"expected 'component' or 'system', found {head!r}", lineno, col)
            continue
        if stripped == "end":
            yield block
            block = None
            continue
        keys = _COMPONENT_KEYS if block[0] == "component" else _SYSTEM_KEYS
        clauses = block[3]
        if head in keys:
            clauses.append([head, rest, lineno, col + (stripped.index(rest) if rest else len(head))])
        elif clauses:
            clauses[-1][1] += "\n" + stripped
        else:
            raise SpecError(f"unknown keyword {head!r}", lineno, col)
    if block is not None:
        raise SpecError(f"{block[0]} block opened at line {block[2]} is not closed", block[2])


def _component(name, line, clauses) -> ComponentSpec:
    inputs, outputs = [], []
    init, trans, fair, prop = [], [], [], None
    for c in clauses:
        if c.key in ("input", "output"):
            if ":" not in c.text:
                raise SpecError("declaration needs ': sort'", c.line, c.col)
            names, sort_text = c.text.split(":", 1)
            sort = parse_sort(sort_text, c.line)
            for n in (x.strip() for x in names.split(",")):
                if not _IDENT.match(n):
                    raise SpecError(f"bad variable name {n!r}", c.line, c.col)
                (inputs if c.key == "input" else outputs).append(
                    A.VarDecl(n, sort, A.INPUT if c.key == "input" else A.OUTPUT))
    try:
        vocab = A.Vocabulary(tuple(inputs + outputs))
    except ValueError as e:
        raise SpecError(f"component {name}: {e}", line) from None
    for c in clauses:
        if c.key == "init":
            init.append(_formula(c, vocab))
        elif c.key == "trans":
            trans.append(_formula(c, vocab))
        elif c.key == "fairness":
            if ";" not in c.text:
                raise SpecError("fairness needs 'assumption ; guarantee'", c.line, c.col)
            a, g = c.text.split(";", 1)
            fair.append((_formula(Clause(c.key, a, c.line, c.col), vocab),
                         _formula(Clause(c.key, g, c.line, c.col), vocab)))
        elif c.key == "property":
            if prop is not None:
                raise SpecError("component has more than one property", c.line, c.col)
            prop = _formula(c, vocab)
    its = ITS(name, tuple(inputs), tuple(outputs), A.conj(*init), A.conj(*trans), tuple(fair))
    issues = validate(its)
    if issues:
        raise SpecError(f"component {name}: " + "; ".join(f"{i.code}: {i.message}" for i in issues), line)
    return ComponentSpec(its, prop, line)


_CONNECT = re.compile(r"^(\w+)\.(\w+)\s*->\s*(\w+)\.(\w+)$")


def parse_spec(text: str) -> SystemSpec:
    comps = {}
    system = None
    for kind, name, line, raw in _blocks(text):
        clauses = [Clause(k, t, l, c) for k, t, l, c in raw]
        if kind == "component":
            if name in comps:
                raise SpecError(f"component {name!r} defined twice", line)
            comps[name] = _component(name, line, clauses)
        else:
            if system is not None:
                raise SpecError("more than one system block", line)
            system = (line, clauses)
    if system is None:
        return SystemSpec(comps, tuple(comps))
    line, clauses = system
    order, conns, sched, assume, prop, mode = [], [], [], [], None, RewriteMode.OPTIMIZED
    for c in clauses:
        if c.key == "components":
            for n in c.text.replace(",", " ").split():
                if n not in comps:
                    raise SpecError(f"unknown component {n!r}", c.line, c.col)
                order.append(n)
        elif c.key == "connect":
            m = _CONNECT.match(" ".join(c.text.split()))
            if not m:
                raise SpecError("connect expects 'a.x -> b.y'", c.line, c.col)
            conns.append(Connection(*m.groups(), c.line))
        elif c.key == "schedule":
            sched.append(c)
        elif c.key == "assume":
            assume.append(c)
        elif c.key == "property":
            if prop is not None:
                raise SpecError("system has more than one property", c.line, c.col)
            prop = c
        elif c.key == "mode":
            key = c.text.strip()
            if key not in MODES:
                raise SpecError(f"unknown mode {key!r} (base, opt or fair)", c.line, c.col)
            mode = MODES[key]
    if not order:
        order = list(comps)
    seen = set()
    for cn in conns:
        for comp, var, io in ((cn.src, cn.src_var, A.OUTPUT), (cn.dst, cn.dst_var, A.INPUT)):
            if comp not in order:
                raise SpecError(f"connection mentions {comp!r}, which is not in the system", cn.line)
            d = comps[comp].its.vocab.get(var)
            if d is None or d.io != io:
                raise SpecError(f"{comp}.{var} is not an {io}", cn.line)
        if (cn.dst, cn.dst_var) in seen:
            raise SpecError(f"{cn.dst}.{cn.dst_var} is connected twice", cn.line)
        seen.add((cn.dst, cn.dst_var))
        if comps[cn.src].its.vocab[cn.src_var].sort != comps[cn.dst].its.vocab[cn.dst_var].sort:
            raise SpecError(f"sorts of {cn.src}.{cn.src_var} and {cn.dst}.{cn.dst_var} differ", cn.line)
    spec = SystemSpec(comps, tuple(order), tuple(conns), mode, tuple(sched), tuple(assume), prop)
    try:
        spec.composed()
        spec.schedule, spec.assumptions, spec.property
    except ParseError:
        raise
    except ValueError as e:
        raise SpecError(str(e), line) from None
    return spec


def load_spec(path) -> SystemSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())
