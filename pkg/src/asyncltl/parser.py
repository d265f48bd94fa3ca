"""Concrete syntax for formulas and terms.

Operators, loosest first::

    <->   ->   |   &   U R S   unary (! X Y Z F G O H, F<=n, X^n ...)
    comparisons (= != < <= > >=)   + -   *   postfix (' @F @P)

``|``, ``&``, ``U``, ``R``, ``S`` and ``->`` associate to the right.  ``v'`` is sugar for
``next(v)``.  ``@F`` and ``@P`` take a parenthesised formula, an identifier,
a boolean literal or a negation of one of these.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import ast as A

KEYWORDS_UNARY = {"X", "Y", "Z", "F", "G", "O", "H"}
KEYWORDS_BINARY = {"U": A.Until, "R": A.Release, "S": A.Since}
RESERVED = KEYWORDS_UNARY | set(KEYWORDS_BINARY) | {"next", "ite", "true", "false", "default"}


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Token:
    kind: str  # "id", "num", "op", "eof"
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><->|->|<=|>=|!=|@F|@P|[-+*()<>=!&|,'^:])
    """,
    re.VERBOSE,
)


def tokenize(text: str, line: int = 1, col: int = 1) -> list:
    tokens = []
    pos = 0
    line_start = -(col - 1)
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class Parser:
    def __init__(self, text: str, line: int = 1, col: int = 1):
        self.tokens = tokenize(text, line, col)
        self.i = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "id") and self.tok.text == text

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def error(self, message: str, tok: Token = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.col)

    def done(self):
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")

    # -- formulas
    def formula(self) -> A.Formula:
        return self.iff()

    def iff(self):
        left = self.implies()
        while self.at("<->"):
            self.advance()
            left = A.Iff(left, self.implies())
        return left

    def implies(self):
        left = self.disjunction()
        if self.at("->"):
            self.advance()
            return A.Implies(left, self.implies())
        return left

    def disjunction(self):
        left = self.conjunction()
        if self.at("|"):
            self.advance()
            return A.Or(left, self.disjunction())
        return left

    def conjunction(self):
        left = self.binary_temporal()
        if self.at("&"):
            self.advance()
            return A.And(left, self.conjunction())
        return left

    def binary_temporal(self):
        left = self.unary()
        if self.tok.kind == "id" and self.tok.text in KEYWORDS_BINARY:
            cls = KEYWORDS_BINARY[self.advance().text]
            return cls(left, self.binary_temporal())
        return left

    def unary(self):
        if self.at("!"):
            self.advance()
            return A.Not(self.unary())
        t = self.tok
        if t.kind == "id" and t.text in KEYWORDS_UNARY:
            self.advance()
            if self.at("<=") and t.text in "FGOH":
                self.advance()
                n = self._number()
                return A.Bounded(t.text, n, self.unary())
            if self.at("^") and t.text in "XYZ":
                self.advance()
                n = self._number()
                return A.Repeated(t.text, n, self.unary())
            arg = self.unary()
            return {
                "X": A.Next, "Y": A.Yesterday, "Z": A.WeakYesterday, "F": A.Eventually,
                "G": A.Always, "O": A.Once, "H": A.Historically,
            }[t.text](arg)
        return self.comparison()

    def _number(self) -> int:
        if self.tok.kind != "num":
            self.error("expected a number")
        return int(self.advance().text)

    def comparison(self):
        start = self.tok
        left = self.additive()
        if self.tok.kind == "op" and self.tok.text in A.CMP_OPS:
            op = self.advance().text
            right = self.additive()
            return A.Cmp(op, self._as_term(left, start), self._as_term(right, start))
        if isinstance(left, A.Formula):
            return left
        if isinstance(left, A.Lit) and isinstance(left.value, bool):
            return A.Const(left.value)
        return A.Atom(left)

    # -- terms (may return a Formula when a parenthesised formula is found)
    def _as_term(self, node, tok: Token) -> A.Term:
        if isinstance(node, A.Term):
            return node
        if isinstance(node, A.Atom):
            return node.term
        if isinstance(node, A.Const):
            return A.Lit(node.value)
        self.error("a formula cannot be used as a term here", tok)

    def additive(self):
        start = self.tok
        left = self.multiplicative()
        while self.at("+") or (self.at("-") and not self.at("->")):
            op = self.advance().text
            right = self.multiplicative()
            left = A.Func(op, (self._as_term(left, start), self._as_term(right, start)))
        return left

    def multiplicative(self):
        start = self.tok
        left = self.postfix()
        while self.at("*"):
            self.advance()
            right = self.postfix()
            left = A.Func("*", (self._as_term(left, start), self._as_term(right, start)))
        return left

    def postfix(self):
        start = self.tok
        node = self.primary()
        while True:
            if self.at("'"):
                self.advance()
                node = A.NextVal(self._as_term(node, start))
            elif self.at("@F") or self.at("@P"):
                cls = A.AtNext if self.advance().text == "@F" else A.AtLast
                cond = self.at_argument()
                node = cls(self._as_term(node, start), cond, self.default_clause())
            else:
                return node

    def at_argument(self) -> A.Formula:
        if self.at("!"):
            self.advance()
            return A.Not(self.at_argument())
        if self.at("("):
            self.advance()
            f = self.formula()
            self.expect(")")
            return f
        t = self.tok
        if t.kind == "id" and t.text not in RESERVED - {"true", "false"}:
            self.advance()
            if t.text in ("true", "false"):
                return A.Const(t.text == "true")
            return A.Atom(A.Var(t.text))
        self.error("expected a condition after @F/@P")

    def default_clause(self):
        # optional ``default <literal>`` after next(...), ite(...), @F, @P
        if self.at("default"):
            self.advance()
            t = self.advance()
            if t.kind == "num":
                return int(t.text)
            if t.text == "-" and self.tok.kind == "num":
                return -int(self.advance().text)
            if t.text in ("true", "false"):
                return t.text == "true"
            if t.kind == "id":
                return t.text
            self.error("expected a literal after 'default'", t)
        return None

    def primary(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return A.Lit(int(t.text))
        if self.at("-"):
            self.advance()
            arg = self.postfix()
            if isinstance(arg, A.Lit) and isinstance(arg.value, int) and not isinstance(arg.value, bool):
                return A.Lit(-arg.value)
            return A.Func("neg", (self._as_term(arg, t),))
        if self.at("("):
            self.advance()
            node = self.formula()
            self.expect(")")
            if isinstance(node, A.Atom):
                return node.term
            return node
        if t.kind == "id":
            if t.text in ("true", "false"):
                self.advance()
                return A.Lit(t.text == "true")
            if t.text == "next":
                self.advance()
                self.expect("(")
                arg = self.additive()
                self.expect(")")
                return A.NextVal(self._as_term(arg, t), self.default_clause())
            if t.text == "ite":
                self.advance()
                self.expect("(")
                cond = self.formula()
                self.expect(",")
                a = self.additive()
                self.expect(",")
                b = self.additive()
                self.expect(")")
                return A.Ite(cond, self._as_term(a, t), self._as_term(b, t), self.default_clause())
            if t.text in RESERVED:
                self.error(f"unexpected keyword {t.text!r}")
            self.advance()
            return A.Var(t.text)
        self.error(f"unexpected {t.text or 'end of input'!r}")


def parse_formula(text: str, vocab: A.Vocabulary = None) -> A.Formula:
    p = Parser(text)
    f = p.formula()
    p.done()
    if vocab is not None:
        f = resolve(f, vocab)
    return f


def parse_term(text: str, vocab: A.Vocabulary = None) -> A.Term:
    p = Parser(text)
    start = p.tok
    t = p._as_term(p.additive(), start)
    p.done()
    if vocab is not None:
        t = resolve(t, vocab)
    return t


def parse(text: str, vocab: A.Vocabulary = None):
    """Parse either a formula or, if the text is a non-boolean term, a term."""
    f = parse_formula(text, None)
    if isinstance(f, A.Atom) and vocab is not None:
        t = resolve(f.term, vocab)
        from .sorts import sort_of
        if sort_of(t, vocab).kind != "bool":
            return t
        return A.Atom(t)
    return resolve(f, vocab) if vocab is not None else f


def resolve(node, vocab: A.Vocabulary):
    """Check identifiers against the vocabulary, turn enum literals into
    constants and check sorts."""
    from .sorts import resolve_names, check_sorts
    node = resolve_names(node, vocab)
    check_sorts(node, vocab)
    return node
