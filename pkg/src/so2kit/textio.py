"""Line-oriented text grammar for formulas: the wire format of the CLI.

Grammar (one formula per file or ``--expr`` argument, ``#`` starts a line
comment)::

    formula  := expr
    expr     := ('exists'|'forall') var (',' var)* expr   | iff
    var      := NAME [ '/' INT ]          # arity defaults to 0
    iff      := imp  (('<->' | '=') imp)*
    imp      := or   ['->' imp]           # right-associative
    or       := and  ('|' and)*
    and      := unary ('&' unary)*
    unary    := '~' unary | primary
    primary  := '0' | '1' | '(' expr ')' | NAME [ '(' term (',' term)* ')' ]
    term     := '0' | '1' | NAME [ '(' term (',' term)* ')' ]

Precedence is ``~ > & > | > -> > <->``; a quantifier extends as far right
as possible.  ``<->`` and ``=`` are synonyms.  Parsing renames bound
variables so they are pairwise distinct and distinct from free names.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    And,
    Const,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    So2Error,
    Term,
    Var,
)


class ParseError(So2Error):
    """Syntax or scoping error, with 1-based source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>\d+)
  | (?P<op><->|->|[~&|()=,/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # name / int / op / eof
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


@dataclass
class SourceFormula:
    """A parsed formula together with its source text and term locations."""

    text: str
    formula: Formula
    term_spans: list = field(default_factory=list)  # [(Term, (line, col)), ...]


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.scopes: list[dict[str, Var]] = []
        self.free: dict[str, Var] = {}
        self.bound_names: set[str] = set()
        self.term_spans: list = []
        self._fresh = 0

    # -- token plumbing ----------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def take(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str) -> Token:
        tok = self.take()
        if tok.value != value:
            raise ParseError(f"expected {value!r}, found {tok.value or 'end of input'!r}",
                             tok.line, tok.col)
        return tok

    def error(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.col)

    # -- scoping -----------------------------------------------------------

    def _lookup(self, name: str) -> Optional[Var]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def _fresh_name(self, base: str) -> str:
        taken = self.bound_names | set(self.free)
        while True:
            self._fresh += 1
            cand = f"{base}__{self._fresh}"
            if cand not in taken:
                return cand

    def _bind(self, name: str, arity: int, tok: Token) -> Var:
        if name in self.free:
            raise ParseError(f"cannot rebind {name!r}: it already occurs free",
                             tok.line, tok.col)
        actual = name
        if name in self.bound_names:
            actual = self._fresh_name(name)
        var = Var(actual, arity)
        self.bound_names.add(actual)
        self.scopes[-1][name] = var
        return var

    # -- grammar -----------------------------------------------------------

    def parse(self) -> Formula:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected {tok.value!r} after formula", tok.line, tok.col)
        return node

    def expr(self) -> Formula:
        tok = self.peek()
        if tok.kind == "name" and tok.value in ("exists", "forall"):
            return self.quantified()
        return self.iff()

    def quantified(self) -> Formula:
        kw = self.take()
        self.scopes.append({})
        variables = [self.bind_var()]
        while self.peek().value == ",":
            self.take()
            variables.append(self.bind_var())
        body = self.expr()
        self.scopes.pop()
        node = body
        ctor = Exists if kw.value == "exists" else Forall
        for var in reversed(variables):
            node = ctor(var, node)
        return node

    def bind_var(self) -> Var:
        tok = self.take()
        if tok.kind != "name" or tok.value in ("exists", "forall"):
            raise ParseError("expected a variable name", tok.line, tok.col)
        arity = 0
        if self.peek().value == "/":
            self.take()
            num = self.take()
            if num.kind != "int":
                raise ParseError("expected an arity after '/'", num.line, num.col)
            arity = int(num.value)
        return self._bind(tok.value, arity, tok)

    def iff(self) -> Formula:
        node = self.imp()
        while self.peek().value in ("<->", "="):
            self.take()
            node = Iff(node, self.imp())
        return node

    def imp(self) -> Formula:
        node = self.disjunction()
        if self.peek().value == "->":
            self.take()
            return Implies(node, self.imp())
        return node

    def disjunction(self) -> Formula:
        items = [self.conjunction()]
        while self.peek().value == "|":
            self.take()
            items.append(self.conjunction())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conjunction(self) -> Formula:
        items = [self.unary()]
        while self.peek().value == "&":
            self.take()
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self) -> Formula:
        if self.peek().value == "~":
            self.take()
            return Not(self.unary())
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok.value == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "int":
            self.take()
            if tok.value in ("0", "1"):
                return Const(int(tok.value))
            raise ParseError(f"{tok.value!r} is not a constant (use 0 or 1)",
                             tok.line, tok.col)
        if tok.kind == "name":
            if tok.value in ("exists", "forall"):
                raise ParseError("quantifier needs parentheses here", tok.line, tok.col)
            return self.term()
        raise ParseError(f"unexpected {tok.value or 'end of input'!r}", tok.line, tok.col)

    def term(self) -> Formula:
        tok = self.take()
        if tok.kind == "int":
            if tok.value in ("0", "1"):
                return Const(int(tok.value))
            raise ParseError(f"{tok.value!r} is not a constant", tok.line, tok.col)
        if tok.kind != "name" or tok.value in ("exists", "forall"):
            raise ParseError("expected a term", tok.line, tok.col)
        args: list[Formula] = []
        if self.peek().value == "(":
            self.take()
            args.append(self.term())
            while self.peek().value == ",":
                self.take()
                args.append(self.term())
            self.expect(")")
        var = self._resolve(tok, len(args))
        term = Term(var, tuple(args))
        self.term_spans.append((term, (tok.line, tok.col)))
        return term

    def _resolve(self, tok: Token, arity: int) -> Var:
        name = tok.value
        var = self._lookup(name)
        if var is not None:
            if var.arity != arity:
                raise ParseError(
                    f"{name!r} is bound with arity {var.arity} but used with {arity}",
                    tok.line, tok.col)
            return var
        if name in self.free:
            var = self.free[name]
            if var.arity != arity:
                raise ParseError(
                    f"free name {name!r} used with arities {var.arity} and {arity}",
                    tok.line, tok.col)
            return var
        if name in self.bound_names:
            # Out of scope now; a free use after a binder would be ambiguous.
            raise ParseError(f"{name!r} is quantified elsewhere and cannot occur free",
                             tok.line, tok.col)
        var = Var(name, arity)
        self.free[name] = var
        return var


def parse(text: str) -> Formula:
    """Parse a formula; bound variables come out globally distinct."""
    return _Parser(text).parse()


def parse_source(text: str) -> SourceFormula:
    parser = _Parser(text)
    formula = parser.parse()
    return SourceFormula(text=text, formula=formula, term_spans=parser.term_spans)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_LEVEL_IFF = 1
_LEVEL_IMP = 2
_LEVEL_OR = 3
_LEVEL_AND = 4
_LEVEL_UNARY = 5


def _print_term(node: Formula) -> str:
    if isinstance(node, Const):
        return str(node.value)
    if isinstance(node, Term):
        if not node.args:
            return node.head.name
        return f"{node.head.name}({', '.join(_print_term(a) for a in node.args)})"
    raise So2Error(f"cannot print {type(node).__name__} as a term argument")


def _print(node: Formula, level: int) -> str:
    if isinstance(node, (Term, Const)):
        return _print_term(node)
    if isinstance(node, Not):
        return "~" + _print(node.body, _LEVEL_UNARY)
    if isinstance(node, And):
        if not node.items:
            return "1"
        # Children that are themselves conjunctions keep their parentheses
        # so the parse tree survives the round trip exactly.
        text = " & ".join(_print(i, _LEVEL_AND + 1) for i in node.items)
        return f"({text})" if level > _LEVEL_AND else text
    if isinstance(node, Or):
        if not node.items:
            return "0"
        text = " | ".join(_print(i, _LEVEL_OR + 1) for i in node.items)
        return f"({text})" if level > _LEVEL_OR else text
    if isinstance(node, Implies):
        text = f"{_print(node.lhs, _LEVEL_IMP + 1)} -> {_print(node.rhs, _LEVEL_IMP)}"
        return f"({text})" if level > _LEVEL_IMP else text
    if isinstance(node, Iff):
        text = f"{_print(node.lhs, _LEVEL_IFF + 1)} <-> {_print(node.rhs, _LEVEL_IFF + 1)}"
        return f"({text})" if level > _LEVEL_IFF else text
    if isinstance(node, (Exists, Forall)):
        parts = []
        while isinstance(node, (Exists, Forall)):
            kw = "exists" if isinstance(node, Exists) else "forall"
            suffix = f"/{node.var.arity}" if node.var.arity else ""
            parts.append(f"{kw} {node.var.name}{suffix}")
            node = node.body
        matrix = f"({_print(node, 0)})"
        text = " ".join(parts) + " " + matrix
        return f"({text})" if level > 0 else text
    raise So2Error(f"cannot print {type(node).__name__} nodes")


def print_formula(formula: Formula) -> str:
    """Render a formula in the grammar above; parse(print_formula(phi)) is
    alpha-equivalent to phi."""
    return _print(formula, 0)
