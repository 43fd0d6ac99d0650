"""Textual model format.

Example::

    location W { invariant x < 3; initial; }
    edge pW from W guard x > 1 && x < 3 {
        to S prob (3*x - 3)/8;
        to F reset prob 1/2;
        ...
    }

``parse`` collects every error it can find before giving up and raises
:class:`ParseFailure` carrying the list.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from .model import AffineExpr, Atom, Cdpta, ClockConstraint, InvariantSpec, Outcome, ProbEdge

KEYWORDS = {"location", "edge", "from", "guard", "to", "reset", "prob", "invariant", "initial", "true"}
ERROR_KINDS = ("SYNTAX", "NONLINEAR_EXPR", "UNKNOWN_IDENT", "DUPLICATE", "BAD_RATIONAL")


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    start: int
    end: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.span}: {self.kind}: {self.message}"


class ParseFailure(ValueError):
    def __init__(self, errors: List[ParseError]) -> None:
        super().__init__("\n".join(str(e) for e in errors))
        self.errors = errors


@dataclass(frozen=True)
class Token:
    kind: str  # NAT, DECIMAL, IDENT, KW, OP, EOF, BAD
    text: str
    span: SourceSpan


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)|(?P<comment>#[^\n]*)"
    r"|(?P<DECIMAL>\d+\.\d*)|(?P<NAT>\d+)"
    r"|(?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<OP><=|>=|&&|[<>+\-*/(){};])"
)


def tokenize(text: str) -> Tuple[List[Token], List[ParseError]]:
    tokens, errors = [], []
    pos, line, line_start, byte = 0, 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            ch = text[pos]
            nbytes = len(ch.encode("utf-8"))
            span = SourceSpan(line, pos - line_start + 1, byte, byte + nbytes)
            errors.append(ParseError(span, "SYNTAX", f"unexpected character {ch!r}"))
            pos += 1
            byte += nbytes
            continue
        lexeme = m.group(0)
        nbytes = len(lexeme.encode("utf-8"))
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            span = SourceSpan(line, pos - line_start + 1, byte, byte + nbytes)
            if kind == "IDENT" and lexeme in KEYWORDS:
                kind = "KW"
            tokens.append(Token(kind, lexeme, span))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rindex("\n") + 1
        pos = m.end()
        byte += nbytes
    end = SourceSpan(line, pos - line_start + 1, byte, byte)
    tokens.append(Token("EOF", "", end))
    return tokens, errors


class _Syntax(Exception):
    pass


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens, self.errors = tokenize(text)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("KW", "OP", "IDENT")

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.i += 1
        return t

    def error(self, kind: str, message: str, span: Optional[SourceSpan] = None) -> None:
        self.errors.append(ParseError(span or self.tok.span, kind, message))

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, message: str) -> None:
        found = self.tok.text or "end of input"
        self.error("SYNTAX", f"{message}, found {found!r}")
        raise _Syntax()

    def ident(self) -> Token:
        if self.tok.kind != "IDENT":
            self.fail("expected identifier")
        return self.advance()

    def nat(self) -> int:
        if self.tok.kind == "DECIMAL":
            self.error("BAD_RATIONAL", f"decimal literal {self.tok.text!r}; write rationals as INT/NAT")
            self.advance()
            return 0
        if self.tok.kind != "NAT":
            self.fail("expected natural number")
        return int(self.advance().text)

    def sync(self) -> None:
        while self.tok.kind != "EOF" and not (self.tok.kind == "KW" and self.tok.text in ("location", "edge")):
            self.advance()

    # grammar
    def model(self):
        locations, edges, initials = [], [], []
        while self.tok.kind != "EOF":
            try:
                if self.at("location"):
                    locations.append(self.location(initials))
                elif self.at("edge"):
                    edges.append(self.edge())
                else:
                    self.fail("expected 'location' or 'edge'")
            except _Syntax:
                self.sync()
        return locations, edges, initials

    def location(self, initials):
        self.expect("location")
        name = self.ident()
        self.expect("{")
        self.expect("invariant")
        self.expect("x")
        if self.at("<") or self.at("<="):
            strict = self.advance().text == "<"
        else:
            self.fail("expected '<' or '<=' in invariant")
        bound = self.nat()
        self.expect(";")
        if self.at("initial"):
            initials.append(self.advance())
            self.expect(";")
        self.expect("}")
        return name, InvariantSpec(strict, bound)

    def edge(self):
        self.expect("edge")
        eid = self.ident()
        self.expect("from")
        source = self.ident()
        self.expect("guard")
        guard = self.conj()
        self.expect("{")
        outcomes = [self.outcome()]
        while not self.at("}"):
            if self.tok.kind == "EOF":
                self.fail("expected '}'")
            outcomes.append(self.outcome())
        self.expect("}")
        return eid, source, guard, outcomes

    def conj(self) -> ClockConstraint:
        if self.at("true"):
            self.advance()
            return ClockConstraint()
        atoms = [self.atom()]
        while self.at("&&"):
            self.advance()
            atoms.append(self.atom())
        return ClockConstraint(tuple(atoms))

    def atom(self) -> Atom:
        self.expect("x")
        if not any(self.at(r) for r in ("<", "<=", ">", ">=")):
            self.fail("expected comparison operator")
        rel = self.advance().text
        return Atom(rel, self.nat())

    def outcome(self):
        self.expect("to")
        target = self.ident()
        reset = False
        if self.at("reset"):
            self.advance()
            reset = True
        self.expect("prob")
        start = self.tok.span
        expr = self.linexpr()
        self.expect(";")
        return target, reset, expr, start

    # linear arithmetic: values are (c, d) meaning c + d*x, or None after a reported error
    def linexpr(self):
        acc = self.term()
        while self.at("+") or self.at("-"):
            sign = 1 if self.advance().text == "+" else -1
            rhs = self.term()
            acc = None if acc is None or rhs is None else (acc[0] + sign * rhs[0], acc[1] + sign * rhs[1])
        return acc

    def term(self):
        acc = self.factor()
        while self.at("*") or self.at("/"):
            op = self.advance()
            if op.text == "*":
                rhs = self.factor()
                if acc is None or rhs is None:
                    acc = None
                elif acc[1] != 0 and rhs[1] != 0:
                    self.error("NONLINEAR_EXPR", "product of two terms in x", op.span)
                    acc = None
                elif acc[1] == 0:
                    acc = (acc[0] * rhs[0], acc[0] * rhs[1])
                else:
                    acc = (acc[0] * rhs[0], acc[1] * rhs[0])
            else:
                if self.at("x") or self.at("("):
                    self.error("NONLINEAR_EXPR", "division is only allowed by a natural-number literal", op.span)
                    self.factor()
                    acc = None
                    continue
                span = self.tok.span
                denom = self.nat()
                if denom == 0:
                    self.error("BAD_RATIONAL", "division by zero", span)
                    acc = None
                elif acc is not None:
                    acc = (acc[0] / denom, acc[1] / denom)
        return acc

    def factor(self):
        if self.at("-") or self.at("+"):
            sign = -1 if self.advance().text == "-" else 1
            val = self.factor()
            return None if val is None else (sign * val[0], sign * val[1])
        if self.tok.kind == "NAT":
            return (Fraction(int(self.advance().text)), Fraction(0))
        if self.tok.kind == "DECIMAL":
            self.error("BAD_RATIONAL", f"decimal literal {self.tok.text!r}; write rationals as INT/NAT")
            self.advance()
            return None
        if self.at("x"):
            self.advance()
            return (Fraction(0), Fraction(1))
        if self.at("("):
            self.advance()
            val = self.linexpr()
            self.expect(")")
            return val
        self.fail("expected number, 'x' or '('")


def parse(text: str) -> Cdpta:
    """Parse model text into an (unvalidated) :class:`Cdpta`."""
    p = _Parser(text)
    locations, edges, initials = p.model()
    errors = p.errors

    locs = {}
    for name_tok, inv in locations:
        if name_tok.text in locs:
            errors.append(ParseError(name_tok.span, "DUPLICATE", f"location {name_tok.text!r} declared twice"))
        else:
            locs[name_tok.text] = inv
    if len(initials) > 1:
        for t in initials[1:]:
            errors.append(ParseError(t.span, "DUPLICATE", "more than one initial location"))
    if not initials and not errors:
        errors.append(ParseError(p.tok.span, "SYNTAX", "no location is marked initial"))

    built, seen = [], set()
    for eid, source, guard, outcomes in edges:
        ok = True
        if eid.text in seen:
            errors.append(ParseError(eid.span, "DUPLICATE", f"edge {eid.text!r} declared twice"))
            ok = False
        seen.add(eid.text)
        if source.text not in locs:
            errors.append(ParseError(source.span, "UNKNOWN_IDENT", f"unknown location {source.text!r}"))
            ok = False
        outs, keys = [], set()
        for target, reset, expr, span in outcomes:
            if target.text not in locs:
                errors.append(ParseError(target.span, "UNKNOWN_IDENT", f"unknown location {target.text!r}"))
                ok = False
            if (reset, target.text) in keys:
                errors.append(ParseError(target.span, "DUPLICATE", f"outcome to {target.text!r} repeated"))
                ok = False
            keys.add((reset, target.text))
            if expr is None:
                ok = False
            else:
                outs.append(Outcome(reset, target.text, AffineExpr(expr[0], expr[1])))
        if ok:
            built.append(ProbEdge(eid.text, source.text, guard, tuple(outs)))

    if errors:
        raise ParseFailure(sorted(errors, key=lambda e: e.span.start))
    # the initial location is the one whose block carried the marker
    initial = _initial_name(locations, initials[0])
    return Cdpta(locs, tuple(built), initial)


def _initial_name(locations, marker: Token) -> str:
    best = None
    for name_tok, _ in locations:
        if name_tok.span.start < marker.span.start:
            best = name_tok.text
    return best


def format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def render_affine(expr: AffineExpr) -> str:
    if expr.d == 0:
        return format_fraction(expr.c)
    slope = f"{format_fraction(abs(expr.d))}*x"
    if expr.c == 0:
        return slope if expr.d > 0 else f"-{slope}"
    return f"{format_fraction(expr.c)} {'+' if expr.d > 0 else '-'} {slope}"


def render(model: Cdpta) -> str:
    lines = []
    for name in sorted(model.locations):
        inv = model.locations[name]
        lines.append(f"location {name} {{")
        lines.append(f"  invariant {inv};")
        if name == model.initial:
            lines.append("  initial;")
        lines.append("}")
    for e in sorted(model.edges, key=lambda e: e.id):
        lines.append(f"edge {e.id} from {e.source} guard {e.guard} {{")
        for o in e.outcomes:
            reset = " reset" if o.reset else ""
            lines.append(f"  to {o.target}{reset} prob {render_affine(o.expr)};")
        lines.append("}")
    return "\n".join(lines) + "\n"
