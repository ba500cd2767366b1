"""Problem files: a tiny line-oriented format for polynomial inequality systems.

    vars: x y
    g1: -(1 - x^2 - y^2)*(4 - (x-4)^2 - y^2)
    g2: 1 - y
    options: degree=4 d_cap=12

Each constraint line reads ``label: expr`` and means ``expr >= 0``.  Numbers are
integers, decimals (``0.05``, ``1e-3``) or rationals (``3/4``) and are all read as
exact fractions.  Multiplication must be written out; ``2x`` is an error.  Blank
lines and ``#`` comments are ignored.

Expressions are parsed by precedence climbing (Pratt style) with binding
powers ``+ -`` < ``*`` < unary minus < ``^``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from ..polyalg import PolySystem, Polynomial, _fmt_rational

MAX_EXPONENT = 64
RESERVED = ("vars", "options")

_TOKEN = re.compile(r"""
    (?P<ws>[ \t]+)
  | (?P<rat>\d+/\d+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*^()=:])
""", re.VERBOSE)


class ProblemSyntaxError(ValueError):
    """Parse failure with a 1-based position and the offending source line."""

    def __init__(self, message: str, line: int, column: int, source: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        super().__init__(self.render())

    def render(self) -> str:
        out = f"line {self.line}, column {self.column}: {self.message}"
        if self.source:
            out += f"\n  {self.source}\n  {' ' * (self.column - 1)}^"
        return out


@dataclass(frozen=True)
class Token:
    kind: str       # "num", "ident", "op" or "end"
    text: str
    column: int
    value: Fraction | None = None


def _number(text: str) -> Fraction:
    if "/" in text:
        p, q = text.split("/")
        if int(q) == 0:
            raise ZeroDivisionError
        return Fraction(int(p), int(q))
    return Fraction(text)          # exact for decimals and scientific notation


def tokenize(text: str, line: int = 1) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ProblemSyntaxError(f"unexpected character {text[pos]!r}", line, pos + 1, text)
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            if kind in ("num", "rat"):
                try:
                    out.append(Token("num", tok, pos + 1, _number(tok)))
                except ZeroDivisionError:
                    raise ProblemSyntaxError("zero denominator", line, pos + 1, text) from None
            else:
                out.append(Token(kind, tok, pos + 1))
        pos = m.end()
    out.append(Token("end", "", len(text) + 1))
    return out


# ---------------------------------------------------------------------------
# expressions

_INFIX = {"+": 10, "-": 10, "*": 20}
_UNARY = 25
_POWER = 30


class _ExprParser:
    def __init__(self, tokens: list[Token], names: dict[str, int] | None, n: int, line: int, source: str):
        self.tokens = tokens
        self.i = 0
        self.names = names
        self.n = n
        self.line = line
        self.source = source

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ProblemSyntaxError(message, self.line, tok.column, self.source)

    def peek(self) -> Token:
        return self.tokens[self.i]

    def take(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self) -> Polynomial:
        value = self.expr(0)
        tok = self.peek()
        if tok.kind != "end":
            if tok.kind in ("num", "ident") or tok.text == "(":
                self.error("implicit multiplication is not allowed; write '*'", tok)
            self.error(f"unexpected {tok.text!r}", tok)
        return value

    def expr(self, rbp: int) -> Polynomial:
        left = self.prefix(self.take())
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text == "^":
                if _POWER <= rbp:
                    break
                self.take()
                left = self.power(left, tok)
                continue
            lbp = _INFIX.get(tok.text) if tok.kind == "op" else None
            if lbp is None or lbp <= rbp:
                break
            self.take()
            right = self.expr(lbp)
            if tok.text == "+":
                left = left + right
            elif tok.text == "-":
                left = left - right
            else:
                left = left * right
        return left

    def power(self, base: Polynomial, caret: Token) -> Polynomial:
        tok = self.take()
        if tok.kind != "num" or tok.value.denominator != 1 or not re.fullmatch(r"\d+", tok.text):
            self.error("exponent must be a nonnegative integer", tok)
        k = int(tok.value)
        if k > MAX_EXPONENT:
            self.error(f"exponent {k} exceeds the limit {MAX_EXPONENT}", tok)
        if self.peek().text == "^":
            self.error("chained exponents are ambiguous; use parentheses")
        return base ** k

    def prefix(self, tok: Token) -> Polynomial:
        if tok.kind == "num":
            return Polynomial.constant(self.n, tok.value)
        if tok.kind == "ident":
            if self.names is None or tok.text not in self.names:
                self.error(f"unknown identifier {tok.text!r}", tok)
            return Polynomial.variable(self.n, self.names[tok.text])
        if tok.text == "-":
            return -self.expr(_UNARY)
        if tok.text == "+":
            return self.expr(_UNARY)
        if tok.text == "(":
            inner = self.expr(0)
            close = self.take()
            if close.text != ")":
                self.error("expected ')'", close)
            return inner
        if tok.kind == "end":
            self.error("unexpected end of expression", tok)
        self.error(f"unexpected {tok.text!r}", tok)


def parse_expression(text: str, names, line: int = 1) -> Polynomial:
    """Parse one expression over the variable names ``names``."""
    names = list(names)
    return _ExprParser(tokenize(text, line), {v: i for i, v in enumerate(names)}, len(names),
                       line, text).parse()


# ---------------------------------------------------------------------------
# whole files

@dataclass(frozen=True)
class ProblemFile:
    names: tuple[str, ...]
    labels: tuple[str, ...]
    constraints: tuple[Polynomial, ...]
    options: dict = field(default_factory=dict)

    @property
    def system(self) -> PolySystem:
        return PolySystem(self.names, self.constraints, self.labels)

    def __eq__(self, other):
        if not isinstance(other, ProblemFile):
            return NotImplemented
        return (self.names == other.names and self.labels == other.labels
                and self.constraints == other.constraints and self.options == other.options)

    def __hash__(self):
        return hash((self.names, self.labels, self.constraints))


def _strip_comment(raw: str) -> str:
    k = raw.find("#")
    return raw if k < 0 else raw[:k]


def parse_problem(text: str) -> ProblemFile:
    """Parse a whole problem file; errors carry line and column."""
    names = None
    vars_line = None
    pending = []        # (line number, label, expression tokens, source)
    labels_seen = {}
    options = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        src = _strip_comment(raw).rstrip()
        if not src.strip():
            continue
        toks = tokenize(src, lineno)
        head = toks[0]
        if head.kind != "ident" or toks[1].text != ":":
            col = toks[1].column if head.kind == "ident" else head.column
            raise ProblemSyntaxError("expected 'label:' at the start of the line", lineno, col, src)
        body = toks[2:]
        if head.text == "vars":
            if names is not None:
                raise ProblemSyntaxError("duplicate 'vars:' line", lineno, head.column, src)
            if pending or options:
                raise ProblemSyntaxError("'vars:' must come first", lineno, head.column, src)
            names = []
            for tok in body[:-1]:
                if tok.kind != "ident":
                    raise ProblemSyntaxError("expected a variable name", lineno, tok.column, src)
                if tok.text in RESERVED:
                    raise ProblemSyntaxError(f"{tok.text!r} is reserved", lineno, tok.column, src)
                if tok.text in names:
                    raise ProblemSyntaxError(f"duplicate variable {tok.text!r}", lineno, tok.column, src)
                names.append(tok.text)
            if not names:
                raise ProblemSyntaxError("no variables declared", lineno, body[-1].column, src)
            vars_line = lineno
        elif head.text == "options":
            k = 0
            while body[k].kind != "end":
                key, eq = body[k], body[k + 1]
                if key.kind != "ident" or eq.text != "=":
                    raise ProblemSyntaxError("expected key=value", lineno, key.column, src)
                sign = 1
                k += 2
                if body[k].text == "-":
                    sign = -1
                    k += 1
                val = body[k]
                if val.kind != "num":
                    raise ProblemSyntaxError("option values must be numbers", lineno, val.column, src)
                if key.text in options:
                    raise ProblemSyntaxError(f"duplicate option {key.text!r}", lineno, key.column, src)
                options[key.text] = sign * val.value
                k += 1
        else:
            if head.text in labels_seen:
                raise ProblemSyntaxError(f"duplicate label {head.text!r}", lineno, head.column, src)
            labels_seen[head.text] = lineno
            pending.append((lineno, head.text, body, src))
    # expressions are parsed once the variables are known; syntax errors still
    # point into the constraint line itself
    parsed = []
    for lineno, label, body, src in pending:
        idx = None if names is None else {v: i for i, v in enumerate(names)}
        parser = _ExprParser(body, idx, len(names or ()), lineno, src)
        try:
            parsed.append(parser.parse())
        except ProblemSyntaxError as exc:
            if names is None and exc.message.startswith("unknown identifier"):
                raise ProblemSyntaxError("missing 'vars:' line", 1, 1, "") from None
            raise
    if names is None:
        raise ProblemSyntaxError("missing 'vars:' line", 1, 1, "")
    if not parsed:
        raise ProblemSyntaxError("at least one constraint line is required", vars_line, 1, "")
    return ProblemFile(tuple(names), tuple(p[1] for p in pending), tuple(parsed), options)


def parse_system(text: str) -> PolySystem:
    return parse_problem(text).system


def read_problem(path) -> ProblemFile:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def format_problem(problem: ProblemFile | PolySystem, options: dict | None = None) -> str:
    """Canonical text: expanded polynomials, one constraint per line, LF endings."""
    if isinstance(problem, PolySystem):
        problem = ProblemFile(problem.names, problem.labels, problem.constraints, dict(options or {}))
    lines = ["vars: " + " ".join(problem.names)]
    for label, g in zip(problem.labels, problem.constraints):
        lines.append(f"{label}: {g.to_string(problem.names)}")
    if problem.options:
        parts = []
        for k, v in problem.options.items():
            v = Fraction(v)
            parts.append(f"{k}={'-' if v < 0 else ''}{_fmt_rational(abs(v))}")
        lines.append("options: " + " ".join(parts))
    return "\n".join(lines) + "\n"
