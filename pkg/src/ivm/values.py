"""Values, durations and the expression language.

Values are plain Python objects: ``bool``, ``int``, ``float``, ``str``,
``list`` (vectors), ``dict`` with string keys (maps), :class:`Duration`, and
the :data:`UNDEFINED` singleton.

Expressions are small frozen dataclasses.  :func:`evaluate` raises
:class:`NotEvaluable` when an expression has no value in the given stores;
the caller decides whether that means an error or "keep waiting".
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from typing import Any, Mapping

SECONDS = "s"
BEATS = "beats"

# unit name -> (clock, scale); a magnitude m is m*scale ticks of the clock.
# "wall" ticks are seconds, "tempo" ticks are beats.
UNITS: dict[str, tuple[str, float]] = {
    SECONDS: ("wall", 1.0),
    BEATS: ("tempo", 1.0),
}


def register_unit(name: str, clock: str, scale: float) -> None:
    if clock not in ("wall", "tempo"):
        raise ValueError(f"unknown clock {clock!r}")
    if not scale > 0:
        raise ValueError("unit scale must be positive")
    UNITS[name] = (clock, float(scale))


class NotEvaluable(Exception):
    """An expression has no value (unbound variable, type error, ...)."""


class _Undefined:
    __slots__ = ()

    def __eq__(self, other):
        return False

    def __ne__(self, other):
        return True

    def __hash__(self):
        return 0

    def __repr__(self):
        return "UNDEFINED"


UNDEFINED = _Undefined()


@dataclass(frozen=True)
class Duration:
    magnitude: float
    unit: str = SECONDS

    def __post_init__(self):
        if self.unit not in UNITS:
            raise ValueError(f"unknown time unit {self.unit!r}")
        if not math.isfinite(self.magnitude) or self.magnitude < 0:
            raise ValueError(f"invalid duration magnitude {self.magnitude!r}")

    @property
    def clock(self) -> str:
        return UNITS[self.unit][0]

    @property
    def ticks(self) -> float:
        """Magnitude expressed in the underlying clock (seconds or beats)."""
        return self.magnitude * UNITS[self.unit][1]

    def __str__(self):
        return f"{format_number(self.magnitude)} {self.unit}"


class FixedTempo:
    """Stand-in clock snapshot used when no clock module is supplied."""

    def __init__(self, bpm: float = 60.0):
        self.bpm = bpm

    def seconds(self, d: Duration) -> float:
        if d.clock == "wall":
            return d.ticks
        return d.ticks * 60.0 / self.bpm


DEFAULT_CLOCKS = FixedTempo(60.0)


# -- expression syntax -------------------------------------------------------

class Expr:
    """Base class of expression nodes."""


@dataclass(frozen=True)
class Lit(Expr):
    value: Any


@dataclass(frozen=True)
class GVar(Expr):
    name: str  # without the leading "$"


@dataclass(frozen=True)
class LVar(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "not" | "-"
    operand: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class DurLit(Expr):
    magnitude: float
    unit: str


@dataclass(frozen=True)
class Index(Expr):
    target: Expr
    key: Expr


@dataclass(frozen=True)
class VecExpr(Expr):
    items: tuple


@dataclass(frozen=True)
class MapExpr(Expr):
    items: tuple  # of (str, Expr)


ARITH = ("+", "-", "*", "/")
COMPARE = ("=", "!=", "<", "<=", ">", ">=")
LOGIC = ("and", "or")


def is_ground(e: Expr) -> bool:
    if isinstance(e, (GVar, LVar)):
        return False
    if isinstance(e, Unary):
        return is_ground(e.operand)
    if isinstance(e, Binary):
        return is_ground(e.left) and is_ground(e.right)
    if isinstance(e, Index):
        return is_ground(e.target) and is_ground(e.key)
    if isinstance(e, VecExpr):
        return all(is_ground(x) for x in e.items)
    if isinstance(e, MapExpr):
        return all(is_ground(x) for _, x in e.items)
    return True


def variables(e: Expr) -> set:
    """Return the set of GVar/LVar nodes referenced by ``e``."""
    if isinstance(e, (GVar, LVar)):
        return {e}
    if isinstance(e, Unary):
        return variables(e.operand)
    if isinstance(e, Binary):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Index):
        return variables(e.target) | variables(e.key)
    if isinstance(e, VecExpr):
        return set().union(*(variables(x) for x in e.items))
    if isinstance(e, MapExpr):
        return set().union(*(variables(x) for _, x in e.items))
    return set()


# -- evaluation --------------------------------------------------------------

def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _kind(v) -> str:
    if isinstance(v, bool):
        return "bool"
    if _is_num(v):
        return "num"
    if isinstance(v, str):
        return "str"
    if isinstance(v, Duration):
        return "dur"
    if isinstance(v, list):
        return "vec"
    if isinstance(v, dict):
        return "map"
    return "undef"


def evaluate(e: Expr, gvars: Mapping = None, lvars: Mapping = None, clocks=None):
    """Evaluate ``e``; locals are looked up in ``lvars``, ``$`` globals in ``gvars``.

    Raises NotEvaluable when ``e`` has no value.
    """
    gvars = {} if gvars is None else gvars
    lvars = {} if lvars is None else lvars
    clocks = DEFAULT_CLOCKS if clocks is None else clocks
    return _eval(e, gvars, lvars, clocks)


def _eval(e, g, l, c):
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, DurLit):
        try:
            return Duration(e.magnitude, e.unit)
        except ValueError as err:
            raise NotEvaluable(str(err)) from None
    if isinstance(e, GVar):
        if e.name not in g:
            raise NotEvaluable(f"unbound global ${e.name}")
        return g[e.name]
    if isinstance(e, LVar):
        if e.name not in l:
            raise NotEvaluable(f"unbound local {e.name}")
        return l[e.name]
    if isinstance(e, Unary):
        v = _eval(e.operand, g, l, c)
        if e.op == "not":
            if isinstance(v, bool):
                return not v
            raise NotEvaluable("'not' expects a boolean")
        if _is_num(v):
            return -v
        raise NotEvaluable("'-' expects a number")
    if isinstance(e, Binary):
        if e.op in LOGIC:
            a = _eval(e.left, g, l, c)
            if not isinstance(a, bool):
                raise NotEvaluable(f"'{e.op}' expects booleans")
            if (e.op == "and" and not a) or (e.op == "or" and a):
                return a
            b = _eval(e.right, g, l, c)
            if not isinstance(b, bool):
                raise NotEvaluable(f"'{e.op}' expects booleans")
            return b
        a = _eval(e.left, g, l, c)
        b = _eval(e.right, g, l, c)
        if e.op in ARITH:
            return _arith(e.op, a, b, c)
        return _compare(e.op, a, b, c)
    if isinstance(e, Index):
        t = _eval(e.target, g, l, c)
        k = _eval(e.key, g, l, c)
        if isinstance(t, list) and _is_num(k) and float(k).is_integer():
            i = int(k)
            if 0 <= i < len(t):
                return t[i]
            raise NotEvaluable("vector index out of range")
        if isinstance(t, dict) and isinstance(k, str):
            if k in t:
                return t[k]
            raise NotEvaluable(f"missing map key {k!r}")
        raise NotEvaluable("bad index operation")
    if isinstance(e, VecExpr):
        return [_eval(x, g, l, c) for x in e.items]
    if isinstance(e, MapExpr):
        return {k: _eval(x, g, l, c) for k, x in e.items}
    raise TypeError(f"not an expression: {e!r}")


def _dur(mag, unit):
    try:
        return Duration(mag, unit)
    except ValueError as err:
        raise NotEvaluable(str(err)) from None


def _arith(op, a, b, clocks):
    ka, kb = _kind(a), _kind(b)
    if ka == kb == "num":
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if b == 0:
            raise NotEvaluable("division by zero")
        return a / b
    if op == "+" and ka == kb == "str":
        return a + b
    if ka == kb == "dur":
        if op in ("+", "-"):
            if a.unit == b.unit:
                x, y, unit = a.magnitude, b.magnitude, a.unit
            else:
                x, y, unit = clocks.seconds(a), clocks.seconds(b), SECONDS
            return _dur(x + y if op == "+" else x - y, unit)
        if op == "/":
            sb = clocks.seconds(b)
            if sb == 0:
                raise NotEvaluable("division by zero")
            return clocks.seconds(a) / sb
    if op == "*" and {ka, kb} == {"dur", "num"}:
        d, n = (a, b) if ka == "dur" else (b, a)
        return _dur(d.magnitude * n, d.unit)
    if op == "/" and ka == "dur" and kb == "num":
        if b == 0:
            raise NotEvaluable("division by zero")
        return _dur(a.magnitude / b, a.unit)
    raise NotEvaluable(f"bad operands for '{op}': {ka}, {kb}")


def _compare(op, a, b, clocks):
    ka, kb = _kind(a), _kind(b)
    if ka == kb == "dur":
        a, b = clocks.seconds(a), clocks.seconds(b)
    elif op in ("=", "!="):
        same = ka == kb and ka != "undef" and a == b
        return same if op == "=" else not same
    elif not (ka == kb and ka in ("num", "str")):
        raise NotEvaluable(f"cannot compare {ka} with {kb}")
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def evaluate_duration(e: Expr, gvars=None, lvars=None, clocks=None) -> Duration:
    """Evaluate ``e`` as a delay; a bare non-negative number counts as beats."""
    v = evaluate(e, gvars, lvars, clocks)
    if isinstance(v, Duration):
        return v
    if _is_num(v):
        if math.isfinite(v) and v >= 0:
            return Duration(float(v), BEATS)
        raise NotEvaluable(f"invalid delay {v!r}")
    raise NotEvaluable(f"not a duration: {format_value(v)}")


# -- concrete syntax ---------------------------------------------------------

class ExprSyntaxError(ValueError):
    pass


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<gvar>\$[A-Za-z_][A-Za-z0-9_]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|==|!=|<=|>=|[-+*/=<>()\[\]{},:])
""", re.VERBOSE)

KEYWORDS = {"and", "or", "not", "true", "false", "undefined", "jump", "for"}


def tokenize(text: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r} at column {pos + 1}")
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group()))
        pos = m.end()
    return out


class Parser:
    """Recursive-descent parser over a token list.

    Precedence, loosest first: or, and, not, comparison, + -, * /, unary -,
    indexing.
    """

    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self, offset=0):
        j = self.i + offset
        return self.toks[j] if j < len(self.toks) else (None, None)

    def next(self):
        tok = self.peek()
        if tok[0] is None:
            raise ExprSyntaxError("unexpected end of input")
        self.i += 1
        return tok

    def accept(self, text):
        if self.peek()[1] == text and self.peek()[0] in ("op", "name"):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            got = self.peek()[1]
            raise ExprSyntaxError(f"expected {text!r}, got {got!r}")

    def at_end(self):
        return self.i >= len(self.toks)

    def expr(self):
        left = self.conj()
        while self.accept("or"):
            left = Binary("or", left, self.conj())
        return left

    def conj(self):
        left = self.neg()
        while self.accept("and"):
            left = Binary("and", left, self.neg())
        return left

    def neg(self):
        if self.accept("not"):
            return Unary("not", self.neg())
        return self.comparison()

    def comparison(self):
        left = self.additive()
        kind, text = self.peek()
        if kind == "op" and text in ("=", "==", "!=", "<", "<=", ">", ">="):
            self.i += 1
            op = "=" if text == "==" else text
            return Binary(op, left, self.additive())
        return left

    def additive(self):
        left = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.next()[1]
            left = Binary(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.next()[1]
            left = Binary(op, left, self.unary())
        return left

    def unary(self):
        if self.accept("-"):
            return Unary("-", self.unary())
        return self.postfix()

    def postfix(self):
        e = self.primary()
        while self.accept("["):
            key = self.expr()
            self.expect("]")
            e = Index(e, key)
        return e

    def primary(self):
        kind, text = self.next()
        if kind == "num":
            value = float(text) if any(ch in text for ch in ".eE") else int(text)
            unit_kind, unit = self.peek()
            if unit_kind == "name" and unit in UNITS:
                self.i += 1
                return DurLit(float(value), unit)
            return Lit(value)
        if kind == "str":
            return Lit(json.loads(text))
        if kind == "gvar":
            return GVar(text[1:])
        if kind == "name":
            if text == "true":
                return Lit(True)
            if text == "false":
                return Lit(False)
            if text == "undefined":
                return Lit(UNDEFINED)
            if text in KEYWORDS:
                raise ExprSyntaxError(f"unexpected keyword {text!r}")
            return LVar(text)
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if text == "[":
            items = []
            if not self.accept("]"):
                items.append(self.expr())
                while self.accept(","):
                    items.append(self.expr())
                self.expect("]")
            return VecExpr(tuple(items))
        if text == "{":
            pairs = []
            if not self.accept("}"):
                pairs.append(self._pair())
                while self.accept(","):
                    pairs.append(self._pair())
                self.expect("}")
            return MapExpr(tuple(pairs))
        raise ExprSyntaxError(f"unexpected token {text!r}")

    def _pair(self):
        kind, text = self.next()
        if kind != "str":
            raise ExprSyntaxError("map keys must be strings")
        self.expect(":")
        return json.loads(text), self.expr()


def parse_expr(text: str) -> Expr:
    p = Parser(tokenize(text))
    e = p.expr()
    if not p.at_end():
        raise ExprSyntaxError(f"trailing input at {p.peek()[1]!r}")
    return e


def parse_value(text: str):
    """Parse a ground literal such as ``42``, ``-1.5``, ``"abc"`` or ``2 beats``."""
    e = parse_expr(text)
    if not is_ground(e):
        raise ExprSyntaxError(f"not a literal value: {text!r}")
    try:
        return evaluate(e)
    except NotEvaluable as err:
        raise ExprSyntaxError(str(err)) from None


def format_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def format_value(v) -> str:
    if isinstance(v, bool) or _is_num(v):
        return format_number(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, Duration):
        return str(v)
    if isinstance(v, list):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {format_value(x)}" for k, x in v.items()) + "}"
    return "undefined"


def format_expr(e: Expr) -> str:
    """Render ``e`` so that ``parse_expr(format_expr(e)) == e`` for parsed input."""
    if isinstance(e, Lit):
        return format_value(e.value)
    if isinstance(e, DurLit):
        return f"{format_number(e.magnitude)} {e.unit}"
    if isinstance(e, GVar):
        return "$" + e.name
    if isinstance(e, LVar):
        return e.name
    if isinstance(e, Unary):
        sep = " " if e.op == "not" else ""
        return f"({e.op}{sep}{format_expr(e.operand)})"
    if isinstance(e, Binary):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, Index):
        return f"{format_expr(e.target)}[{format_expr(e.key)}]"
    if isinstance(e, VecExpr):
        return "[" + ", ".join(format_expr(x) for x in e.items) + "]"
    if isinstance(e, MapExpr):
        return "{" + ", ".join(f"{json.dumps(k)}: {format_expr(x)}" for k, x in e.items) + "}"
    raise TypeError(f"not an expression: {e!r}")
