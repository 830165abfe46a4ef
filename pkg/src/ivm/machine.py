"""Instruction set, machine table and the textual assembler."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

from .values import (
    Expr, ExprSyntaxError, Parser, format_expr, tokenize,
)


# -- instructions ------------------------------------------------------------

@dataclass(frozen=True)
class Emit:
    signal: str


@dataclass(frozen=True)
class Send:
    symbol: str


@dataclass(frozen=True)
class Assign:
    name: str
    is_global: bool
    expr: Expr


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class If:
    expr: Expr
    target: int


@dataclass(frozen=True)
class Spawn:
    target: int


@dataclass(frozen=True)
class Spawn0:
    target: int


@dataclass(frozen=True)
class Asap:
    targets: tuple


@dataclass(frozen=True)
class Sustain:
    body: int
    controller: int


@dataclass(frozen=True)
class Await:
    expr: Expr
    target: int


@dataclass(frozen=True)
class Repeat:
    period: Expr
    body: int
    expiry: Expr


@dataclass(frozen=True)
class Receive:
    symbol: str
    target: int


@dataclass(frozen=True)
class Present:
    signal: str
    target: int


@dataclass(frozen=True)
class Suspend:
    expr: Expr
    target: int


SYNCHRONOUS = (Emit, Send, Assign, Stop, If, Spawn, Spawn0, Asap, Sustain)
ASYNCHRONOUS = (Await, Repeat, Receive, Present, Suspend)
FALLS_THROUGH = (Emit, Send, Assign, If, Spawn, Spawn0)

OPCODES = {
    Emit: "emit", Send: "send", Assign: "assign", Stop: "stop", If: "if",
    Spawn: "spawn", Spawn0: "spawn0", Asap: "asap", Sustain: "sustain",
    Await: "await", Repeat: "repeat", Receive: "receive", Present: "present",
    Suspend: "suspend",
}


def is_synchronous(instr) -> bool:
    return isinstance(instr, SYNCHRONOUS)


def opcode(instr) -> str:
    return OPCODES[type(instr)]


def targets_of(instr) -> tuple:
    """All locations an instruction refers to (excluding fall-through)."""
    if isinstance(instr, Asap):
        return tuple(instr.targets)
    if isinstance(instr, Sustain):
        return (instr.body, instr.controller)
    if isinstance(instr, Repeat):
        return (instr.body,)
    return (instr.target,) if hasattr(instr, "target") else ()


def retarget(instr, f):
    """Copy of ``instr`` with every target location mapped through ``f``."""
    if isinstance(instr, Asap):
        return Asap(tuple(f(t) for t in instr.targets))
    if isinstance(instr, Sustain):
        return Sustain(f(instr.body), f(instr.controller))
    if isinstance(instr, Repeat):
        return Repeat(instr.period, f(instr.body), instr.expiry)
    if hasattr(instr, "target"):
        return type(instr)(**{**instr.__dict__, "target": f(instr.target)})
    return instr


# -- machine -----------------------------------------------------------------

@dataclass(frozen=True)
class Machine:
    """A table of instructions with the source ordering on locations.

    ``order`` lists every location once; its sequence is the source order,
    which need not coincide with index order.
    """

    instructions: tuple
    order: tuple = None
    labels: tuple = None
    inputs: tuple = ()

    def __post_init__(self):
        n = len(self.instructions)
        if self.order is None:
            object.__setattr__(self, "order", tuple(range(n)))
        if self.labels is None:
            object.__setattr__(self, "labels", (None,) * n)

    def __len__(self):
        return len(self.instructions)

    def __getitem__(self, loc):
        return self.instructions[loc]

    @cached_property
    def rank(self) -> dict:
        return {loc: r for r, loc in enumerate(self.order)}

    @property
    def first(self) -> int:
        return self.order[0]

    def successor(self, loc) -> Optional[int]:
        r = self.rank[loc] + 1
        return self.order[r] if r < len(self.order) else None

    def precedes(self, a, b) -> bool:
        return self.rank[a] < self.rank[b]

    @cached_property
    def signals(self) -> frozenset:
        return frozenset(i.signal for i in self.instructions if isinstance(i, (Emit, Present)))

    @cached_property
    def outputs(self) -> frozenset:
        return frozenset(i.symbol for i in self.instructions if isinstance(i, Send))

    def next_input(self, symbol) -> Optional[str]:
        i = self.inputs.index(symbol)
        return self.inputs[i + 1] if i + 1 < len(self.inputs) else None

    def name(self, loc) -> str:
        label = self.labels[loc] if 0 <= loc < len(self.labels) else None
        return label if label else str(loc)


@dataclass(frozen=True)
class Diagnostic:
    message: str
    line: Optional[int] = None

    def __str__(self):
        return f"line {self.line}: {self.message}" if self.line else self.message


class AssemblyError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


def validate(m: Machine, lines: dict = None) -> list:
    """Check the static well-formedness of ``m``; returns diagnostics."""
    lines = lines or {}
    diags = []
    n = len(m.instructions)
    if n == 0:
        return [Diagnostic("empty machine")]
    if sorted(m.order) != list(range(n)):
        return [Diagnostic("location order is not a permutation of the table")]
    inputs = set(m.inputs)
    if len(inputs) != len(m.inputs):
        diags.append(Diagnostic("duplicate input symbol in .inputs"))
    for loc in m.order:
        instr = m.instructions[loc]
        where = m.name(loc)

        def err(msg):
            diags.append(Diagnostic(f"{where}: {msg}", lines.get(loc)))

        bad = [t for t in targets_of(instr) if not 0 <= t < n]
        for t in bad:
            err(f"target {t} out of range")
        if isinstance(instr, FALLS_THROUGH) and m.successor(loc) is None:
            err(f"{opcode(instr)} needs a successor")
        if isinstance(instr, Asap):
            if not instr.targets:
                err("asap needs at least one target")
            for t in instr.targets:
                if 0 <= t < n and is_synchronous(m.instructions[t]):
                    err(f"asap target {m.name(t)} is synchronous")
        if isinstance(instr, Sustain) and 0 <= instr.controller < n:
            if is_synchronous(m.instructions[instr.controller]):
                err(f"sustain controller {m.name(instr.controller)} is synchronous")
        if isinstance(instr, Receive) and instr.symbol not in inputs:
            err(f"receive of undeclared input symbol {instr.symbol}")
    return diags


# -- assembler ---------------------------------------------------------------

def _strip_comment(line: str) -> str:
    in_str = False
    esc = False
    for i, ch in enumerate(line):
        if in_str:
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch == "#":
            return line[:i]
    return line


class _LineParser(Parser):
    def name(self, what="identifier"):
        kind, text = self.next()
        if kind != "name":
            raise ExprSyntaxError(f"expected {what}, got {text!r}")
        return text

    def word(self):
        """A signal or input symbol: identifier or natural number."""
        kind, text = self.next()
        if kind not in ("name", "num"):
            raise ExprSyntaxError(f"expected a symbol, got {text!r}")
        return text

    def done(self):
        if not self.at_end():
            raise ExprSyntaxError(f"unexpected {self.peek()[1]!r}")


def parse_program(text: str) -> Machine:
    """Assemble ``text``; raises AssemblyError with every diagnostic found."""
    diags = []
    raw = []  # (lineno, label, opname, payload)
    inputs = []
    labels = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = _strip_comment(line).strip()
        if not body:
            continue
        if body.startswith("."):
            head, _, rest = body.partition(" ")
            if head == ".inputs":
                inputs.extend(rest.split())
            else:
                diags.append(Diagnostic(f"unknown directive {head}", lineno))
            continue
        label = None
        head, sep, rest = body.partition(":")
        if sep and not rest.startswith("=") and head.strip().isidentifier() and " " not in head.strip():
            label = head.strip()
            body = rest.strip()
            if label in labels:
                diags.append(Diagnostic(f"duplicate label {label}", lineno))
            labels[label] = len(raw)
        if not body:
            diags.append(Diagnostic("label without instruction", lineno))
            continue
        raw.append((lineno, label, body))

    instrs = []
    for loc, (lineno, label, body) in enumerate(raw):
        try:
            instrs.append(_parse_instruction(body, labels))
        except ExprSyntaxError as e:
            diags.append(Diagnostic(str(e), lineno))
            instrs.append(Stop())
    if diags:
        raise AssemblyError(diags)
    m = Machine(tuple(instrs), labels=tuple(lab for _, lab, _ in raw), inputs=tuple(inputs))
    diags = validate(m, {loc: r[0] for loc, r in enumerate(raw)})
    if diags:
        raise AssemblyError(diags)
    return m


def _parse_instruction(body: str, labels: dict):
    op, _, rest = body.partition(" ")
    rest = rest.strip()

    def loc(name):
        if name not in labels:
            raise ExprSyntaxError(f"unknown label {name}")
        return labels[name]

    if op == "send":
        if rest.startswith('"'):
            try:
                sym, end = json.JSONDecoder().raw_decode(rest)
            except json.JSONDecodeError:
                raise ExprSyntaxError("malformed string") from None
            if rest[end:].strip():
                raise ExprSyntaxError(f"unexpected {rest[end:].strip()!r}")
            return Send(sym)
        if not rest or " " in rest:
            raise ExprSyntaxError("send expects one output symbol")
        return Send(rest)

    p = _LineParser(tokenize(body))
    kind, first = p.next()
    if kind in ("name", "gvar") and p.peek() == ("op", ":="):
        p.next()
        e = p.expr()
        p.done()
        if kind == "gvar":
            return Assign(first[1:], True, e)
        return Assign(first, False, e)
    if op == "emit":
        s = p.word(); p.done()
        return Emit(s)
    if op == "stop":
        p.done()
        return Stop()
    if op in ("if", "await", "suspend"):
        e = p.expr(); p.expect("jump"); t = loc(p.name("label")); p.done()
        return {"if": If, "await": Await, "suspend": Suspend}[op](e, t)
    if op in ("spawn", "spawn0"):
        t = loc(p.name("label")); p.done()
        return (Spawn if op == "spawn" else Spawn0)(t)
    if op == "repeat":
        e = p.expr(); p.expect("jump"); t = loc(p.name("label"))
        p.expect("for"); e2 = p.expr(); p.done()
        return Repeat(e, t, e2)
    if op in ("receive", "present"):
        s = p.word(); p.expect("jump"); t = loc(p.name("label")); p.done()
        return (Receive if op == "receive" else Present)(s, t)
    if op == "asap":
        ts = []
        while not p.at_end():
            ts.append(loc(p.name("label")))
        if not ts:
            raise ExprSyntaxError("asap needs at least one target")
        return Asap(tuple(ts))
    if op == "sustain":
        a = loc(p.name("label")); b = loc(p.name("label")); p.done()
        return Sustain(a, b)
    raise ExprSyntaxError(f"unknown instruction {op!r}")


def _paren(e) -> str:
    s = format_expr(e)
    return s if s.startswith("(") and s.endswith(")") and _balanced_outer(s) else f"({s})"


def _balanced_outer(s: str) -> bool:
    depth = 0
    in_str = esc = False
    for i, ch in enumerate(s):
        if in_str:
            if esc:
                esc = False
            elif ch == "\\":
                esc = True
            elif ch == '"':
                in_str = False
            continue
        if ch == '"':
            in_str = True
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0 and i != len(s) - 1:
                return False
    return True


def format_instruction(instr, name=str) -> str:
    if isinstance(instr, Emit):
        return f"emit {instr.signal}"
    if isinstance(instr, Send):
        return f"send {json.dumps(instr.symbol)}"
    if isinstance(instr, Assign):
        target = ("$" if instr.is_global else "") + instr.name
        return f"{target} := {_paren(instr.expr)}"
    if isinstance(instr, Stop):
        return "stop"
    if isinstance(instr, (If, Await, Suspend)):
        return f"{opcode(instr)} {_paren(instr.expr)} jump {name(instr.target)}"
    if isinstance(instr, (Spawn, Spawn0)):
        return f"{opcode(instr)} {name(instr.target)}"
    if isinstance(instr, Repeat):
        return f"repeat {_paren(instr.period)} jump {name(instr.body)} for {_paren(instr.expiry)}"
    if isinstance(instr, (Receive, Present)):
        sym = instr.symbol if isinstance(instr, Receive) else instr.signal
        return f"{opcode(instr)} {sym} jump {name(instr.target)}"
    if isinstance(instr, Asap):
        return "asap " + " ".join(name(t) for t in instr.targets)
    if isinstance(instr, Sustain):
        return f"sustain {name(instr.body)} {name(instr.controller)}"
    raise TypeError(instr)


def pretty_print(m: Machine) -> str:
    """Assembly text for ``m``, lines in source order.

    Referenced locations without a label get a generated one.
    """
    referenced = {t for i in m.instructions for t in targets_of(i)}
    taken = {lab for lab in m.labels if lab}
    names = {}
    for loc in m.order:
        lab = m.labels[loc]
        if not lab and loc in referenced:
            lab = f"L{loc}"
            while lab in taken:
                lab = "_" + lab
            taken.add(lab)
        names[loc] = lab
    out = []
    if m.inputs:
        out.append(".inputs " + " ".join(m.inputs))
    for loc in m.order:
        text = format_instruction(m.instructions[loc], lambda t: names[t])
        out.append(f"{names[loc]}: {text}" if names[loc] else text)
    return "\n".join(out) + "\n"


# -- repeat lowering ---------------------------------------------------------

def lower_repeat(m: Machine) -> Machine:
    """Replace every ``repeat e jump B for e2`` at location l by

        l:      sustain P C
        C:      await e2 jump S       # controller, expiry
        S:      stop
        A:      spawn0 B
        P:      await e jump A        # period

    The four fresh locations are appended to the table and placed right
    after l in the source order, so P's wait precedes each spawn and A falls
    through to P.
    """
    repeats = [loc for loc in m.order if isinstance(m.instructions[loc], Repeat)]
    if not repeats:
        return m
    for i in m.instructions:
        refs = ()
        if isinstance(i, Asap):
            refs = i.targets
        elif isinstance(i, Sustain):
            refs = (i.controller,)
        for t in refs:
            if isinstance(m.instructions[t], Repeat):
                raise ValueError(
                    f"cannot lower repeat at {m.name(t)}: it is referenced as a "
                    "waiting target and its lowering is synchronous")
    instrs = list(m.instructions)
    labels = list(m.labels)
    taken = {lab for lab in labels if lab}
    extra = {}

    def fresh(base):
        lab = base
        n = 0
        while lab in taken:
            n += 1
            lab = f"{base}_{n}"
        taken.add(lab)
        return lab

    for loc in repeats:
        r = instrs[loc]
        c, s, a, p = range(len(instrs), len(instrs) + 4)
        stem = f"_rep{m.name(loc)}"
        instrs[loc] = Sustain(p, c)
        instrs += [Await(r.expiry, s), Stop(), Spawn0(r.body), Await(r.period, a)]
        labels += [fresh(stem + "_ctl"), fresh(stem + "_end"), fresh(stem + "_spawn"), fresh(stem + "_tick")]
        extra[loc] = (c, s, a, p)
    order = []
    for loc in m.order:
        order.append(loc)
        order.extend(extra.get(loc, ()))
    return Machine(tuple(instrs), tuple(order), tuple(labels), m.inputs)
