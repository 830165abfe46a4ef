"""Environment scripts and the trace line format.

Script grammar::

    .tempo 120                 # optional, initial tempo in BPM (default 60)
    @0.5s input NOTE_C4
    @1.0s set $g 42
    @2.0s tempo 90

Trace lines::

    k=<instant> t=<seconds> b=<beats> <kind> [<payload>]
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Optional

from .machine import Diagnostic
from .values import ExprSyntaxError, format_value, parse_value

# -- scripts -----------------------------------------------------------------


@dataclass(frozen=True)
class ScriptEntry:
    date: float
    action: str  # "input" | "set" | "tempo"
    name: str = ""  # input symbol or global variable (without "$")
    value: Any = None  # assigned value or tempo in BPM


@dataclass
class EnvScript:
    tempo: float = 60.0
    entries: list = field(default_factory=list)


class ScriptError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


_DATE = r"@\s*(?P<date>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+)\s*s"
_ENTRY = re.compile(_DATE + r"\s+(?P<action>\S+)\s*(?P<rest>.*)$")
_GVAR = re.compile(r"\$([A-Za-z_][A-Za-z0-9_]*)\s+(.+)$")


def _bpm(text: str) -> float:
    try:
        bpm = float(text)
    except ValueError:
        raise ValueError(f"bad tempo {text!r}") from None
    if not bpm > 0 or bpm == float("inf"):
        raise ValueError(f"tempo must be positive, got {text}")
    return bpm


def parse_script(text: str, inputs=None) -> EnvScript:
    """Parse a script; ``inputs``, if given, is the allowed input alphabet."""
    script = EnvScript()
    diags = []
    last = 0.0
    seen_tempo = False
    for lineno, line in enumerate(text.splitlines(), 1):
        body = _strip(line)
        if not body:
            continue
        try:
            if body.startswith(".tempo"):
                if seen_tempo or script.entries:
                    raise ValueError(".tempo must appear once, before any entry")
                script.tempo = _bpm(body[len(".tempo"):].strip())
                seen_tempo = True
                continue
            m = _ENTRY.match(body)
            if not m:
                raise ValueError(f"malformed entry {body!r}")
            date = float(m["date"])
            if date < last:
                raise ValueError(f"decreasing date {date} after {last}")
            action, rest = m["action"], m["rest"].strip()
            if action == "input":
                if not rest or " " in rest:
                    raise ValueError("input expects one symbol")
                if inputs is not None and rest not in inputs:
                    raise ValueError(f"input symbol {rest} is not declared by the machine")
                entry = ScriptEntry(date, "input", rest)
            elif action == "set":
                g = _GVAR.match(rest)
                if not g:
                    raise ValueError("set expects $name and a value")
                entry = ScriptEntry(date, "set", g[1], parse_value(g[2]))
            elif action == "tempo":
                entry = ScriptEntry(date, "tempo", value=_bpm(rest))
            else:
                raise ValueError(f"unknown action {action!r}")
        except (ValueError, ExprSyntaxError) as e:
            diags.append(Diagnostic(str(e), lineno))
            continue
        script.entries.append(entry)
        last = date
    if diags:
        raise ScriptError(diags)
    return script


def _strip(line: str) -> str:
    in_str = esc = False
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
            return line[:i].strip()
    return line.strip()


def format_script(script: EnvScript) -> str:
    out = [f".tempo {script.tempo!r}"]
    for e in script.entries:
        if e.action == "input":
            out.append(f"@{e.date!r}s input {e.name}")
        elif e.action == "set":
            out.append(f"@{e.date!r}s set ${e.name} {format_value(e.value)}")
        else:
            out.append(f"@{e.date!r}s tempo {e.value!r}")
    return "\n".join(out) + "\n"


# -- traces ------------------------------------------------------------------

KINDS = (
    "input", "ignore", "set", "tempo", "done", "step", "epsilon",
    "send", "emit", "error", "exec", "terminated",
)
OBSERVABLE = ("input", "set", "send")


@dataclass(frozen=True)
class TraceEvent:
    k: int
    t: float
    b: float
    kind: str
    payload: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown trace kind {self.kind!r}")
        # dates are kept at the precision they are written with
        object.__setattr__(self, "t", round(float(self.t), 6) + 0.0)
        object.__setattr__(self, "b", round(float(self.b), 6) + 0.0)


def symbol_payload(symbol: str) -> str:
    """Output symbols are written bare unless that would be ambiguous."""
    if symbol and not re.search(r"\s", symbol) and not symbol.startswith('"'):
        return symbol
    return json.dumps(symbol)


def format_event(e: TraceEvent) -> str:
    head = f"k={e.k} t={e.t:.6f} b={e.b:.6f} {e.kind}"
    return f"{head} {e.payload}" if e.payload else head


def write_trace(trace) -> str:
    return "".join(format_event(e) + "\n" for e in trace)


_LINE = re.compile(r"k=(\d+) t=(\S+) b=(\S+) (\S+)(?: (.*))?$")


class TraceFormatError(ValueError):
    pass


def read_trace(text: str) -> list:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        m = _LINE.match(line)
        if not m:
            raise TraceFormatError(f"line {lineno}: malformed trace line {line!r}")
        try:
            out.append(TraceEvent(int(m[1]), float(m[2]), float(m[3]), m[4], m[5] or ""))
        except ValueError as e:
            raise TraceFormatError(f"line {lineno}: {e}") from None
    return out


def observational_trace(trace) -> list:
    """Keep received inputs, environment assignments and sent outputs."""
    return [e for e in trace if e.kind in OBSERVABLE]
