"""Shared helpers for the test suite."""

import textwrap

from ivm.envio import parse_script, write_trace
from ivm.machine import parse_program
from ivm.scheduler import RunConfig, Scheduler


def prog(text):
    return parse_program(textwrap.dedent(text))


def script(text="", m=None):
    return parse_script(textwrap.dedent(text), inputs=(m.inputs or None) if m else None)


def run_text(program, events="", observer=None, **cfg):
    m = prog(program)
    trace = Scheduler(m, script(events, m), RunConfig(**cfg), observer).execute()
    return write_trace(trace)


def lines(text):
    """Trace lines from a compact form: ``k t kind [payload]`` per row.

    The beat column equals the seconds column (60 BPM) unless given as
    ``t/b``.
    """
    out = []
    for row in textwrap.dedent(text).strip().splitlines():
        k, tb, rest = row.split(None, 2)
        t, _, b = tb.partition("/")
        b = b or t
        out.append(f"k={k} t={float(t):.6f} b={float(b):.6f} {rest}")
    return "\n".join(out) + "\n"
