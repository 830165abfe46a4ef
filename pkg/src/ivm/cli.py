"""Command-line entry point: ``ivm run|check|lower-repeat|safety|print-trace``.

Exit status is 0 on success (or a TRUE termination), 1 when diagnostics were
reported or the run ended in an error, and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys

from . import machine as mc
from . import safety as sf
from .envio import (
    ScriptError, TraceFormatError, observational_trace, parse_script, read_trace,
    write_trace,
)
from .scheduler import InstantBudgetExceeded, RunConfig, Scheduler, outcome
from .sync import DEFAULT_STEP_BUDGET, DivergenceError

OK, FAILED, USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _positive(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ivm", description="Run and analyse interactive timed machines.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="execute a machine against an environment script")
    r.add_argument("machine")
    r.add_argument("--events", required=True, help="environment script")
    r.add_argument("--mode", choices=("virtual", "realtime"), default="virtual")
    r.add_argument("--trace", help="write the trace here instead of standard output")
    r.add_argument("--max-instants", type=_positive, default=100_000)
    r.add_argument("--step-budget", type=_positive, default=DEFAULT_STEP_BUDGET)
    r.add_argument("--profile", action="store_true",
                   help="add per-instant opcode counts (exec lines)")
    r.add_argument("--strict", action="store_true",
                   help="treat zero or non-evaluable delays on entry as errors")

    c = sub.add_parser("check", help="validate a machine")
    c.add_argument("machine")

    lo = sub.add_parser("lower-repeat", help="rewrite repeat into sustain/await/spawn0")
    lo.add_argument("machine")
    lo.add_argument("-o", "--output")

    s = sub.add_parser("safety", help="time-safety report for a trace")
    s.add_argument("trace")
    s.add_argument("--costs", required=True)
    s.add_argument("--machine", help="machine, for the compensation plan")
    s.add_argument("--table", action="store_true", help="aligned table instead of lines")

    pt = sub.add_parser("print-trace", help="pretty-print or filter a trace")
    pt.add_argument("trace")
    pt.add_argument("--observational", action="store_true")
    return p


def _read(path):
    with open(path, encoding="utf-8") as f:
        return f.read()


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def _diag(path, err):
    for line in str(err).splitlines():
        print(f"{path}: {line}", file=sys.stderr)


def cmd_run(a) -> int:
    m = mc.parse_program(_read(a.machine))
    script = parse_script(_read(a.events), inputs=m.inputs or None)
    cfg = RunConfig(a.mode, a.step_budget, a.max_instants, a.strict, a.profile)
    try:
        trace = Scheduler(m, script, cfg).execute()
    except InstantBudgetExceeded as e:
        _write(a.trace, write_trace(e.trace))
        print(f"ivm: {e}", file=sys.stderr)
        return FAILED
    _write(a.trace, write_trace(trace))
    return FAILED if outcome(trace) == "error" else OK


def cmd_check(a) -> int:
    mc.parse_program(_read(a.machine))
    return OK


def cmd_lower(a) -> int:
    m = mc.parse_program(_read(a.machine))
    _write(a.output, mc.pretty_print(mc.lower_repeat(m)))
    return OK


def cmd_safety(a) -> int:
    trace = read_trace(_read(a.trace))
    report = sf.check(trace, sf.parse_costs(_read(a.costs)))
    m = plan = None
    if a.machine:
        m = mc.parse_program(_read(a.machine))
        plan = sf.compensation_plan(trace, report, m)
    if a.table:
        sys.stdout.write(sf.format_table(report))
    else:
        for line in sf.report_lines(report, plan, m):
            print(line)
    return OK if report.safe else FAILED


def cmd_print(a) -> int:
    trace = read_trace(_read(a.trace))
    if a.observational:
        trace = observational_trace(trace)
    sys.stdout.write(write_trace(trace))
    return OK


COMMANDS = {
    "run": cmd_run, "check": cmd_check, "lower-repeat": cmd_lower,
    "safety": cmd_safety, "print-trace": cmd_print,
}


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    try:
        return COMMANDS[a.command](a)
    except OSError as e:
        print(f"ivm: {e.filename or ''}: {e.strerror}", file=sys.stderr)
        return USAGE
    except mc.AssemblyError as e:
        _diag(a.machine, e)
    except ScriptError as e:
        _diag(a.events, e)
    except (TraceFormatError, sf.SafetyError) as e:
        print(f"ivm: {e}", file=sys.stderr)
    except (DivergenceError, ValueError) as e:
        print(f"ivm: {e}", file=sys.stderr)
    return FAILED


if __name__ == "__main__":
    sys.exit(main())
