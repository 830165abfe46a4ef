"""Offline time-safety checking of execution traces.

Between two time-advancing instants there is a logical delay.  The host must
fit two things into it: the work of the instant's synchronous cascade, and
the handling of the event that opened the instant (measured on the
previous interval).  Their sum is the interval's bound; the interval is safe
when the delay is at least the bound.  Instants reached through internal
events at the same date are folded into the interval that opened the chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import machine as mc
from .values import SECONDS, DurLit

CAUSES = ("input", "ignore", "set", "tempo", "done", "step", "epsilon")


class SafetyError(ValueError):
    pass


@dataclass
class CostModel:
    """Either explicit per-instant costs, or a per-opcode cost table.

    With a table, work is summed over the opcodes listed on a trace's
    ``exec`` lines and the pseudo-opcode ``event`` gives the cost of
    handling each time-advancing event.
    """

    per_instant: dict = field(default_factory=dict)  # k -> (work, handling)
    per_instr: dict = field(default_factory=dict)  # opcode -> seconds

    def __post_init__(self):
        for k, (d, e) in self.per_instant.items():
            if d < 0 or e < 0:
                raise SafetyError(f"negative cost at instant {k}")
        if any(c < 0 for c in self.per_instr.values()):
            raise SafetyError("negative instruction cost")


def parse_costs(text: str) -> CostModel:
    per_instant, per_instr = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        words = line.split("#", 1)[0].split()
        if not words:
            continue
        try:
            if len(words) == 6 and words[0] == "k" and words[2] == "work" and words[4] == "handling":
                per_instant[int(words[1])] = (float(words[3]), float(words[5]))
            elif len(words) == 4 and words[0] == "instr" and words[2] == "cost":
                per_instr[words[1]] = float(words[3])
            else:
                raise ValueError
        except ValueError:
            raise SafetyError(f"line {lineno}: malformed cost entry {line.strip()!r}") from None
    return CostModel(per_instant, per_instr)


@dataclass(frozen=True)
class InstantCheck:
    k: int  # instant opening the checked interval
    d: float
    work: float
    handling: float
    closing: tuple  # (kind, payload) of the event ending the interval

    @property
    def bound(self) -> float:
        return self.work + self.handling

    @property
    def slack(self) -> float:
        return self.d - self.bound

    @property
    def safe(self) -> bool:
        return self.d >= self.bound


@dataclass
class SafetyReport:
    records: list

    @property
    def violations(self) -> list:
        return [r for r in self.records if not r.safe]

    @property
    def safe(self) -> bool:
        return not self.violations


def _instants(trace):
    """Map k -> (date, cause kind, cause payload, {opcode: count})."""
    info = {0: [0.0, None, "", {}]}
    for e in trace:
        rec = info.setdefault(e.k, [e.t, None, "", {}])
        if e.kind in CAUSES and rec[1] is None:
            rec[1], rec[2] = e.kind, e.payload
        elif e.kind == "exec":
            for item in e.payload.split():
                op, _, n = item.partition("=")
                rec[3][op] = rec[3].get(op, 0) + int(n)
    return info


def check(trace, costs: CostModel) -> SafetyReport:
    info = _instants(trace)
    ks = sorted(info)
    leads = [k for k in ks if k == 0 or info[k][1] != "epsilon"]
    per_instant = bool(costs.per_instant)

    def costs_of(members):
        work = handle = 0.0
        for k in members:
            if per_instant:
                if k in costs.per_instant:
                    d, e = costs.per_instant[k]
                elif k == members[0]:
                    raise SafetyError(f"no cost entry for instant {k}")
                else:
                    d = e = 0.0
            else:
                d = sum(costs.per_instr.get(op, 0.0) * n for op, n in info[k][3].items())
                e = costs.per_instr.get("event", 0.0) if k == members[0] else 0.0
            work += d
            handle += e
        return work, handle

    records = []
    handling = 0.0
    for j, lead in enumerate(leads[:-1]):
        nxt = leads[j + 1]
        members = [k for k in ks if lead <= k < nxt]
        work, handle = costs_of(members)
        d = info[nxt][0] - info[lead][0]
        records.append(InstantCheck(lead, d, work, handling, (info[nxt][1], info[nxt][2])))
        handling = handle
    return SafetyReport(records)


@dataclass(frozen=True)
class Compensation:
    k: int
    deficit: float
    compensable: bool
    loc: Optional[int] = None
    remaining: float = 0.0
    reason: str = ""

    @property
    def new_delay(self) -> float:
        return self.remaining - self.deficit


def compensation_plan(trace, report: SafetyReport, m: mc.Machine) -> list:
    """For each violation, try to absorb the lag into the await that ends it."""
    by_name = {m.name(loc): loc for loc in range(len(m))}
    plan = []
    for r in report.violations:
        deficit = r.bound - r.d
        kind, payload = r.closing
        loc = None
        if kind == "done":
            parts = payload.split()
            loc = by_name.get(parts[1]) if len(parts) > 1 else None
        if loc is None or not isinstance(m[loc], mc.Await):
            plan.append(Compensation(r.k, deficit, False, loc,
                                     reason=f"interval ends with {kind}, no delay to shorten"))
        elif r.d > deficit:  # the shortened wait must still be a timer
            plan.append(Compensation(r.k, deficit, True, loc, r.d))
        else:
            plan.append(Compensation(r.k, deficit, False, loc, r.d,
                                     reason="remaining delay shorter than the lag"))
    return plan


def compensate(m: mc.Machine, plan) -> mc.Machine:
    """Shorten constant seconds-valued awaits by their planned deficit."""
    instrs = list(m.instructions)
    for c in plan:
        if not c.compensable:
            continue
        a = instrs[c.loc]
        if not (isinstance(a.expr, DurLit) and a.expr.unit == SECONDS):
            raise SafetyError(f"await at {m.name(c.loc)} is not a constant delay in seconds")
        instrs[c.loc] = mc.Await(DurLit(a.expr.magnitude - c.deficit, SECONDS), a.target)
    return mc.Machine(tuple(instrs), m.order, m.labels, m.inputs)


def _f(x: float) -> str:
    return f"{x:.6f}"


def report_lines(report: SafetyReport, plan=None, m: mc.Machine = None) -> list:
    out = []
    for r in report.records:
        out.append(f"k={r.k} delay={_f(r.d)} work={_f(r.work)} handling={_f(r.handling)} "
                   f"bound={_f(r.bound)} slack={_f(r.slack)} {'safe' if r.safe else 'violated'}")
    for c in plan or ():
        where = m.name(c.loc) if (m is not None and c.loc is not None) else "-"
        if c.compensable:
            out.append(f"compensate k={c.k} at={where} deficit={_f(c.deficit)} "
                       f"delay={_f(c.remaining)}->{_f(c.new_delay)}")
        else:
            out.append(f"uncompensable k={c.k} deficit={_f(c.deficit)} reason={c.reason}")
    return out


def format_table(report: SafetyReport) -> str:
    head = ("k", "delay", "work", "handling", "bound", "slack", "verdict")
    rows = [head] + [
        (str(r.k), _f(r.d), _f(r.work), _f(r.handling), _f(r.bound), _f(r.slack),
         "safe" if r.safe else "VIOLATED")
        for r in report.records
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(len(head))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in rows) + "\n"
