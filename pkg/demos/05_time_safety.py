"""
Is the host fast enough?
========================

Logical time assumes instants take no time.  Given measured costs, each
interval between time-advancing instants must be long enough to absorb the
instant's own work plus the handling of the event that opened it.  When it
is not, and the interval ends with an await, that await can be shortened by
the lag to catch up.
"""

from pathlib import Path

from ivm import parse_program, parse_script, run
from ivm import safety

here = Path(__file__).parent / "programs"
m = parse_program((here / "follower.ivm").read_text())
trace = run(m, parse_script((here / "follower.evt").read_text(), m.inputs))

costs = safety.parse_costs((here / "follower.costs").read_text())
report = safety.check(trace, costs)
print(safety.format_table(report))

plan = safety.compensation_plan(trace, report, m)
for line in safety.report_lines(report, plan, m)[len(report.records):]:
    print(line)

# apply the plan where the delay is a constant in seconds
if any(c.compensable for c in plan):
    try:
        fixed = safety.compensate(m, plan)
    except safety.SafetyError as err:
        print("cannot rewrite:", err)
    else:
        again = run(fixed, parse_script((here / "follower.evt").read_text(), m.inputs))
        print("sends after compensation:",
              [(e.payload, e.t) for e in again if e.kind == "send"])
