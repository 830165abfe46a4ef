import pytest

from helpers import prog, run_text
from ivm import safety as sf
from ivm.envio import read_trace


def test_parse_costs():
    c = sf.parse_costs("# costs\nk 0 work 0.1 handling 0.2\ninstr send cost 0.01\n")
    assert c.per_instant == {0: (0.1, 0.2)} and c.per_instr == {"send": 0.01}
    with pytest.raises(sf.SafetyError):
        sf.parse_costs("k zero work 1 handling 1\n")
    with pytest.raises(sf.SafetyError):
        sf.parse_costs("k 0 work -1 handling 0\n")


def test_epsilon_chain_is_one_interval():
    trace = read_trace(run_text("""
        spawn P
        emit s
        await (1 s) jump E
        E: stop
        P: present s jump Q
        Q: send q
        stop
    """))
    assert [e.kind for e in trace if e.kind in ("epsilon", "done")] == ["epsilon", "done"]
    rep = sf.check(trace, sf.parse_costs("k 0 work 0.3 handling 0.1\nk 1 work 0.4 handling 0.2\n"))
    (r,) = rep.records
    assert r.k == 0 and r.d == 1.0
    assert r.work == pytest.approx(0.7)  # both cascades of the chain
    assert r.handling == 0


def test_instruction_cost_table():
    text = "send a\nawait (1 s) jump B\nB: send b\nsend c\nawait (1 s) jump C\nC: stop\n"
    trace = read_trace(run_text(text, profile=True))
    rep = sf.check(trace, sf.parse_costs(
        "instr send cost 0.1\ninstr await cost 0\ninstr stop cost 0\ninstr event cost 0.05\n"))
    assert [r.work for r in rep.records] == [pytest.approx(0.1), pytest.approx(0.2)]
    assert [r.handling for r in rep.records] == [0.0, 0.05]
    assert rep.safe


def test_missing_instant_cost():
    trace = read_trace(run_text("await (1 s) jump A\nA: stop\n"))
    with pytest.raises(sf.SafetyError):
        sf.check(trace, sf.parse_costs("k 1 work 0 handling 0\n"))


def test_renderings():
    m = prog("await (1 s) jump A\nA: stop\n")
    trace = read_trace(run_text("await (1 s) jump A\nA: stop\n"))
    rep = sf.check(trace, sf.parse_costs("k 0 work 1.25 handling 0\n"))
    plan = sf.compensation_plan(trace, rep, m)
    assert sf.report_lines(rep, plan, m) == [
        "k=0 delay=1.000000 work=1.250000 handling=0.000000 bound=1.250000 "
        "slack=-0.250000 violated",
        "compensate k=0 at=0 deficit=0.250000 delay=1.000000->0.750000",
    ]
    table = sf.format_table(rep).splitlines()
    assert table[0].split() == ["k", "delay", "work", "handling", "bound", "slack", "verdict"]
    assert len({len(row) for row in table}) == 1


def test_compensate_requires_constant_seconds():
    m = prog("await (1 beats) jump A\nA: stop\n")
    trace = read_trace(run_text("await (1 beats) jump A\nA: stop\n"))
    rep = sf.check(trace, sf.parse_costs("k 0 work 1.5 handling 0\n"))
    plan = sf.compensation_plan(trace, rep, m)
    assert plan[0].compensable
    with pytest.raises(sf.SafetyError):
        sf.compensate(m, plan)
