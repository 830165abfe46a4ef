import threading
import time

import pytest

from helpers import lines, prog, run_text, script
from ivm.envio import read_trace, write_trace
from ivm.scheduler import InstantBudgetExceeded, RunConfig, Scheduler, outcome, run


def test_quiescent_termination():
    got = run_text(".inputs go\nreceive go jump A\nA: stop\n")
    assert got == lines("0 0 terminated quiescent")


def test_unmatched_input_is_ignored():
    got = run_text(".inputs go x\nreceive go jump A\nA: stop\n", "@1s input x\n@2s input go\n")
    assert got == lines("""
        1 1 ignore x
        2 2 input go
        2 2 terminated true
    """)


def test_external_assignment_persists():
    got = run_text("""
        suspend ($v = 1) jump A
        A: suspend ($v = 1) jump B
        B: send both
        stop
    """, "@1s set $v 1\n")
    # the second suspend sees the new value through an internal event
    assert got == lines("""
        1 1 set $v 1
        2 1 epsilon
        2 1 send both
        2 1 terminated true
    """)


def test_script_beats_timer_on_ties():
    got = run_text("""
        .inputs go
        asap R W
        R: receive go jump A
        W: await (1 s) jump B
        A: send input
        stop
        B: send timer
        stop
    """, "@1s input go\n")
    assert "send input" in got and "send timer" not in got


def test_error_termination_is_traced():
    got = run_text("await ($missing) jump A\nA: stop\n")
    assert got.endswith("terminated error\n")
    assert "error" in got.splitlines()[-2]


def test_instant_budget():
    with pytest.raises(InstantBudgetExceeded) as err:
        run_text("R: repeat (1 s) jump B for (100 s)\nB: stop\n", max_instants=5)
    assert len(err.value.trace) >= 4


def test_profile_lines():
    got = run_text("send a\nsend b\nstop\n", profile=True)
    assert "exec send=2 stop=1" in got


def test_outcome():
    assert outcome(read_trace(run_text("stop\n"))) == "true"
    assert outcome([]) is None


def test_realtime_matches_virtual_dates():
    text = "await (0.05 s) jump A\nA: send a\nawait (0.05 s) jump B\nB: send b\nstop\n"
    m = prog(text)
    start = time.monotonic()
    rt = run(m, script("", m), RunConfig(mode="realtime"))
    assert time.monotonic() - start >= 0.1
    assert write_trace(rt) == run_text(text)


def test_realtime_live_post():
    m = prog(".inputs go\nreceive go jump A\nA: send got\nstop\n")
    s = Scheduler(m, script("", m), RunConfig(mode="realtime"))
    th = threading.Thread(target=s.execute, kwargs={"live": True})
    th.start()
    time.sleep(0.05)
    s.post("input", "go")
    th.join(timeout=5)
    assert not th.is_alive()
    kinds = [e.kind for e in s.trace]
    assert kinds == ["input", "send", "terminated"]
    assert s.trace[0].t > 0


def test_bad_mode():
    with pytest.raises(ValueError):
        RunConfig(mode="fast")
