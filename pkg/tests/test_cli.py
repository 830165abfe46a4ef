import subprocess
import sys

import pytest

from ivm.cli import main


@pytest.fixture
def files(tmp_path):
    def make(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return make


def test_run_hello(files, capsys):
    code = main(["run", files("hello.ivm", "send hi\nstop\n"), "--events", files("e.evt", "")])
    out, err = capsys.readouterr()
    assert code == 0 and err == ""
    assert out == ("k=0 t=0.000000 b=0.000000 send hi\n"
                   "k=0 t=0.000000 b=0.000000 terminated true\n")


def test_run_error_exit_code(files, capsys):
    code = main(["run", files("e.ivm", "if 1 jump A\nA: stop\n"), "--events", files("e.evt", "")])
    assert code == 1
    assert capsys.readouterr().out.endswith("terminated error\n")


def test_check(files, capsys):
    assert main(["check", files("ok.ivm", "stop\n")]) == 0
    code = main(["check", files("bad.ivm", "asap L\nL: send x\nstop\n")])
    out, err = capsys.readouterr()
    assert code == 1 and out == ""
    assert len(err.strip().splitlines()) == 1 and "synchronous" in err


def test_safety_zero_costs(files, capsys, tmp_path):
    m = files("w.ivm", "await (1 s) jump A\nA: send a\nstop\n")
    trace = str(tmp_path / "run.trace")
    assert main(["run", m, "--events", files("e.evt", ""), "--trace", trace]) == 0
    capsys.readouterr()
    assert main(["safety", trace, "--costs", files("zero.costs", "instr event cost 0\n")]) == 0
    out = capsys.readouterr().out
    assert out.splitlines() == [
        "k=0 delay=1.000000 work=0.000000 handling=0.000000 bound=0.000000 slack=1.000000 safe"]
    code = main(["safety", trace, "--costs", files("c.costs", "k 0 work 2 handling 0\n"),
                 "--machine", m])
    out = capsys.readouterr().out
    assert code == 1 and "uncompensable k=0" in out


def test_lower_repeat(files, capsys, tmp_path):
    src = files("r.ivm", "R: repeat (1 s) jump B for (2 s)\nB: send b\nstop\n")
    out = str(tmp_path / "low.ivm")
    assert main(["lower-repeat", src, "-o", out]) == 0
    text = open(out).read()
    assert "repeat" not in text and "sustain" in text
    assert main(["check", out]) == 0


def test_print_trace(files, capsys):
    t = files("t.trace", "k=0 t=0 b=0 send a\nk=1 t=1 b=1 done 0 0\n")
    assert main(["print-trace", t, "--observational"]) == 0
    assert capsys.readouterr().out == "k=0 t=0.000000 b=0.000000 send a\n"


def test_usage_errors(files, capsys):
    with pytest.raises(SystemExit) as e:
        main(["run", files("x.ivm", "stop\n")])  # missing --events
    assert e.value.code == 2
    assert main(["check", "/nonexistent/file.ivm"]) == 2
    err = capsys.readouterr().err
    assert "file.ivm" in err


def test_script_diagnostics(files, capsys):
    m = files("m.ivm", ".inputs a\nreceive a jump A\nA: stop\n")
    assert main(["run", m, "--events", files("s.evt", "@1s input zz\n")]) == 1
    assert "line 1" in capsys.readouterr().err


def test_module_entry_point(files):
    r = subprocess.run([sys.executable, "-m", "ivm", "check", files("ok.ivm", "stop\n")],
                       capture_output=True, text=True)
    assert r.returncode == 0
