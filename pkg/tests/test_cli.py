import subprocess
import sys
from pathlib import Path

import pytest

from dpl.frontend.cli import cli_main

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def run(capsys, *argv):
    code = cli_main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_run_nested(capsys):
    assert run(capsys, "run", PROGRAMS / "nested1.dpl") == (0, "1\n", "")


def test_relu_gradient_is_stuck_at_zero(capsys):
    code, out, err = run(capsys, "run", PROGRAMS / "relu_dot.dpl", "--env", "x=0")
    assert code == 2
    assert out == ""
    assert "undefined: <. at (0, 0)" in err


@pytest.mark.parametrize("x, expected", [("-1", "0"), ("2", "1")])
def test_relu_gradient_away_from_zero(capsys, x, expected):
    assert run(capsys, "run", PROGRAMS / "relu_dot.dpl", "--env", f"x={x}")[:2] == (0, expected + "\n")


def test_fdcheck_square(capsys):
    code, out, _ = run(capsys, "fdcheck", PROGRAMS / "square.dpl", "--wrt", "x", "--at", "3")
    assert code == 0
    assert "verdict=pass" in out
    assert "analytic: [6]" in out


def test_fdcheck_skips_at_a_kink(capsys, tmp_path):
    prog = tmp_path / "kink.dpl"
    prog.write_text("if x <. 1 then x else 2 * x\n")
    code, out, _ = run(capsys, "fdcheck", prog, "--wrt", "x", "--at", "0.9999999")
    assert code == 0 and "verdict=skip" in out


def test_grad(capsys):
    assert run(capsys, "grad", PROGRAMS / "square.dpl", "--wrt", "x", "--at", "3")[:2] == (0, "6\n")


def test_check_prints_the_type(capsys, tmp_path):
    prog = tmp_path / "p.dpl"
    prog.write_text("<x, ()>")
    assert run(capsys, "check", prog, "--env", "x=1")[:2] == (0, "real * unit\n")


def test_tuple_environment(capsys, tmp_path):
    prog = tmp_path / "p.dpl"
    prog.write_text("DProd2(<v, v>) + y")
    assert run(capsys, "run", prog, "--env", "v=<1, 2>,y=3")[:2] == (0, "8\n")


def test_trace_output_is_a_program(capsys):
    code, out, _ = run(capsys, "trace", PROGRAMS / "nested2.dpl")
    assert code == 0
    from dpl.frontend import parse_term
    from dpl.machine import eval_term
    from dpl.typecheck import infer_term

    assert eval_term(infer_term({}, {}, parse_term(out))[1]).value == 1.0


def test_type_error_exit_code(capsys, tmp_path):
    prog = tmp_path / "bad.dpl"
    prog.write_text("let x: real = 1 in\n  fst x")
    code, out, err = run(capsys, "run", prog)
    assert code == 1 and out == ""
    assert f"{prog}:2:" in err


def test_syntax_error_exit_code(capsys, tmp_path):
    prog = tmp_path / "bad.dpl"
    prog.write_text("1 +")
    code, _, err = run(capsys, "run", prog)
    assert code == 4 and "syntax error" in err


def test_usage_errors_exit_code(capsys, tmp_path):
    assert run(capsys, "frobnicate")[0] == 4
    assert run(capsys, "run", tmp_path / "missing.dpl")[0] == 4
    assert run(capsys, "run", PROGRAMS / "square.dpl", "--env", "x=y")[0] == 4


def test_fuel_exit_code(capsys, tmp_path):
    prog = tmp_path / "loop.dpl"
    prog.write_text("letrec f(x: real): real = f(x) in f(1)")
    code, out, err = run(capsys, "run", prog, "--fuel", "1000")
    assert code == 3 and out == "" and "fuel" in err


def test_fuzz(capsys, tmp_path):
    report = tmp_path / "report.txt"
    code, out, _ = run(capsys, "fuzz", "--seeds", "5", "--depth", "3", "--report", report)
    assert code == 0
    assert out.count("\n") == 3
    assert "verdict=" in report.read_text()


def test_stdin_and_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dpl.frontend.cli", "run", "-"], input="1 + 2\n",
                          capture_output=True, text=True, check=False)
    assert (proc.returncode, proc.stdout) == (0, "3\n")
