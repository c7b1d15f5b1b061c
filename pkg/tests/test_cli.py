from __future__ import annotations

import io
import json
import math

import pytest

from commopt.cli import run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def solve_json(name):
    code, out, err = call("solve", "--problem", name)
    assert code == 0, err
    return json.loads(out)


# --- golden solve outputs ------------------------------------------------------

def test_solve_oscillator():
    rep = solve_json("oscillator")
    # x0 = (-0.4, 0.8), w = 1: arctan(0.8 / (-0.4 + 1)) on the u = -1 branch
    assert rep["selected"] == "lower"
    assert rep["T"] == pytest.approx(math.atan(4 / 3), rel=1e-14)
    assert rep["oscillator"]["chosen"] == "minus" and rep["sign_rule_agrees"]
    assert rep["oscillator"]["t_plus"] == pytest.approx(math.atan(0.8 / -1.4) + math.pi)


def test_solve_pendulum():
    rep = solve_json("pendulum")
    x1, x2, beta = -0.2, 0.5929890295467408, 0.1
    f = -beta * x2 - math.sin(x1) - 1
    quotient = (f * (x2 + beta * x1) + x1 * x2 * math.cos(x1)) / (
        f * (math.sin(x1) + 1) - x2 ** 2 * math.cos(x1))
    assert rep["selected"] == "lower"
    assert rep["T"] == pytest.approx(quotient, rel=1e-12)
    assert rep["smaller_T_rule"] == {"agrees": False, "label": "upper"}
    assert rep["error"]["window"]["grid_ok"]


def test_solve_vanderpol():
    rep = solve_json("vanderpol")
    # 0.5 / (-0.5 - 0.5*0.5*(1 - 0.25) + 1.1875)
    assert rep["selected"] == "lower" and rep["T"] == pytest.approx(1.0, abs=1e-14)
    lower = next(r for r in rep["table"] if r["label"] == "lower")
    assert lower["feasible"] and lower["consistency"] == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("name", ["oscillator", "pendulum", "vanderpol"])
def test_json_round_trip(name):
    code, out, _ = call("solve", "--problem", name)
    assert json.dumps(json.loads(out), sort_keys=True, indent=2) + "\n" == out


def test_output_is_deterministic():
    assert call("solve", "--problem", "pendulum") == call("solve", "--problem", "pendulum")


def test_out_file(tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = call("time-optimal", "--problem", "vanderpol", "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["selected"] == "lower"


# --- other commands --------------------------------------------------------------

def test_commutators_alternate():
    code, out, _ = call("commutators", "--problem", "oscillator", "--order", "4", "--format", "text")
    assert code == 0
    assert "[H, x1]_1 = (-i*(x2))" in out
    assert "[H, x2]_2 = (w^2*x2)" in out
    assert "[H, psi1]_3 = (-i*(psi2*w^4))" in out


def test_verify_vanderpol():
    code, out, _ = call("verify", "--problem", "vdp")
    rep = json.loads(out)
    assert code == 0 and rep["ok"]
    for branch in rep["branches"].values():
        assert branch["equivalence"] and branch["integral"]["holds"]


def test_error_csv():
    code, out, _ = call("error", "--problem", "pendulum", "--format", "csv", "--t", "0.5")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "t,delta,bound"
    for row in lines[1:]:
        t, delta, bound = map(float, row.split(","))
        assert abs(delta) <= bound


def test_series_csv_header():
    code, out, _ = call("series", "--problem", "pendulum", "--format", "csv", "--t", "0.3")
    assert code == 0 and "t,x1,x2,psi1,psi2" in out.splitlines()


def test_convergence_slopes():
    code, out, _ = call("convergence", "--problem", "pendulum", "--order", "2", "--format", "json")
    rows = json.loads(out)["branches"]["lower"]
    assert code == 0 and [r["order"] for r in rows] == [1, 2]
    for row in rows:
        assert abs(row["slope"] - row["expected"]) <= 0.2


def test_text_table():
    code, out, _ = call("time-optimal", "--problem", "vanderpol", "--format", "text")
    assert code == 0 and "selected: lower" in out


# --- exit codes --------------------------------------------------------------------

@pytest.mark.parametrize("argv", [
    ("solve",),
    ("solve", "--problem", "/nonexistent.prob"),
    ("solve", "--problem", "pendulum", "--u", "sideways"),
    ("launch", "--problem", "pendulum"),
    ("solve", "--problem", "pendulum", "--format", "xml"),
    (),
])
def test_usage_errors(argv):
    code, _, err = call(*argv)
    assert code == 1 and err


def test_domain_error_names_input():
    # the oscillator file declares no integral, so there is nothing to gauge
    code, _, err = call("error", "--problem", "oscillator")
    assert code == 2 and "integral" in err


def test_infeasible(tmp_path):
    path = tmp_path / "far.prob"
    path.write_text("state_vars: [x1, x2]\ndynamics: [x2, u]\nbounds: [-1, 1]\n"
                    "x0: {x1: 50.0, x2: 0.0}\noptions: {order: 2, window: 1.0}\n")
    code, _, err = call("time-optimal", "--problem", str(path))
    assert code == 3 and "infeasible" in err


def test_help_exits_cleanly():
    assert call("--help")[0] == 0
