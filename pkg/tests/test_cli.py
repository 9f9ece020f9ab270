import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from cktcs.cli import RunConfig, UsageError, main, parse_config_text
from cktcs.core import make_params
from cktcs.dynamics import phase_states
from cktcs.observables import uncertainty_products


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def table(out):
    lines = out.splitlines()
    assert lines[0].startswith("# cktcs ")
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_trajectory_first_row(capsys):
    code, out, _ = run(["trajectory", "--nt", "5", "--t1", "2"], capsys)
    assert code == 0
    row = table(out)[0]
    assert [float(row[k]) for k in ("t", "x", "p", "z_re", "z_im", "sigma")] == [0, 1, 0.5, 1, 0, 0]


def test_trajectory_matches_library_bitwise(capsys):
    code, out, _ = run(["trajectory", "--gamma", "0.4", "--b-im", "0.9", "--t1", "6", "--nt", "13"], capsys)
    p = make_params(1.0, 0.4, 1.0, 1.0, 0.9j, 1.0, 0.5)
    ref = phase_states(p, np.linspace(0, 6, 13))
    for row, ps in zip(table(out), ref):
        assert float(row["x"]) == ps.x and float(row["p"]) == ps.p
        assert complex(float(row["w_re"]), float(row["w_im"])) == ps.w
        assert float(row["sigma"]) == ps.sigma


def test_header_echoes_parameters(capsys):
    _, out, _ = run(["trajectory", "--gamma", "0.1", "--nt", "1"], capsys)
    assert "gamma=0.10000000000000001" in out.splitlines()[0]


def test_deterministic_output(capsys):
    argv = ["observables", "--gamma", "1.9", "--state", "coherent:1,0.5", "--nt", "17"]
    assert run(argv, capsys)[1] == run(argv, capsys)[1]


@pytest.mark.parametrize("argv", [
    ["trajectory", "--t0", "2", "--t1", "1"],
    ["trajectory", "--b-im", "-1"],
    ["trajectory", "--nt", "0"],
    ["observables", "--state", "squeezed:1"],
    ["minimize", "--b-re", "0.2"],
    ["minimize", "--gamma", "2"],
    ["verify", "--tol", "oops"],
    ["frobnicate"],
    ["trajectory", "--gamma", "fast"],
])
def test_usage_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert "error" in err


def test_t1_before_t0_message(capsys):
    _, _, err = run(["trajectory", "--t0", "2", "--t1", "1"], capsys)
    assert "t1 must be >= t0" in err


def test_observables_minimum_at_t0(capsys):
    _, out, _ = run(["observables", "--gamma", "0.4", "--nt", "3"], capsys)
    assert float(table(out)[0]["product"]) == pytest.approx(0.25, rel=1e-15)


def test_observables_undamped_matched_width(capsys):
    _, out, _ = run(["observables", "--state", "fock:2", "--t1", "9"], capsys)
    prod = [float(r["product"]) for r in table(out)]
    np.testing.assert_allclose(prod, 2.5 ** 2, rtol=1e-13)


def test_observables_match_library(capsys):
    _, out, _ = run(["observables", "--gamma", "4", "--b-im", "1.5", "--t1", "3", "--nt", "7"], capsys)
    p = make_params(1.0, 4.0, 1.0, 1.0, 1.5j, 1.0, 0.5)
    for row in table(out):
        assert float(row["g"]) == uncertainty_products(p, 0, float(row["t"])).g_value


def test_observables_g_empty_for_complex_b(capsys):
    _, out, _ = run(["observables", "--b-re", "0.3", "--nt", "3"], capsys)
    assert all(r["g"] == "" for r in table(out))
    _, out, _ = run(["observables", "--b-re", "0.3", "--nt", "2", "--format", "json-lines"], capsys)
    assert json.loads(out.splitlines()[0])["g"] is None


def test_wavefunction_ground(capsys):
    _, out, _ = run(["wavefunction", "--gamma", "0.4", "--x0", "0.75"], capsys)
    rows = table(out)
    x = np.array([float(r["x"]) for r in rows])
    a2 = np.array([float(r["abs2"]) for r in rows])
    assert abs(a2.sum() * (x[1] - x[0]) - 1) < 1e-6
    assert abs(x[np.argmax(a2)] - 0.75) <= x[1] - x[0]


def test_wavefunction_fock1_node(capsys):
    _, out, _ = run(["wavefunction", "--state", "fock:1", "--grid-halfwidth", "6", "--grid-n", "1201"], capsys)
    rows = table(out)
    x = np.array([float(r["x"]) for r in rows])
    a2 = np.array([float(r["abs2"]) for r in rows])
    assert a2[np.argmin(np.abs(x - 1.0))] < 1e-12 * a2.max()


def test_minimize_reports_zeros(capsys):
    _, out, _ = run(["minimize", "--gamma", "0.4", "--b-im", "0.5"], capsys)
    rows = table(out)
    assert {r["event"] for r in rows} == {"t1", "t2"}
    assert all(float(r["value"]) < 1e-12 for r in rows)


def test_minimize_overdamped_t01(capsys):
    _, out, _ = run(["minimize", "--gamma", "4", "--b-im", "0.5"], capsys)
    rows = table(out)
    assert rows[0]["event"] == "t01" and float(rows[0]["t"]) == 0


def test_minimize_solve_mu(capsys):
    _, out, _ = run(["minimize", "--gamma", "0.4", "--solve-mu", "1.5"], capsys)
    row = table(out)[-1]
    assert row["event"] == "solve_mu" and row["value"] == ""
    assert "underdamped solvability condition violated" in row["note"]
    _, out, _ = run(["minimize", "--gamma", "0.4", "--solve-mu", "0.5"], capsys)
    assert float(table(out)[-1]["value"]) > 0


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ngamma = 0.4\nnt = 3\nt1 = 1.5\n")
    _, out, _ = run(["trajectory", "--config", str(cfg), "--nt", "4"], capsys)
    head = out.splitlines()[0]
    assert "gamma=0.40000000000000002" in head and "nt=4" in head and "t1=1.5" in head


def test_config_round_trip():
    cfg = RunConfig(gamma=0.1 + 0.2, b_re=-1e-300, t1=7.25, state="coherent:1.5,-0.5",
                    tol=("wronskian=1e-9", "residual*=1e-4"), no_battery=True)
    assert RunConfig(**parse_config_text(cfg.to_text())) == cfg


def test_config_errors():
    with pytest.raises(UsageError, match="unknown key"):
        parse_config_text("colour = red")
    with pytest.raises(UsageError, match="key = value"):
        parse_config_text("gamma 0.4")


def test_out_file(tmp_path, capsys):
    path = tmp_path / "traj.csv"
    assert main(["trajectory", "--nt", "3", "--out", str(path)]) == 0
    assert capsys.readouterr().out == ""
    assert path.read_text().count("\n") == 5


def test_verify_corrupt_branch_exit_1(capsys):
    code, out, _ = run(["verify", "--no-battery", "--gamma", "0.4", "--b-im", "0.9",
                        "--corrupt-branch", "--format", "json-lines"], capsys)
    assert code == 1
    rows = [json.loads(line) for line in out.splitlines()]
    failed = {r["check"] for r in rows if not r["passed"]}
    assert any("residual[fock:0]" in name for name in failed)


def test_verify_tolerance_override(capsys):
    code, out, _ = run(["verify", "--no-battery", "--tol", "*ehrenfest*=0"], capsys)
    assert code == 1
    assert "FAIL" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cktcs", "trajectory", "--t0", "1", "--t1", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
