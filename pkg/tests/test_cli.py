import csv
import io
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ruinprob.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return header, np.array([[float(v) for v in r] for r in reader])


@pytest.mark.parametrize("argv,golden", [
    (["constants", "--restricted"], "constants_restricted.txt"),
    (["curve", "--a", "0.25", "--n-points", "20"], "curve_unrestricted_a025.csv"),
    (["curve", "--restricted", "--n-points", "20"], "curve_high_a0.csv"),
    (["curve", "--restricted", "--p", "0.1", "--a", "0.2", "--n-points", "20"],
     "curve_low_a02.csv"),
    (["bp-sweep", "--n-points", "10"], "bp_sweep_10.csv"),
])
def test_golden_output(capsys, argv, golden):
    code, out, _ = run(capsys, *argv)
    assert code == EXIT_OK
    assert out == (GOLDEN / golden).read_text()


def test_out_file_matches_stdout(capsys, tmp_path):
    target = tmp_path / "curve.csv"
    assert main(["curve", "--n-points", "20", "--a", "0.25", "--out", str(target)]) == EXIT_OK
    assert target.read_text() == (GOLDEN / "curve_unrestricted_a025.csv").read_text()


def test_constants_regimes(capsys):
    _, out, _ = run(capsys, "constants", "--restricted")
    assert "regime = restricted: p >= p*" in out
    p_star = float(out.split("p_star = ")[1].split()[0])
    assert p_star == pytest.approx(0.258, abs=0.002)
    _, out, _ = run(capsys, "constants", "--restricted", "--p", "0.1")
    assert "regime = restricted: p < p*" in out
    _, out, _ = run(capsys, "constants")
    assert "regime = unrestricted" in out


def test_invalid_params_exit_2(capsys):
    code, _, err = run(capsys, "constants", "--mu", "0.01")
    assert code == EXIT_USAGE
    assert "mu > r" in err


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["curve", "--n-points", "many"])
    assert info.value.code == EXIT_USAGE
    code, _, err = run(capsys, "curve", "--a", "5")
    assert code == EXIT_USAGE and "outside" in err


def test_curve_unrestricted_shape(capsys):
    _, out, _ = run(capsys, "curve", "--a", "0.25", "--p", "0.5")
    header, data = rows(out)
    assert header == ["w", "psi", "pi_star"]
    assert data.shape == (200, 3)
    assert data[0, 1] == pytest.approx(1.0, abs=1e-10)
    assert data[-1, 1] == 0.0
    assert np.all(np.diff(data[:, 1]) <= 1e-12)
    # the first row sits on the ruin level -(1 - p) a_bar a
    assert data[0, 0] == pytest.approx(-0.5 * 50 / 3 * 0.25)


def test_curve_restricted_rows(capsys):
    _, out, _ = run(capsys, "curve", "--restricted", "--n-points", "50")
    _, data = rows(out)
    assert data[0, 1] == pytest.approx(1.0, abs=1e-10)
    _, out, _ = run(capsys, "curve", "--restricted", "--p", "0.258", "--a", "0.75")
    _, data = rows(out)
    assert data[0, 1] == pytest.approx(0.25, abs=0.03)


def test_bp_sweep(capsys):
    _, out, _ = run(capsys, "bp-sweep")
    header, data = rows(out)
    assert header == ["p", "b"] and data.shape == (50, 2)
    assert np.all(np.diff(data[:, 1]) >= 0)
    a_bar = 50 / 3
    assert abs(data[-1, 1] - a_bar) <= 1e-6 * a_bar
    p = data[:, 0]
    assert np.all(data[:, 1] >= p / (0.04 + p * 0.02))
    _, out, _ = run(capsys, "bp-sweep", "--n-points", "2")
    _, data = rows(out)
    assert data.shape == (2, 2)
    assert data[-1, 0] == pytest.approx(0.2585037948, abs=1e-9)
    assert data[-1, 1] == pytest.approx(a_bar, rel=1e-6)


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("p = 0.1\nlambda_s = 0.04\n")
    _, out, _ = run(capsys, "constants", "--restricted", "--config", str(cfg))
    assert "p < p*" in out
    _, out, _ = run(capsys, "constants", "--restricted", "--config", str(cfg), "--p", "0.9")
    assert "p >= p*" in out
    bad = tmp_path / "bad.cfg"
    bad.write_text("gamma = 3\n")
    code, _, err = run(capsys, "constants", "--config", str(bad))
    assert code == EXIT_USAGE and "gamma" in err
    code, _, _ = run(capsys, "constants", "--config", str(tmp_path / "missing.cfg"))
    assert code == EXIT_USAGE


@pytest.mark.parametrize("extra", [[], ["--restricted"], ["--restricted", "--p", "0.1"]])
def test_verify_shape(capsys, extra):
    code, out, _ = run(capsys, "verify", "--suite", "shape", *extra)
    assert code == EXIT_OK
    assert "FAIL" not in out and "CHECK shape_convex" in out


def test_verify_seam(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "seam", "--p", "0.2585037948418313",
                       "--restricted")
    assert code == EXIT_OK and "CHECK seam_psi" in out


def test_verify_default_suites(capsys):
    code, out, _ = run(capsys, "verify", "--restricted", "--p", "0.1")
    assert code == EXIT_OK
    assert "SUMMARY" in out and "bind_purchase" in out and "negctl_hjb" in out


def test_verify_mc_small(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "mc", "--paths", "1000", "--dt", "0.01")
    assert code == EXIT_OK
    assert out.count("CHECK mc_error") == 9
    assert "+-" in out


def test_verify_failure_exit_1(capsys, monkeypatch):
    import ruinprob.verify.checks as checks
    import ruinprob.verify.suites as suites
    # a residual suite run against a perturbed solution
    monkeypatch.setattr(suites, "residual_suite", lambda sol: checks.check_hjb_residual(
        checks.PerturbedSolution(sol, 0.01), checks.interior_points(sol)))
    code, out, _ = run(capsys, "verify", "--suite", "residual")
    assert code == EXIT_FAIL and "FAIL" in out


def test_simulate(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--w", "10", "--a", "0")
    assert code == EXIT_OK and "estimate = 0\n" in out
    code, out, _ = run(capsys, "simulate", "--w", "0", "--a", "0")
    assert code == EXIT_OK and "estimate = 1\n" in out
    target = tmp_path / "paths.csv"
    code, out, _ = run(capsys, "simulate", "--w", "5", "--paths", "50", "--dt", "0.01",
                       "--seed", "4", "--out", str(target))
    assert code == EXIT_OK
    lines = target.read_text().splitlines()
    assert lines[0] == "path,outcome,tau" and len(lines) == 51
    again = tmp_path / "again.csv"
    main(["simulate", "--w", "5", "--paths", "50", "--dt", "0.01", "--seed", "4",
          "--out", str(again)])
    assert again.read_text() == target.read_text()


def test_simulate_accuracy(capsys):
    code, out, _ = run(capsys, "simulate", "--w", "5", "--a", "0", "--paths", "100000")
    vals = dict(line.split(" = ") for line in out.splitlines())
    est, se, exact = (float(vals[k]) for k in ("estimate", "std_err", "analytic_psi"))
    assert abs(est - exact) <= 3 * se


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ruinprob", "constants"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "regime = unrestricted" in proc.stdout
