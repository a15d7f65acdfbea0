import csv
import io
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from glidepath.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from glidepath.market_model import get_preset, psi

GOLDEN = Path(__file__).parent / "golden"

GOLDEN_RUNS = {
    "yield_curve_moderate.csv": ["yield-curve", "--preset", "rates-moderate"],
    "vol_profile.csv": ["vol-profile", "--times", "1,10,100"],
    "profile_rates_low.csv": ["profile", "--preset", "rates-low", "--T", "20", "--nu-min", "-10", "--nu-max", "0", "--n", "11"],
    "strategy_equity_high.csv": ["strategy", "--preset", "equity-high", "--T", "40", "--nu", "-1", "--points", "41"],
    "coefficients_equity_high.csv": ["strategy", "--preset", "equity-high", "--T", "40", "--nu", "-1", "--coefficients"],
    "stats_rates_moderate.csv": ["stats", "--preset", "rates-moderate", "--T", "10,20"],
    "classify_mr_e.csv": ["classify", "--preset", "mr-E", "--nu", "-1,0.2,2,20"],
    "simulate_small.csv": [
        "simulate", "--preset", "equity-moderate", "--T", "5", "--constant", "0.3",
        "--paths", "4096", "--steps", "20", "--seed", "1",
    ],
}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("name", sorted(GOLDEN_RUNS))
def test_golden_output(capsys, name):
    code, out, _ = run(capsys, *GOLDEN_RUNS[name])
    assert code == EXIT_OK
    assert out == (GOLDEN / name).read_text()
    # and a second run is byte-identical
    assert run(capsys, *GOLDEN_RUNS[name])[1] == out


def test_yield_curve(capsys):
    code, out, _ = run(capsys, "yield-curve", "--preset", "rates-moderate")
    assert code == EXIT_OK
    table = rows(out)
    assert list(table[0]) == ["maturity_years"] + [f"yield_r0={r}" for r in ("-0.02", "0", "0.02", "0.04", "0.06")]
    at20 = next(r for r in table if float(r["maturity_years"]) == 20)
    assert float(at20["yield_r0=0"]) == pytest.approx(0.0189, abs=5e-5)
    assert [float(table[0][k]) for k in list(table[0])[1:]] == [-0.02, 0.0, 0.02, 0.04, 0.06]


def test_unknown_preset(capsys):
    code, out, err = run(capsys, "yield-curve", "--preset", "rates-wild")
    assert code == EXIT_CONFIG and out == ""
    assert "rates-wild" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["stats", "--T", "10"],
        ["stats", "--preset", "rates-moderate", "--config", "x.cfg", "--T", "10"],
        ["stats", "--preset", "rates-moderate", "--T", "0"],
        ["stats", "--preset", "rates-moderate", "--T", "10", "--nu", "abc"],
        ["simulate", "--preset", "equity-moderate", "--T", "5", "--constant", "0.3", "--nu", "0"],
        ["simulate", "--preset", "equity-moderate", "--T", "5", "--constant", "0.3", "--paths", "1"],
        ["strategy", "--config", "/nonexistent/params.cfg", "--T", "5", "--nu", "0"],
        ["nonsense"],
    ],
)
def test_config_errors(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_CONFIG


def test_numeric_error_exit_code(capsys):
    code, out, err = run(capsys, "stats", "--preset", "equity-moderate", "--T", "20", "--nu", "0.5", "--strict")
    assert code == EXIT_NUMERIC and out == ""
    code, out, _ = run(capsys, "stats", "--preset", "equity-moderate", "--T", "20", "--nu", "0.5")
    assert code == EXIT_OK and "singular" in out


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("# moderate rates\nkappa = 0.08\nr_bar=0.02\nsigma_r=0.007\na=0.08\nb=0.04\nr0=0\n")
    code, out, _ = run(capsys, "yield-curve", "--config", str(cfg), "--maturities", "20", "--r0-values", "0")
    assert code == EXIT_OK
    assert float(rows(out)[0]["yield_r0=0"]) == pytest.approx(0.0189, abs=5e-5)
    cfg.write_text("kappa=0.08\nr_bar=zero\n")
    assert run(capsys, "yield-curve", "--config", str(cfg))[0] == EXIT_CONFIG


def test_vol_profile(capsys):
    code, out, _ = run(capsys, "vol-profile", "--presets", "mr-1,mr-4,mr-G", "--times", "1,100000")
    assert code == EXIT_OK
    table = rows(out)
    assert list(table[0]) == ["t_years", "vol_mr-1", "vol_mr-4", "vol_mr-G"]
    assert all(float(r["vol_mr-1"]) == pytest.approx(0.15) for r in table)
    assert float(table[1]["vol_mr-4"]) < 2e-3
    assert table[-1]["t_years"] == "inf" and table[-1]["vol_mr-G"] == "inf"
    assert float(table[-1]["vol_mr-4"]) == pytest.approx(0.0, abs=1e-15)


def test_stats_example(capsys):
    code, out, _ = run(capsys, "stats", "--preset", "equity-moderate", "--x0", "0.045", "--T", "20", "--nu", "0")
    assert code == EXIT_OK
    (row,) = rows(out)
    assert row["median"] == "2.460" and row["prob_loss"] == "0.166"


def test_strategy_hedge(capsys):
    code, out, _ = run(capsys, "strategy", "--preset", "rates-moderate", "--T", "20", "--nu", "-inf", "--points", "21")
    assert code == EXIT_OK
    rp = get_preset("rates-moderate").rates
    for r in rows(out):
        s = float(r["s"])
        assert float(r["exposure"]) == pytest.approx(-rp.sigma_r * psi(rp.kappa, 20 - s), abs=1e-12)
        assert r["equity_share"] == ""


def test_strategy_by_sigma(capsys):
    code, out, _ = run(capsys, "strategy", "--preset", "equity-moderate", "--T", "20", "--sigma", "0.2", "--points", "5")
    assert code == EXIT_OK
    table = rows(out)
    assert len(table) == 5
    assert float(table[0]["equity_share"]) == pytest.approx(float(table[0]["exposure"]) / 0.15, rel=1e-9)


def test_profile_joint_and_leg(capsys):
    code, out, _ = run(capsys, "profile", "--preset", "rates-moderate", "--T", "20", "--nu", "-inf,0")
    assert code == EXIT_OK
    first, second = rows(out)
    assert first["sigma"] == "0" and first["nu"] == "-inf"
    assert float(second["sigma"]) == pytest.approx(0.8308, abs=5e-5)


def test_output_file(tmp_path, capsys):
    dest = tmp_path / "curve.csv"
    code, out, _ = run(capsys, "classify", "--preset", "equity-moderate", "--nu", "-1,2", "-o", str(dest))
    assert code == EXIT_OK and out == ""
    assert dest.read_text().splitlines() == ["nu,type", "-1.0,I", "2.0,II"]


def test_simulate_with_strategy_file_and_dump(tmp_path, capsys):
    T = 5.0
    strat = tmp_path / "s.csv"
    grid = np.linspace(0, T, 51)
    strat.write_text("s,exposure\n" + "".join(f"{float(s)!r},{0.3 + 0.05 * math.cos(s)!r}\n" for s in grid))
    dump = tmp_path / "d.csv"
    code, out, _ = run(
        capsys, "simulate", "--preset", "equity-moderate", "--T", "5", "--strategy-csv", str(strat),
        "--paths", "20000", "--steps", "50", "--seed", "3", "--dump", str(dump),
    )
    assert code == EXIT_OK
    table = rows(out)
    assert [r["quantity"] for r in table] == ["log_mean", "log_variance"]
    assert all(abs(float(r["z_score"])) < 4 for r in table)
    assert len(dump.read_text().splitlines()) == 20001


def test_simulate_acceptance_example(capsys):
    code, out, _ = run(capsys, "simulate", "--preset", "equity-high", "--T", "40", "--nu", "-1", "--paths", "100000", "--seed", "7")
    assert code == EXIT_OK
    assert all(abs(float(r["z_score"])) < 4 for r in rows(out))


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "glidepath", "classify", "--preset", "equity-moderate", "--nu", "-1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout == "nu,type\n-1.0,I\n"
