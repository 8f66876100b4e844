import subprocess
import sys

import pytest

from corrcache import __version__
from corrcache.cli import main


def run_cli(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def test_simulate_pinned_example(capsys):
    rc, out, _ = run_cli(
        capsys,
        "simulate", "--n", "5", "--k", "5", "--demands", "1,2,3,4,5",
        "--level-sizes", "0,10000", "--fixture", "example1",
    )
    assert rc == 0
    assert "total_bits=72000" in out
    assert "rate=1.8" in out
    assert "step_counts=9,9,9,9" in out
    assert "decode=ok" in out
    assert "random_overshoot_bits=0" in out


def test_simulate_repeated_demands(capsys):
    rc, out, _ = run_cli(
        capsys,
        "simulate", "--n", "5", "--k", "5", "--demands", "1,1,1,3,4",
        "--level-sizes", "0,10000", "--fixture", "example1",
    )
    assert rc == 0
    assert "total_bits=60000" in out
    assert "step_counts=7,9,7,7" in out


def test_simulate_other_schemes(capsys):
    rc, out, _ = run_cli(
        capsys,
        "simulate", "--n", "3", "--k", "3", "--demands", "1,2,3",
        "--level-sizes", "6,6,6", "--scheme", "cauc", "--t", "1,1,1",
    )
    assert rc == 0 and "decode=ok" in out
    rc, out, _ = run_cli(
        capsys,
        "simulate", "--n", "3", "--k", "3", "--demands", "1,2,3",
        "--level-sizes", "6,6,6", "--scheme", "cicc", "--m", "1",
    )
    assert rc == 0 and "decode=ok" in out


def test_rates_requires_capacity(capsys):
    rc, _, err = run_cli(
        capsys, "rates", "--n", "2", "--k", "2", "--level-sizes", "4,4"
    )
    assert rc == 2
    assert "error:" in err


def test_rates_table(capsys):
    rc, out, _ = run_cli(
        capsys,
        "rates", "--n", "10", "--k", "10", "--m", "1", "--ratios", "1",
    )
    assert rc == 0
    lines = out.strip().split("\n")
    assert lines[0].startswith("# n=10 k=10 m=1")
    assert lines[1] == "r_cauc,r_cacc,r_cicc,r_cutset"
    vals = dict(zip(lines[1].split(","), map(float, lines[2].split(","))))
    assert vals["r_cicc"] == pytest.approx(4.5)
    assert vals["r_cutset"] <= min(vals.values()) + 1e-9


def test_optimize_listing(capsys):
    rc, out, _ = run_cli(
        capsys,
        "optimize", "--n", "5", "--k", "5", "--m", "1",
        "--level-sizes", "0,10000",
    )
    assert rc == 0
    lines = out.strip().split("\n")
    assert lines[2] == "level,fraction,t"
    assert len(lines) == 3 + 5
    level2 = lines[4].split(",")
    assert level2[0] == "2" and float(level2[2]) > 0


def test_sweep_schema_and_determinism(capsys, tmp_path):
    args = ("sweep", "--n", "4", "--k", "4", "--m", "1", "--sweep-level", "2")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main([*args, "--out", str(a)]) == 0
    assert main([*args, "--out", str(b)]) == 0
    text = a.read_text()
    assert text == b.read_text()
    lines = text.strip().split("\n")
    assert lines[0].startswith("# n=4 k=4 m=1")
    assert lines[1] == "x,r_cauc,r_cacc,r_cicc,r_cutset"
    rows = [list(map(float, ln.split(","))) for ln in lines[2:]]
    assert len(rows) == 11
    assert rows[0][0] == 0.0 and rows[-1][0] == 1.0
    cicc_col = {r[3] for r in rows}
    assert max(cicc_col) - min(cicc_col) < 1e-9  # structure-blind scheme is flat
    for r in rows:
        assert r[4] <= min(r[1:4]) + 1e-9


def test_sweep_custom_grid(capsys):
    rc, out, _ = run_cli(
        capsys,
        "sweep", "--n", "3", "--k", "3", "--m", "1", "--grid", "0,0.5,1",
    )
    assert rc == 0
    assert len(out.strip().split("\n")) == 2 + 3


def test_verify_clean_grid(capsys):
    rc, out, _ = run_cli(
        capsys,
        "verify", "--n", "3", "--k", "3", "--m", "1",
        "--level-sizes", "6,6,6", "--t", "1,1,1",
    )
    assert rc == 0
    assert "violations=0" in out
    assert "demand,measured_rate,formula_rate,decode_ok" in out
    assert out.count("\n") >= 3 + 27


def test_usage_errors_exit_2(capsys):
    # demanded file index outside the library
    rc, _, err = run_cli(
        capsys,
        "simulate", "--n", "2", "--k", "2", "--demands", "1,9",
        "--level-sizes", "4,4",
    )
    assert rc == 2 and "error:" in err
    # wrong demand count
    rc, _, _ = run_cli(
        capsys,
        "simulate", "--n", "5", "--k", "5", "--demands", "1,2",
        "--level-sizes", "0,10000",
    )
    assert rc == 2
    # no sizes at all
    rc, _, _ = run_cli(capsys, "rates", "--n", "2", "--k", "2", "--m", "1")
    assert rc == 2


def test_missing_subcommand_is_parser_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_console_entry_point_runs():
    proc = subprocess.run(
        [
            sys.executable, "-m", "corrcache.cli",
            "simulate", "--n", "5", "--k", "5", "--demands", "1,2,3,4,5",
            "--level-sizes", "0,10000", "--fixture", "example1",
        ],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0
    assert "total_bits=72000" in proc.stdout
