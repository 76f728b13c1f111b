import json
import subprocess
import sys

import pytest

from wienerband.setspecs import setspec_path

CLI = [sys.executable, "-m", "wienerband"]


def run(*args, **kw):
    return subprocess.run(CLI + list(args), capture_output=True, text=True, **kw)


def test_oracle_one_sided_output():
    r = run("oracle", "--one-sided", "1.0")
    assert r.returncode == 0
    assert r.stdout.strip() == "0.6826894921"


def test_oracle_two_sided_output():
    r = run("oracle", "--two-sided", "1.0")
    assert r.returncode == 0
    assert r.stdout.strip() == "0.3707774298"


def test_oracle_rejects_nonpositive_level():
    r = run("oracle", "--one-sided", "-1.0")
    assert r.returncode == 2


def test_unknown_flag_exits_2():
    r = run("estimate", "--set", setspec_path("full_space.json"), "--bogus")
    assert r.returncode == 2


def test_missing_set_file_exits_2():
    r = run("estimate", "--set", "/nonexistent/spec.json")
    assert r.returncode == 2


def test_bad_json_exits_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{broken")
    r = run("estimate", "--set", str(p))
    assert r.returncode == 2


def test_estimate_empty_band_is_zero():
    r = run("estimate", "--set", setspec_path("empty_band.json"),
            "--levels", "0..3")
    assert r.returncode == 0
    report = json.loads(r.stdout)
    assert report["value"] == 0.0


def test_estimate_report_fields():
    r = run("estimate", "--set", setspec_path("twosided_a10.json"),
            "--levels", "0..4", "--samples", "20000", "--seed", "9")
    assert r.returncode == 0
    report = json.loads(r.stdout)
    for key in ("value", "stopped_by", "alpha_trace", "mc_cross_check",
                "monotone_certified", "policy", "quadrature"):
        assert key in report
    assert report["mc_cross_check"]["samples"] == 20000
    assert len(report["alpha_trace"]) == 5


def test_estimate_csv_format():
    r = run("estimate", "--set", setspec_path("onesided_a10.json"),
            "--levels", "0..3", "--format", "csv")
    assert r.returncode == 0
    lines = r.stdout.strip().split("\n")
    assert lines[0].startswith("value,stopped_by,levels,")
    assert len(lines) == 2


def test_converge_schema_and_monotone_alpha():
    r = run("converge", "--set", setspec_path("onesided_a10.json"),
            "--levels", "0..5")
    assert r.returncode == 0
    lines = r.stdout.strip().split("\n")
    assert lines[0] == ("level,n_times,alpha,delta_prev,quad_err,"
                        "mc_phat,mc_se,runtime_ms")
    rows = [line.split(",") for line in lines[1:]]
    assert len(rows) == 6
    alphas = [float(row[2]) for row in rows]
    assert all(b <= a for a, b in zip(alphas, alphas[1:]))
    assert rows[0][3] == ""          # no delta on the first row
    assert all(row[7] == "" for row in rows)  # timings off by default


def test_converge_byte_identical_runs_and_workers():
    args = ("converge", "--set", setspec_path("twosided_a10.json"),
            "--levels", "0..3", "--samples", "30000", "--seed", "4")
    first = run(*args, "--workers", "1")
    second = run(*args, "--workers", "1")
    third = run(*args, "--workers", "3")
    assert first.returncode == second.returncode == third.returncode == 0
    assert first.stdout == second.stdout == third.stdout


def test_converge_timings_column_opt_in():
    r = run("converge", "--set", setspec_path("onesided_a10.json"),
            "--levels", "0..2", "--timings")
    rows = [line.split(",") for line in r.stdout.strip().split("\n")[1:]]
    assert all(row[7] != "" for row in rows)


def test_converge_difference_mc_column():
    r = run("converge", "--set", setspec_path("complement_inner.json"),
            "--levels", "0..2", "--samples", "20000", "--seed", "6")
    assert r.returncode == 0
    rows = [line.split(",") for line in r.stdout.strip().split("\n")[1:]]
    assert all(row[5] != "" for row in rows)


def test_sample_vectors_csv():
    r = run("sample", "--levels", "2", "--samples", "5", "--seed", "1")
    assert r.returncode == 0
    lines = r.stdout.strip().split("\n")
    assert lines[0] == "1/4,1/2,3/4,1"
    assert len(lines) == 6
    r2 = run("sample", "--levels", "2", "--samples", "5", "--seed", "1")
    assert r2.stdout == r.stdout


def test_sample_bridge_csv():
    r = run("sample", "--levels", "3", "--samples", "4", "--seed", "2",
            "--bridge")
    assert r.returncode == 0
    lines = r.stdout.strip().split("\n")
    assert lines[0].split(",")[0] == "1/8"
    assert len(lines) == 5


def test_sample_rejects_level_range():
    r = run("sample", "--levels", "2..4", "--samples", "5")
    assert r.returncode == 2


def test_out_file(tmp_path):
    out = tmp_path / "table.csv"
    r = run("converge", "--set", setspec_path("onesided_a10.json"),
            "--levels", "0..2", "--out", str(out))
    assert r.returncode == 0
    assert out.read_text().startswith("level,")


def test_verify_subset_passes():
    r = run("verify", "--seed", "42", "--criteria", "4,5")
    assert r.returncode == 0
    assert "[PASS] 04" in r.stdout
    assert "[PASS] 05" in r.stdout


def test_verify_unknown_criterion():
    r = run("verify", "--criteria", "99")
    assert r.returncode == 2
