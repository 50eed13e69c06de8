import csv
import json
import subprocess
import sys

import pytest

from disperse import cli
from disperse.adversary import gen_random, gen_sequential
from disperse.bounds import disp_kd_lower
from disperse.events import PlacementTrace, write_instance
from disperse.geometry import segment, square, unit_cube
from disperse.line import build_harmonic_config
from disperse.runner import RunOptions, UsageError, dumps, make_algorithm, run
from disperse.square import InternalConsistencyError, build_square_config


def disperse(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "disperse.cli", *map(str, args)], capture_output=True,
                          text=True, cwd=cwd)


def test_line_run_example():
    report, _ = run(gen_sequential(100), segment(), RunOptions(algo="line", l=3))
    a = report["atwc"]
    assert a["reference_kind"] == "exact"
    assert a["ratio"] <= float(2 * build_harmonic_config(3).sigma) + 1e-12
    assert a["ratio"] <= 1.45075
    assert report["pass"] and report["instance"]["m"] == 100


def test_square_run_example():
    report, _ = run(gen_sequential(1000), square(), RunOptions(algo="square"))
    a = report["atwc"]
    assert a["ratio_is_bound"] and a["reference_kind"] == "upper"
    assert a["ratio"] <= build_square_config().nominal_ceiling + 1e-9
    assert report["pass"]


def test_greedy_run_example():
    S = gen_random(50, 3)
    report, trace = run(S, square(), RunOptions(algo="greedy", epsilon=0.1))
    assert [c["name"] for c in report["checks"]] == ["greedy-certificate"] and report["pass"]
    # every per-arrival configuration, against the count of points placed so far
    seen = 0
    for rec in trace.records:
        if rec.kind == "arrive":
            seen += 1
            assert rec.dmin >= 0.45 * disp_kd_lower(seen, 2, 1.0) - 1e-12


def test_offline_cd_report():
    S = gen_random(40, 9)
    report, trace = run(S, segment(), RunOptions(algo="line", objective="cd", offline=True, algo_atwc="line"))
    assert "atwc" not in report
    assert report["algorithm"]["name"] == "acd[line]"
    names = {c["name"] for c in report["checks"]}
    assert {"acd-passes", "cd-ratio"} <= names and report["pass"]
    assert report["cd"]["ceiling"] == pytest.approx(2 * float(2 * build_harmonic_config(3).sigma))
    assert len(report["cd"]["slices"]) >= 1


def test_insert_only_check():
    S = gen_sequential(30)
    report, _ = run(S, segment(), RunOptions(algo="line"))
    assert "insert-only-cd-ratio" in {c["name"] for c in report["checks"]}


def test_make_algorithm_rejections():
    with pytest.raises(UsageError):
        make_algorithm("square", segment(), RunOptions())
    with pytest.raises(UsageError):
        make_algorithm("line", square(), RunOptions())
    with pytest.raises(UsageError):
        make_algorithm("line", segment(), RunOptions(with_boundary=False))
    with pytest.raises(UsageError):
        make_algorithm("nope", segment(), RunOptions())
    assert make_algorithm("greedy", segment(), RunOptions()).name == "line-greedy"
    assert make_algorithm("line", segment(), RunOptions(epsilon=0.1)).cfg.l == 4
    assert make_algorithm("greedy", unit_cube(3), RunOptions()).cfg.epsilon == 0.1


def test_without_boundary_reports_no_reference():
    report, _ = run(gen_random(10, 1), square(), RunOptions(algo="greedy", epsilon=0.5, with_boundary=False))
    assert report["atwc"]["reference"] is None and report["cd"]["upper_bound"] is None


def test_report_is_deterministic_json():
    S = gen_random(20, 2)
    a = dumps(run(S, segment(), RunOptions())[0])
    b = dumps(run(S, segment(), RunOptions())[0])
    assert a == b and a.endswith("\n")
    json.loads(a)
    assert '"inf"' in dumps({"x": float("inf")})


def test_cli_gen_and_run(tmp_path):
    inst = tmp_path / "seq.txt"
    r = disperse("gen", "--family", "sequential", "--n", "50", "-o", inst)
    assert r.returncode == 0 and inst.exists()
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    t = tmp_path / "t.jsonl"
    r = disperse("run", inst, "--algo", "line", "-o", out1, "--trace", t, "--csv", tmp_path / "d.csv")
    assert r.returncode == 0, r.stderr
    disperse("run", inst, "--algo", "line", "-o", out2)
    assert out1.read_text() == out2.read_text()
    assert json.loads(out1.read_text())["instance"]["m"] == 50
    assert PlacementTrace.read_jsonl(t).meta["algorithm"] == "line"
    rows = list(csv.reader((tmp_path / "d.csv").open()))
    # the timeline starts at 0, so the slice before the first arrival is empty
    assert rows[0] == ["t", "n_present", "dmin"] and rows[1] == ["0.0", "0", "inf"]
    assert len(rows) == 52


def test_cli_usage_errors(tmp_path):
    assert disperse("gen", "--family", "adaptive_cd", "--n", "4").returncode == 1
    assert disperse("gen", "--family", "three_stage").returncode == 1
    assert disperse("run", "--algo", "bogus").returncode == 1
    assert disperse("run").returncode == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n2 x\n")
    assert disperse("run", bad).returncode == 1
    inst = tmp_path / "i.txt"
    write_instance(gen_sequential(4), inst)
    assert disperse("run", inst, "--algo", "square", "--polytope", "segment").returncode == 1


def test_cli_adversary_run():
    r = disperse("run", "--algo", "greedy", "--polytope", "segment", "--adversary", "adaptive_cd", "--n", "8")
    assert r.returncode == 0, r.stderr
    rep = json.loads(r.stdout)
    assert rep["instance"]["adversary"]["n"] == 8 and rep["algorithm"]["name"] == "line-greedy"


def test_cli_guarantee_failure_exit_code(tmp_path):
    # the nominal square ceiling is exceeded at n = 97; the suite reports it and exits 2
    r = disperse("verify", "square", "--json", "-o", tmp_path / "v.json")
    assert r.returncode == 2
    data = json.loads((tmp_path / "v.json").read_text())
    failed = [c["name"] for c in data["suites"]["square"] if not c["pass"]]
    assert failed == ["square-ratio-nominal"]


def test_cli_verify_passing_suite():
    r = disperse("verify", "cd")
    assert r.returncode == 0, r.stdout
    assert all(line.startswith("PASS") for line in r.stdout.splitlines())


def test_cli_internal_error_exit_code(monkeypatch, tmp_path):
    inst = tmp_path / "i.txt"
    write_instance(gen_sequential(4), inst)

    def boom(*a, **k):
        raise InternalConsistencyError("count mismatch")

    monkeypatch.setattr(cli, "run", boom)
    assert cli.main(["run", str(inst)]) == 3


def test_cli_report_outputs(tmp_path):
    traces = []
    for algo, poly, name in (("line", "segment", "a"), ("square", "square", "b")):
        inst = tmp_path / f"{name}.txt"
        write_instance(gen_sequential(12), inst)
        t = tmp_path / f"{name}.jsonl"
        assert disperse("run", inst, "--algo", algo, "--polytope", poly, "--trace", t, "-o",
                        tmp_path / f"{name}.json").returncode == 0
        traces.append(t)
    out = tmp_path / "rep"
    r = disperse("report", *traces, "--out-dir", out, "--svg-at", 12.5)
    assert r.returncode == 0, r.stderr
    assert (out / "a.csv").exists() and (out / "b.svg").read_text().count("<circle") == 12
    rows = list(csv.DictReader((out / "ratios.csv").open()))
    assert [row["algorithm"] for row in rows] == ["line", "square"]
