import csv
import json
import subprocess
import sys

import pytest

from rbfquad.cli import format_rows, main, read_config
from rbfquad.experiments import ConfigError, ExperimentConfig, eps_grid, run_experiment


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(csv_text):
    return list(csv.DictReader(ln for ln in csv_text.splitlines() if not ln.startswith("#")))


def test_weights_trapezoid(capsys):
    code, out, _ = run(capsys, "weights", "--kernel", "phs:1", "--points", "equid:5")
    assert code == 0
    meta = json.loads(out.splitlines()[0][2:])
    assert meta["experiment"] == "weights" and len(meta["config_sha256_16"]) == 16
    rows = rows_of(out)
    assert [float(r["weight"]) for r in rows] == pytest.approx([0.125, 0.25, 0.25, 0.25, 0.125], abs=1e-14)
    footer = json.loads(out.splitlines()[-1][2:])
    assert footer["is_stable"] is True and footer["stability_measure"] == pytest.approx(1.0)


def test_weights_jsonl_and_gram(capsys, tmp_path):
    gram = tmp_path / "gram.csv"
    out_file = tmp_path / "w.jsonl"
    code, _, _ = run(capsys, "weights", "--kernel", "phs:3", "--dim", "2", "--points", "halton:30", "--degree", "1",
                     "--format", "jsonl", "--out", str(out_file), "--dump-gram", str(gram))
    assert code == 0
    recs = [json.loads(ln) for ln in out_file.read_text().splitlines()]
    assert "meta" in recs[0] and len(recs) == 32
    assert sum(r["weight"] for r in recs[1:-1]) == pytest.approx(1.0, abs=1e-10)
    assert len(gram.read_text().splitlines()) == 3


def test_weights_invh(capsys):
    code, out, _ = run(capsys, "weights", "--kernel", "wendland:1,1", "--points", "equid:11", "--eps", "invh",
                       "--degree", "0", "--shape-policy", "equal_moment_boundary")
    assert code == 0 and json.loads(out.splitlines()[-1][2:])["is_stable"] is True


def test_weights_singular_exit(capsys):
    code, _, err = run(capsys, "weights", "--kernel", "gaussian", "--points", "halton:60", "--eps", "0.01", "--degree", "0")
    assert code == 1 and "singular" in err


def test_lsrbf(capsys, tmp_path):
    out = tmp_path / "rule.csv"
    code, _, _ = run(capsys, "lsrbf", "--centers", "halton:10", "--out", str(out))
    assert code == 0
    trace = [json.loads(ln) for ln in (tmp_path / "rule.csv.trace.jsonl").read_text().splitlines()]
    footer = json.loads(out.read_text().splitlines()[-1][2:])
    assert footer["success"] is True and footer["N_final"] == trace[-1]["N"]
    assert trace[-1]["min_weight"] >= 0


def test_lsrbf_bad_sequence(capsys):
    assert run(capsys, "lsrbf", "--data-seq", "sobol")[0] == 2


@pytest.mark.parametrize("argv", [
    ["stability-sweep", "--set", "bogus=1"],
    ["stability-sweep", "--config", "/nonexistent/file.cfg"],
    ["stability-sweep", "--kernel", "phs:2"],
    ["stability-sweep", "--degrees", ""],
    ["error-sweep", "--trials", "0"],
    ["convergence", "--set", "noequals"],
])
def test_config_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "configuration error" in err


def test_config_file_and_overrides(capsys, tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("# tiny sweep\nkernel = wendland:1,1\npoints = equid:20\neps = 1,19  # two values\ndegrees = 0\n")
    assert read_config(str(cfg))["eps"] == "1,19"
    code, out, _ = run(capsys, "stability-sweep", "--config", str(cfg), "--set", "degrees=0,1", "--points", "equid:21")
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 4 and {r["points"] for r in rows} == {"equid:21"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("kernel gaussian\n")
    with pytest.raises(ConfigError):
        read_config(str(bad))


def test_stability_sweep_examples(capsys):
    code, out, _ = run(capsys, "stability-sweep", "--points", "equid:100", "--eps", "invh,0.01", "--degrees", "0",
                       "--shape-policy", "equal_moment_boundary", "--kernel", "wendland:1,1;gaussian")
    assert code == 0
    rows = rows_of(out)
    assert rows[0]["is_stable"] == "true" and rows[0]["nonoverlap"] == "true"
    flat = rows[3]
    assert flat["kernel"] == "gaussian" and flat["ill_conditioned"] == "true"


def test_stability_sweep_halton(capsys):
    code, out, _ = run(capsys, "stability-sweep", "--points", "halton:100", "--eps", "invh,2*invh", "--degrees", "0,1")
    assert all(r["is_stable"] == "true" for r in rows_of(out))


def test_failure_rows_do_not_abort(capsys):
    code, out, _ = run(capsys, "stability-sweep", "--kernel", "phs:3", "--points", "equid:2", "--degrees", "2,-1",
                       "--eps", "1")
    assert code == 0
    rows = rows_of(out)
    assert rows[0]["status"].startswith("error:") and rows[1]["status"] == "ok"


def test_timing_column(capsys):
    _, out, _ = run(capsys, "coverage", "--n-values", "4", "--eps", "3", "--samples", "10000", "--timing")
    assert "runtime_ms" in rows_of(out)[0]
    _, out, _ = run(capsys, "coverage", "--n-values", "4", "--eps", "3", "--samples", "10000")
    assert "runtime_ms" not in rows_of(out)[0]


def test_moments_subcommand(capsys):
    _, out, _ = run(capsys, "moments", "--kernel", "wendland:1,0", "--points", "equid:3", "--eps", "2")
    rows = out.splitlines()
    assert rows[1].startswith("index,center,eps,value,method")
    _, out, _ = run(capsys, "moments", "--kernel", "wendland:2,1", "--dim", "2", "--points", "halton:3",
                    "--method", "numeric", "--format", "jsonl")
    recs = [json.loads(ln) for ln in out.splitlines()[1:]]
    assert all(r["method"] == "adaptive_numeric" and r["error_estimate"] <= 1e-11 for r in recs)


def test_error_sweep_aggregates():
    cfg = ExperimentConfig.from_mapping({"experiment": "error_sweep", "kernel": "wendland:2,1", "dim": 2,
                                         "points": "halton:60", "eps": "2,8", "degrees": "1", "trials": 3})
    rows = run_experiment(cfg)
    trials = [r for r in rows if r["row_type"] == "trial"]
    aggs = [r for r in rows if r["row_type"] == "aggregate"]
    argmin = [r for r in rows if r["row_type"] == "argmin"]
    assert len(trials) == 6 and len(aggs) == 2 and len(argmin) == 1
    assert argmin[0]["median_error"] == min(a["median_error"] for a in aggs)
    assert {t["integrand"] for t in trials if t["eps"] == 2.0} == {t["integrand"] for t in trials if t["eps"] == 8.0}


def test_error_sweep_holes():
    """Pure RBF rule (d = -1) with tiny supports misses most of the domain."""
    cfg = ExperimentConfig.from_mapping({"experiment": "error_sweep", "kernel": "wendland:2,1", "dim": 2,
                                         "points": "halton:100", "eps": "5,200", "degrees": "-1", "trials": 3,
                                         "integrand": "genz:gaussian_peak"})
    aggs = {r["eps"]: r for r in run_experiment(cfg) if r["row_type"] == "aggregate"}
    assert aggs[200.0]["median_error"] > 5 * aggs[5.0]["median_error"]


def test_convergence_rows():
    cfg = ExperimentConfig.from_mapping({"experiment": "convergence", "kernel": "phs:3", "dim": 2, "degrees": "1",
                                         "n_values": "50,100,200", "integrand": "genz:oscillatory:0"})
    rows = run_experiment(cfg)
    pts = [r for r in rows if r["row_type"] == "point"]
    assert [r["N"] for r in pts] == [50, 100, 200]
    assert all(r["stability_measure"] - r["rule_of_one"] < 0.1 for r in pts)
    assert rows[-1]["row_type"] == "fit" and rows[-1]["fitted_order"] > 0


def test_lsrbf_compare_rows():
    cfg = ExperimentConfig.from_mapping({"experiment": "lsrbf_compare", "kernel": "gaussian", "dim": 2, "eps": "0.8",
                                         "degrees": "0", "m_values": "10", "trials": 4, "noise": "0,1e-2"})
    rows = run_experiment(cfg)
    trials = [r for r in rows if r["row_type"] == "trial"]
    assert all(r["is_stable"] for r in trials if r["method"] == "lsrbf")
    aggs = {(r["method"], r["noise"]): r["median_error"] for r in rows if r["row_type"] == "aggregate"}
    # noiseless both are accurate; the smaller LS space costs some accuracy at small M
    assert max(aggs[("lsrbf", 0.0)], aggs[("interpolatory", 0.0)]) <= 1e-3
    assert aggs[("lsrbf", 1e-2)] <= aggs[("interpolatory", 1e-2)]


def test_ratio_and_coverage_rows():
    cfg = ExperimentConfig.from_mapping({"experiment": "ratio_study", "kernel": "gaussian", "dim": 2, "eps": "0.8",
                                         "degrees": "0", "m_values": "5,10"})
    rows = run_experiment(cfg)
    assert rows[-1]["row_type"] == "fit" and rows[-1]["points_used"] == 2
    cfg = ExperimentConfig.from_mapping({"experiment": "coverage", "dim": 2, "n_values": "4", "eps": "breakpoints",
                                         "samples": 20000})
    assert len(run_experiment(cfg)) == 6


def test_eps_grid():
    g = eps_grid("log:0.1:100:40")
    assert len(g) == 121 and g[0] == pytest.approx(0.1) and g[-1] == pytest.approx(100)
    assert eps_grid("1, 2*invh, invh") == [1.0, ("invh", 2.0), ("invh", 1.0)]


def test_config_digest_stable():
    a = ExperimentConfig.from_mapping({"kernel": "phs:3", "dim": "2", "points": "halton:10"})
    b = ExperimentConfig.from_mapping({"points": "halton:10", "dim": 2, "kernel": "phs:3"})
    assert a.digest() == b.digest() and a.digest() != ExperimentConfig().digest()


def test_format_rows_union_header():
    text = format_rows([{"a": 1}, {"b": 0.1, "a": True}], {"m": 1}, "csv")
    assert text.splitlines()[1:] == ["a,b", "1,", "true,0.1"]


@pytest.mark.parametrize("argv", [
    ["stability-sweep", "--points", "halton:50", "--eps", "log:1:100:5", "--degrees", "0,1"],
    ["error-sweep", "--points", "halton:50", "--eps", "3,10", "--trials", "3"],
    ["lsrbf-compare", "--m-values", "5,10", "--trials", "3"],
    ["coverage", "--n-values", "4,16", "--samples", "20000"],
])
def test_determinism_across_jobs(tmp_path, argv):
    outs = []
    for i, jobs in enumerate((1, 2, 1)):
        path = tmp_path / f"out{i}.csv"
        code = subprocess.run([sys.executable, "-m", "rbfquad.cli", *argv, "--jobs", str(jobs), "--out", str(path)]).returncode
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
