import json
import math
import os

import numpy as np
import pytest

from phases.cli import main
from phases.graphon import StepGraphon
from phases.serialize import load_finite_graph, load_step_graphon


def run(tmp_path, *args) -> int:
    cwd = os.getcwd()
    os.chdir(tmp_path)
    try:
        return main(list(args))
    finally:
        os.chdir(cwd)


def test_reference_and_density(tmp_path, capsys):
    assert run(tmp_path, "reference", "--eps", "0.5", "--tau", "0.1",
               "--out", str(tmp_path / "ref.json")) == 0
    q = load_step_graphon(str(tmp_path / "ref.json"))
    assert q.m == 2
    assert run(tmp_path, "density", "--graphon", str(tmp_path / "ref.json"),
               "--pattern", "triangle") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["density"] == pytest.approx(0.1, abs=1e-12)


def test_entropy_command(tmp_path, capsys):
    path = tmp_path / "q.json"
    path.write_text(json.dumps(StepGraphon.constant(0.5).to_dict()))
    assert run(tmp_path, "entropy", "--graphon", str(path)) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["entropy"] == pytest.approx(math.log(2) / 2, abs=1e-12)


def test_optimize_feasible_and_infeasible(tmp_path, capsys):
    out = tmp_path / "opt.json"
    code = run(tmp_path, "optimize", "--eps", "0.5", "--tau", "0.1",
               "--starts", "6", "--m-max", "3", "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["feasible"] and doc["podality"] == 2
    vals = doc["graphon"]["values"]
    assert vals[0][0] == pytest.approx(0.2076, abs=1e-3)
    # the emitted graphon re-validates under the type invariants
    StepGraphon(doc["graphon"]["masses"], doc["graphon"]["values"])
    code = run(tmp_path, "optimize", "--eps", "0.3", "--tau", "0.17",
               "--starts", "4", "--m-max", "3", "--out", str(tmp_path / "inf.json"))
    assert code == 2


def test_manifest_rerun_is_byte_identical(tmp_path):
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert run(tmp_path, "optimize", "--eps", "0.45", "--tau", "0.08",
               "--starts", "5", "--m-max", "2", "--out", str(out1)) == 0
    manifest = tmp_path / "r1.json.manifest.json"
    assert manifest.exists()
    assert run(tmp_path, "optimize", "--config", str(manifest),
               "--out", str(out2)) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"eps": 0.4, "tau": 0.05, "bogus_knob": 3}))
    code = run(tmp_path, "optimize", "--config", str(cfg))
    assert code == 1
    assert "bogus_knob" in capsys.readouterr().err


def test_usage_error_exit_code(tmp_path, capsys):
    assert run(tmp_path, "optimize") == 1  # missing --eps/--tau
    assert "eps" in capsys.readouterr().err


def test_malformed_input_names_file_and_field(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"masses": [1.0]}))
    code = run(tmp_path, "density", "--graphon", str(bad), "--pattern", "edge")
    assert code == 1
    err = capsys.readouterr().err
    assert "bad.json" in err and "values" in err


def test_scan_writes_csv_and_svg(tmp_path, capsys):
    csv_path, svg_path = tmp_path / "s.csv", tmp_path / "s.svg"
    code = run(tmp_path, "scan", "--grid", "2x2",
               "--eps-min", "0.4", "--eps-max", "0.45",
               "--tau-min", "0.03", "--tau-max", "0.05",
               "--starts", "4", "--m-max", "2", "--threads", "1",
               "--out", str(csv_path), "--svg", str(svg_path))
    assert code == 0
    assert csv_path.read_text().startswith("eps,tau,")
    assert svg_path.read_text().startswith("<svg")


def test_sample_writes_edge_lists_and_manifest(tmp_path, capsys):
    out_dir = tmp_path / "chains"
    code = run(tmp_path, "sample", "--n", "16", "--eps", "0.5", "--tau", "0.125",
               "--delta", "0.05", "--samples", "2", "--burn-in", "512",
               "--interval", "256", "--out-dir", str(out_dir))
    assert code == 0
    files = sorted(os.listdir(out_dir))
    assert "samples.csv" in files and "manifest.json" in files
    sample_files = [f for f in files if f.endswith(".txt")]
    assert len(sample_files) == 2
    g = load_finite_graph(str(out_dir / sample_files[0]))
    assert g.n <= 16
    header = (out_dir / "samples.csv").read_text().splitlines()[0]
    assert header == "chain,sample,step,density_0,density_1"


def test_enumerate_with_histogram(tmp_path, capsys):
    hist = tmp_path / "h.csv"
    code = run(tmp_path, "enumerate", "--n", "4", "--eps", "0.5", "--tau", "0.25",
               "--delta", "0.3", "--histogram", str(hist))
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["total"] == 64
    lines = hist.read_text().splitlines()
    assert lines[0] == "edge_count,triangle_count,count"
    assert sum(int(l.split(",")[2]) for l in lines[1:]) == 64


def test_perm_commands(tmp_path, capsys):
    code = run(tmp_path, "perm-count", "--n", "4", "--pattern", "12",
               "--alpha", "0.5", "--delta", "0.1")
    assert code == 0
    assert json.loads(capsys.readouterr().out)["count"] == 6
    perm = tmp_path / "pi.txt"
    perm.write_text("2 4 1 3\n")
    code = run(tmp_path, "perm-density", "--perm", str(perm), "--pattern", "12")
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["exact"] == [1, 2]
    code = run(tmp_path, "perm-optimize", "--constraint", "12=0.5",
               "--resolution", "10", "--starts", "3")
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["feasible"] and abs(doc["entropy"]) < 1e-6


def test_cut_distance_command(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(json.dumps(StepGraphon.constant(0.2).to_dict()))
    b.write_text(json.dumps(StepGraphon.constant(0.7).to_dict()))
    code = run(tmp_path, "cut-distance", "--a", str(a), "--b", str(b), "--dbar",
               "--max-order", "3")
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["cut_distance_upper"] == pytest.approx(0.5, abs=1e-12)
    assert doc["dbar"]["value"] > 0


def test_threads_env_fallback(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("PHASES_THREADS", "1")
    code = run(tmp_path, "perm-count", "--n", "3", "--pattern", "12",
               "--alpha", "0.5", "--delta", "0.4")
    assert code == 0
    manifest = json.loads((tmp_path / "phases-manifest.json").read_text())
    assert manifest["options"]["threads"] == 1
    assert manifest["subcommand"] == "perm-count"
    assert manifest["version"]
