from __future__ import annotations

import csv
import json

import pytest

from privpart.cli import EXIT_INPUT, EXIT_OK, EXIT_ROWS_FAILED, main
from privpart.logio import read_log


@pytest.fixture()
def synth(tmp_path):
    log, h = tmp_path / "s.xes", tmp_path / "h.csv"
    assert main(["synth", "--traces", "80", "--out", str(log), "--hierarchy-out", str(h)]) == EXIT_OK
    return log, h


def test_partition_writes_parts(synth, tmp_path, capsys):
    log, h = synth
    out = tmp_path / "parts"
    assert main(["partition", "-i", str(log), "--hierarchy", str(h), "--out-dir", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["abstracted.xes", "sub_A.xes", "sub_B.xes"]
    abstracted = read_log(out / "abstracted.xes", keep_lifecycle=True)
    assert {a.lifecycle for a in abstracted.activities} <= {"start", "complete"}


def test_partition_with_derived_hierarchy(synth, tmp_path):
    log, _ = synth
    h_out = tmp_path / "derived.csv"
    args = ["partition", "-i", str(log), "--cooccur-k", "2", "--window", "2",
            "--hierarchy-out", str(h_out), "--out-dir", str(tmp_path / "p")]
    assert main(args) == EXIT_OK
    assert "⊤" in h_out.read_text(encoding="utf-8")


def test_anonymize_discover_evaluate(synth, tmp_path, capsys):
    log, _ = synth
    anon, dfg, pnml = tmp_path / "a.xes", tmp_path / "a.csv", tmp_path / "m.pnml"
    assert main(["anonymize", "-i", str(log), "--mechanism", "df", "--epsilon", "1",
                 "--out", str(anon), "--dfg-out", str(dfg)]) == EXIT_OK
    assert read_log(anon).total_traces == 80
    assert main(["discover", "--dfg", str(dfg), "--out", str(pnml), "--dot", str(tmp_path / "m.dot")]) == EXIT_OK
    capsys.readouterr()
    assert main(["evaluate", "-i", str(log), "--model", str(pnml)]) == EXIT_OK
    metrics = json.loads(capsys.readouterr().out)
    assert set(metrics) == {"fitness", "precision", "f1"}
    assert all(0 <= v <= 1 for v in metrics.values())


def test_anonymize_variants_failure_exit_code(synth, tmp_path):
    log, _ = synth
    code = main(["anonymize", "-i", str(log), "--mechanism", "variants", "--epsilon", "0.01",
                 "--prune", "100000", "--max-len", "10", "--out", str(tmp_path / "x.xes")])
    assert code == EXIT_ROWS_FAILED


def test_experiment_csv_and_exit_codes(synth, tmp_path):
    _, h = synth
    out = tmp_path / "r.csv"
    args = ["experiment", "--hierarchy", str(h), "--repetitions", "1", "--epsilons", "1",
            "--miners", "heuristic", "--no-generalization", "--synthetic-traces", "60", "-o", str(out)]
    assert main(args) == EXIT_OK
    with open(out, newline="") as fh:
        table = list(csv.DictReader(fh))
    assert len(table) == 1 + 4 + 4
    assert {r["abstraction"] for r in table} == {f"mapping:{h}"}
    bad = args[:-2] + ["--mechanism", "variant_tree", "--variant-pairs", "0.01:100000", "-o", str(out)]
    assert main(bad) == EXIT_ROWS_FAILED


def test_experiment_config_file(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("abstraction = random:2\nrepetitions = 1\nepsilons = 1.0\norders = anonymize_only\n"
                   "generalization = false\nsynthetic_traces = 40\n")
    out = tmp_path / "r.csv"
    assert main(["experiment", "--config", str(cfg), "--seed", "3", "-o", str(out)]) == EXIT_OK
    with open(out, newline="") as fh:
        table = list(csv.DictReader(fh))
    assert {r["seed"] for r in table} == {"3"} and len(table) == 2


def test_input_errors_exit_2(tmp_path, capsys):
    assert main(["experiment", "--input", str(tmp_path / "missing.xes")]) == EXIT_INPUT
    bad = tmp_path / "bad.xes"
    bad.write_text("<log><trace>")
    assert main(["discover", "-i", str(bad), "--out", str(tmp_path / "m.pnml")]) == EXIT_INPUT
    cyc = tmp_path / "cyc.csv"
    cyc.write_text("a,A\nA,a\n")
    assert main(["partition", "-i", str(bad), "--hierarchy", str(cyc), "--out-dir", str(tmp_path)]) == EXIT_INPUT
    empty = tmp_path / "empty.pnml"
    empty.write_text("")
    ok_log = tmp_path / "ok.csv"
    ok_log.write_text("case,activity,order\n1,a,1\n")
    assert main(["evaluate", "-i", str(ok_log), "--model", str(empty)]) == EXIT_INPUT
    assert "error" in capsys.readouterr().err
