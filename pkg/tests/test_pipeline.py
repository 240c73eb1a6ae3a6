from __future__ import annotations

import csv
import io

import pytest

from privpart.discovery import leaf, seq
from privpart.log import act
from privpart.pipeline import (
    ANONYMIZE_ONLY,
    CSV_COLUMNS,
    LARGE_LOG_PAIRS,
    PARTITION_FIRST,
    PARTITION_LAST,
    SMALL_LOG_PAIRS,
    ExperimentConfig,
    all_ok,
    config_to_text,
    load_dataset,
    parse_config,
    report_csv,
    run,
    settings_for,
)
from privpart.synth import SyntheticSpec, generate_synthetic, running_example


def quick(**kw) -> ExperimentConfig:
    base = dict(synthetic_traces=120, abstraction="mapping:true", repetitions=2, generalization=False,
                epsilons=(0.1, 1.0), miners=("inductive",))
    base.update(kw)
    return ExperimentConfig(**base)


def rows(reports):
    return list(csv.DictReader(io.StringIO(report_csv(reports))))


def test_thirty_top_level_reports():
    config = quick(orders=(ANONYMIZE_ONLY,), repetitions=10, epsilons=(0.01, 0.1, 1.0))
    reports = run(config)
    assert len(reports) == 30
    assert all(r.per_sublog == {} for r in reports)
    assert [r.meta["seed"] for r in reports[:10]] == list(range(10))


def test_row_count_formula():
    config = quick(orders=(ANONYMIZE_ONLY, PARTITION_FIRST, PARTITION_LAST), miners=("inductive", "heuristic"))
    table = rows(run(config))
    n_sub = 2
    per_order = len(config.epsilons) * len(config.miners) * config.repetitions
    assert len(table) == per_order * (1 + (1 + (1 + n_sub)) * 2)
    assert list(table[0]) == list(CSV_COLUMNS)
    levels = {r["level"] for r in table if r["order"] == PARTITION_FIRST}
    assert levels == {"average", "abstracted", "sub_A", "sub_B"}


def test_partitioned_average_is_mean_of_parts():
    reports = run(quick(orders=(PARTITION_FIRST,), repetitions=1, epsilons=(1.0,)))
    top = reports[0]
    parts = list(top.per_sublog.values())
    assert top.fitness == pytest.approx(sum(p.fitness for p in parts) / len(parts))


def test_end_to_end_determinism_and_workers():
    config = quick(orders=(ANONYMIZE_ONLY, PARTITION_LAST), generalization=True)
    one = report_csv(run(config))
    assert one == report_csv(run(config))
    assert one == report_csv(run(quick(orders=(ANONYMIZE_ONLY, PARTITION_LAST), generalization=True, workers=2)))


def test_degenerate_parts_are_recorded_not_raised():
    config = quick(mechanism="variant_tree", variant_pairs=((0.01, 10_000.0),), orders=(PARTITION_FIRST,))
    reports = run(config)
    assert not all_ok(reports)
    table = rows(reports)
    assert {r["status"] for r in table} == {"degenerate"}
    assert all(float(r["f1"]) == 0.0 for r in table)


def test_reference_anonymized_runs():
    reports = run(quick(orders=(ANONYMIZE_ONLY,), reference="anonymized", epsilons=(1.0,)))
    assert all_ok(reports)


def test_structural_invariant_via_artifact_hook():
    seen = []

    def hook(order, part_id, artifact):
        seen.append((order, part_id, artifact))

    config = quick(orders=(PARTITION_FIRST,), epsilons=(0.01,))
    data = load_dataset(config)
    run(config, on_artifact=hook, dataset=data)
    subs = [(pid, a) for order, pid, a in seen if pid.startswith("sub_")]
    assert subs
    for pid, artifact in subs:
        members = {m for m in data.hierarchy.members(act(pid[4:]))}
        assert artifact.dfg.activities <= members


def test_settings_for_pairs():
    config = quick(mechanism="variant_tree")
    data = load_dataset(config)
    assert [(s.epsilon, s.prune) for s in settings_for(config, data.log)] == list(SMALL_LOG_PAIRS)
    assert LARGE_LOG_PAIRS[0] == (0.01, 300.0)
    assert [s.epsilon for s in settings_for(quick(), data.log)] == [0.1, 1.0]


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig(repetitions=0)
    with pytest.raises(ValueError):
        ExperimentConfig(epsilons=())
    with pytest.raises(ValueError):
        ExperimentConfig(orders=("sideways",))
    with pytest.raises(ValueError):
        ExperimentConfig(abstraction="kmeans:3")
    with pytest.raises(ValueError, match="synthetic"):
        path = tmp_path / "log.csv"
        path.write_text("case,activity,order\n1,a,1\n")
        load_dataset(ExperimentConfig(input=str(path), abstraction="mapping:true"))


def test_config_text_roundtrip():
    config = quick(variant_pairs=((0.1, 5.0), (1.0, 2.0)), mechanism="variant_tree", dataset="demo")
    assert parse_config(config_to_text(config)) == config
    parsed = parse_config("# comment\nrepetitions = 3\nepsilons = 0.5, 2\nmax-variant-length=7\n")
    assert (parsed.repetitions, parsed.epsilons, parsed.max_variant_length) == (3, (0.5, 2.0), 7)
    with pytest.raises(ValueError):
        parse_config("colour = blue")
    with pytest.raises(ValueError):
        parse_config("generalization = maybe")


def test_synthetic_running_example():
    synth = generate_synthetic(
        SyntheticSpec({"A": seq(*map(leaf, "abc")), "B": seq(*map(leaf, "def"))}, n_traces=25), seed=1
    )
    assert dict(synth.log.variants) == {tuple(act(x) for x in "abcdef"): 25}
    assert running_example().log.total_traces == 1
    assert synth.hierarchy.abstract(act("e")) == act("B")


def test_synthetic_errors_and_determinism():
    with pytest.raises(ValueError):
        SyntheticSpec(n_traces=0)
    with pytest.raises(ValueError):
        SyntheticSpec({"A": ("a", "b"), "B": ("b", "c")})
    one = generate_synthetic(SyntheticSpec(n_traces=100), 3)
    two = generate_synthetic(SyntheticSpec(n_traces=100), 3)
    assert list(one.log.variants.items()) == list(two.log.variants.items())


def test_synthetic_blocks_are_contiguous_and_once():
    synth = generate_synthetic(SyntheticSpec(n_traces=200, top="exclusive"), 4)
    for trace, _ in synth.log:
        groups = [synth.hierarchy.abstract(a) for a in trace]
        blocks = [g for i, g in enumerate(groups) if i == 0 or groups[i - 1] != g]
        assert len(blocks) == len(set(blocks)) == 1
