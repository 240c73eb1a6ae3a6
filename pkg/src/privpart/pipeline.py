"""Experiment grid: pipeline orders x privacy settings x miners x repetitions.

Orders
------
``anonymize_only``
    anonymize the whole log, discover, evaluate against the original log.
``partition_first``
    partition, anonymize every part independently, discover per part,
    evaluate each part against its original counterpart and average.
``partition_last``
    anonymize the whole log (a noisy DFG is played out into a log first),
    partition the anonymized log, discover per part, evaluate and average.
"""

from __future__ import annotations

import csv
import io
import math
import os
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from privpart.conformance import UtilityReport, f1, kfold_split, multilevel_average, token_fitness
from privpart.conformance import etc_precision
from privpart.discovery import MINERS, discover
from privpart.hierarchy import AbstractionHierarchy, derive_cooccurrence, derive_random, parse_mapping
from privpart.log import EventLog, df_counts
from privpart.logio import CsvSchema, read_log
from privpart.partition import partition
from privpart.privacy import (
    DF_LAPLACE,
    MECHANISMS,
    VARIANT_TREE,
    AnonymizedPart,
    MechanismError,
    PrivacyParams,
    anonymize_log,
    playout_dfg,
)
from privpart.seeding import derive_rng
from privpart.synth import SyntheticSpec, generate_synthetic

ANONYMIZE_ONLY = "anonymize_only"
PARTITION_FIRST = "partition_first"
PARTITION_LAST = "partition_last"
ORDERS = (ANONYMIZE_ONLY, PARTITION_FIRST, PARTITION_LAST)
REFERENCES = ("original", "anonymized")

CSV_COLUMNS = (
    "dataset", "order", "mechanism", "abstraction", "miner", "epsilon", "seed", "rep", "level",
    "fitness", "precision", "f1", "generalization", "status",
)

# (ε, p) pairs with l = 50 for the trace-variant mechanism
SMALL_LOG_PAIRS = ((0.01, 100.0), (0.1, 100.0), (1.0, 50.0))
LARGE_LOG_PAIRS = ((0.01, 300.0), (0.1, 200.0), (1.0, 100.0))
LARGE_LOG_CASES = 10_000

WHOLE = "log"
AVERAGE = "average"


@dataclass(frozen=True)
class ExperimentConfig:
    input: Optional[str] = None  # None -> built-in synthetic log
    format: str = "auto"
    case_column: str = "case"
    activity_column: str = "activity"
    order_column: str = "order"
    dataset: Optional[str] = None
    synthetic_traces: int = 500
    synthetic_seed: int = 0
    abstraction: str = "cooccur:3"  # mapping:<path> | random:<k> | cooccur:<k>
    window: int = 1
    mechanism: str = DF_LAPLACE
    orders: tuple[str, ...] = ORDERS
    epsilons: tuple[float, ...] = (0.01, 0.1, 1.0)
    variant_pairs: Optional[tuple[tuple[float, float], ...]] = None  # (ε, p); default by log size
    max_variant_length: int = 50
    miners: tuple[str, ...] = MINERS
    threshold: float = 0.2
    repetitions: int = 10
    seed: int = 0
    reference: str = "original"
    generalization: bool = True
    k_folds: int = 3
    workers: int = 1

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        for name in ("orders", "epsilons", "miners"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        for o in self.orders:
            if o not in ORDERS:
                raise ValueError(f"unknown order {o!r}")
        for m in self.miners:
            if m not in MINERS:
                raise ValueError(f"unknown miner {m!r}")
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if self.reference not in REFERENCES:
            raise ValueError(f"reference must be one of {REFERENCES}")
        if any(e <= 0 for e in self.epsilons):
            raise ValueError("epsilons must be positive")
        if self.variant_pairs is not None and (
            not self.variant_pairs or any(e <= 0 or p < 0 for e, p in self.variant_pairs)
        ):
            raise ValueError("variant_pairs must be non-empty (ε > 0, p >= 0) pairs")
        if not 0 <= self.threshold <= 1:
            raise ValueError("threshold must be in [0, 1]")
        kind, _, arg = self.abstraction.partition(":")
        if kind not in ("mapping", "random", "cooccur") or not arg:
            raise ValueError(f"abstraction must be mapping:<path>, random:<k> or cooccur:<k>, got {self.abstraction!r}")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.k_folds < 2:
            raise ValueError("k_folds must be >= 2")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def dataset_name(self) -> str:
        if self.dataset:
            return self.dataset
        if self.input is None:
            return "synthetic"
        return os.path.basename(self.input)


@dataclass(frozen=True)
class Setting:
    """One privacy setting of the grid: ε plus the pruning threshold for variant_tree."""

    epsilon: float
    prune: Optional[float] = None

    def label(self, mechanism: str, length: int) -> str:
        if mechanism == VARIANT_TREE:
            return f"{mechanism}(p={_num(self.prune)},l={length})"
        return mechanism


def _num(x: float) -> str:
    return repr(float(x)).rstrip("0").rstrip(".") if "." in repr(float(x)) else repr(x)


@dataclass
class Dataset:
    name: str
    log: EventLog
    hierarchy: AbstractionHierarchy


def load_dataset(config: ExperimentConfig) -> Dataset:
    if config.input is None:
        synth = generate_synthetic(SyntheticSpec(n_traces=config.synthetic_traces), config.synthetic_seed)
        log, true_h = synth.log, synth.hierarchy
    else:
        schema = CsvSchema(config.case_column, config.activity_column, config.order_column)
        log, true_h = read_log(config.input, config.format, schema), None
    if not log:
        raise ValueError("input log is empty")
    kind, _, arg = config.abstraction.partition(":")
    if kind == "mapping":
        if arg == "true":
            if true_h is None:
                raise ValueError("abstraction mapping:true needs the built-in synthetic log")
            h = true_h
        else:
            h = parse_mapping(arg)
    elif kind == "random":
        h = derive_random(log.activities, int(arg), config.seed)
    else:
        h = derive_cooccurrence(log, int(arg), config.window)
    return Dataset(config.dataset_name, log, h)


def settings_for(config: ExperimentConfig, log: EventLog) -> list[Setting]:
    if config.mechanism == DF_LAPLACE:
        return [Setting(e) for e in config.epsilons]
    pairs = config.variant_pairs
    if pairs is None:
        pairs = LARGE_LOG_PAIRS if log.total_traces >= LARGE_LOG_CASES else SMALL_LOG_PAIRS
    return [Setting(e, p) for e, p in pairs]


# ---------------------------------------------------------------------------
# one pipeline execution

class Degenerate(Exception):
    """An anonymized part has nothing to discover from."""


@dataclass
class _PartModel:
    model: object = None
    anonymized: Optional[EventLog] = None  # log-shaped release, for reference=anonymized
    status: str = "ok"


def _mine(part: AnonymizedPart, miner: str, threshold: float):
    if part.dfg is None or not part.dfg.edges or not part.dfg.activities:
        raise Degenerate(part.part_id)
    return discover(part.dfg, miner, threshold)


def _params(config: ExperimentConfig, setting: Setting, seed: int) -> PrivacyParams:
    prune = setting.prune if setting.prune is not None else 1.0
    return PrivacyParams(setting.epsilon, config.max_variant_length, prune, seed)


def _released_log(part: AnonymizedPart, n_traces: int, max_len: int, rng) -> EventLog:
    if part.log is not None:
        return part.log
    return playout_dfg(part.dfg, n_traces, max_len, rng)


def execute(order: str, log: EventLog, h: AbstractionHierarchy, config: ExperimentConfig,
            setting: Setting, seed: int, miners, stage: str = "anonymize",
            on_artifact: Optional[Callable] = None) -> dict[str, dict[str, _PartModel]]:
    """Run one order on ``log``; returns ``{miner: {level: _PartModel}}``.

    Levels are ``"log"`` for ``anonymize_only`` and the partition part ids
    (``"abstracted"``, ``"sub_<α>"``) otherwise.
    """
    params = _params(config, setting, seed)
    mech = config.mechanism
    releases: dict[str, AnonymizedPart] = {}
    failed: dict[str, str] = {}
    if order == PARTITION_FIRST:
        parts = dict(partition(log, h).parts())
        for pid, plog in parts.items():
            # same per-part streams as anonymize_partition, but one degenerate part
            # does not sink the others
            try:
                releases[pid] = anonymize_log(plog, mech, params, derive_rng(seed, stage, pid), pid)
            except MechanismError as exc:
                failed[pid] = f"degenerate: {exc}"
    else:
        try:
            whole = anonymize_log(log, mech, params, derive_rng(seed, stage, WHOLE), WHOLE)
        except MechanismError as exc:
            whole = None
            failed[WHOLE] = f"degenerate: {exc}"
        if order == ANONYMIZE_ONLY:
            parts = {WHOLE: log}
            if whole is not None:
                releases[WHOLE] = whole
        else:
            parts = dict(partition(log, h).parts())
            if whole is None:
                for pid in parts:
                    failed[pid] = failed[WHOLE]
            else:
                try:
                    rng = derive_rng(seed, "playout", stage)
                    anon_log = _released_log(whole, log.total_traces, config.max_variant_length, rng)
                except MechanismError as exc:
                    anon_log = None
                    for pid in parts:
                        failed[pid] = f"degenerate: {exc}"
                if anon_log is not None:
                    anon_parts = dict(partition(anon_log, h).parts()) if anon_log else {}
                    for pid in parts:
                        plog = anon_parts.get(pid)
                        if plog:
                            releases[pid] = AnonymizedPart(pid, df_counts(plog), plog)
                        else:
                            failed[pid] = "degenerate: part absent from anonymized log"
    if on_artifact is not None:
        for pid, rel in releases.items():
            on_artifact(order, pid, rel)
    reference: dict[str, EventLog] = {}
    if config.reference == "anonymized":
        for pid, rel in releases.items():
            rng = derive_rng(seed, "reference", stage, pid)
            try:
                reference[pid] = _released_log(rel, parts[pid].total_traces, config.max_variant_length, rng)
            except MechanismError:
                pass
    out: dict[str, dict[str, _PartModel]] = {}
    for miner in miners:
        models = {}
        for pid in parts:
            if pid in failed:
                models[pid] = _PartModel(status=failed[pid])
                continue
            try:
                models[pid] = _PartModel(_mine(releases[pid], miner, config.threshold), reference.get(pid))
            except Degenerate:
                models[pid] = _PartModel(status="degenerate: empty release")
        out[miner] = models
    return out


def _reference_parts(order: str, log: EventLog, h: AbstractionHierarchy) -> dict[str, EventLog]:
    if order == ANONYMIZE_ONLY:
        return {WHOLE: log}
    return dict(partition(log, h).parts())


# ---------------------------------------------------------------------------
# the grid

@dataclass(frozen=True)
class _Job:
    index: int
    order: str
    setting: Setting
    rep: int


def _jobs(config: ExperimentConfig, settings: list[Setting]) -> list[_Job]:
    out = []
    for order in config.orders:
        for setting in settings:
            for rep in range(config.repetitions):
                out.append(_Job(len(out), order, setting, rep))
    return out


def _zero(meta: dict, status: str) -> UtilityReport:
    return UtilityReport(0.0, 0.0, 0.0, None, {}, dict(meta, status=status))


def _run_job(job: _Job, data: Dataset, config: ExperimentConfig,
             on_artifact: Optional[Callable] = None) -> list[UtilityReport]:
    seed = config.seed + job.rep
    mech_label = job.setting.label(config.mechanism, config.max_variant_length)
    models = execute(job.order, data.log, data.hierarchy, config, job.setting, seed, config.miners,
                     on_artifact=on_artifact)
    refs = _reference_parts(job.order, data.log, data.hierarchy)
    gen = _generalization(job, data, config, seed) if config.generalization else {}
    reports = []
    for miner in config.miners:
        meta = {
            "dataset": data.name, "order": job.order, "mechanism": mech_label,
            "abstraction": config.abstraction, "miner": miner, "epsilon": job.setting.epsilon,
            "seed": seed, "rep": job.rep,
        }
        per_part: dict[str, UtilityReport] = {}
        for pid, ref in refs.items():
            pm = models[miner][pid]
            part_meta = dict(meta, level=pid)
            if pm.status != "ok":
                per_part[pid] = _zero(part_meta, pm.status.split(":")[0])
                continue
            target = ref
            if config.reference == "anonymized":
                if not pm.anonymized:
                    per_part[pid] = _zero(part_meta, "degenerate")
                    continue
                target = pm.anonymized
            fit = token_fitness(pm.model, target)
            prec = etc_precision(pm.model, target)
            g = gen.get(miner, {}).get(pid)
            per_part[pid] = UtilityReport(fit, prec, f1(fit, prec), g, {}, dict(part_meta, status="ok"))
        if job.order == ANONYMIZE_ONLY:
            top = per_part[WHOLE]
            top = replace(top, per_sublog={}, meta=dict(top.meta))
        else:
            top = multilevel_average(per_part)
            statuses = {r.meta["status"] for r in per_part.values()}
            status = "ok" if statuses == {"ok"} else sorted(statuses - {"ok"})[0]
            top.meta = dict(meta, level=AVERAGE, status=status)
        reports.append(top)
    return reports


def _generalization(job: _Job, data: Dataset, config: ExperimentConfig, seed: int) -> dict:
    """``{miner: {level: mean hold-out fitness}}`` over ``k`` folds of the original log."""
    if data.log.total_traces < config.k_folds:
        return {}
    folds = kfold_split(data.log, config.k_folds, seed)
    sums: dict[str, dict[str, list[float]]] = {m: {} for m in config.miners}
    for i, held in enumerate(folds):
        train: dict = {}
        for j, fold in enumerate(folds):
            if j != i:
                for t, m in fold:
                    train[t] = train.get(t, 0) + m
        train_log = EventLog(train)
        models = execute(job.order, train_log, data.hierarchy, config, job.setting, seed, config.miners,
                         stage=f"generalization-{i}")
        held_parts = _reference_parts(job.order, held, data.hierarchy)
        for miner in config.miners:
            for pid, pm in models[miner].items():
                ref = held_parts.get(pid)
                if ref is None or not ref:
                    continue
                value = token_fitness(pm.model, ref) if pm.status == "ok" else 0.0
                sums[miner].setdefault(pid, []).append(value)
    return {m: {pid: float(sum(v) / len(v)) for pid, v in d.items()} for m, d in sums.items()}


def _guarded(job: _Job, data: Dataset, config: ExperimentConfig, on_artifact=None) -> list[UtilityReport]:
    try:
        return _run_job(job, data, config, on_artifact)
    except Exception as exc:  # noqa: BLE001 - recorded in the report, run continues
        status = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
        out = []
        for miner in config.miners:
            meta = {
                "dataset": data.name, "order": job.order,
                "mechanism": job.setting.label(config.mechanism, config.max_variant_length),
                "abstraction": config.abstraction, "miner": miner, "epsilon": job.setting.epsilon,
                "seed": config.seed + job.rep, "rep": job.rep, "level": AVERAGE, "status": status,
            }
            out.append(UtilityReport(0.0, 0.0, 0.0, None, {}, meta))
        return out


def _worker(args):
    job, data, config = args
    return _guarded(job, data, config)


def run(config: ExperimentConfig, on_artifact: Optional[Callable] = None,
        dataset: Optional[Dataset] = None) -> list[UtilityReport]:
    """Execute the whole grid; one report per (order, setting, miner, repetition).

    ``on_artifact(order, part_id, AnonymizedPart)`` observes every release
    (sequential execution only).
    """
    data = dataset or load_dataset(config)
    jobs = _jobs(config, settings_for(config, data.log))
    if config.workers > 1 and on_artifact is None:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_worker, [(j, data, config) for j in jobs]))
    else:
        results = [_guarded(j, data, config, on_artifact) for j in jobs]
    return [r for batch in results for r in batch]


# ---------------------------------------------------------------------------
# reporting

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return repr(round(x, 12))
    return str(x)


def report_rows(reports: list[UtilityReport]) -> list[dict]:
    """Flatten reports: the top-level row followed by one row per part."""
    rows = []
    for rep in reports:
        for r in [rep, *rep.per_sublog.values()]:
            row = {c: r.meta.get(c, "") for c in CSV_COLUMNS}
            row.update({m: r.as_dict()[m] for m in ("fitness", "precision", "f1", "generalization")})
            if r.meta.get("level") is None:
                row["level"] = WHOLE
            rows.append({c: _fmt(row[c]) for c in CSV_COLUMNS})
    return rows


def write_report(reports: list[UtilityReport], target) -> None:
    own = isinstance(target, (str, os.PathLike))
    fh = open(target, "w", encoding="utf-8", newline="") if own else target
    try:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(report_rows(reports))
    finally:
        if own:
            fh.close()


def report_csv(reports: list[UtilityReport]) -> str:
    buf = io.StringIO()
    write_report(reports, buf)
    return buf.getvalue()


def all_ok(reports: list[UtilityReport]) -> bool:
    return all(row["status"] == "ok" for row in report_rows(reports))


# ---------------------------------------------------------------------------
# key=value configuration files

_LIST_FIELDS = {"orders", "epsilons", "miners"}


def _coerce(name: str, raw: str):
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in types:
        raise ValueError(f"unknown config key {name!r}")
    raw = raw.strip()
    if name in _LIST_FIELDS:
        items = [x.strip() for x in raw.split(",") if x.strip()]
        return tuple(float(x) for x in items) if name == "epsilons" else tuple(items)
    if name == "variant_pairs":
        pairs = []
        for item in raw.split(","):
            e, _, p = item.strip().partition(":")
            pairs.append((float(e), float(p)))
        return tuple(pairs)
    t = types[name]
    if t in ("int",):
        return int(raw)
    if t in ("float",):
        return float(raw)
    if t == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if raw.lower() in ("", "none") and t.startswith("Optional"):
        return None
    return raw


def parse_config(text: str, base: Optional[ExperimentConfig] = None, **overrides) -> ExperimentConfig:
    """``key = value`` lines (``#`` comments); lists are comma separated, pairs ``ε:p``."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected key = value")
        key = key.strip().replace("-", "_")
        values[key] = _coerce(key, value)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return replace(base or ExperimentConfig(), **values)


def config_to_text(config: ExperimentConfig) -> str:
    lines = []
    for f in fields(ExperimentConfig):
        v = getattr(config, f.name)
        if v is None:
            continue
        if f.name == "variant_pairs":
            v = ",".join(f"{e}:{p}" for e, p in v)
        elif isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
