"""Model quality: token-replay fitness, ETC precision, F1 and k-fold generalization."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from privpart import kernels
from privpart._pykernels import UNKNOWN
from privpart.discovery import discover
from privpart.discovery.petri import CompiledNet, ReplayableModel, to_petri
from privpart.log import EventLog, Trace
from privpart.seeding import derive_rng

METRICS = ("fitness", "precision", "f1", "generalization")


@dataclass(frozen=True)
class ReplayTotals:
    produced: int
    consumed: int
    missing: int
    remaining: int

    @property
    def fitness(self) -> Fraction:
        return Fraction(1, 2) * (1 - Fraction(self.missing, self.consumed)) + Fraction(1, 2) * (
            1 - Fraction(self.remaining, self.produced)
        )


def _compiled(model) -> CompiledNet:
    if isinstance(model, CompiledNet):
        return model
    return to_petri(model).compile()


def replay(model: ReplayableModel, log: EventLog) -> ReplayTotals:
    """Token-replay counters summed over the log, weighted by multiplicity."""
    if not log:
        raise ValueError("empty log")
    net = _compiled(model)
    traces = list(log.variants)
    flat, offsets = net.encode(traces)
    rows = kernels.replay_traces(net, flat, offsets)
    mult = np.fromiter(log.variants.values(), dtype=np.int64, count=len(traces))
    p, c, m, r = (int(x) for x in (rows * mult[:, None]).sum(axis=0))
    return ReplayTotals(p, c, m, r)


def token_fitness(model: ReplayableModel, log: EventLog) -> float:
    """``½(1 - m/c) + ½(1 - r/p)`` over the whole log."""
    return float(replay(model, log).fitness)


def trace_fitness(model: ReplayableModel, trace: Trace) -> float:
    return token_fitness(model, EventLog([trace]))


def _prefix_automaton(log: EventLog, net: CompiledNet):
    """Prefix tree of the log in breadth-first order, as flat arrays.

    Node 0 is the empty prefix; ``weight[s]`` counts the traces that have
    prefix ``s`` (with multiplicity); ``child_label`` lists the net codes of
    the activities observed after it.
    """
    kids: list[dict] = [{}]
    weight = [0]
    label = [-1]
    parent = [-1]
    for trace, m in log:
        node = 0
        weight[0] += m
        for a in trace:
            code = net.index.get(a, UNKNOWN)
            nxt = kids[node].get(a)
            if nxt is None:
                nxt = len(kids)
                kids[node][a] = nxt
                kids.append({})
                weight.append(0)
                label.append(code)
                parent.append(node)
            weight[nxt] += m
            node = nxt
    # renumber breadth-first so parents precede children
    order = [0]
    for s in order:
        order.extend(kids[s].values())
    new_id = {old: new for new, old in enumerate(order)}
    n = len(order)
    par_arr = np.array([-1 if s == 0 else new_id[parent[s]] for s in order], dtype=np.int64)
    lab_arr = np.array([label[s] for s in order], dtype=np.int32)
    w_arr = np.array([weight[s] for s in order], dtype=np.int64)
    child_ptr = np.zeros(n + 1, dtype=np.int64)
    child_lists = [sorted({label[c] for c in kids[s].values() if label[c] >= 0}) for s in order]
    np.cumsum([len(c) for c in child_lists], out=child_ptr[1:])
    child_label = np.fromiter((x for c in child_lists for x in c), dtype=np.int32, count=int(child_ptr[-1]))
    return par_arr, lab_arr, w_arr, child_ptr, child_label


def escaping_totals(model: ReplayableModel, log: EventLog) -> tuple[int, int]:
    """``(Σ w·|escaping|, Σ w·|allowed|)`` over the log's fitting prefixes."""
    if not log:
        raise ValueError("empty log")
    net = _compiled(model)
    arrays = _prefix_automaton(log, net)
    esc, allowed = kernels.escaping_edges(net, *arrays)
    return int(esc), int(allowed)


def etc_precision(model: ReplayableModel, log: EventLog) -> float:
    """Escaping-edges precision; 1.0 when the model enables nothing at any visited prefix."""
    esc, allowed = escaping_totals(model, log)
    if allowed == 0:
        return 1.0
    return float(1 - Fraction(esc, allowed))


def f1(fitness: float, precision: float) -> float:
    for v in (fitness, precision):
        if not 0.0 <= v <= 1.0:
            raise ValueError("fitness and precision must be in [0, 1]")
    if fitness + precision == 0:
        return 0.0
    return 2 * fitness * precision / (fitness + precision)


def kfold_split(log: EventLog, k: int, seed: int) -> list[EventLog]:
    """Deal traces into ``k`` folds, variant by variant in decreasing frequency.

    Equal-frequency variants are ordered by a seeded shuffle; dealing
    continues round-robin across variant boundaries so every fold receives
    a share of the frequent behaviour.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if log.total_traces < k:
        raise ValueError(f"need at least k={k} traces, log has {log.total_traces}")
    variants = list(log.variants.items())
    rng = derive_rng(seed, "kfold")
    tiebreak = rng.permutation(len(variants))
    order = sorted(range(len(variants)), key=lambda i: (-variants[i][1], int(tiebreak[i])))
    folds: list[dict] = [{} for _ in range(k)]
    slot = 0
    for i in order:
        trace, m = variants[i]
        for _ in range(m):
            folds[slot][trace] = folds[slot].get(trace, 0) + 1
            slot = (slot + 1) % k
    return [EventLog(f) for f in folds]


def generalization_kfold(log: EventLog, k: int = 3, miner: str = "inductive", threshold: float = 0.2,
                         seed: int = 0,
                         fit: Optional[Callable[[EventLog, int], ReplayableModel]] = None) -> float:
    """Mean hold-out fitness: mine on ``k-1`` folds, replay the remaining fold.

    ``fit(train_log, fold_index)`` overrides discovery, e.g. to anonymize the
    training folds before mining.
    """
    folds = kfold_split(log, k, seed)
    if fit is None:
        def fit(train: EventLog, _i: int) -> ReplayableModel:
            return discover(train, miner, threshold)
    values = []
    for i in range(k):
        train: dict = {}
        for j, fold in enumerate(folds):
            if j == i:
                continue
            for t, m in fold:
                train[t] = train.get(t, 0) + m
        model = fit(EventLog(train), i)
        values.append(token_fitness(model, folds[i]))
    return float(np.mean(values))


@dataclass
class UtilityReport:
    fitness: float
    precision: float
    f1: float
    generalization: Optional[float] = None
    per_sublog: dict[str, UtilityReport] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in METRICS:
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0 + 1e-12:
                raise ValueError(f"{name}={v} outside [0, 1]")

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRICS}


def evaluate(model: ReplayableModel, log: EventLog, generalization: Optional[float] = None,
             meta: Optional[dict] = None) -> UtilityReport:
    net = _compiled(model)
    fit = token_fitness(net, log)
    prec = etc_precision(net, log)
    return UtilityReport(fit, prec, f1(fit, prec), generalization, {}, dict(meta or {}))


def multilevel_average(reports: dict[str, UtilityReport]) -> UtilityReport:
    """Unweighted mean of every metric over the abstracted log and each sub-log."""
    if not reports:
        raise ValueError("no reports to average")
    items = list(reports.values())
    means = {}
    for name in METRICS:
        values = [getattr(r, name) for r in items]
        means[name] = None if any(v is None for v in values) else float(np.mean(values))
    return UtilityReport(
        means["fitness"], means["precision"], means["f1"], means["generalization"],
        per_sublog=dict(reports), meta=dict(items[0].meta),
    )
