"""Differentially private release of directly-follows and trace-variant counts.

Two mechanisms are provided:

``df_laplace``
    Laplace noise of scale ``1/ε`` on every cell of the directly-follows
    matrix (including absent relations), rounded and clamped at zero.
``variant_tree``
    A prefix tree grown breadth-first up to depth ``l``; every continuation
    (each activity and trace end) gets a Laplace-noised count and survives
    only if that count reaches the pruning threshold ``p``.

Disjoint parts of a partitioned log are anonymized independently with the
full ``ε`` each (parallel composition).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from privpart import kernels
from privpart.log import END, START, Activity, Dfg, EventLog, df_counts, dfg_matrix, sorted_activities
from privpart.partition import PartitionResult
from privpart.seeding import derive_rng

DF_SENSITIVITY = 1.0
DF_LAPLACE = "df_laplace"
VARIANT_TREE = "variant_tree"
MECHANISMS = (DF_LAPLACE, VARIANT_TREE)


class MechanismError(RuntimeError):
    pass


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    max_variant_length: int = 50
    prune_threshold: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_variant_length < 1:
            raise ValueError("max_variant_length must be >= 1")
        if self.prune_threshold < 0:
            raise ValueError("prune_threshold must be >= 0")


@dataclass
class BudgetLedger:
    rule: str = "parallel"
    entries: list[tuple[str, float]] = field(default_factory=list)

    def spend(self, dataset_id: str, epsilon: float) -> None:
        self.entries.append((dataset_id, float(epsilon)))

    @property
    def effective_epsilon(self) -> float:
        if not self.entries:
            return 0.0
        values = [e for _, e in self.entries]
        return max(values) if self.rule == "parallel" else sum(values)


def laplace_from_uniform(u, scale: float):
    """Inverse CDF of Laplace(0, scale); ``u = 0.5`` maps to exactly 0."""
    u = np.asarray(u, dtype=np.float64)
    d = u - 0.5
    tail = np.maximum(1.0 - 2.0 * np.abs(d), np.finfo(np.float64).tiny)
    out = -scale * np.sign(d) * np.log(tail)
    return out if out.ndim else float(out)


def laplace_sample(scale: float, rng: np.random.Generator, size=None):
    if not scale > 0:
        raise ValueError("scale must be positive")
    return laplace_from_uniform(rng.random(size), scale)


def noisy_counts(counts, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """``max(0, round(count + Lap(sensitivity/ε)))`` cell-wise."""
    counts = np.asarray(counts, dtype=np.float64)
    noise = laplace_sample(DF_SENSITIVITY / epsilon, rng, counts.shape)
    return np.maximum(np.rint(counts + noise), 0.0).astype(np.int64)


def anonymize_dfg(dfg: Dfg, params: PrivacyParams, rng: np.random.Generator,
                  activities=None) -> Dfg:
    """DF-Laplace over the full candidate domain of the given activity set.

    Candidate edges are ``(▶ ∪ A) x (A ∪ ■)``, so relations absent from the
    input can appear after noise.  ``activities`` defaults to the DFG's own.
    """
    alphabet = sorted_activities(set(activities) if activities is not None else dfg.activities)
    counts = dfg_matrix(dfg, alphabet)
    noisy = noisy_counts(counts, params.epsilon, rng)
    sources = alphabet + [START]
    targets = alphabet + [END]
    rows, cols = np.nonzero(noisy)
    return Dfg({(sources[i], targets[j]): int(noisy[i, j]) for i, j in zip(rows, cols)})


def playout_dfg(dfg: Dfg, n_traces: int, max_len: int, rng: np.random.Generator,
                retries: int = 10) -> EventLog:
    """Random walks ▶ → ■ with steps proportional to edge weights.

    A walk that exceeds ``max_len`` events (or is empty) is redrawn up to
    ``retries`` times; after that an overlong walk is kept truncated and an
    empty one is dropped.  An activity without outgoing edges ends the walk.
    """
    if n_traces < 0 or max_len < 1:
        raise ValueError("n_traces must be >= 0 and max_len >= 1")
    alphabet = sorted_activities(dfg.activities)
    weights = dfg_matrix(dfg, alphabet)
    n = len(alphabet)
    if weights[n].sum() <= 0:
        raise MechanismError("degenerate DFG: no edge leaves ▶")
    totals = weights.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        cum = np.where(totals > 0, np.cumsum(weights, axis=1) / totals, 0.0)
    cum[totals[:, 0] > 0, n] = 1.0
    results: list[Optional[tuple]] = [None] * n_traces
    pending = list(range(n_traces))
    for attempt in range(retries + 1):
        if not pending:
            break
        uniforms = rng.random((len(pending), max_len + 1))
        codes, lengths = kernels.walk_batch(cum, uniforms, max_len)
        still = []
        for row, slot in enumerate(pending):
            length = int(lengths[row])
            if length > 0:
                results[slot] = tuple(codes[row, :length].tolist())
            elif attempt == retries and length == -1:
                results[slot] = tuple(codes[row, :max_len].tolist())
            else:
                still.append(slot)
        pending = still
    traces = [tuple(alphabet[c] for c in r) for r in results if r]
    return EventLog(traces)


@dataclass
class _Level:
    parent: np.ndarray  # global index of parent node
    code: np.ndarray  # activity code of the edge into the node
    trie: list  # trie dict for real nodes, None for zero-count nodes


def _build_trie(log: EventLog, index: dict[Activity, int]):
    root = {"count": 0, "end": 0, "kids": {}}
    for trace, m in log:
        node = root
        node["count"] += m
        for a in trace:
            node = node["kids"].setdefault(index[a], {"count": 0, "end": 0, "kids": {}})
            node["count"] += m
        node["end"] += m
    return root


def anonymize_variants(log: EventLog, params: PrivacyParams, rng: np.random.Generator,
                       max_nodes: int = 2_000_000) -> EventLog:
    """Prefix-tree trace-variant release with pruning threshold and depth bound.

    Continuations of a prefix with true count zero are sampled in bulk: the
    number of survivors is Binomial(candidates, P[Lap(b) >= p]) and survivor
    values are ``p + Exp(b)``, which has the same distribution as drawing a
    Laplace value per candidate and discarding those below ``p``.
    """
    if not log:
        raise ValueError("empty log")
    alphabet = sorted_activities(log.activities)
    n_act = len(alphabet)
    index = {a: i for i, a in enumerate(alphabet)}
    scale = 1.0 / params.epsilon
    p = float(params.prune_threshold)
    tail = 0.5 * math.exp(-p / scale)
    depth_limit = params.max_variant_length
    root = _build_trie(log, index)

    parents: list[np.ndarray] = []
    codes: list[np.ndarray] = []
    offsets = [0]
    emitted: list[tuple[int, int, int]] = []  # (level, local index, multiplicity)

    frontier_trie: list = [root]
    frontier_parent = np.array([-1], dtype=np.int64)
    frontier_code = np.array([-1], dtype=np.int64)
    total_nodes = 1
    for depth in range(depth_limit + 1):
        level = len(parents)
        parents.append(frontier_parent)
        codes.append(frontier_code)
        offsets.append(offsets[-1] + len(frontier_trie))
        n_cand = n_act + 1 if depth < depth_limit else 1
        end_col = n_cand - 1
        real_idx = [i for i, t in enumerate(frontier_trie) if t is not None]
        zero_idx = np.array([i for i, t in enumerate(frontier_trie) if t is None], dtype=np.int64)

        child_parent: list[np.ndarray] = []
        child_code: list[np.ndarray] = []
        child_trie: list = []
        if real_idx:
            true = np.zeros((len(real_idx), n_cand))
            for row, i in enumerate(real_idx):
                node = frontier_trie[i]
                if n_cand > 1:
                    for c, kid in node["kids"].items():
                        true[row, c] = kid["count"]
                true[row, end_col] = node["end"]
            noisy = true + laplace_sample(scale, rng, true.shape)
            keep = noisy >= p
            for row, i in enumerate(real_idx):
                node = frontier_trie[i]
                if keep[row, end_col]:
                    mult = int(np.rint(noisy[row, end_col]))
                    if mult >= 1:
                        emitted.append((level, i, mult))
                for c in np.flatnonzero(keep[row, :end_col]):
                    child_parent.append(offsets[level] + i)
                    child_code.append(int(c))
                    child_trie.append(node["kids"].get(int(c)))
        if len(zero_idx):
            k = rng.binomial(n_cand, tail, size=len(zero_idx))
            keys = rng.random((len(zero_idx), n_cand))
            ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
            chosen = ranks < k[:, None]
            rows, cols = np.nonzero(chosen)
            values = p + rng.exponential(scale, size=len(rows))
            for r, c, v in zip(rows.tolist(), cols.tolist(), values.tolist()):
                i = int(zero_idx[r])
                if c == end_col:
                    mult = int(np.rint(v))
                    if mult >= 1:
                        emitted.append((level, i, mult))
                else:
                    child_parent.append(offsets[level] + i)
                    child_code.append(c)
                    child_trie.append(None)
        if depth == 0 and not child_trie and not emitted:
            raise MechanismError("budget/pruning eliminated all variants")
        if not child_trie:
            break
        total_nodes += len(child_trie)
        if total_nodes > max_nodes:
            raise MechanismError(
                f"prefix tree exceeded {max_nodes} nodes (pruning threshold too low for ε)"
            )
        order = np.lexsort((np.asarray(child_code), np.asarray(child_parent)))
        frontier_parent = np.asarray(child_parent, dtype=np.int64)[order]
        frontier_code = np.asarray(child_code, dtype=np.int64)[order]
        frontier_trie = [child_trie[j] for j in order]

    all_parent = np.concatenate(parents)
    all_code = np.concatenate(codes)
    out: dict[tuple, int] = {}
    emitted.sort(key=lambda e: (e[0], e[1]))
    for level, i, mult in emitted:
        node = offsets[level] + i
        seq = []
        while all_parent[node] >= 0:
            seq.append(alphabet[all_code[node]])
            node = all_parent[node]
        seq.reverse()
        out[tuple(seq)] = out.get(tuple(seq), 0) + mult
    out.pop((), None)
    return EventLog(out)


@dataclass(frozen=True)
class AnonymizedPart:
    """Released artifact for one log: always a DFG, plus a log for variant_tree."""

    part_id: str
    dfg: Optional[Dfg]
    log: Optional[EventLog] = None


@dataclass
class AnonymizedPartition:
    parts: dict[str, AnonymizedPart]
    ledger: BudgetLedger


def anonymize_log(log: EventLog, mechanism: str, params: PrivacyParams,
                  rng: np.random.Generator, part_id: str = "log") -> AnonymizedPart:
    if mechanism == DF_LAPLACE:
        return AnonymizedPart(part_id, anonymize_dfg(df_counts(log), params, rng, log.activities))
    if mechanism == VARIANT_TREE:
        out = anonymize_variants(log, params, rng)
        return AnonymizedPart(part_id, df_counts(out) if out else None, out)
    raise ValueError(f"unknown mechanism {mechanism!r}")


def anonymize_partition(result: PartitionResult, params: PrivacyParams,
                        mechanism: str = DF_LAPLACE, stage: str = "anonymize") -> AnonymizedPartition:
    """Anonymize the abstracted log and every sub-log independently with the same ε.

    Each part draws from its own stream derived from ``(params.seed, stage,
    part id)``; the ledger records parallel composition.
    """
    ledger = BudgetLedger("parallel")
    parts = {}
    for part_id, log in result.parts():
        rng = derive_rng(params.seed, stage, part_id)
        parts[part_id] = anonymize_log(log, mechanism, params, rng, part_id)
        ledger.spend(part_id, params.epsilon)
    return AnonymizedPartition(parts, ledger)
