"""Synthetic logs with a known two-level structure."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Union

from privpart.discovery.tree import OPERATORS, ProcessTree, leaf, playout_tree, random_tree, seq, xor
from privpart.hierarchy import AbstractionHierarchy
from privpart.log import ROOT, Activity, EventLog
from privpart.seeding import derive_rng

TOP_OPERATORS = ("sequence", "exclusive")


@dataclass(frozen=True)
class SyntheticSpec:
    """Sub-process name -> ground-truth tree, or a list of activity names to draw a random tree over."""

    subprocesses: Mapping[str, Union[ProcessTree, Sequence[str]]] = field(
        default_factory=lambda: {"A": ("a", "b", "c"), "B": ("d", "e", "f")}
    )
    n_traces: int = 500
    top: str = "sequence"
    operators: tuple[str, ...] = OPERATORS
    loop_continue: float = 0.3

    def __post_init__(self) -> None:
        if self.n_traces < 1:
            raise ValueError("n_traces must be >= 1")
        if self.top not in TOP_OPERATORS:
            raise ValueError(f"top must be one of {TOP_OPERATORS}")
        if not self.subprocesses:
            raise ValueError("need at least one sub-process")
        seen: set[str] = set()
        for name, body in self.subprocesses.items():
            acts = [a.name for a in body.activities()] if isinstance(body, ProcessTree) else list(body)
            if not acts:
                raise ValueError(f"sub-process {name} has no activities")
            if seen & set(acts) or name in seen:
                raise ValueError(f"sub-process {name} reuses an activity name")
            seen.update(acts)


@dataclass(frozen=True)
class SyntheticLog:
    log: EventLog
    hierarchy: AbstractionHierarchy
    model: ProcessTree
    subprocess_models: dict[str, ProcessTree]


def generate_synthetic(spec: SyntheticSpec, seed: int) -> SyntheticLog:
    """Play out ``spec.n_traces`` traces of the composed ground-truth model.

    Each sub-process runs as one contiguous block at most once per trace.
    """
    models: dict[str, ProcessTree] = {}
    for name, body in spec.subprocesses.items():
        if isinstance(body, ProcessTree):
            models[name] = body
        else:
            models[name] = random_tree(body, derive_rng(seed, "synth-tree", name), spec.operators)
    names = list(models)
    rng = derive_rng(seed, "synth-playout")
    traces = []
    for _ in range(spec.n_traces):
        if spec.top == "sequence":
            chosen = names
        else:
            chosen = [names[int(rng.integers(len(names)))]]
        trace: list[Activity] = []
        for name in chosen:
            trace.extend(playout_tree(models[name], rng, spec.loop_continue))
        traces.append(tuple(trace))
    mapping: dict[Activity, Activity] = {}
    for name, tree in models.items():
        for a in tree.activities():
            mapping[a] = Activity(name)
        mapping[Activity(name)] = ROOT
    top = seq if spec.top == "sequence" else xor
    model = top(*models.values()) if len(models) > 1 else models[names[0]]
    return SyntheticLog(EventLog(traces), AbstractionHierarchy(mapping), model, models)


def running_example() -> SyntheticLog:
    """Two sequential sub-processes A = ⟨a,b,c⟩ and B = ⟨d,e,f⟩."""
    a = seq(*(leaf(x) for x in "abc"))
    b = seq(*(leaf(x) for x in "def"))
    return generate_synthetic(SyntheticSpec({"A": a, "B": b}, n_traces=1), 0)
