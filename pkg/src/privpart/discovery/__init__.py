"""Process discovery: inductive mining on DFGs, heuristic mining, Petri nets."""

from privpart.discovery.heuristic import DependencyGraph, dependency, heuristic_mine
from privpart.discovery.inductive import filter_dfg, flower, inductive_mine
from privpart.discovery.petri import (
    CompiledNet,
    PetriNet,
    Transition,
    dependency_to_model,
    read_pnml,
    to_dot,
    to_petri,
    tree_to_petri,
    write_pnml,
)
from privpart.discovery.tree import (
    TAU,
    ProcessTree,
    leaf,
    loop,
    par,
    parse_tree,
    playout_tree,
    random_tree,
    seq,
    xor,
)

MINERS = ("inductive", "heuristic")


def discover(source, miner: str = "inductive", threshold: float = 0.2) -> PetriNet:
    """Mine a replayable net from an EventLog or Dfg with the named miner."""
    from privpart.log import EventLog, df_counts

    dfg = df_counts(source) if isinstance(source, EventLog) else source
    if miner == "inductive":
        return tree_to_petri(inductive_mine(filter_dfg(dfg, threshold)))
    if miner == "heuristic":
        return dependency_to_model(heuristic_mine(dfg, threshold))
    raise ValueError(f"unknown miner {miner!r}")


__all__ = [
    "MINERS", "TAU", "CompiledNet", "DependencyGraph", "PetriNet", "ProcessTree", "Transition",
    "dependency", "dependency_to_model", "discover", "filter_dfg", "flower", "heuristic_mine",
    "inductive_mine", "leaf", "loop", "par", "parse_tree", "playout_tree", "random_tree",
    "read_pnml", "seq", "to_dot", "to_petri", "tree_to_petri", "write_pnml", "xor",
]
