"""Petri nets as the common replay substrate for both miners."""

from __future__ import annotations

import os
import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np

from privpart import _pykernels
from privpart.log import END, START, Activity, from_label, sorted_activities
from privpart.discovery.heuristic import DependencyGraph
from privpart.discovery.tree import EXCLUSIVE, LOOP, PARALLEL, SEQUENCE, ProcessTree

DEFAULT_MAX_STATES = 100_000


@dataclass(frozen=True)
class Transition:
    name: str
    label: Optional[Activity]  # None for silent transitions
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]

    @property
    def silent(self) -> bool:
        return self.label is None


@dataclass
class PetriNet:
    """Place/transition net with one initial and one final marking.

    Markings are tuples of token counts indexed like ``places``.
    """

    places: list[str] = field(default_factory=list)
    transitions: list[Transition] = field(default_factory=list)
    initial: dict[int, int] = field(default_factory=dict)
    final: dict[int, int] = field(default_factory=dict)
    max_states: int = DEFAULT_MAX_STATES

    def add_place(self, name: Optional[str] = None) -> int:
        self.places.append(name or f"p{len(self.places)}")
        return len(self.places) - 1

    def add_transition(self, label: Optional[Activity], inputs, outputs, name: Optional[str] = None) -> int:
        idx = len(self.transitions)
        self.transitions.append(Transition(name or f"t{idx}", label, tuple(inputs), tuple(outputs)))
        return idx

    @property
    def labels(self) -> list[Activity]:
        return sorted_activities({t.label for t in self.transitions if t.label is not None})

    def marking(self, tokens: dict[int, int]) -> tuple[int, ...]:
        m = [0] * len(self.places)
        for p, k in tokens.items():
            m[p] = k
        return tuple(m)

    @property
    def initial_marking(self) -> tuple[int, ...]:
        return self.marking(self.initial)

    @property
    def final_marking(self) -> tuple[int, ...]:
        return self.marking(self.final)

    def compile(self) -> CompiledNet:
        return CompiledNet.from_net(self)

    # replay interface -------------------------------------------------
    def enabled(self, marking) -> set[Activity]:
        """Visible activities enabled in ``marking`` or after silent moves."""
        c = self.compile()
        codes = _pykernels._closure_labels(c.view, tuple(marking))
        return {c.alphabet[k] for k in codes}

    def fire(self, marking, activity: Activity) -> tuple[tuple[int, ...], int]:
        """Replay one event; returns the new marking and the tokens that had to be created."""
        c = self.compile()
        acc = [0, 0, 0, 0]
        code = c.index.get(activity, _pykernels.UNKNOWN)
        m = _pykernels._fire_label(c.view, tuple(marking), code, acc)
        return m, acc[2]

    # structure --------------------------------------------------------
    def workflow_violations(self) -> list[str]:
        out = []
        n_p = len(self.places)
        consumers = [[] for _ in range(n_p)]
        producers = [[] for _ in range(n_p)]
        for ti, t in enumerate(self.transitions):
            for p in t.inputs:
                consumers[p].append(ti)
            for p in t.outputs:
                producers[p].append(ti)
        sources = [p for p in range(n_p) if not producers[p]]
        sinks = [p for p in range(n_p) if not consumers[p]]
        if len(sources) != 1:
            out.append(f"expected one source place, found {len(sources)}")
        if len(sinks) != 1:
            out.append(f"expected one sink place, found {len(sinks)}")
        if out:
            return out
        src, snk = sources[0], sinks[0]
        if self.initial != {src: 1}:
            out.append("initial marking is not one token on the source place")
        if self.final != {snk: 1}:
            out.append("final marking is not one token on the sink place")
        # forward reachability from source, backward from sink, over places+transitions
        fwd = _graph_reach(("p", src), lambda node: self._succ(node, consumers))
        bwd = _graph_reach(("p", snk), lambda node: self._pred(node, producers))
        for p in range(n_p):
            if ("p", p) not in fwd or ("p", p) not in bwd:
                out.append(f"place {self.places[p]} not on a source-sink path")
        for ti, t in enumerate(self.transitions):
            if ("t", ti) not in fwd or ("t", ti) not in bwd:
                out.append(f"transition {t.name} not on a source-sink path")
        return out

    def is_workflow_net(self) -> bool:
        return not self.workflow_violations()

    def _succ(self, node, consumers):
        kind, i = node
        if kind == "p":
            return [("t", t) for t in consumers[i]]
        return [("p", p) for p in self.transitions[i].outputs]

    def _pred(self, node, producers):
        kind, i = node
        if kind == "p":
            return [("t", t) for t in producers[i]]
        return [("p", p) for p in self.transitions[i].inputs]


def _graph_reach(root, step) -> set:
    seen = {root}
    queue = deque([root])
    while queue:
        for nxt in step(queue.popleft()):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


@dataclass(frozen=True, eq=False)
class CompiledNet:
    """CSR arrays consumed by the replay kernels.

    ``labels[t]`` is the index of the transition's activity in ``alphabet``
    or -1 when silent; ``label_idx[label_ptr[k]:label_ptr[k+1]]`` lists the
    transitions carrying activity ``k``.
    """

    alphabet: list[Activity]
    pre_ptr: np.ndarray
    pre_idx: np.ndarray
    post_ptr: np.ndarray
    post_idx: np.ndarray
    labels: np.ndarray
    label_ptr: np.ndarray
    label_idx: np.ndarray
    im: np.ndarray
    fm: np.ndarray
    max_states: int

    @classmethod
    def from_net(cls, net: PetriNet) -> CompiledNet:
        alphabet = net.labels
        index = {a: i for i, a in enumerate(alphabet)}
        pre_ptr, pre_idx = _csr([t.inputs for t in net.transitions])
        post_ptr, post_idx = _csr([t.outputs for t in net.transitions])
        labels = np.array(
            [-1 if t.label is None else index[t.label] for t in net.transitions], dtype=np.int32
        )
        by_label = [[ti for ti, t in enumerate(net.transitions) if t.label == a] for a in alphabet]
        label_ptr, label_idx = _csr(by_label)
        return cls(
            alphabet, pre_ptr, pre_idx, post_ptr, post_idx, labels, label_ptr, label_idx,
            np.array(net.initial_marking, dtype=np.int64),
            np.array(net.final_marking, dtype=np.int64),
            int(net.max_states),
        )

    @cached_property
    def index(self) -> dict[Activity, int]:
        return {a: i for i, a in enumerate(self.alphabet)}

    @cached_property
    def view(self):
        return _pykernels._Net(self)

    def encode(self, traces) -> tuple[np.ndarray, np.ndarray]:
        """Flat codes and offsets for ``traces``; labels outside the net map to -2."""
        traces = list(traces)
        offsets = np.zeros(len(traces) + 1, dtype=np.int64)
        np.cumsum([len(t) for t in traces], out=offsets[1:])
        flat = np.fromiter(
            (self.index.get(a, _pykernels.UNKNOWN) for t in traces for a in t),
            dtype=np.int32,
            count=int(offsets[-1]),
        )
        return flat, offsets


def _csr(rows) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(len(rows) + 1, dtype=np.int64)
    np.cumsum([len(r) for r in rows], out=ptr[1:])
    idx = np.fromiter((x for r in rows for x in r), dtype=np.int32, count=int(ptr[-1]))
    return ptr, idx


def tree_to_petri(tree: ProcessTree) -> PetriNet:
    """Block-structured translation; the result is a sound workflow net."""
    net = PetriNet()
    src = net.add_place("source")
    snk = net.add_place("sink")
    _build(net, tree, src, snk)
    net.initial = {src: 1}
    net.final = {snk: 1}
    return net


def _build(net: PetriNet, node: ProcessTree, p_in: int, p_out: int) -> None:
    if node.is_leaf:
        net.add_transition(node.activity, [p_in], [p_out])
        return
    op = node.operator
    if op == SEQUENCE:
        cur = p_in
        for child in node.children[:-1]:
            nxt = net.add_place()
            _build(net, child, cur, nxt)
            cur = nxt
        _build(net, node.children[-1], cur, p_out)
    elif op == EXCLUSIVE:
        for child in node.children:
            _build(net, child, p_in, p_out)
    elif op == PARALLEL:
        ins = [net.add_place() for _ in node.children]
        outs = [net.add_place() for _ in node.children]
        net.add_transition(None, [p_in], ins)
        for child, a, b in zip(node.children, ins, outs):
            _build(net, child, a, b)
        net.add_transition(None, outs, [p_out])
    elif op == LOOP:
        # silent entry/exit keep the loop's places private to the block
        q_do, q_redo = net.add_place(), net.add_place()
        net.add_transition(None, [p_in], [q_do])
        _build(net, node.children[0], q_do, q_redo)
        for child in node.children[1:]:
            _build(net, child, q_redo, q_do)
        net.add_transition(None, [q_redo], [p_out])
    else:  # pragma: no cover - guarded by ProcessTree
        raise ValueError(op)


def dependency_to_model(dg: DependencyGraph) -> PetriNet:
    """Transition-system reading of a dependency graph.

    One place per activity marks "the last executed activity"; arc ``(a, b)``
    becomes a transition labelled ``b`` from place ``a`` to place ``b``, start
    arcs leave the source place and end arcs are silent moves into the sink.
    """
    net = PetriNet()
    src = net.add_place("source")
    snk = net.add_place("sink")
    place = {a: net.add_place(f"after_{a.label}") for a in sorted_activities(dg.nodes)}
    for (a, b) in dg.arcs:
        p_from = src if a == START else place[a]
        if b == END:
            net.add_transition(None, [p_from], [snk])
        else:
            net.add_transition(b, [p_from], [place[b]])
    net.initial = {src: 1}
    net.final = {snk: 1}
    return net


ReplayableModel = Union[PetriNet, ProcessTree, DependencyGraph]


def to_petri(model: ReplayableModel) -> PetriNet:
    if isinstance(model, PetriNet):
        return model
    if isinstance(model, ProcessTree):
        return tree_to_petri(model)
    if isinstance(model, DependencyGraph):
        return dependency_to_model(model)
    raise TypeError(f"not a replayable model: {type(model).__name__}")


# export -----------------------------------------------------------------

def write_pnml(net: PetriNet, target) -> None:
    root = ET.Element("pnml")
    xnet = ET.SubElement(root, "net", id="net1", type="http://www.pnml.org/version-2009/grammar/pnmlcoremodel")
    page = ET.SubElement(xnet, "page", id="n0")
    for i, name in enumerate(net.places):
        pl = ET.SubElement(page, "place", id=f"p{i}")
        ET.SubElement(ET.SubElement(pl, "name"), "text").text = name
        if net.initial.get(i):
            ET.SubElement(ET.SubElement(pl, "initialMarking"), "text").text = str(net.initial[i])
    for i, t in enumerate(net.transitions):
        tr = ET.SubElement(page, "transition", id=f"t{i}")
        ET.SubElement(ET.SubElement(tr, "name"), "text").text = t.name if t.silent else t.label.label
        if t.silent:
            ET.SubElement(tr, "toolspecific", tool="ProM", version="6.4", activity="$invisible$")
    arc_id = 0
    for i, t in enumerate(net.transitions):
        for p in t.inputs:
            ET.SubElement(page, "arc", id=f"a{arc_id}", source=f"p{p}", target=f"t{i}")
            arc_id += 1
        for p in t.outputs:
            ET.SubElement(page, "arc", id=f"a{arc_id}", source=f"t{i}", target=f"p{p}")
            arc_id += 1
    fm = ET.SubElement(ET.SubElement(xnet, "finalmarkings"), "marking")
    for p, k in sorted(net.final.items()):
        ET.SubElement(ET.SubElement(fm, "place", idref=f"p{p}"), "text").text = str(k)
    tree = ET.ElementTree(root)
    ET.indent(tree)
    if isinstance(target, (str, os.PathLike)):
        tree.write(target, encoding="utf-8", xml_declaration=True)
    else:
        target.write(ET.tostring(root, encoding="unicode"))


def read_pnml(source) -> PetriNet:
    try:
        tree = ET.parse(source)
    except ET.ParseError as exc:
        raise ValueError(f"malformed PNML: {exc}") from None
    xnet = tree.getroot().find("net")
    if xnet is None:
        raise ValueError("no <net> element in PNML")
    net = PetriNet()
    place_ids: dict[str, int] = {}
    for pl in xnet.iter("place"):
        if pl.get("id") is None:
            continue
        name = pl.findtext("name/text") or pl.get("id")
        place_ids[pl.get("id")] = net.add_place(name)
        marking = pl.findtext("initialMarking/text")
        if marking and int(marking):
            net.initial[place_ids[pl.get("id")]] = int(marking)
    trans: dict[str, tuple[Optional[Activity], str]] = {}
    for tr in xnet.iter("transition"):
        silent = any(ts.get("activity") == "$invisible$" for ts in tr.iter("toolspecific"))
        name = tr.findtext("name/text") or tr.get("id")
        trans[tr.get("id")] = (None if silent else from_label(name), name)
    ins: dict[str, list[int]] = {t: [] for t in trans}
    outs: dict[str, list[int]] = {t: [] for t in trans}
    for arc in xnet.iter("arc"):
        s, d = arc.get("source"), arc.get("target")
        if s in place_ids and d in trans:
            ins[d].append(place_ids[s])
        elif s in trans and d in place_ids:
            outs[s].append(place_ids[d])
        else:
            raise ValueError(f"arc {arc.get('id')} does not connect a place and a transition")
    for tid, (label, name) in trans.items():
        net.add_transition(label, ins[tid], outs[tid], name=name)
    for pl in xnet.iter("finalmarkings"):
        for ref in pl.iter("place"):
            net.final[place_ids[ref.get("idref")]] = int(ref.findtext("text") or 1)
    return net


def to_dot(net: PetriNet) -> str:
    lines = ["digraph petrinet {", "  rankdir=LR;"]
    for i, name in enumerate(net.places):
        tokens = net.initial.get(i, 0)
        lab = "&#9679;" if tokens else ""
        shape = "doublecircle" if i in net.final else "circle"
        lines.append(f'  p{i} [shape={shape}, label="{lab}", xlabel="{_esc(name)}"];')
    for i, t in enumerate(net.transitions):
        if t.silent:
            lines.append(f'  t{i} [shape=box, style=filled, fillcolor=black, label="", width=0.15];')
        else:
            lines.append(f'  t{i} [shape=box, label="{_esc(t.label.label)}"];')
        for p in t.inputs:
            lines.append(f"  p{p} -> t{i};")
        for p in t.outputs:
            lines.append(f"  t{i} -> p{p};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')

