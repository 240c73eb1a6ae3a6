"""Process trees."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from privpart.log import Activity, act, activity_key, from_label

SEQUENCE = "->"
EXCLUSIVE = "X"
PARALLEL = "+"
LOOP = "*"
OPERATORS = (SEQUENCE, EXCLUSIVE, PARALLEL, LOOP)


@dataclass(frozen=True)
class ProcessTree:
    """Operator node, activity leaf, or silent leaf (``operator`` and ``activity`` both None)."""

    operator: Optional[str] = None
    children: tuple[ProcessTree, ...] = ()
    activity: Optional[Activity] = None

    def __post_init__(self) -> None:
        if self.operator is None:
            if self.children:
                raise ValueError("leaves have no children")
            return
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}")
        if len(self.children) < 2:
            raise ValueError(f"operator {self.operator} needs at least 2 children")

    @property
    def is_leaf(self) -> bool:
        return self.operator is None

    @property
    def is_tau(self) -> bool:
        return self.operator is None and self.activity is None

    def activities(self) -> frozenset[Activity]:
        if self.is_leaf:
            return frozenset() if self.activity is None else frozenset({self.activity})
        return frozenset().union(*(c.activities() for c in self.children))

    def __str__(self) -> str:
        if self.is_leaf:
            return "tau" if self.activity is None else self.activity.label
        return f"{self.operator}({', '.join(str(c) for c in self.children)})"


TAU = ProcessTree()


def leaf(a) -> ProcessTree:
    return ProcessTree(activity=act(a))


def _node(op: str, children) -> ProcessTree:
    kids = []
    for c in children:
        c = c if isinstance(c, ProcessTree) else leaf(c)
        # associative operators are flattened; a loop keeps its do/redo structure
        if c.operator == op and op != LOOP:
            kids.extend(c.children)
        else:
            kids.append(c)
    if len(kids) == 1 and op != LOOP:
        return kids[0]
    return ProcessTree(op, tuple(kids))


def seq(*children) -> ProcessTree:
    return _node(SEQUENCE, children)


def xor(*children) -> ProcessTree:
    return _node(EXCLUSIVE, children)


def par(*children) -> ProcessTree:
    return _node(PARALLEL, children)


def loop(do, *redo) -> ProcessTree:
    kids = [c if isinstance(c, ProcessTree) else leaf(c) for c in (do, *redo)]
    return ProcessTree(LOOP, tuple(kids))


_TOKEN = re.compile(r"\s*(->|X\(|\+\(|\*\(|\(|\)|,|[^,()\s]+)")


def parse_tree(text: str) -> ProcessTree:
    """Parse the textual form produced by ``str(tree)``, e.g. ``->(a, X(b, tau))``."""
    tokens = [t for t in _TOKEN.findall(text) if t.strip()]
    pos = 0

    def node():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "->":
            if tokens[pos] != "(":
                raise ValueError("expected '(' after '->'")
            pos += 1
            op = SEQUENCE
        elif tok in ("X(", "+(", "*("):
            op = tok[0]
        else:
            return TAU if tok == "tau" else leaf(from_label(tok))
        kids = [node()]
        while tokens[pos] == ",":
            pos += 1
            kids.append(node())
        if tokens[pos] != ")":
            raise ValueError(f"expected ')' at token {pos}")
        pos += 1
        return ProcessTree(op, tuple(kids))

    tree = node()
    if pos != len(tokens):
        raise ValueError("trailing input in tree expression")
    return tree


def playout_tree(tree: ProcessTree, rng: np.random.Generator, loop_continue: float = 0.5,
                 max_redo: int = 3) -> tuple[Activity, ...]:
    """One random execution; loops repeat with probability ``loop_continue`` up to ``max_redo`` times."""
    if tree.is_leaf:
        return () if tree.activity is None else (tree.activity,)
    op = tree.operator
    if op == SEQUENCE:
        return tuple(a for c in tree.children for a in playout_tree(c, rng, loop_continue, max_redo))
    if op == EXCLUSIVE:
        child = tree.children[int(rng.integers(len(tree.children)))]
        return playout_tree(child, rng, loop_continue, max_redo)
    if op == LOOP:
        out = list(playout_tree(tree.children[0], rng, loop_continue, max_redo))
        redo = 0
        while redo < max_redo and rng.random() < loop_continue:
            child = tree.children[1 + int(rng.integers(len(tree.children) - 1))]
            out.extend(playout_tree(child, rng, loop_continue, max_redo))
            out.extend(playout_tree(tree.children[0], rng, loop_continue, max_redo))
            redo += 1
        return tuple(out)
    branches = [list(playout_tree(c, rng, loop_continue, max_redo)) for c in tree.children]
    out = []
    while any(branches):
        live = [b for b in branches if b]
        pick = live[int(rng.integers(len(live)))]
        out.append(pick.pop(0))
    return tuple(out)


def random_tree(activities, rng: np.random.Generator, operators=OPERATORS) -> ProcessTree:
    """Random duplicate-free, τ-free tree over ``activities``.

    Loops get a do-part whose first and last activities differ (a sequence of
    at least two leaves or subtrees), the shape inductive mining can recover
    from directly-follows information.
    """
    acts = sorted((act(a) for a in activities), key=activity_key)
    acts = [acts[i] for i in rng.permutation(len(acts))]
    return _random_tree(acts, rng, tuple(operators))


def _random_tree(acts: list[Activity], rng, operators) -> ProcessTree:
    if len(acts) == 1:
        return leaf(acts[0])
    ops = [op for op in operators if op != LOOP or len(acts) >= 3]
    op = ops[int(rng.integers(len(ops)))]
    if op == LOOP:
        cut = int(rng.integers(2, len(acts)))
        do_acts, redo_acts = acts[:cut], acts[cut:]
        split = int(rng.integers(1, len(do_acts)))
        do = seq(_random_tree(do_acts[:split], rng, operators), _random_tree(do_acts[split:], rng, operators))
        if do.operator != SEQUENCE:
            do = seq(*[leaf(a) for a in do_acts])
        redo = _random_tree(redo_acts, rng, tuple(o for o in operators if o != LOOP))
        return loop(do, redo)
    k = int(rng.integers(2, min(3, len(acts)) + 1))
    cuts = sorted(rng.choice(np.arange(1, len(acts)), size=k - 1, replace=False).tolist())
    groups = [acts[i:j] for i, j in zip([0] + cuts, cuts + [len(acts)])]
    kids = [_random_tree(g, rng, operators) for g in groups]
    return {SEQUENCE: seq, EXCLUSIVE: xor, PARALLEL: par}[op](*kids)
