"""Flip semantics: the ground truth every other module is checked against.

An improving flip changes one variable to a value its CPT row prefers
(CP-flip), or improves one variable while worsening another that is less
important under the current values (I-flip).  ``a`` dominates ``b`` iff some
sequence of improving flips leads from ``b`` to ``a``.

All operations here are exponential in the number of variables and refuse to
run past an outcome-space cap (``TCPNET_OUTCOME_CAP``, default 65,536).
"""

from __future__ import annotations

import enum
import os
from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import networkx as nx

from .model import Assignment, ConstraintSet, TCPNet

__all__ = [
    "DEFAULT_OUTCOME_CAP",
    "DominanceBudgetExhausted",
    "DominanceOracle",
    "Flip",
    "FlipGraph",
    "FlipKind",
    "FlippingSequence",
    "OutcomeSpaceTooLarge",
    "check_flip",
    "dominates",
    "flip_graph",
    "flip_graph_acyclic",
    "improving_neighbors",
    "oracle_dominates",
    "oracle_pareto",
    "outcome_cap",
]

DEFAULT_OUTCOME_CAP = 65_536
CAP_ENV = "TCPNET_OUTCOME_CAP"


class OutcomeSpaceTooLarge(RuntimeError):
    pass


class DominanceBudgetExhausted(RuntimeError):
    pass


def outcome_cap(cap: int | None = None) -> int:
    if cap is not None:
        return cap
    return int(os.environ.get(CAP_ENV, DEFAULT_OUTCOME_CAP))


def _check_cap(net: TCPNet, cap: int | None) -> None:
    limit = outcome_cap(cap)
    size = net.outcome_space_size()
    if size > limit:
        raise OutcomeSpaceTooLarge(f"{size} outcomes exceed the cap of {limit}")


class FlipKind(enum.Enum):
    CP = "cp"
    I = "i"  # noqa: E741


@dataclass(frozen=True)
class Flip:
    """One improving step.

    ``changed`` is ``(X,)`` for a CP-flip and ``(improved, worsened)`` for an
    I-flip.  ``rows`` names the CPT rows used (variable, parent assignment);
    ``importance`` is ``("i", X, Y)`` or ``("ci", X, Y, selector assignment)``.
    """

    kind: FlipKind
    source: Assignment
    target: Assignment
    changed: tuple[str, ...]
    rows: tuple[tuple[str, Assignment], ...]
    importance: tuple | None = None

    def __str__(self) -> str:
        if self.kind is FlipKind.CP:
            x = self.changed[0]
            return f"CP-flip {x}: {self.source[x]} -> {self.target[x]}"
        x, y = self.changed
        how = "i-arc" if self.importance[0] == "i" else f"CIT row {self.importance[3]}"
        return (
            f"I-flip {x}: {self.source[x]} -> {self.target[x]}, "
            f"{y}: {self.source[y]} -> {self.target[y]} ({x} > {y} by {how})"
        )


def _row(net: TCPNet, x: str, o: Mapping[str, str]) -> tuple[tuple[str, ...], Assignment]:
    cpt = net.cpts[x]
    ctx = Assignment((p, o[p]) for p in cpt.parents)
    return cpt.rows[ctx.values_for(cpt.parents)], ctx


def improving_neighbors(net: TCPNet, o: Mapping[str, str]) -> list[Flip]:
    """All single improving flips out of ``o``: CP-flips by variable then
    value rank, followed by I-flips by (improved, worsened) pair."""
    o = Assignment(o)
    flips = []
    orders = {x: _row(net, x, o) for x in net.names}
    for x in net.names:
        order, ctx = orders[x]
        for better in order[: order.index(o[x])]:
            flips.append(Flip(FlipKind.CP, o, o | {x: better}, (x,), ((x, ctx),)))

    pairs = [(a, b) for a, b in net.i_arcs] + [(a, b) for a, b in net.ci_arcs] + [(b, a) for a, b in net.ci_arcs]
    for x, y in sorted(pairs):
        if x in net.parents(y) or y in net.parents(x):
            continue
        if (x, y) in net.i_arcs:
            importance: tuple = ("i", x, y)
        else:
            cit = net.cits[tuple(sorted((x, y)))]
            if cit.winner(o) != x:
                continue
            importance = ("ci", x, y, o.restrict(cit.selector))
        ox, cx = orders[x]
        oy, cy = orders[y]
        for better in ox[: ox.index(o[x])]:
            for worse in oy[oy.index(o[y]) + 1:]:
                flips.append(
                    Flip(FlipKind.I, o, o | {x: better, y: worse}, (x, y), ((x, cx), (y, cy)), importance)
                )
    return flips


def check_flip(net: TCPNet, flip: Flip) -> bool:
    """Re-derive ``flip`` from the net, independently of the generator."""
    src, dst = flip.source, flip.target
    if set(src) != set(net.names) or set(dst) != set(net.names):
        return False
    diff = sorted(x for x in net.names if src[x] != dst[x])
    domains = net.domains()
    if any(dst[x] not in domains[x] for x in diff):
        return False

    def improves(x: str, up: bool) -> bool:
        cpt = net.cpts[x]
        key = tuple(src[p] for p in cpt.parents)
        if key != tuple(dst[p] for p in cpt.parents):
            return False
        if (x, Assignment(zip(cpt.parents, key))) not in flip.rows:
            return False
        order = cpt.rows[key]
        before, after = order.index(src[x]), order.index(dst[x])
        return after < before if up else after > before

    if flip.kind is FlipKind.CP:
        return (
            len(diff) == 1
            and flip.changed == (diff[0],)
            and len(flip.rows) == 1
            and improves(diff[0], True)
            and flip.importance is None
        )
    if len(diff) != 2 or sorted(flip.changed) != diff or len(flip.rows) != 2:
        return False
    x, y = flip.changed
    if not (improves(x, True) and improves(y, False)):
        return False
    imp = flip.importance
    if imp is None or imp[1:3] != (x, y):
        return False
    if imp[0] == "i":
        return len(imp) == 3 and (x, y) in net.i_arcs
    cit = net.cits.get(tuple(sorted((x, y))))
    if cit is None or len(imp) != 4:
        return False
    sel = Assignment((z, src[z]) for z in cit.selector)
    return imp[3] == sel and cit.rows.get(sel.values_for(cit.selector)) == x


@dataclass(frozen=True)
class FlipGraph:
    nodes: tuple[Assignment, ...]
    edges: tuple[Flip, ...]

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        for f in self.edges:
            g.add_edge(f.source, f.target)
        return g

    def edge_pairs(self) -> set[tuple[Assignment, Assignment]]:
        return {(f.source, f.target) for f in self.edges}


def flip_graph(net: TCPNet, cap: int | None = None) -> FlipGraph:
    _check_cap(net, cap)
    nodes = tuple(net.outcomes())
    edges = tuple(f for o in nodes for f in improving_neighbors(net, o))
    return FlipGraph(nodes, edges)


def flip_graph_acyclic(net: TCPNet, cap: int | None = None) -> bool:
    return nx.is_directed_acyclic_graph(flip_graph(net, cap).to_networkx())


class DominanceOracle:
    """Reachability over the full flip graph, built once per net."""

    def __init__(self, net: TCPNet, cap: int | None = None):
        self.net = net
        self.graph = flip_graph(net, cap).to_networkx()
        self._better: dict[Assignment, set[Assignment]] = {}

    def better_than(self, b: Mapping[str, str]) -> set[Assignment]:
        b = Assignment(b)
        if b not in self._better:
            self._better[b] = nx.descendants(self.graph, b)
        return self._better[b]

    def dominates(self, a: Mapping[str, str], b: Mapping[str, str]) -> bool:
        return Assignment(a) in self.better_than(b)

    def closure(self) -> list[tuple[Assignment, Assignment]]:
        """All implied pairs ``(better, worse)`` in canonical order."""
        key = self.net.outcome_key
        nodes = sorted(self.graph.nodes, key=key)
        return [(a, b) for b in nodes for a in sorted(self.better_than(b), key=key)]

    def pareto(self, constraints: ConstraintSet) -> list[Assignment]:
        feasible = {o for o in self.graph.nodes if constraints.satisfied_by(o)}
        best = [o for o in feasible if not any(p != o and p in feasible for p in self.better_than(o))]
        return sorted(best, key=self.net.outcome_key)


def oracle_dominates(net: TCPNet, a: Mapping[str, str], b: Mapping[str, str], cap: int | None = None) -> bool:
    return DominanceOracle(net, cap).dominates(a, b)


def oracle_pareto(net: TCPNet, constraints: ConstraintSet, cap: int | None = None) -> list[Assignment]:
    """Feasible outcomes no other feasible outcome dominates (canonical order)."""
    return DominanceOracle(net, cap).pareto(constraints)


@dataclass(frozen=True)
class FlippingSequence:
    steps: tuple[Flip, ...]

    @property
    def start(self) -> Assignment:
        return self.steps[0].source

    @property
    def end(self) -> Assignment:
        return self.steps[-1].target

    def __len__(self) -> int:
        return len(self.steps)

    def is_valid(self, net: TCPNet) -> bool:
        if not self.steps:
            return False
        chained = all(s.target == t.source for s, t in zip(self.steps, self.steps[1:]))
        return chained and all(check_flip(net, s) for s in self.steps)


def dominates(
    net: TCPNet,
    a: Mapping[str, str],
    b: Mapping[str, str],
    cap: int | None = None,
    budget: int | None = None,
) -> FlippingSequence | None:
    """Shortest improving flipping sequence from ``b`` to ``a``, or None.

    Breadth-first over improving flips from ``b``.  ``budget`` bounds the
    number of expanded outcomes; running out raises
    :class:`DominanceBudgetExhausted`.
    """
    _check_cap(net, cap)
    a, b = Assignment(a), Assignment(b)
    if a == b:
        raise ValueError("dominance is strict; the two outcomes are equal")
    parent: dict[Assignment, Flip | None] = {b: None}
    queue = deque([b])
    expanded = 0
    while queue:
        if budget is not None and expanded >= budget:
            raise DominanceBudgetExhausted(f"no verdict after expanding {budget} outcomes")
        o = queue.popleft()
        expanded += 1
        for flip in improving_neighbors(net, o):
            t = flip.target
            if t in parent:
                continue
            parent[t] = flip
            if t == a:
                return FlippingSequence(tuple(_unwind(parent, a)))
            queue.append(t)
    return None


def _unwind(parent: Mapping[Assignment, Flip | None], end: Assignment) -> Iterable[Flip]:
    steps = []
    f = parent[end]
    while f is not None:
        steps.append(f)
        f = parent[f.source]
    return reversed(steps)
