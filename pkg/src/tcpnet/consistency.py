"""Conditional acyclicity of TCP-nets.

A net is conditionally acyclic when its dependency graph is acyclic and no
assignment to the selector variables orients the ci-arcs into a directed
cycle of the dependency graph extended by those oriented arcs.  Selector
edges must take part: without them a selector variable can be worsened
halfway round a flip cycle and turn an importance relation around.  The check runs cheap structural tests first and only then looks at
semi-directed cycles (undirected cycles whose directed members all agree),
which are settled one by one with progressively more expensive rules.
Whole-net enumeration over the selector variables backs everything up when
the cycle count gets out of hand.
"""

from __future__ import annotations

import enum
import itertools
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import networkx as nx

from .model import Assignment, TCPNet, assignments

__all__ = [
    "Arc",
    "ConsistencyVerdict",
    "CycleBudgetExceeded",
    "CycleCertificate",
    "SemiDirectedCycle",
    "Status",
    "blocking_pair",
    "classify_cycle",
    "decide_by_shared_selectors",
    "dependency_graph",
    "disjoint_selector_witness",
    "enumerate_cycle",
    "is_conditionally_acyclic",
    "semi_directed_cycles",
    "w_directed_graph",
]

DEFAULT_CYCLE_CAP = 10_000


class CycleBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Arc:
    kind: str  # "cp" | "i" | "ci" | "sel" (selector variable to ci endpoint)
    source: str
    target: str

    @property
    def directed(self) -> bool:
        return self.kind != "ci"


def dependency_graph(net: TCPNet) -> nx.DiGraph:
    """cp-arcs, i-arcs, and an edge from every selector variable to both
    endpoints of its ci-arc."""
    g = nx.DiGraph()
    g.add_nodes_from(net.names)
    g.add_edges_from(net.cp_arcs, kind="cp")
    g.add_edges_from(net.i_arcs, kind="i")
    for (a, b), cit in net.cits.items():
        for z in cit.selector:
            g.add_edge(z, a, kind=g.edges[z, a]["kind"] if g.has_edge(z, a) else "selector")
            g.add_edge(z, b, kind=g.edges[z, b]["kind"] if g.has_edge(z, b) else "selector")
    return g


def w_directed_graph(net: TCPNet, w: Mapping[str, str], selector_edges: bool = False) -> nx.DiGraph:
    """All directed arcs plus each ci-arc oriented by its CIT row under ``w``.

    ci-arcs whose CIT has no row for ``w`` contribute nothing.  With
    ``selector_edges`` the dependency graph's selector edges are added too;
    that is the graph the acyclicity verdict is about.
    """
    missing = [z for z in net.selector_variables() if z not in w]
    if missing:
        raise ValueError(f"selector assignment leaves {', '.join(missing)} unassigned")
    g = nx.DiGraph()
    g.add_nodes_from(net.names)
    g.add_edges_from(net.cp_arcs, kind="cp")
    g.add_edges_from(net.i_arcs, kind="i")
    if selector_edges:
        for arc in _selector_arcs(net):
            g.add_edge(arc.source, arc.target, kind="sel")
    for (a, b), cit in net.cits.items():
        win = cit.winner(w)
        if win is not None:
            lose = b if win == a else a
            if not g.has_edge(win, lose):
                g.add_edge(win, lose, kind="ci")
    return g


@dataclass(frozen=True)
class SemiDirectedCycle:
    """A cycle of the undirected projection of the net.

    ``arcs[k]`` joins ``nodes[k]`` and ``nodes[k + 1]`` (wrapping around).  The
    traversal direction is chosen so that every directed member points
    forward; ``directed`` is False when all members are ci-arcs, in which case
    the traversal direction is an arbitrary but fixed convention.
    """

    nodes: tuple[str, ...]
    arcs: tuple[Arc, ...]

    @property
    def directed(self) -> bool:
        return any(a.directed for a in self.arcs)

    @property
    def orientation(self) -> str | None:
        return "forward" if self.directed else None

    def ci_positions(self) -> list[int]:
        return [k for k, a in enumerate(self.arcs) if a.kind == "ci"]

    def step(self, k: int) -> tuple[str, str]:
        return self.nodes[k], self.nodes[(k + 1) % len(self.nodes)]

    def __str__(self) -> str:
        parts = []
        for k, arc in enumerate(self.arcs):
            u, v = self.step(k)
            sym = {"ci": "~", "cp": "->", "i": "=>", "sel": "-sel->"}[arc.kind]
            parts.append(f"{u} {sym} {v}")
        return "; ".join(parts)


def _undirected_edges(net: TCPNet) -> list[Arc]:
    arcs = [Arc("cp", a, b) for a, b in net.cp_arcs]
    arcs += [Arc("i", a, b) for a, b in net.i_arcs]
    arcs += [Arc("ci", a, b) for a, b in net.ci_arcs]
    return arcs + _selector_arcs(net)


def _selector_arcs(net: TCPNet) -> list[Arc]:
    """Selector edges not already present as a cp- or i-arc."""
    plain = set(net.cp_arcs) | set(net.i_arcs)
    pairs = {(z, x) for (a, b), cit in net.cits.items() for z in cit.selector for x in (a, b)}
    return [Arc("sel", z, x) for z, x in sorted(pairs - plain)]


def _canonical(nodes: list[str], arcs: list[Arc]) -> SemiDirectedCycle:
    n = len(nodes)
    if any(a.directed for a in arcs):
        k = next(i for i, a in enumerate(arcs) if a.directed)
        if arcs[k].source != nodes[k]:
            # walk the other way round
            nodes = [nodes[0]] + nodes[:0:-1]
            arcs = arcs[::-1]
        start = nodes.index(min(nodes))
        nodes = nodes[start:] + nodes[:start]
        arcs = arcs[start:] + arcs[:start]
    else:
        start = nodes.index(min(nodes))
        nodes = nodes[start:] + nodes[:start]
        arcs = arcs[start:] + arcs[:start]
        if n > 2 and nodes[1] > nodes[-1]:
            nodes = [nodes[0]] + nodes[:0:-1]
            arcs = arcs[::-1]
    return SemiDirectedCycle(tuple(nodes), tuple(arcs))


def semi_directed_cycles(net: TCPNet, cap: int = DEFAULT_CYCLE_CAP) -> list[SemiDirectedCycle]:
    """Every simple cycle of the undirected projection that contains a ci-arc
    and whose directed members all point the same way round.

    Parallel arcs (say a cp-arc and a ci-arc on the same pair) yield 2-cycles.
    Raises :class:`CycleBudgetExceeded` once more than ``cap`` cycles are found.
    """
    edges = _undirected_edges(net)
    adj: dict[str, list[tuple[int, str]]] = {n: [] for n in net.names}
    for eid, arc in enumerate(edges):
        adj[arc.source].append((eid, arc.target))
        adj[arc.target].append((eid, arc.source))
    for n in adj:
        adj[n].sort(key=lambda t: (t[1], t[0]))

    found: dict[frozenset[int], SemiDirectedCycle] = {}

    def direction(eid: int, frm: str) -> int:
        arc = edges[eid]
        if not arc.directed:
            return 0
        return 1 if arc.source == frm else -1

    for start in net.names:
        path_nodes = [start]
        path_edges: list[int] = []
        on_path = {start}

        def dfs(node: str, state: int) -> None:
            for eid, nxt in adj[node]:
                if path_edges and eid == path_edges[-1]:
                    continue
                d = direction(eid, node)
                if d and state and d != state:
                    continue
                new_state = state or d
                if nxt == start and path_edges:
                    ids = path_edges + [eid]
                    if len(ids) == 2 and ids[0] > ids[1]:
                        continue
                    if len(ids) > 2 and path_nodes[1] > path_nodes[-1]:
                        continue
                    if all(edges[i].directed for i in ids):
                        continue  # fully directed; handled elsewhere
                    if not any(edges[i].kind == "ci" for i in ids):
                        continue
                    key = frozenset(ids)
                    if key not in found:
                        found[key] = _canonical(list(path_nodes), [edges[i] for i in ids])
                        if len(found) > cap:
                            raise CycleBudgetExceeded(f"more than {cap} semi-directed cycles")
                    continue
                if nxt in on_path or nxt < start:
                    continue
                path_nodes.append(nxt)
                path_edges.append(eid)
                on_path.add(nxt)
                dfs(nxt, new_state)
                on_path.discard(nxt)
                path_edges.pop()
                path_nodes.pop()

        dfs(start, 0)

    def order(c: SemiDirectedCycle):
        return (len(c.nodes), c.nodes, tuple((a.kind, a.source, a.target) for a in c.arcs))

    return sorted(found.values(), key=order)


# --- per-cycle rules -------------------------------------------------------

def _cycle_cits(net: TCPNet, cycle: SemiDirectedCycle):
    """(position, CIT, forward winner) for each ci-arc of the cycle."""
    out = []
    for k in cycle.ci_positions():
        u, _ = cycle.step(k)
        arc = cycle.arcs[k]
        out.append((k, net.cits[(arc.source, arc.target)], u))
    return out


def _has_row(cit, forward_winner: str, want_forward: bool, partial: Mapping[str, str]) -> bool:
    """Does some CIT row consistent with ``partial`` orient the arc as asked?"""
    for key, win in cit.rows.items():
        if (win == forward_winner) != want_forward:
            continue
        if all(partial.get(z, v) == v for z, v in zip(cit.selector, key)):
            return True
    return False


def _pick_row(cit, forward_winner: str, want_forward: bool, partial: Mapping[str, str]) -> Assignment | None:
    for key in sorted(cit.rows):
        win = cit.rows[key]
        if (win == forward_winner) != want_forward:
            continue
        if all(partial.get(z, v) == v for z, v in zip(cit.selector, key)):
            return Assignment(zip(cit.selector, key))
    return None


def _directions(cycle: SemiDirectedCycle) -> tuple[bool, ...]:
    # Directed cycles must go forward; all-ci cycles may go either way.
    return (True,) if cycle.directed else (True, False)


def cycle_selector(net: TCPNet, cycle: SemiDirectedCycle) -> tuple[str, ...]:
    return tuple(sorted({z for _, cit, _ in _cycle_cits(net, cycle) for z in cit.selector}))


def shared_selector(net: TCPNet, cycle: SemiDirectedCycle) -> tuple[str, ...]:
    cits = [cit for _, cit, _ in _cycle_cits(net, cycle)]
    shared: set[str] = set()
    for c1, c2 in itertools.combinations(cits, 2):
        shared |= set(c1.selector) & set(c2.selector)
    return tuple(sorted(shared))


def _complete(net: TCPNet, partial: Mapping[str, str], names: Sequence[str]) -> Assignment:
    doms = net.domains()
    return Assignment({n: partial.get(n, doms[n][0]) for n in names})


def disjoint_selector_witness(net: TCPNet, cycle: SemiDirectedCycle) -> Assignment | None:
    """Witness for a directed orientation when the ci-arcs' selector sets are
    pairwise disjoint: choose, per arc independently, a row orienting it
    along the cycle.  None if the rule does not apply or no such row exists.
    """
    cits = _cycle_cits(net, cycle)
    seen: set[str] = set()
    for _, cit, _ in cits:
        if seen & set(cit.selector):
            return None
        seen |= set(cit.selector)
    for forward in _directions(cycle):
        w: dict[str, str] = {}
        for _, cit, fw in cits:
            row = _pick_row(cit, fw, forward, {})
            if row is None:
                break
            w.update(row)
        else:
            return _complete(net, w, cycle_selector(net, cycle))
    return None


def blocking_pair(net: TCPNet, cycle: SemiDirectedCycle) -> str | None:
    """Sufficient test for acyclicity from a pair of ci-arcs.

    Returns ``"blocking-pair-directed"`` (the cycle has directed arcs) or
    ``"blocking-pair-opposed"`` (it has none) when some pair blocks every
    directed orientation for each assignment to the intersection of their
    selectors; None otherwise.  A pair may use the same arc twice, which
    covers cycles with a single ci-arc.
    """
    cits = _cycle_cits(net, cycle)
    doms = net.domains()
    rule = "blocking-pair-directed" if cycle.directed else "blocking-pair-opposed"
    for (_, c1, f1), (_, c2, f2) in itertools.combinations_with_replacement(cits, 2):
        common = sorted(set(c1.selector) & set(c2.selector))
        if all(
            all(not _has_row(c1, f1, fwd, w) or not _has_row(c2, f2, fwd, w) for fwd in _directions(cycle))
            for w in assignments(common, doms)
        ):
            return rule
    return None


def decide_by_shared_selectors(net: TCPNet, cycle: SemiDirectedCycle) -> tuple[bool, Assignment | None]:
    """Exact test over assignments to the shared selector variables (the
    union of pairwise selector intersections).  Given such an assignment the ci-arcs' remaining selector
    variables are disjoint, so each arc can be oriented independently.

    Returns ``(acyclic, witness)``; the witness assigns the cycle's selector
    variables and is None when the cycle is acyclic.
    """
    cits = _cycle_cits(net, cycle)
    doms = net.domains()
    for pi in assignments(shared_selector(net, cycle), doms):
        for fwd in _directions(cycle):
            if all(_has_row(cit, fw, fwd, pi) for _, cit, fw in cits):
                w = dict(pi)
                for _, cit, fw in cits:
                    w.update(_pick_row(cit, fw, fwd, w))
                return False, _complete(net, w, cycle_selector(net, cycle))
    return True, None


def enumerate_cycle(net: TCPNet, cycle: SemiDirectedCycle) -> tuple[bool, Assignment | None]:
    """Try every assignment to the cycle's selector variables."""
    cits = _cycle_cits(net, cycle)
    for w in assignments(cycle_selector(net, cycle), net.domains()):
        winners = [cit.winner(w) for _, cit, _ in cits]
        if None in winners:
            continue
        forward = [win == fw for win, (_, _, fw) in zip(winners, cits)]
        if all(forward) or (not cycle.directed and not any(forward)):
            return False, w
    return True, None


@dataclass(frozen=True)
class CycleCertificate:
    cycle: SemiDirectedCycle
    acyclic: bool
    rule: str  # disjoint-selectors | blocking-pair-directed | blocking-pair-opposed | shared-selectors | enumeration
    witness: Assignment | None = None


RULES = ("disjoint-selectors", "blocking-pair", "shared-selectors")


def classify_cycle(net: TCPNet, cycle: SemiDirectedCycle, rules: Sequence[str] = RULES) -> CycleCertificate:
    """Settle one semi-directed cycle with the first decisive rule.

    Rules run in the order of :data:`RULES`; exhaustive enumeration over the
    cycle's selector variables is the fallback.  ``rules`` exists so tests
    can switch individual rules off.
    """
    if "disjoint-selectors" in rules:
        w = disjoint_selector_witness(net, cycle)
        if w is not None:
            return CycleCertificate(cycle, False, "disjoint-selectors", w)
    if "blocking-pair" in rules:
        rule = blocking_pair(net, cycle)
        if rule is not None:
            return CycleCertificate(cycle, True, rule)
    if "shared-selectors" in rules:
        acyclic, w = decide_by_shared_selectors(net, cycle)
        return CycleCertificate(cycle, acyclic, "shared-selectors", w)
    acyclic, w = enumerate_cycle(net, cycle)
    return CycleCertificate(cycle, acyclic, "enumeration", w)


class Status(enum.Enum):
    CONDITIONALLY_ACYCLIC = "conditionally acyclic"
    CONDITIONALLY_DIRECTED = "conditionally directed"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ConsistencyVerdict:
    """Outcome of :func:`is_conditionally_acyclic`.

    For a directed verdict, ``witness`` assigns every selector variable and
    ``cycle`` lists the nodes of a directed cycle of the corresponding
    w-directed graph with selector edges.  The one exception is a cycle that runs through selector
    edges of the dependency graph (``reason == "dependency-cycle"``): no
    w-directed graph need contain it, so ``witness`` is None and ``cycle`` is
    a dependency-graph cycle.
    """

    status: Status
    reason: str
    witness: Assignment | None = None
    cycle: tuple[str, ...] = ()
    certificates: tuple[CycleCertificate, ...] = field(default_factory=tuple)

    @property
    def acyclic(self) -> bool:
        return self.status is Status.CONDITIONALLY_ACYCLIC


def _find_cycle(g: nx.DiGraph) -> tuple[str, ...] | None:
    try:
        edges = nx.find_cycle(g, source=sorted(g.nodes))
    except nx.NetworkXNoCycle:
        return None
    return tuple(u for u, _ in edges)


def _first_selector_assignment(net: TCPNet) -> Assignment:
    return next(assignments(net.selector_variables(), net.domains()))


def is_conditionally_acyclic(net: TCPNet, cycle_cap: int = DEFAULT_CYCLE_CAP) -> ConsistencyVerdict:
    directed = nx.DiGraph()
    directed.add_nodes_from(net.names)
    directed.add_edges_from(net.cp_arcs)
    directed.add_edges_from(net.i_arcs)
    cyc = _find_cycle(directed)
    if cyc is not None:
        return ConsistencyVerdict(
            Status.CONDITIONALLY_DIRECTED, "directed-cycle", _first_selector_assignment(net), cyc
        )
    cyc = _find_cycle(dependency_graph(net))
    if cyc is not None:
        return ConsistencyVerdict(Status.CONDITIONALLY_DIRECTED, "dependency-cycle", None, cyc)

    forest = nx.MultiGraph()
    forest.add_nodes_from(net.names)
    forest.add_edges_from((a.source, a.target) for a in _undirected_edges(net))
    if forest.number_of_edges() == 0 or not _has_undirected_cycle(forest):
        return ConsistencyVerdict(Status.CONDITIONALLY_ACYCLIC, "undirected-acyclic")

    try:
        cycles = semi_directed_cycles(net, cycle_cap)
    except CycleBudgetExceeded:
        return _enumerate_net(net)
    if not cycles:
        return ConsistencyVerdict(Status.CONDITIONALLY_ACYCLIC, "mixed-directions")

    certs = []
    for cycle in cycles:
        cert = classify_cycle(net, cycle)
        certs.append(cert)
        if not cert.acyclic:
            w = _complete(net, cert.witness, net.selector_variables())
            found = _find_cycle(w_directed_graph(net, w, selector_edges=True))
            return ConsistencyVerdict(
                Status.CONDITIONALLY_DIRECTED, "semi-directed-cycle", w, found or cycle.nodes, tuple(certs)
            )
    return ConsistencyVerdict(Status.CONDITIONALLY_ACYCLIC, "semi-directed-cycles", certificates=tuple(certs))


def _has_undirected_cycle(g: nx.MultiGraph) -> bool:
    # A forest has exactly |V| - (#components) edges.
    return g.number_of_edges() > g.number_of_nodes() - nx.number_connected_components(g)


def _enumerate_net(net: TCPNet) -> ConsistencyVerdict:
    """Direct check of every w-directed graph, used past the cycle cap."""
    for w in assignments(net.selector_variables(), net.domains()):
        cyc = _find_cycle(w_directed_graph(net, w, selector_edges=True))
        if cyc is not None:
            return ConsistencyVerdict(Status.CONDITIONALLY_DIRECTED, "enumeration", w, cyc)
    return ConsistencyVerdict(Status.CONDITIONALLY_ACYCLIC, "enumeration")
