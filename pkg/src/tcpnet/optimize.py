"""Optimization over TCP-nets.

:func:`complete_outcome` extends a partial assignment to its best completion
when there are no hard constraints.  :func:`search` is the anytime
branch-and-bound procedure for the Pareto-optimal feasible outcomes: it
assigns a root variable in preference order, propagates the hard
constraints, reduces the net by the root's value, splits the rest into
independent components and recurses on each.  Candidates are admitted only
if no earlier admitted solution dominates them, so admitted solutions are
never withdrawn.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from typing import Union

import networkx as nx

from .consistency import dependency_graph, is_conditionally_acyclic
from .model import Assignment, CITable, Constraint, ConstraintSet, CPTable, TCPNet
from .semantics import DominanceBudgetExhausted, dominates

__all__ = [
    "BranchPruned",
    "ComponentSplit",
    "ConstraintStore",
    "DominanceUndecided",
    "Inconsistent",
    "NotConditionallyAcyclic",
    "SearchConfig",
    "SearchFinished",
    "SearchStats",
    "SolutionEmitted",
    "complete_outcome",
    "propagate",
    "reduce",
    "search",
    "solve",
]


class NotConditionallyAcyclic(ValueError):
    pass


class Inconsistent(Exception):
    """Propagation emptied a domain."""


def _require_acyclic(net: TCPNet) -> None:
    verdict = is_conditionally_acyclic(net)
    if not verdict.acyclic:
        raise NotConditionallyAcyclic(f"net is {verdict.status} ({verdict.reason})")


def _topological_order(net: TCPNet) -> list[str]:
    return list(nx.lexicographical_topological_sort(dependency_graph(net)))


def complete_outcome(net: TCPNet, given: Mapping[str, str] = Assignment()) -> Assignment:
    """Sweep the dependency graph in topological order, giving every
    unassigned variable its best value under its (already assigned) parents."""
    _require_acyclic(net)
    net.check_assignment(given)
    values = dict(given)
    for x in _topological_order(net):
        if x not in values:
            values[x] = net.cpts[x].order(values)[0]
    return Assignment(values)


# --- constraint store ------------------------------------------------------

@dataclass(frozen=True)
class ConstraintStore:
    """Hard constraints plus current candidate domains, kept at a generalized
    arc consistency fixpoint."""

    constraints: ConstraintSet
    domains: Mapping[str, tuple[str, ...]]

    @property
    def induced(self) -> Assignment:
        return Assignment((x, d[0]) for x, d in self.domains.items() if len(d) == 1)

    @classmethod
    def initial(cls, net: TCPNet, constraints: ConstraintSet) -> ConstraintStore:
        return cls(constraints, _gac(constraints, net.domains()))

    def supports(self, c) -> list[tuple[str, ...]]:
        return [t for t in c.allowed if all(v in self.domains[x] for x, v in zip(c.scope, t))]


def _gac(constraints: ConstraintSet, domains: Mapping[str, tuple[str, ...]]) -> dict[str, tuple[str, ...]]:
    doms = {x: tuple(d) for x, d in domains.items()}
    changed = True
    while changed:
        changed = False
        for c in constraints:
            live = [t for t in c.allowed if all(v in doms[x] for x, v in zip(c.scope, t))]
            for k, x in enumerate(c.scope):
                supported = {t[k] for t in live}
                pruned = tuple(v for v in doms[x] if v in supported)
                if not pruned:
                    raise Inconsistent(f"no value of {x} survives")
                if pruned != doms[x]:
                    doms[x] = pruned
                    changed = True
    return doms


def propagate(store: ConstraintStore, variable: str, value: str) -> ConstraintStore:
    """Commit ``variable = value`` and re-establish arc consistency.

    Raises :class:`Inconsistent` when some domain empties.
    """
    if value not in store.domains[variable]:
        raise Inconsistent(f"{variable}={value} already excluded")
    doms = dict(store.domains)
    doms[variable] = (value,)
    return ConstraintStore(store.constraints, _gac(store.constraints, doms))


# --- reduction -------------------------------------------------------------

def reduce(net: TCPNet, k_prime: Mapping[str, str]) -> TCPNet:
    """Condition ``net`` on the assignment ``k_prime`` and drop its variables.

    CPTs of children keep only the matching rows; CITs keep only rows
    matching the assigned selector variables.  A CIT left with one
    orientation for every remaining selector assignment becomes an i-arc;
    one left with no rows disappears.
    """
    fixed = {x: v for x, v in k_prime.items() if x in net.names}
    if not fixed:
        return net
    keep = [x for x in net.names if x not in fixed]

    cpts = {}
    for x in keep:
        cpt = net.cpts[x]
        parents = tuple(p for p in cpt.parents if p not in fixed)
        rows = {}
        for key, order in cpt.rows.items():
            ctx = dict(zip(cpt.parents, key))
            if all(ctx[p] == fixed[p] for p in cpt.parents if p in fixed):
                rows[tuple(ctx[p] for p in parents)] = order
        cpts[x] = CPTable(x, parents, rows)

    i_arcs = [a for a in net.i_arcs if not set(a) & set(fixed)]
    ci_arcs, cits = [], {}
    domains = net.domains()
    for pair, cit in net.cits.items():
        if set(pair) & set(fixed):
            continue
        selector = tuple(z for z in cit.selector if z not in fixed)
        rows = {}
        for key, win in cit.rows.items():
            ctx = dict(zip(cit.selector, key))
            if all(ctx[z] == fixed[z] for z in cit.selector if z in fixed):
                rows[tuple(ctx[z] for z in selector)] = win
        winners = set(rows.values())
        total = len(rows) == _count(selector, domains)
        if not rows:
            continue
        if len(winners) == 1 and total:
            win = winners.pop()
            i_arcs.append((win, pair[1] if win == pair[0] else pair[0]))
            continue
        ci_arcs.append(pair)
        cits[pair] = CITable(pair, selector, rows)

    return TCPNet(
        variables=tuple(v for v in net.variables if v.name not in fixed),
        cp_arcs=tuple(a for a in net.cp_arcs if not set(a) & set(fixed)),
        i_arcs=tuple(i_arcs),
        ci_arcs=tuple(ci_arcs),
        cpts=cpts,
        cits=cits,
    )


def _count(names, domains) -> int:
    n = 1
    for x in names:
        n *= len(domains[x])
    return n


# --- search ----------------------------------------------------------------

@dataclass(frozen=True)
class SearchConfig:
    """``mode`` is ``"first"``, ``"all"`` or ``"max"`` (with ``limit``)."""

    mode: str = "all"
    limit: int | None = None
    subsumption_pruning: bool = False
    dominance_budget: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("first", "all", "max"):
            raise ValueError(f"unknown search mode {self.mode!r}")
        if self.mode == "max" and (self.limit is None or self.limit < 1):
            raise ValueError("max mode needs a limit >= 1")

    @classmethod
    def first(cls, **kw) -> SearchConfig:
        return cls("first", **kw)

    @classmethod
    def max(cls, k: int, **kw) -> SearchConfig:
        return cls("max", k, **kw)


@dataclass(frozen=True)
class SolutionEmitted:
    outcome: Assignment


@dataclass(frozen=True)
class BranchPruned:
    variable: str
    value: str
    reason: str  # "inconsistent" | "subsumed"
    context: Assignment


@dataclass(frozen=True)
class ComponentSplit:
    count: int
    context: Assignment


@dataclass(frozen=True)
class DominanceUndecided:
    """A non-domination test ran out of budget; the candidate was kept."""

    candidate: Assignment
    incumbent: Assignment


@dataclass
class SearchStats:
    dominance_queries: int = 0
    undecided: int = 0
    nodes: int = 0
    root_fallbacks: int = 0


@dataclass(frozen=True)
class SearchFinished:
    solutions: tuple[Assignment, ...]
    stats: SearchStats = field(compare=False)


SearchEvent = Union[SolutionEmitted, BranchPruned, ComponentSplit, DominanceUndecided, SearchFinished]


class _Stop(Exception):
    pass


class _Search:
    def __init__(self, net: TCPNet, constraints: ConstraintSet, config: SearchConfig):
        self.net = net
        self.constraints = constraints
        self.config = config
        self.stats = SearchStats()
        self.emitted: list[Assignment] = []
        self._order = _topological_order(net)

    def run(self, context: Mapping[str, str]) -> Iterator[SearchEvent]:
        # The context is imposed as unary constraints rather than reduced
        # away: its variables may still move along improving flip sequences.
        constraints = ConstraintSet(
            self.constraints.constraints + tuple(Constraint((x,), frozenset({(v,)})) for x, v in sorted(context.items()))
        )
        try:
            store = ConstraintStore.initial(self.net, constraints)
        except Inconsistent:
            yield SearchFinished((), self.stats)
            return
        try:
            yield from self._search(self.net, store, Assignment(), top=True)
        except _Stop:
            pass
        yield SearchFinished(tuple(self.emitted), self.stats)

    # The recursive procedure.  ``net`` is the net reduced by the roots chosen
    # so far (``context``); variables merely fixed by propagation stay in it
    # with singleton domains, because unlike roots they are not monotone along
    # improving flip sequences.  Returns assignments over ``context``'s and
    # ``net``'s variables.
    def _search(self, net: TCPNet, store: ConstraintStore, context: Assignment, top: bool):
        self.stats.nodes += 1
        if not net.names:
            if top:
                yield from self._admit(context, [], context, top)
            return [context]

        x = self._root(net)
        if x is None:
            return (yield from self._exhaust(net, store, context, top))
        order = net.cpts[x].order({})
        results: list[Assignment] = []
        for i, value in enumerate(order):
            try:
                st = propagate(store, x, value)
            except Inconsistent:
                yield BranchPruned(x, value, "inconsistent", context)
                continue
            if self.config.subsumption_pruning and any(
                _subsumes(store, x, prev, value) for prev in order[:i]
            ):
                yield BranchPruned(x, value, "subsumed", context)
                continue
            inner = context | {x: value}
            sub = reduce(net, {x: value})
            components = _components(sub, st)
            if len(components) > 1:
                yield ComponentSplit(len(components), inner)
            parts = []
            for names in components:
                part = yield from self._search(sub.restrict(names), st, inner, top=False)
                if not part:
                    break
                parts.append([p.restrict(names) for p in part])
            else:
                for combo in itertools.product(*parts):
                    candidate = inner
                    for p in combo:
                        candidate = candidate | p
                    admitted = yield from self._admit(candidate, results, context, top)
                    if admitted and self.config.mode == "first":
                        return results
        return results

    def _exhaust(self, net: TCPNet, store: ConstraintStore, context: Assignment, top: bool):
        """Subproblem without an eligible root: enumerate its feasible
        completions and keep the undominated ones."""
        self.stats.root_fallbacks += 1
        names = net.names
        feasible = []
        for values in itertools.product(*(store.domains[x] for x in names)):
            o = context | dict(zip(names, values))
            if all(c.satisfied_by(o) for c in store.constraints if set(c.scope) <= set(o)):
                feasible.append(o)
        keep = [
            o for o in feasible
            if not any(p != o and self._dominates(p, o, context) for p in feasible)
        ]
        results: list[Assignment] = []
        for o in keep:
            admitted = yield from self._admit(o, results, context, top, test=False)
            if admitted and self.config.mode == "first":
                break
        return results

    def _root(self, net: TCPNet) -> str | None:
        blocked = {b for _, b in net.cp_arcs} | {b for _, b in net.i_arcs}
        blocked |= {x for pair in net.ci_arcs for x in pair}
        for x in net.names:
            if x not in blocked:
                return x
        # Reduction can turn ci-arcs into i-arcs that close a cycle with the
        # remaining selector edges, leaving no eligible root.
        return None

    def _fill(self, context: Assignment, assigned: Assignment) -> Assignment:
        """Values for the variables of sibling components, used identically on
        both sides of a non-domination test below the top level."""
        values = dict(context)
        for x in self._order:
            if x not in values:
                values[x] = self.net.cpts[x].order(values)[0]
        return Assignment(values).without(assigned)

    def _dominates(self, better: Assignment, worse: Assignment, context: Assignment) -> bool | None:
        self.stats.dominance_queries += 1
        if len(worse) < len(self.net.names):
            fill = self._fill(context, worse)
            better, worse = better | fill, worse | fill
        try:
            return dominates(self.net, better, worse, budget=self.config.dominance_budget) is not None
        except DominanceBudgetExhausted:
            self.stats.undecided += 1
            return None

    def _admit(self, candidate: Assignment, results: list[Assignment], context: Assignment, top: bool, test: bool = True):
        undecided = []
        for incumbent in results if test else ():
            verdict = self._dominates(incumbent, candidate, context)
            if verdict:
                return False
            if verdict is None:
                undecided.append(incumbent)
        for incumbent in undecided:
            yield DominanceUndecided(candidate, incumbent)
        results.append(candidate)
        if top:
            self.emitted.append(candidate)
            yield SolutionEmitted(candidate)
            if self.config.mode == "first" or (
                self.config.mode == "max" and len(self.emitted) >= self.config.limit
            ):
                raise _Stop
        return True


def _subsumes(store: ConstraintStore, x: str, earlier: str, later: str) -> bool:
    """Is every solution with ``x = later`` still a solution with
    ``x = earlier``?  Checked per constraint on ``x``: the tuples allowed
    alongside ``later`` (within current domains) must all be allowed
    alongside ``earlier``."""
    for c in store.constraints:
        if x not in c.scope:
            continue
        k = c.scope.index(x)
        live = store.supports(c)
        with_later = {t[:k] + t[k + 1:] for t in live if t[k] == later}
        with_earlier = {t[:k] + t[k + 1:] for t in c.allowed if t[k] == earlier}
        if not with_later <= with_earlier:
            return False
    return True


def _components(net: TCPNet, store: ConstraintStore) -> list[tuple[str, ...]]:
    """Variables of ``net`` grouped by connectivity through arcs, selector
    links, and constraints whose scopes they share."""
    g = nx.Graph()
    g.add_nodes_from(net.names)
    g.add_edges_from(net.cp_arcs + net.i_arcs + net.ci_arcs)
    for pair, cit in net.cits.items():
        for z in cit.selector:
            g.add_edges_from((z, e) for e in pair)
    names = set(net.names)
    for c in store.constraints:
        scope = [x for x in c.scope if x in names and len(store.domains[x]) > 1]
        g.add_edges_from(zip(scope, scope[1:]))
    comps = [tuple(sorted(c)) for c in nx.connected_components(g)]
    return sorted(comps)


def search(
    net: TCPNet,
    constraints: ConstraintSet,
    context: Mapping[str, str] = Assignment(),
    config: SearchConfig = SearchConfig(),
) -> Iterator[SearchEvent]:
    """Stream search events; the last one is :class:`SearchFinished`."""
    _require_acyclic(net)
    net.check_assignment(context)
    return _Search(net, constraints, config).run(Assignment(context))


def solve(
    net: TCPNet,
    constraints: ConstraintSet,
    context: Mapping[str, str] = Assignment(),
    config: SearchConfig = SearchConfig(),
) -> SearchFinished:
    *_, last = search(net, constraints, context, config)
    return last
