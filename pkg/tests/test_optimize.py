import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netgen import random_constraints, random_net
from tcpnet import (
    Assignment,
    SearchConfig,
    complete_outcome,
    flip_graph,
    improving_neighbors,
    is_conditionally_acyclic,
    oracle_pareto,
    parse_constraints,
    parse_net,
    reduce,
    search,
    solve,
)
from tcpnet.model import ConstraintSet
from tcpnet.optimize import (
    BranchPruned,
    ConstraintStore,
    DominanceUndecided,
    Inconsistent,
    NotConditionallyAcyclic,
    SolutionEmitted,
    propagate,
)
from tcpnet.semantics import DominanceOracle

CYCLIC = (
    "var X : x0 x1\nvar Y : y0 y1\ncp X -> Y\ncp Y -> X\n"
    "cpt X | Y=y0 : x0 > x1\ncpt X | Y=y1 : x1 > x0\n"
    "cpt Y | X=x0 : y0 > y1\ncpt Y | X=x1 : y1 > y0\n"
)


def E(j, p, s):
    return Assignment(J=j, P=p, S=s)


# --- complete_outcome ------------------------------------------------------

def test_complete_outcome_examples(evening, flight):
    assert complete_outcome(evening) == E("black", "black", "red")
    assert complete_outcome(evening, {"P": "white"}) == E("black", "white", "white")
    assert complete_outcome(flight) == Assignment(D="1d", T="m", A="ba", S="1s", C="b")


def test_complete_outcome_rejects_directed_net():
    with pytest.raises(NotConditionallyAcyclic):
        complete_outcome(parse_net(CYCLIC))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_completion_has_no_improving_flip(seed):
    rng = random.Random(seed)
    net = random_net(rng, rng.randint(1, 5), max_domain=3, p_ci=0.4)
    if is_conditionally_acyclic(net).acyclic:
        assert improving_neighbors(net, complete_outcome(net)) == []


# --- propagate -------------------------------------------------------------

def test_propagation_forces_partner(evening, suits):
    store = ConstraintStore.initial(evening, suits)
    assert propagate(store, "J", "black").induced == Assignment(J="black", P="white")


def test_propagation_detects_contradiction(evening):
    store = ConstraintStore.initial(evening, parse_constraints("allow (J): (white)", evening))
    with pytest.raises(Inconsistent):
        propagate(store, "J", "black")


def test_propagation_without_constraints(evening):
    store = ConstraintStore.initial(evening, ConstraintSet())
    assert propagate(store, "S", "red").induced == Assignment(S="red")


def test_propagation_reaches_through_chains():
    net = parse_net("var A : a0 a1\nvar B : b0 b1\nvar C : c0 c1\n" + "".join(f"cpt {x} : {x.lower()}0 > {x.lower()}1\n" for x in "ABC"))
    cs = parse_constraints("allow (A,B): (a0,b1) (a1,b0)\nallow (B,C): (b1,c1) (b0,c0)", net)
    assert propagate(ConstraintStore.initial(net, cs), "A", "a0").induced == Assignment(A="a0", B="b1", C="c1")


# --- reduce ----------------------------------------------------------------

def test_reduce_evening_by_jacket(evening):
    r = reduce(evening, {"J": "black"})
    assert r.names == ("P", "S")
    assert r.cp_arcs == (("P", "S"),)
    assert r.i_arcs == ()
    assert r.cpts["S"].parents == ("P",)
    assert r.cpts["S"].rows == {("black",): ("red", "white"), ("white",): ("white", "red")}


def test_reduce_flight_turns_ci_into_i(flight):
    r = reduce(flight, {"T": "m", "A": "klm"})
    assert r.names == ("C", "D", "S")
    assert r.i_arcs == (("S", "C"),)
    assert r.ci_arcs == () and r.cits == {}
    assert r.cp_arcs == ()
    assert r.cpts["S"].rows == {(): ("1s", "0s")}
    assert r.cpts["C"].rows == {(): ("b", "e")}


def test_reduce_keeps_partial_cit(flight):
    r = reduce(flight, {"T": "n"})
    assert r.ci_arcs == (("C", "S"),)
    assert r.cits[("C", "S")].selector == ("A",)
    assert r.cits[("C", "S")].rows == {("ba",): "S"}


def test_reduce_drops_empty_cit(flight):
    r = reduce(flight, {"T": "n", "A": "klm"})
    assert r.ci_arcs == () and r.i_arcs == ()


def test_reduce_by_nothing_is_identity(flight):
    assert reduce(flight, {}) == flight


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_reduce_commutes_with_conditioning(seed):
    rng = random.Random(seed)
    net = random_net(rng, rng.randint(2, 4), max_domain=3, p_ci=0.4)
    names = net.names
    fixed_names = rng.sample(names, rng.randint(0, len(names) - 1))
    k = Assignment({x: rng.choice(net.domain(x)) for x in fixed_names})
    r = reduce(net, k)
    inside = {
        (f.source.without(fixed_names), f.target.without(fixed_names))
        for f in flip_graph(net).edges
        if all(f.source[x] == v and f.target[x] == v for x, v in k.items())
    }
    assert flip_graph(r).edge_pairs() == inside


# --- search ----------------------------------------------------------------

def test_search_evening_suits(evening, suits):
    assert solve(evening, suits).solutions == (E("black", "white", "white"),)


def test_first_mode_makes_no_dominance_queries(evening):
    done = solve(evening, ConstraintSet(), config=SearchConfig.first())
    assert done.solutions == (E("black", "black", "red"),)
    assert done.stats.dominance_queries == 0


def test_search_ab_without_a1b1(ab, no_a1b1):
    assert solve(ab, no_a1b1).solutions == (Assignment(A="a1", B="b2"),)


def test_search_with_context(evening):
    assert solve(evening, ConstraintSet(), {"P": "white"}).solutions == (E("black", "white", "white"),)


def test_search_infeasible(evening):
    cs = parse_constraints("allow (J,P): (black,white)\nallow (P): (black)", evening)
    assert solve(evening, cs).solutions == ()


def test_search_refuses_directed_net():
    with pytest.raises(NotConditionallyAcyclic):
        solve(parse_net(CYCLIC), ConstraintSet())


def test_max_mode_stops_at_limit():
    net = parse_net("var A : a0 a1\nvar B : b0 b1\ncpt A : a0 > a1\ncpt B : b0 > b1\n")
    cs = parse_constraints("allow (A,B): (a0,b1) (a1,b0)", net)
    assert len(solve(net, cs).solutions) == 2
    assert solve(net, cs, config=SearchConfig.max(1)).solutions == solve(net, cs).solutions[:1]
    with pytest.raises(ValueError):
        SearchConfig("max", 0)


def test_pruning_reports_inconsistent_and_subsumed(evening, suits):
    events = list(search(evening, suits, config=SearchConfig(subsumption_pruning=True)))
    reasons = {e.reason for e in events if isinstance(e, BranchPruned)}
    assert reasons == {"inconsistent", "subsumed"}
    assert events[-1].solutions == (E("black", "white", "white"),)


def test_exhausted_budget_keeps_candidate(evening):
    events = list(search(evening, ConstraintSet(), config=SearchConfig(dominance_budget=1)))
    assert any(isinstance(e, DominanceUndecided) for e in events)
    done = events[-1]
    assert E("black", "black", "red") in done.solutions
    assert done.stats.undecided > 0
    # over-reporting only: the exact answer is contained
    assert set(oracle_pareto(evening, ConstraintSet())) <= set(done.solutions)


def _instance(seed):
    rng = random.Random(seed)
    while True:
        net = random_net(rng, rng.randint(2, 5), max_domain=3, p_ci=0.35, max_selector=2)
        if is_conditionally_acyclic(net).acyclic:
            return net, random_constraints(rng, net)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_search_matches_oracle(seed, prune):
    net, cs = _instance(seed)
    oracle = DominanceOracle(net)
    events = list(search(net, cs, config=SearchConfig(subsumption_pruning=prune)))
    emitted = [e.outcome for e in events if isinstance(e, SolutionEmitted)]
    assert set(events[-1].solutions) == set(oracle.pareto(cs))
    assert list(events[-1].solutions) == emitted
    for i, early in enumerate(emitted):
        assert cs.satisfied_by(early)
        for late in emitted[i + 1:]:
            assert not oracle.dominates(late, early)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_first_and_max_modes_return_pareto_prefixes(seed):
    net, cs = _instance(seed)
    full = solve(net, cs).solutions
    first = solve(net, cs, config=SearchConfig.first())
    assert first.solutions == full[:1]
    assert first.stats.dominance_queries == 0
    assert solve(net, cs, config=SearchConfig.max(2)).solutions == full[:2]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_search_with_context_matches_pinned_oracle(seed):
    net, cs = _instance(seed)
    rng = random.Random(seed)
    x = rng.choice(net.names)
    v = rng.choice(net.domain(x))
    pinned = parse_constraints(f"allow ({x}): ({v})", net)
    expected = set(oracle_pareto(net, ConstraintSet(cs.constraints + pinned.constraints)))
    assert set(solve(net, cs, {x: v}).solutions) == expected
