import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netgen import random_net
from tcpnet import Assignment, parse_net, project, validate
from tcpnet.model import CITable, CPTable, TCPNet, UnknownVariableError, Variable, assignments


def codes(net):
    return [v.code for v in validate(net)]


def test_evening_net_is_valid(evening):
    assert validate(evening) == []


def test_flight_net_is_valid(flight):
    assert validate(flight) == []


def test_cpt_parents_must_match_cp_arcs(evening):
    s = evening.cpts["S"]
    bad_s = CPTable("S", ("P",), {("black",): ("red", "white"), ("white",): ("white", "red")})
    net = TCPNet(evening.variables, evening.cp_arcs, evening.i_arcs, (), {**evening.cpts, "S": bad_s}, {})
    assert s.parents == ("J", "P")
    assert "cp-parent-mismatch" in codes(net)


def test_i_arc_and_ci_arc_on_same_pair_rejected():
    net = parse_net(
        "var X : x0 x1\nvar Y : y0 y1\nvar Z : z0 z1\n"
        "i X > Y\ncpt X : x0 > x1\ncpt Y : y0 > y1\ncpt Z : z0 > z1\n"
    )
    both = TCPNet(
        net.variables, (), net.i_arcs, (("X", "Y"),), net.cpts,
        {("X", "Y"): CITable(("X", "Y"), ("Z",), {("z0",): "X"})},
    )
    assert "duplicate-importance" in codes(both)


def _base():
    return dict(
        variables=(Variable("A", ("a0", "a1")), Variable("B", ("b0", "b1"))),
        cpts={"A": CPTable("A", (), {(): ("a0", "a1")}), "B": CPTable("B", (), {(): ("b0", "b1")})},
    )


@pytest.mark.parametrize(
    "change, code",
    [
        (dict(variables=(Variable("A", ("a0",)), Variable("B", ("b0", "b1")))), "domain-too-small"),
        (dict(variables=(Variable("A", ("a0", "a0")), Variable("B", ("b0", "b1")))), "duplicate-value"),
        (dict(cp_arcs=(("A", "Q"),)), "unknown-variable"),
        (dict(i_arcs=(("A", "A"),)), "self-arc"),
        (dict(i_arcs=(("A", "B"), ("B", "A"))), "i-arc-antisymmetry"),
        (dict(cpts={"A": CPTable("A", (), {(): ("a0", "a1")})}), "missing-cpt"),
        (dict(cpts={"A": CPTable("A", (), {(): ("a0", "a1")}), "B": CPTable("B", (), {(): ("b0",)})}), "cpt-row-not-permutation"),
        (dict(cpts={"A": CPTable("A", (), {(): (("a0", "a1"),)}), "B": CPTable("B", (), {(): ("b0", "b1")})}), "cpt-tie"),
        (dict(ci_arcs=(("A", "B"),), cits={}), "missing-cit"),
        (dict(ci_arcs=(("A", "B"),), cits={("A", "B"): CITable(("A", "B"), (), {})}), "cit-empty-selector"),
        (dict(ci_arcs=(("A", "B"),), cits={("A", "B"): CITable(("A", "B"), ("A",), {})}), "cit-selector-overlap"),
    ],
)
def test_each_violation_is_reported(change, code):
    assert code in codes(TCPNet(**{**_base(), **change}))


def test_missing_cpt_row_reported():
    net = TCPNet(
        (Variable("A", ("a0", "a1")), Variable("B", ("b0", "b1"))),
        cp_arcs=(("A", "B"),),
        cpts={"A": CPTable("A", (), {(): ("a0", "a1")}), "B": CPTable("B", ("A",), {("a0",): ("b0", "b1")})},
    )
    assert codes(net) == ["cpt-missing-row"]


def test_cit_row_naming_non_endpoint_reported():
    net = TCPNet(
        (Variable("A", ("a0", "a1")), Variable("B", ("b0", "b1")), Variable("Z", ("z0", "z1"))),
        ci_arcs=(("A", "B"),),
        cpts={x: CPTable(x, (), {(): (f"{x.lower()}0", f"{x.lower()}1")}) for x in "ABZ"},
        cits={("A", "B"): CITable(("A", "B"), ("Z",), {("z0",): "Z"})},
    )
    assert codes(net) == ["cit-bad-orientation"]


def test_project_restricts():
    o = Assignment(J="black", P="white", S="white")
    assert project(o, {"J", "P"}) == Assignment(J="black", P="white")
    assert project(o, set()) == Assignment()
    f = Assignment(D="1d", A="ba", T="m", S="1s", C="b")
    assert project(f, {"T", "A"}) == Assignment(T="m", A="ba")


def test_project_unknown_variable():
    with pytest.raises(UnknownVariableError):
        project(Assignment(J="black"), {"Q"})


def test_assignment_is_hashable_and_order_free():
    a = Assignment([("B", "b1"), ("A", "a1")])
    assert a == Assignment(A="a1", B="b1")
    assert hash(a) == hash(Assignment(A="a1", B="b1"))
    assert str(a) == "A=a1,B=b1"
    assert (a | {"C": "c"}).without(["A"]) == Assignment(B="b1", C="c")


def test_assignments_enumerates_product_in_order():
    doms = {"B": ("b0", "b1"), "A": ("a1", "a0")}
    got = [str(a) for a in assignments(["B", "A"], doms)]
    assert got == ["A=a1,B=b0", "A=a1,B=b1", "A=a0,B=b0", "A=a0,B=b1"]


def test_net_normalizes_declaration_order(evening):
    shuffled = TCPNet(
        tuple(reversed(evening.variables)),
        tuple(reversed(evening.cp_arcs)),
        evening.i_arcs,
        (),
        evening.cpts,
        {},
    )
    assert shuffled == evening


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_validate_is_idempotent_and_tables_complete(seed):
    rng = random.Random(seed)
    net = random_net(rng, rng.randint(1, 5), max_domain=3)
    assert validate(net) == validate(net) == []
    doms = net.domains()
    for x in net.names:
        size = 1
        for p in net.cpts[x].parents:
            size *= len(doms[p])
        assert len(net.cpts[x].rows) == size
    for pair, cit in net.cits.items():
        assert not set(cit.selector) & set(pair)
