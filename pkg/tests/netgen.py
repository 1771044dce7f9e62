"""Random TCP-nets and constraint sets for the property suites."""

from __future__ import annotations

import itertools
import random

from tcpnet.model import CITable, Constraint, ConstraintSet, CPTable, TCPNet, Variable, validate


def random_net(
    rng: random.Random,
    n_vars: int,
    max_domain: int = 2,
    p_cp: float = 0.35,
    p_i: float = 0.2,
    p_ci: float = 0.25,
    max_parents: int = 2,
    max_selector: int = 2,
    p_missing_row: float = 0.15,
    p_backward: float = 0.0,
) -> TCPNet:
    """A valid random net.

    Arcs follow a hidden variable order, so the dependency graph is acyclic
    unless ``p_backward`` flips some of them.  ci-arc selectors are drawn from
    variables ahead of both endpoints in that order (again unless flipped).
    """
    names = [f"V{k}" for k in range(n_vars)]
    domains = {}
    for k, x in enumerate(names):
        size = rng.randint(2, max_domain)
        domains[x] = tuple(f"{x.lower()}{j}" for j in range(size))
    order = names[:]
    rng.shuffle(order)

    cp, i_arcs, ci, sels = set(), set(), set(), {}
    for a_pos, b_pos in itertools.combinations(range(n_vars), 2):
        a, b = order[a_pos], order[b_pos]
        if rng.random() < p_backward:
            a, b = b, a
        parents_b = sum(1 for _, t in cp if t == b)
        if rng.random() < p_cp and parents_b < max_parents:
            cp.add((a, b))
        r = rng.random()
        if r < p_i:
            i_arcs.add((a, b))
        elif r < p_i + p_ci:
            pool = [z for z in order[: min(a_pos, b_pos)] if z not in (a, b)]
            if rng.random() < p_backward:
                pool = [z for z in names if z not in (a, b)]
            if pool:
                sel = tuple(sorted(rng.sample(pool, rng.randint(1, min(max_selector, len(pool))))))
                key = tuple(sorted((a, b)))
                ci.add(key)
                sels[key] = sel

    cpts = {}
    for x in names:
        parents = tuple(sorted(a for a, b in cp if b == x))
        rows = {}
        for key in itertools.product(*(domains[p] for p in parents)):
            perm = list(domains[x])
            rng.shuffle(perm)
            rows[key] = tuple(perm)
        cpts[x] = CPTable(x, parents, rows)

    cits = {}
    for key in sorted(ci):
        sel = sels[key]
        rows = {}
        for vals in itertools.product(*(domains[z] for z in sel)):
            if rng.random() < p_missing_row:
                continue
            rows[vals] = rng.choice(key)
        cits[key] = CITable(key, sel, rows)

    net = TCPNet(
        variables=tuple(Variable(x, domains[x]) for x in names),
        cp_arcs=tuple(cp),
        i_arcs=tuple(i_arcs),
        ci_arcs=tuple(ci),
        cpts=cpts,
        cits=cits,
    )
    assert not validate(net), validate(net)
    return net


def random_constraints(rng: random.Random, net: TCPNet, max_constraints: int = 3, density: float = 0.6) -> ConstraintSet:
    doms = net.domains()
    out = []
    for _ in range(rng.randint(0, max_constraints)):
        arity = rng.randint(1, min(3, len(doms)))
        scope = tuple(rng.sample(sorted(doms), arity))
        space = list(itertools.product(*(doms[x] for x in scope)))
        allowed = frozenset(t for t in space if rng.random() < density)
        out.append(Constraint(scope, allowed))
    return ConstraintSet(tuple(out))


def random_cycle_net(rng: random.Random, length: int | None = None, n_selectors: int = 4) -> TCPNet:
    """A net whose only undirected cycle is one semi-directed cycle
    C0 - C1 - ... - C(k-1) - C0, plus isolated selector variables."""
    k = length or rng.randint(2, 5)
    nodes = [f"C{j}" for j in range(k)]
    sel_vars = [f"S{j}" for j in range(n_selectors)]
    domains = {x: (f"{x.lower()}0", f"{x.lower()}1") for x in nodes}
    for z in sel_vars:
        domains[z] = tuple(f"{z.lower()}{j}" for j in range(rng.randint(2, 3)))

    while True:
        kinds = [rng.choice(["cp", "i", "ci", "ci"]) for _ in range(k)]
        if k == 2:
            kinds = ["cp", "ci"]
        if "ci" in kinds:
            break
    cp, i_arcs, ci, cits = set(), set(), set(), {}
    for j, kind in enumerate(kinds):
        a, b = nodes[j], nodes[(j + 1) % k]
        if kind == "cp":
            cp.add((a, b))
        elif kind == "i":
            i_arcs.add((a, b))
        else:
            key = tuple(sorted((a, b)))
            sel = tuple(sorted(rng.sample(sel_vars, rng.randint(1, 3))))
            rows = {}
            for vals in itertools.product(*(domains[z] for z in sel)):
                if rng.random() < 0.1:
                    continue
                rows[vals] = a if rng.random() < 0.6 else b
            ci.add(key)
            cits[key] = CITable(key, sel, rows)
    names = nodes + sel_vars
    cpts = {}
    for x in names:
        parents = tuple(sorted(a for a, b in cp if b == x))
        rows = {}
        for key in itertools.product(*(domains[p] for p in parents)):
            perm = list(domains[x])
            rng.shuffle(perm)
            rows[key] = tuple(perm)
        cpts[x] = CPTable(x, parents, rows)
    net = TCPNet(tuple(Variable(x, domains[x]) for x in names), tuple(cp), tuple(i_arcs), tuple(ci), cpts, cits)
    assert not validate(net), validate(net)
    return net
