"""TCP-net structure, assignments and hard constraints.

A net is a set of finite-domain variables connected by three arc kinds:

* cp-arcs ``(X, Y)``: the preference over ``Y`` depends on the value of ``X``;
* i-arcs ``(X, Y)``: ``X`` is unconditionally more important than ``Y``;
* ci-arcs ``{X, Y}``: which of the two is more important depends on the
  values of a selector set, as tabulated by a CIT.

Everything here is plain data.  :func:`validate` reports malformed nets as a
list of :class:`Violation` records instead of raising, so that parsers and
generators can build a net first and ask questions later.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from typing import Union

__all__ = [
    "Assignment",
    "CITable",
    "CPTable",
    "Constraint",
    "ConstraintSet",
    "TCPNet",
    "UnknownVariableError",
    "Variable",
    "Violation",
    "assignments",
    "project",
    "validate",
    "validate_constraints",
]


class UnknownVariableError(KeyError):
    pass


class Assignment(Mapping[str, str]):
    """Immutable, hashable map from variable names to values.

    Used both for total outcomes and partial assignments.  Iteration is in
    variable-name order.
    """

    __slots__ = ("_data", "_key")

    def __init__(self, items: Mapping[str, str] | Iterable[tuple[str, str]] = (), /, **values: str):
        data = dict(items, **values)
        self._key = tuple(sorted(data.items()))
        self._data = dict(self._key)

    def __getitem__(self, name: str) -> str:
        return self._data[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __hash__(self) -> int:
        return hash(self._key)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Assignment):
            return self._key == other._key
        if isinstance(other, Mapping):
            return self._data == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        return f"Assignment({str(self)!r})"

    def __str__(self) -> str:
        return ",".join(f"{k}={v}" for k, v in self._key)

    def __or__(self, other: Mapping[str, str]) -> Assignment:
        merged = dict(self._data)
        merged.update(other)
        return Assignment(merged)

    def restrict(self, names: Iterable[str]) -> Assignment:
        names = set(names)
        return Assignment((k, v) for k, v in self._key if k in names)

    def without(self, names: Iterable[str]) -> Assignment:
        names = set(names)
        return Assignment((k, v) for k, v in self._key if k not in names)

    def values_for(self, names: Iterable[str]) -> tuple[str, ...]:
        return tuple(self._data[n] for n in names)


def project(outcome: Mapping[str, str], names: Iterable[str]) -> Assignment:
    """Restrict ``outcome`` to ``names``; every name must be assigned."""
    names = list(names)
    missing = [n for n in names if n not in outcome]
    if missing:
        raise UnknownVariableError(f"unknown variable {sorted(missing)[0]}")
    return Assignment((n, outcome[n]) for n in names)


@dataclass(frozen=True)
class Variable:
    name: str
    domain: tuple[str, ...]


# A CPT row entry is a single value, or a tuple of tied values.  Tied entries
# can be represented so that validation can reject them with a precise code.
RowEntry = Union[str, tuple[str, ...]]


@dataclass(frozen=True)
class CPTable:
    """Conditional preference table of ``subject``.

    ``rows`` maps a tuple of parent values (aligned with ``parents``) to the
    subject's values ordered best first.
    """

    subject: str
    parents: tuple[str, ...]
    rows: Mapping[tuple[str, ...], tuple[RowEntry, ...]]

    def order(self, context: Mapping[str, str]) -> tuple[str, ...]:
        return self.rows[tuple(context[p] for p in self.parents)]  # type: ignore[return-value]

    def rank(self, value: str, context: Mapping[str, str]) -> int:
        return self.order(context).index(value)


@dataclass(frozen=True)
class CITable:
    """Conditional importance table of a ci-arc.

    ``rows`` maps a tuple of selector values (aligned with ``selector``) to the
    endpoint that is more important under that assignment.  Missing rows mean
    no importance relation holds there.
    """

    endpoints: tuple[str, str]
    selector: tuple[str, ...]
    rows: Mapping[tuple[str, ...], str]

    def winner(self, context: Mapping[str, str]) -> str | None:
        return self.rows.get(tuple(context[z] for z in self.selector))


def _pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True, eq=True)
class TCPNet:
    """The tuple (variables, cp-arcs, i-arcs, ci-arcs, CPTs, CITs).

    The constructor normalizes ordering (variables by name, arcs as sorted
    tuples, ci-arcs as sorted pairs) but performs no validation.
    """

    variables: tuple[Variable, ...] = ()
    cp_arcs: tuple[tuple[str, str], ...] = ()
    i_arcs: tuple[tuple[str, str], ...] = ()
    ci_arcs: tuple[tuple[str, str], ...] = ()
    cpts: Mapping[str, CPTable] = field(default_factory=dict)
    cits: Mapping[tuple[str, str], CITable] = field(default_factory=dict)

    def __post_init__(self) -> None:
        set_ = object.__setattr__
        set_(self, "variables", tuple(sorted(self.variables, key=lambda v: v.name)))
        set_(self, "cp_arcs", tuple(sorted(set(map(tuple, self.cp_arcs)))))
        set_(self, "i_arcs", tuple(sorted(set(map(tuple, self.i_arcs)))))
        set_(self, "ci_arcs", tuple(sorted({_pair(*a) for a in self.ci_arcs})))
        set_(self, "cpts", dict(sorted(self.cpts.items())))
        set_(self, "cits", dict(sorted((_pair(*k), v) for k, v in self.cits.items())))

    __hash__ = None  # type: ignore[assignment]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def domain(self, name: str) -> tuple[str, ...]:
        for v in self.variables:
            if v.name == name:
                return v.domain
        raise UnknownVariableError(f"unknown variable {name}")

    def domains(self) -> dict[str, tuple[str, ...]]:
        return {v.name: v.domain for v in self.variables}

    def parents(self, name: str) -> tuple[str, ...]:
        return self.cpts[name].parents

    def children(self, name: str) -> tuple[str, ...]:
        return tuple(y for x, y in self.cp_arcs if x == name)

    def selector_variables(self) -> tuple[str, ...]:
        """Union of all selector sets, sorted."""
        return tuple(sorted({z for cit in self.cits.values() for z in cit.selector}))

    def outcome_space_size(self) -> int:
        size = 1
        for v in self.variables:
            size *= len(v.domain)
        return size

    def outcomes(self) -> Iterator[Assignment]:
        """All outcomes in canonical order (by name, then domain storage order)."""
        names = self.names
        for values in itertools.product(*(v.domain for v in self.variables)):
            yield Assignment(zip(names, values))

    def outcome_key(self, outcome: Mapping[str, str]) -> tuple[int, ...]:
        return tuple(v.domain.index(outcome[v.name]) for v in self.variables)

    def importance(self, x: str, y: str, context: Mapping[str, str]) -> str | None:
        """Return whichever of ``x``/``y`` is more important under ``context``."""
        if (x, y) in self.i_arcs:
            return x
        if (y, x) in self.i_arcs:
            return y
        cit = self.cits.get(_pair(x, y))
        if cit is None:
            return None
        return cit.winner(context)

    def restrict(self, names: Iterable[str]) -> TCPNet:
        """Sub-net induced by ``names``.

        Arcs leaving the set are dropped; callers are responsible for making
        sure no kept CPT or CIT refers to a dropped variable.
        """
        keep = set(names)
        return TCPNet(
            variables=tuple(v for v in self.variables if v.name in keep),
            cp_arcs=tuple(a for a in self.cp_arcs if set(a) <= keep),
            i_arcs=tuple(a for a in self.i_arcs if set(a) <= keep),
            ci_arcs=tuple(a for a in self.ci_arcs if set(a) <= keep),
            cpts={k: t for k, t in self.cpts.items() if k in keep},
            cits={k: t for k, t in self.cits.items() if set(k) <= keep},
        )

    def without_importance(self) -> TCPNet:
        """The underlying CP-net (i-arcs, ci-arcs and CITs dropped)."""
        return TCPNet(self.variables, self.cp_arcs, (), (), self.cpts, {})

    def check_assignment(self, assignment: Mapping[str, str], total: bool = False) -> None:
        doms = self.domains()
        for name, value in assignment.items():
            if name not in doms:
                raise UnknownVariableError(f"unknown variable {name}")
            if value not in doms[name]:
                raise ValueError(f"value {value!r} not in domain of {name}")
        if total and len(assignment) != len(doms):
            missing = sorted(set(doms) - set(assignment))
            raise ValueError(f"outcome leaves {', '.join(missing)} unassigned")


def assignments(names: Iterable[str], domains: Mapping[str, tuple[str, ...]]) -> Iterator[Assignment]:
    """Enumerate assignments to ``names`` in lexicographic order."""
    names = sorted(names)
    for values in itertools.product(*(domains[n] for n in names)):
        yield Assignment(zip(names, values))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    element: str = ""

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


def validate(net: TCPNet) -> list[Violation]:
    """Every well-formedness violation of ``net``; empty iff the net is valid."""
    out: list[Violation] = []

    def bad(code: str, message: str, element: object = "") -> None:
        out.append(Violation(code, message, str(element)))

    doms: dict[str, tuple[str, ...]] = {}
    for v in net.variables:
        if v.name in doms:
            bad("duplicate-variable", f"variable {v.name} declared twice", v.name)
            continue
        doms[v.name] = v.domain
        if len(v.domain) < 2:
            bad("domain-too-small", f"domain of {v.name} has fewer than 2 values", v.name)
        if len(set(v.domain)) != len(v.domain):
            bad("duplicate-value", f"domain of {v.name} repeats a value", v.name)

    def known(arc: Iterable[str], what: str) -> bool:
        ok = True
        for name in arc:
            if name not in doms:
                bad("unknown-variable", f"{what} references undeclared variable {name}", name)
                ok = False
        return ok

    for kind, arcs in (("cp-arc", net.cp_arcs), ("i-arc", net.i_arcs), ("ci-arc", net.ci_arcs)):
        for a, b in arcs:
            if known((a, b), kind) and a == b:
                bad("self-arc", f"{kind} from {a} to itself", a)

    seen_pairs: dict[tuple[str, str], str] = {}
    for a, b in net.i_arcs:
        if (b, a) in net.i_arcs and a < b:
            bad("i-arc-antisymmetry", f"i-arcs in both directions between {a} and {b}", f"{a},{b}")
        seen_pairs.setdefault(_pair(a, b), "i")
    for a, b in net.ci_arcs:
        if (a, b) in seen_pairs:
            bad("duplicate-importance", f"both an i-arc and a ci-arc between {a} and {b}", f"{a},{b}")

    # CPTs
    for name, dom in doms.items():
        cpt = net.cpts.get(name)
        declared = tuple(sorted(x for x, y in net.cp_arcs if y == name))
        if cpt is None:
            bad("missing-cpt", f"no CPT for {name}", name)
            continue
        if tuple(sorted(cpt.parents)) != declared:
            bad(
                "cp-parent-mismatch",
                f"CPT of {name} has parents {{{', '.join(sorted(cpt.parents))}}} "
                f"but cp-arcs give {{{', '.join(declared)}}}",
                name,
            )
        if len(set(cpt.parents)) != len(cpt.parents):
            bad("cpt-bad-parents", f"CPT of {name} repeats a parent", name)
        if not all(p in doms for p in cpt.parents):
            bad("cpt-bad-parents", f"CPT of {name} has an undeclared parent", name)
            continue
        expected = set(itertools.product(*(doms[p] for p in cpt.parents)))
        for key, row in cpt.rows.items():
            if key not in expected:
                bad("cpt-bad-row", f"CPT of {name} has a row for non-assignment {key}", name)
                continue
            if any(not isinstance(e, str) for e in row):
                bad("cpt-tie", f"CPT row {key} of {name} contains tied values", name)
                continue
            if sorted(row) != sorted(dom) or len(row) != len(dom):
                bad("cpt-row-not-permutation", f"CPT row {key} of {name} is not an order of its domain", name)
        for key in sorted(expected - set(cpt.rows)):
            bad("cpt-missing-row", f"CPT of {name} has no row for {key}", name)
    for name in net.cpts:
        if name not in doms:
            bad("orphan-cpt", f"CPT for undeclared variable {name}", name)
        elif net.cpts[name].subject != name:
            bad("cpt-bad-subject", f"CPT stored under {name} describes {net.cpts[name].subject}", name)

    # CITs
    for pair in net.ci_arcs:
        cit = net.cits.get(pair)
        if cit is None:
            bad("missing-cit", f"no CIT for ci-arc {pair[0]} ~ {pair[1]}", f"{pair[0]},{pair[1]}")
            continue
        if _pair(*cit.endpoints) != pair:
            bad("cit-endpoint-mismatch", f"CIT stored under {pair} describes {cit.endpoints}", f"{pair[0]},{pair[1]}")
        if not cit.selector:
            bad("cit-empty-selector", f"CIT of {pair[0]} ~ {pair[1]} has an empty selector", f"{pair[0]},{pair[1]}")
        if set(cit.selector) & set(pair):
            bad("cit-selector-overlap", f"selector of {pair[0]} ~ {pair[1]} contains an endpoint", f"{pair[0]},{pair[1]}")
        if len(set(cit.selector)) != len(cit.selector):
            bad("cit-bad-selector", f"selector of {pair[0]} ~ {pair[1]} repeats a variable", f"{pair[0]},{pair[1]}")
        if not all(z in doms for z in cit.selector):
            bad("unknown-variable", f"selector of {pair[0]} ~ {pair[1]} has an undeclared variable", f"{pair[0]},{pair[1]}")
            continue
        expected = set(itertools.product(*(doms[z] for z in cit.selector)))
        for key, winner in cit.rows.items():
            if key not in expected:
                bad("cit-bad-row", f"CIT of {pair[0]} ~ {pair[1]} has a row for non-assignment {key}", f"{pair[0]},{pair[1]}")
            elif winner not in pair:
                bad("cit-bad-orientation", f"CIT row {key} names {winner}, not an endpoint", f"{pair[0]},{pair[1]}")
    for pair in net.cits:
        if pair not in net.ci_arcs:
            bad("orphan-cit", f"CIT for {pair[0]} ~ {pair[1]} without a ci-arc", f"{pair[0]},{pair[1]}")
    return out


@dataclass(frozen=True)
class Constraint:
    """Extensional constraint: the allowed value tuples over ``scope``."""

    scope: tuple[str, ...]
    allowed: frozenset[tuple[str, ...]]

    def satisfied_by(self, outcome: Mapping[str, str]) -> bool:
        return tuple(outcome[v] for v in self.scope) in self.allowed


@dataclass(frozen=True)
class ConstraintSet:
    constraints: tuple[Constraint, ...] = ()

    def __iter__(self) -> Iterator[Constraint]:
        return iter(self.constraints)

    def __len__(self) -> int:
        return len(self.constraints)

    def satisfied_by(self, outcome: Mapping[str, str]) -> bool:
        return all(c.satisfied_by(outcome) for c in self.constraints)


def validate_constraints(net: TCPNet, cs: ConstraintSet) -> list[Violation]:
    doms = net.domains()
    out = []
    for k, c in enumerate(cs):
        where = f"constraint {k + 1}"
        if len(set(c.scope)) != len(c.scope):
            out.append(Violation("scope-repeat", f"{where} repeats a variable", where))
        unknown = [v for v in c.scope if v not in doms]
        if unknown:
            out.append(Violation("unknown-variable", f"{where} references unknown variable {unknown[0]}", where))
            continue
        for t in sorted(c.allowed):
            if len(t) != len(c.scope):
                out.append(Violation("arity-mismatch", f"{where}: tuple {t} has arity {len(t)}, scope has {len(c.scope)}", where))
            elif any(val not in doms[v] for v, val in zip(c.scope, t)):
                out.append(Violation("unknown-value", f"{where}: tuple {t} has a value outside its domain", where))
    return out
