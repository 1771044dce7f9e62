"""TCP-nets: conditional preference networks with relative-importance tradeoffs."""

from importlib import resources

from .codec import parse_constraints, parse_net, serialize_constraints, serialize_net
from .consistency import ConsistencyVerdict, Status, dependency_graph, is_conditionally_acyclic, w_directed_graph
from .model import Assignment, ConstraintSet, TCPNet, project, validate
from .optimize import SearchConfig, complete_outcome, reduce, search, solve
from .semantics import dominates, flip_graph, flip_graph_acyclic, improving_neighbors, oracle_dominates, oracle_pareto

__all__ = [
    "Assignment",
    "ConsistencyVerdict",
    "ConstraintSet",
    "SearchConfig",
    "Status",
    "TCPNet",
    "complete_outcome",
    "dependency_graph",
    "dominates",
    "fixture_text",
    "flip_graph",
    "flip_graph_acyclic",
    "improving_neighbors",
    "is_conditionally_acyclic",
    "load_fixture",
    "oracle_dominates",
    "oracle_pareto",
    "parse_constraints",
    "parse_net",
    "project",
    "reduce",
    "search",
    "serialize_constraints",
    "serialize_net",
    "solve",
    "validate",
    "w_directed_graph",
]


def fixture_text(name: str) -> str:
    """Text of a bundled example file (``evening.tcp``, ``flight.tcp``, ...)."""
    return resources.files(__name__).joinpath("fixtures", name).read_text(encoding="utf-8")


def load_fixture(name: str) -> TCPNet:
    return parse_net(fixture_text(name))
