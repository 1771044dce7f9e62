"""Command-line front end: ``tcpnet {check,optimal,search,dominates,oracle}``.

Results go to standard output, diagnostics to standard error.  With
``--porcelain`` every result is one JSON object per line with an ``event``
field.
"""

from __future__ import annotations

import argparse
import enum
import json
import sys
from collections.abc import Mapping, Sequence
from typing import TextIO

from .codec import CodecError, parse_constraints, parse_net
from .consistency import is_conditionally_acyclic
from .model import Assignment, Constraint, ConstraintSet, TCPNet
from .optimize import (
    BranchPruned,
    ComponentSplit,
    DominanceUndecided,
    NotConditionallyAcyclic,
    SearchConfig,
    SearchFinished,
    SolutionEmitted,
    complete_outcome,
    search,
)
from .semantics import CAP_ENV, DominanceOracle, OutcomeSpaceTooLarge, dominates, flip_graph_acyclic


class Exit(enum.IntEnum):
    OK = 0
    NOT_IMPLIED = 1
    INFEASIBLE = 2
    DIRECTED = 3
    VERIFY_MISMATCH = 4
    CAP_EXCEEDED = 5
    USAGE = 64
    INVALID_INPUT = 65


EPILOG = f"""\
exit codes:
  0   success (check: conditionally acyclic; dominates: implied)
  1   dominates: not implied
  2   search: no feasible outcome
  3   net is conditionally directed
  4   search --verify: result differs from brute force
  5   outcome space larger than the cap (set {CAP_ENV} to change it)
  64  usage error
  65  parse or validation error

outcomes are written as comma-separated X=v pairs, e.g. J=black,P=white,S=red
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(Exit.USAGE, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--porcelain", action="store_true", help="one JSON record per line")
    common.add_argument("net", help="net file")

    p = _Parser(
        prog="tcpnet",
        description="Reason about TCP-nets: consistency, optimal outcomes, dominance.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("check", parents=[common], help="decide conditional acyclicity")

    opt = sub.add_parser("optimal", parents=[common], help="best outcome extending a partial assignment")
    opt.add_argument("--given", action="append", default=[], metavar="X=v", help="fix a value (repeatable)")

    s = sub.add_parser("search", parents=[common], help="Pareto-optimal feasible outcomes")
    s.add_argument("--constraints", required=True, metavar="FILE")
    mode = s.add_mutually_exclusive_group()
    mode.add_argument("--first", action="store_true", help="stop at the first solution")
    mode.add_argument("--all", action="store_true", help="all solutions (default)")
    mode.add_argument("--max", type=int, metavar="K", help="stop after K solutions")
    s.add_argument("--given", action="append", default=[], metavar="X=v", help="fix a value (repeatable)")
    s.add_argument("--prune", action="store_true", help="enable subsumption pruning")
    s.add_argument("--budget", type=int, metavar="N", help="outcomes expanded per dominance test")
    s.add_argument("--verify", action="store_true", help="compare with the brute-force Pareto set")

    d = sub.add_parser("dominates", parents=[common], help="search for an improving flipping sequence")
    d.add_argument("--better", required=True, metavar="OUTCOME")
    d.add_argument("--worse", required=True, metavar="OUTCOME")

    o = sub.add_parser("oracle", parents=[common], help="brute-force answers over the whole outcome space")
    what = o.add_mutually_exclusive_group(required=True)
    what.add_argument("--pareto", metavar="CONSTRAINTS", help="undominated feasible outcomes")
    what.add_argument("--acyclic", action="store_true", help="is the flip graph acyclic")
    what.add_argument("--closure", action="store_true", help="every implied pair")
    return p


# --- input -----------------------------------------------------------------

def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _parse_outcome(text: str, net: TCPNet) -> Assignment:
    pairs = []
    for part in text.split(","):
        name, sep, value = part.strip().partition("=")
        if not sep or not name or not value:
            raise UsageError(f"expected X=v, got {part.strip()!r}")
        pairs.append((name.strip(), value.strip()))
    names = [n for n, _ in pairs]
    if len(set(names)) != len(names):
        raise UsageError(f"variable assigned twice in {text!r}")
    a = Assignment(pairs)
    net.check_assignment(a)
    return a


def _given(items: Sequence[str], net: TCPNet) -> Assignment:
    out = Assignment()
    for item in items:
        out = out | _parse_outcome(item, net)
    return out


# --- output ----------------------------------------------------------------

class _Out:
    def __init__(self, porcelain: bool, stdout: TextIO, stderr: TextIO):
        self.porcelain = porcelain
        self.stdout = stdout
        self.stderr = stderr

    def record(self, event: str, text: str | None = None, **fields) -> None:
        if self.porcelain:
            self.stdout.write(json.dumps({"event": event, **fields}, sort_keys=True) + "\n")
        elif text is not None:
            self.stdout.write(text + "\n")
        self.stdout.flush()

    def note(self, text: str) -> None:
        self.stderr.write(text + "\n")


def _o(a: Mapping[str, str]) -> dict[str, str]:
    return dict(sorted(a.items()))


# --- commands --------------------------------------------------------------

def _check(args, net: TCPNet, out: _Out) -> int:
    v = is_conditionally_acyclic(net)
    out.record(
        "verdict",
        f"{v.status} ({v.reason})",
        status=str(v.status),
        reason=v.reason,
        witness=_o(v.witness) if v.witness is not None else None,
        cycle=list(v.cycle),
    )
    for cert in v.certificates:
        verdict = "acyclic" if cert.acyclic else "directed"
        out.record(
            "certificate",
            f"  {cert.cycle}: {verdict} by {cert.rule}",
            cycle=str(cert.cycle),
            acyclic=cert.acyclic,
            rule=cert.rule,
            witness=_o(cert.witness) if cert.witness is not None else None,
        )
    if not v.acyclic:
        if v.witness is not None:
            out.record("witness", f"  selectors {v.witness} close the cycle {' -> '.join(v.cycle)}")
        else:
            out.record("witness", f"  dependency graph cycle {' -> '.join(v.cycle)}")
    return Exit.OK if v.acyclic else Exit.DIRECTED


def _optimal(args, net: TCPNet, out: _Out) -> int:
    o = complete_outcome(net, _given(args.given, net))
    out.record("outcome", str(o), outcome=_o(o))
    return Exit.OK


def _search(args, net: TCPNet, out: _Out) -> int:
    cs = parse_constraints(_read(args.constraints), net)
    if args.max is not None and args.max < 1:
        raise UsageError("--max needs K >= 1")
    if args.budget is not None and args.budget < 1:
        raise UsageError("--budget needs N >= 1")
    mode = "first" if args.first else "max" if args.max is not None else "all"
    config = SearchConfig(mode, args.max, subsumption_pruning=args.prune, dominance_budget=args.budget)
    finished = None
    for ev in search(net, cs, _given(args.given, net), config):
        if isinstance(ev, SolutionEmitted):
            out.record("solution", str(ev.outcome), outcome=_o(ev.outcome))
        elif isinstance(ev, BranchPruned):
            out.record("pruned", None, variable=ev.variable, value=ev.value, reason=ev.reason, context=_o(ev.context))
        elif isinstance(ev, ComponentSplit):
            out.record("split", None, components=ev.count, context=_o(ev.context))
        elif isinstance(ev, DominanceUndecided):
            out.record("undecided", None, candidate=_o(ev.candidate), incumbent=_o(ev.incumbent))
            out.note(f"warning: budget ran out comparing {ev.candidate} with {ev.incumbent}; kept it")
        elif isinstance(ev, SearchFinished):
            finished = ev
    stats = finished.stats
    out.record(
        "finished",
        None,
        solutions=len(finished.solutions),
        dominance_queries=stats.dominance_queries,
        undecided=stats.undecided,
        nodes=stats.nodes,
    )
    if not finished.solutions:
        out.note("infeasible: no outcome satisfies the constraints")
        return Exit.INFEASIBLE
    if args.verify:
        return _verify(net, cs, _given(args.given, net), config, finished, out)
    return Exit.OK


def _verify(net, cs: ConstraintSet, given: Assignment, config: SearchConfig, finished, out: _Out) -> int:
    pinned = tuple(Constraint((x,), frozenset({(v,)})) for x, v in sorted(given.items()))
    expected = DominanceOracle(net).pareto(ConstraintSet(cs.constraints + pinned))
    got = set(finished.solutions)
    # First/max runs return a subset of the undominated outcomes.
    ok = got == set(expected) if config.mode == "all" else got <= set(expected)
    out.record("verify", None, ok=ok, expected=[_o(o) for o in expected])
    if ok:
        out.note(f"verified against brute force ({len(expected)} undominated)")
        return Exit.OK
    out.note("verification failed: brute force gives " + "; ".join(str(o) for o in expected))
    return Exit.VERIFY_MISMATCH


def _dominates(args, net: TCPNet, out: _Out) -> int:
    better = _parse_outcome(args.better, net)
    worse = _parse_outcome(args.worse, net)
    net.check_assignment(better, total=True)
    net.check_assignment(worse, total=True)
    if better == worse:
        out.record("dominance", "not implied (the outcomes are equal)", implied=False, steps=0)
        return Exit.NOT_IMPLIED
    seq = dominates(net, better, worse)
    if seq is None:
        out.record("dominance", "not implied", implied=False, steps=0)
        return Exit.NOT_IMPLIED
    out.record("dominance", f"implied in {len(seq)} step(s)", implied=True, steps=len(seq))
    for k, flip in enumerate(seq.steps, 1):
        out.record(
            "flip",
            f"  {k}. {flip}",
            kind=flip.kind.value,
            source=_o(flip.source),
            target=_o(flip.target),
            changed=list(flip.changed),
        )
    return Exit.OK


def _oracle(args, net: TCPNet, out: _Out) -> int:
    if args.pareto is not None:
        cs = parse_constraints(_read(args.pareto), net)
        for o in DominanceOracle(net).pareto(cs):
            out.record("outcome", str(o), outcome=_o(o))
    elif args.acyclic:
        acyclic = flip_graph_acyclic(net)
        out.record("acyclic", "flip graph acyclic" if acyclic else "flip graph cyclic", acyclic=acyclic)
    else:
        for a, b in DominanceOracle(net).closure():
            out.record("pair", f"{a} > {b}", better=_o(a), worse=_o(b))
    return Exit.OK


COMMANDS = {
    "check": _check,
    "optimal": _optimal,
    "search": _search,
    "dominates": _dominates,
    "oracle": _oracle,
}


def run(argv: Sequence[str] | None = None, stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = _Out(args.porcelain, stdout, stderr)
    try:
        net = parse_net(_read(args.net))
        return COMMANDS[args.command](args, net, out)
    except UsageError as exc:
        out.note(f"tcpnet: {exc}")
        return Exit.USAGE
    except CodecError as exc:
        out.note(f"tcpnet: {exc}")
        return Exit.INVALID_INPUT
    except (KeyError, ValueError) as exc:
        if isinstance(exc, NotConditionallyAcyclic):
            out.note(f"tcpnet: {exc}")
            return Exit.DIRECTED
        out.note(f"tcpnet: {exc.args[0] if exc.args else exc}")
        return Exit.INVALID_INPUT
    except OutcomeSpaceTooLarge as exc:
        out.note(f"tcpnet: {exc}")
        return Exit.CAP_EXCEEDED


def main() -> None:
    sys.exit(run())
