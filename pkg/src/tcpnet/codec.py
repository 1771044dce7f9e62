"""Line-oriented text format for TCP-nets and constraint sets.

Net files::

    tcpnet 1
    var J : black white
    cp J -> S
    i J > P
    ci S ~ C | T A
    cpt J : black > white
    cpt S | J=black P=white : white > red
    cit S ~ C | A=klm T=m : S > C

Constraint files::

    allow (J,P): (black,white) (white,black)

``#`` starts a comment.  The ``tcpnet 1`` header is optional on input and
always written on output.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .model import (
    CITable,
    Constraint,
    ConstraintSet,
    CPTable,
    TCPNet,
    Variable,
    Violation,
    validate,
    validate_constraints,
)

__all__ = [
    "CodecError",
    "DuplicateDeclarationError",
    "NetSyntaxError",
    "SourceSpan",
    "UndeclaredVariableError",
    "UnknownValueError",
    "ValidationFailedError",
    "parse_constraints",
    "parse_net",
    "serialize_constraints",
    "serialize_net",
]

HEADER = "tcpnet 1"

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_TOKEN = re.compile(r"\s*(?:(->|[>~|:=(),])|([A-Za-z0-9_]+)|(\S))")


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class CodecError(ValueError):
    def __init__(self, message: str, span: SourceSpan | None = None):
        self.message = message
        self.span = span
        super().__init__(f"{span}: {message}" if span else message)


class NetSyntaxError(CodecError):
    pass


class UndeclaredVariableError(CodecError):
    pass


class DuplicateDeclarationError(CodecError):
    pass


class UnknownValueError(CodecError):
    pass


class ArityMismatchError(CodecError):
    pass


class ValidationFailedError(CodecError):
    def __init__(self, report: list[Violation]):
        self.report = report
        super().__init__("invalid net: " + "; ".join(str(v) for v in report))


@dataclass(frozen=True)
class _Tok:
    text: str
    kind: str  # "punct" | "word"
    col: int


def _tokenize(line: str, lineno: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:  # trailing whitespace
            break
        if m.group(3):
            raise NetSyntaxError(f"unexpected character {m.group(3)!r}", SourceSpan(lineno, m.start(3) + 1))
        if m.group(1):
            toks.append(_Tok(m.group(1), "punct", m.start(1) + 1))
        elif m.group(2):
            toks.append(_Tok(m.group(2), "word", m.start(2) + 1))
        pos = m.end()
    return toks


def _lines(text: str):
    for lineno, raw in enumerate(text.replace("\r\n", "\n").replace("\r", "\n").split("\n"), 1):
        line = raw.split("#", 1)[0]
        if line.strip():
            yield lineno, _tokenize(line, lineno)


class _Cursor:
    def __init__(self, toks: list[_Tok], lineno: int):
        self.toks = toks
        self.lineno = lineno
        self.pos = 0

    def span(self) -> SourceSpan:
        if self.pos < len(self.toks):
            return SourceSpan(self.lineno, self.toks[self.pos].col)
        last = self.toks[-1]
        return SourceSpan(self.lineno, last.col + len(last.text))

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    def peek(self, text: str) -> bool:
        return not self.at_end() and self.toks[self.pos].kind == "punct" and self.toks[self.pos].text == text

    def expect(self, text: str) -> _Tok:
        if not self.peek(text):
            got = "end of line" if self.at_end() else repr(self.toks[self.pos].text)
            raise NetSyntaxError(f"expected {text!r}, got {got}", self.span())
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def word(self, what: str = "a name") -> _Tok:
        if self.at_end() or self.toks[self.pos].kind != "word":
            got = "end of line" if self.at_end() else repr(self.toks[self.pos].text)
            raise NetSyntaxError(f"expected {what}, got {got}", self.span())
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def ident(self) -> _Tok:
        tok = self.word("an identifier")
        if not _IDENT.match(tok.text):
            raise NetSyntaxError(f"{tok.text!r} is not a valid identifier", SourceSpan(self.lineno, tok.col))
        return tok

    def done(self) -> None:
        if not self.at_end():
            raise NetSyntaxError(f"unexpected {self.toks[self.pos].text!r}", self.span())


def parse_net(text: str) -> TCPNet:
    """Parse a net file and validate the result.

    Raises a :class:`CodecError` subclass; validation problems surface as
    :class:`ValidationFailedError` carrying the full report.
    """
    statements = list(_lines(text))
    if statements and [t.text for t in statements[0][1]] == HEADER.split():
        statements = statements[1:]

    domains: dict[str, tuple[str, ...]] = {}
    rest = []
    # Variables first, so that references may precede declarations.
    for lineno, toks in statements:
        cur = _Cursor(toks, lineno)
        head = cur.word("a keyword")
        if head.text != "var":
            rest.append((head, cur))
            continue
        name = cur.ident()
        if name.text in domains:
            raise DuplicateDeclarationError(f"variable {name.text} declared twice", SourceSpan(lineno, name.col))
        cur.expect(":")
        values = []
        while not cur.at_end():
            values.append(cur.word("a value").text)
        domains[name.text] = tuple(values)

    def ref(cur: _Cursor) -> str:
        tok = cur.ident()
        if tok.text not in domains:
            raise UndeclaredVariableError(f"undeclared variable {tok.text}", SourceSpan(cur.lineno, tok.col))
        return tok.text

    def dup(what: str, cur: _Cursor, col: int) -> DuplicateDeclarationError:
        return DuplicateDeclarationError(f"duplicate {what}", SourceSpan(cur.lineno, col))

    def value(cur: _Cursor, var: str) -> str:
        tok = cur.word("a value")
        if tok.text not in domains[var]:
            raise UnknownValueError(f"{tok.text} is not a value of {var}", SourceSpan(cur.lineno, tok.col))
        return tok.text

    def condition(cur: _Cursor) -> dict[str, str]:
        cond: dict[str, str] = {}
        while not cur.peek(":"):
            tok_col = cur.span().column
            var = ref(cur)
            cur.expect("=")
            val = value(cur, var)
            if var in cond:
                raise dup(f"condition on {var}", cur, tok_col)
            cond[var] = val
        return cond

    cp, i_arcs, ci = set(), set(), set()
    selectors: dict[tuple[str, str], tuple[str, ...]] = {}
    cpt_rows: dict[str, dict[tuple[str, ...], tuple]] = {}
    cpt_parents: dict[str, tuple[str, ...]] = {}
    cit_rows: dict[tuple[str, str], dict[tuple[str, ...], str]] = {}
    pending_cits = []

    for head, cur in rest:
        kw = head.text
        if kw == "cp":
            a = ref(cur)
            cur.expect("->")
            b = ref(cur)
            cur.done()
            if (a, b) in cp:
                raise dup(f"cp-arc {a} -> {b}", cur, head.col)
            cp.add((a, b))
        elif kw == "i":
            a = ref(cur)
            cur.expect(">")
            b = ref(cur)
            cur.done()
            if (a, b) in i_arcs:
                raise dup(f"i-arc {a} > {b}", cur, head.col)
            i_arcs.add((a, b))
        elif kw == "ci":
            a = ref(cur)
            cur.expect("~")
            b = ref(cur)
            cur.expect("|")
            sel = []
            while not cur.at_end():
                sel.append(ref(cur))
            key = tuple(sorted((a, b)))
            if key in ci:
                raise dup(f"ci-arc {a} ~ {b}", cur, head.col)
            ci.add(key)
            selectors[key] = tuple(sorted(sel))
        elif kw == "cpt":
            x = ref(cur)
            cond = {}
            if cur.peek("|"):
                cur.expect("|")
                cond = condition(cur)
            cur.expect(":")
            order: list = [value(cur, x)]
            while not cur.at_end():
                if cur.peek("="):
                    cur.expect("=")
                    tied = order.pop()
                    tied = tied if isinstance(tied, tuple) else (tied,)
                    order.append(tied + (value(cur, x),))
                else:
                    cur.expect(">")
                    order.append(value(cur, x))
            parents = tuple(sorted(cond))
            if x in cpt_parents and cpt_parents[x] != parents:
                raise NetSyntaxError(f"CPT rows of {x} disagree on the parent set", SourceSpan(cur.lineno, head.col))
            cpt_parents[x] = parents
            rows = cpt_rows.setdefault(x, {})
            key = tuple(cond[p] for p in parents)
            if key in rows:
                raise dup(f"CPT row for {x}", cur, head.col)
            rows[key] = tuple(order)
        elif kw == "cit":
            a = ref(cur)
            cur.expect("~")
            b = ref(cur)
            cur.expect("|")
            cond = condition(cur)
            cur.expect(":")
            win = ref(cur)
            cur.expect(">")
            lose = ref(cur)
            cur.done()
            if {win, lose} != {a, b}:
                raise NetSyntaxError(f"CIT orientation must relate {a} and {b}", SourceSpan(cur.lineno, head.col))
            pending_cits.append((tuple(sorted((a, b))), cond, win, cur, head))
        else:
            raise NetSyntaxError(f"unknown keyword {kw!r}", SourceSpan(cur.lineno, head.col))

    for key, cond, win, cur, head in pending_cits:
        if key not in selectors:
            raise NetSyntaxError(f"cit line for {key[0]} ~ {key[1]} without a ci declaration", SourceSpan(cur.lineno, head.col))
        sel = selectors[key]
        if tuple(sorted(cond)) != sel:
            raise NetSyntaxError(
                f"CIT row must assign exactly the selector {{{' '.join(sel)}}}", SourceSpan(cur.lineno, head.col)
            )
        rows = cit_rows.setdefault(key, {})
        row_key = tuple(cond[z] for z in sel)
        if row_key in rows:
            raise dup(f"CIT row for {key[0]} ~ {key[1]}", cur, head.col)
        rows[row_key] = win

    net = TCPNet(
        variables=tuple(Variable(n, d) for n, d in domains.items()),
        cp_arcs=tuple(cp),
        i_arcs=tuple(i_arcs),
        ci_arcs=tuple(ci),
        cpts={x: CPTable(x, cpt_parents[x], rows) for x, rows in cpt_rows.items()},
        cits={k: CITable(k, selectors[k], cit_rows.get(k, {})) for k in ci},
    )
    report = validate(net)
    if report:
        raise ValidationFailedError(report)
    return net


def _entry(e) -> str:
    return " = ".join(e) if isinstance(e, tuple) else e


def serialize_net(net: TCPNet) -> str:
    """Canonical text form: declarations and rows sorted lexicographically."""
    lines = [HEADER]
    for v in net.variables:
        lines.append(f"var {v.name} : {' '.join(v.domain)}")
    lines += [f"cp {a} -> {b}" for a, b in net.cp_arcs]
    lines += [f"i {a} > {b}" for a, b in net.i_arcs]
    for a, b in net.ci_arcs:
        lines.append(f"ci {a} ~ {b} | {' '.join(net.cits[(a, b)].selector)}")
    for name, cpt in net.cpts.items():
        rows = []
        for key, order in cpt.rows.items():
            cond = " ".join(f"{p}={v}" for p, v in zip(cpt.parents, key))
            body = " > ".join(_entry(e) for e in order)
            rows.append(f"cpt {name} | {cond} : {body}" if cpt.parents else f"cpt {name} : {body}")
        lines += sorted(rows)
    for (a, b), cit in net.cits.items():
        rows = []
        for key, win in cit.rows.items():
            cond = " ".join(f"{z}={v}" for z, v in zip(cit.selector, key))
            lose = b if win == a else a
            rows.append(f"cit {a} ~ {b} | {cond} : {win} > {lose}")
        lines += sorted(rows)
    return "\n".join(lines) + "\n"


def parse_constraints(text: str, net: TCPNet) -> ConstraintSet:
    """Parse ``allow`` lines against ``net``'s variables and domains."""
    doms = net.domains()
    constraints = []
    for lineno, toks in _lines(text):
        cur = _Cursor(toks, lineno)
        head = cur.word("a keyword")
        if head.text != "allow":
            raise NetSyntaxError(f"unknown keyword {head.text!r}", SourceSpan(lineno, head.col))
        cur.expect("(")
        scope: list[str] = []
        while True:
            tok = cur.ident()
            if tok.text not in doms:
                raise UndeclaredVariableError(f"unknown variable {tok.text}", SourceSpan(lineno, tok.col))
            if tok.text in scope:
                raise DuplicateDeclarationError(f"{tok.text} repeated in scope", SourceSpan(lineno, tok.col))
            scope.append(tok.text)
            if cur.peek(")"):
                break
            cur.expect(",")
        cur.expect(")")
        cur.expect(":")
        tuples = set()
        while not cur.at_end():
            start = cur.expect("(")
            values = []
            while True:
                tok = cur.word("a value")
                k = len(values)
                if k < len(scope) and tok.text not in doms[scope[k]]:
                    raise UnknownValueError(f"{tok.text} is not a value of {scope[k]}", SourceSpan(lineno, tok.col))
                values.append(tok.text)
                if cur.peek(")"):
                    break
                cur.expect(",")
            cur.expect(")")
            if len(values) != len(scope):
                raise ArityMismatchError(
                    f"tuple has {len(values)} values, scope has {len(scope)}", SourceSpan(lineno, start.col)
                )
            tuples.add(tuple(values))
        constraints.append(Constraint(tuple(scope), frozenset(tuples)))
    cs = ConstraintSet(tuple(constraints))
    assert not validate_constraints(net, cs)
    return cs


def serialize_constraints(cs: ConstraintSet) -> str:
    lines = []
    for c in cs:
        tuples = " ".join(f"({','.join(t)})" for t in sorted(c.allowed))
        lines.append(f"allow ({','.join(c.scope)}): {tuples}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")
