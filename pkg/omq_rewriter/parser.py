"""Parse and serialize the native text formats.

Grammar summary::

    tbox      := (concept "SubClassOf" concept)*
    concept   := "Top" | NAME | "and" "(" concept ("," concept)* ")"
               | "some" "(" NAME "," concept ")"
    cq        := NAME "(" vars? ")" (":-" atom ("," atom)*)? "."
    atom      := NAME "(" VAR ")" | NAME "(" VAR "," VAR ")" | VAR "=" VAR
    ucq       := cq ("|" cq)*
    abox      := (NAME "(" IND ("," IND)? ")" "."?)*
    signature := ("*" | NAME)*

``#`` starts a comment that runs to the end of the line.
"""

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

from .errors import ParseError, SourceSpan
from .model import (
    FULL,
    Abox,
    Atom,
    Concept,
    ConceptAtom,
    ConceptInclusion,
    ConjQuery,
    EqAtom,
    Exists,
    Name,
    RoleAtom,
    Signature,
    TBox,
    TOP,
    UnionQuery,
    atom_key,
    canonical_order,
    conj,
    conjuncts,
    is_reserved,
)

__all__ = [
    "SourceSpan",
    "format_concept",
    "parse_abox",
    "parse_concept",
    "parse_cq",
    "parse_signature",
    "parse_tbox",
    "parse_ucq",
    "serialize_abox",
    "serialize_cq",
    "serialize_tbox",
    "serialize_ucq",
]

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)|(?P<ident>[A-Za-z0-9_]+)|(?P<op>:-|[(),.=|*])|(?P<bad>.)"
)
_SYMBOL_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident", "op" or "eof"
    text: str
    line: int
    column: int


def _tokenize(text: str, filename: str) -> List[_Token]:
    tokens: List[_Token] = []
    lines = text.splitlines() or [""]
    for lineno, raw in enumerate(lines, start=1):
        code = raw.split("#", 1)[0]
        for m in _TOKEN_RE.finditer(code):
            kind = m.lastgroup
            if kind == "ws":
                continue
            if kind == "bad":
                raise ParseError(
                    f"unexpected character {m.group()!r}",
                    SourceSpan(filename, lineno, m.start() + 1),
                )
            tokens.append(_Token(kind, m.group(), lineno, m.start() + 1))
    last = lines[-1].split("#", 1)[0]
    tokens.append(_Token("eof", "", len(lines), len(last) + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, filename: str) -> None:
        self.filename = filename
        self.tokens = _tokenize(text, filename)
        self.pos = 0

    def peek(self, offset: int = 0) -> _Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind != "eof" and tok.text == text

    def at_eof(self) -> bool:
        return self.peek().kind == "eof"

    def error(self, message: str, tok: Optional[_Token] = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, SourceSpan(self.filename, tok.line, tok.column))

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok.text != text or tok.kind == "eof":
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise self.error(f"expected {text!r}, found {found}", tok)
        return tok

    def ident(self, what: str) -> _Token:
        tok = self.next()
        if tok.kind != "ident":
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise self.error(f"expected {what}, found {found}", tok)
        return tok

    def symbol(self, what: str) -> str:
        tok = self.ident(what)
        if not _SYMBOL_RE.match(tok.text):
            raise self.error(f"invalid {what} {tok.text!r}", tok)
        if is_reserved(tok.text):
            raise self.error(f"{what} {tok.text!r} uses the reserved marker '__'", tok)
        return tok.text

    def concept(self) -> Concept:
        tok = self.peek()
        if tok.kind == "ident" and tok.text == "Top":
            self.next()
            return TOP
        if tok.kind == "ident" and tok.text in ("and", "some") and self.peek(1).text == "(":
            self.next()
            self.expect("(")
            if tok.text == "some":
                role = self.symbol("role name")
                self.expect(",")
                filler = self.concept()
                self.expect(")")
                return Exists(role, filler)
            parts = [self.concept()]
            while self.at(","):
                self.next()
                parts.append(self.concept())
            self.expect(")")
            return conj(*parts)
        return Name(self.symbol("concept name"))

    def rule(self) -> ConjQuery:
        self.symbol("query name")
        self.expect("(")
        head: List[str] = []
        if not self.at(")"):
            head.append(self.variable(head))
            while self.at(","):
                self.next()
                head.append(self.variable(head))
        self.expect(")")
        atoms: Set[Atom] = set()
        if self.at(":-"):
            self.next()
            atoms.add(self.atom(head))
            while self.at(","):
                self.next()
                atoms.add(self.atom(head))
        self.expect(".")
        return ConjQuery(tuple(head), frozenset(atoms))

    def variable(self, head: List[str]) -> str:
        tok = self.ident("variable")
        if tok.text in head:
            raise self.error(f"duplicate answer variable {tok.text!r}", tok)
        if is_reserved(tok.text):
            raise self.error(f"variable {tok.text!r} uses the reserved marker '__'", tok)
        return tok.text

    def atom(self, head: List[str]) -> Atom:
        first = self.ident("atom")
        if self.at("="):
            self.next()
            second = self.ident("variable")
            for tok in (first, second):
                if tok.text not in head:
                    raise self.error(
                        f"equality on quantified variable {tok.text!r}; only answer variables may be equated",
                        tok,
                    )
            return EqAtom(first.text, second.text)
        if not _SYMBOL_RE.match(first.text) or is_reserved(first.text):
            raise self.error(f"invalid predicate name {first.text!r}", first)
        self.expect("(")
        args = [self.term()]
        if self.at(","):
            self.next()
            args.append(self.term())
        self.expect(")")
        if len(args) == 1:
            return ConceptAtom(first.text, args[0])
        return RoleAtom(first.text, args[0], args[1])

    def term(self) -> str:
        tok = self.ident("variable")
        if is_reserved(tok.text):
            raise self.error(f"variable {tok.text!r} uses the reserved marker '__'", tok)
        return tok.text


def parse_concept(text: str, filename: str = "<concept>") -> Concept:
    p = _Parser(text, filename)
    c = p.concept()
    if not p.at_eof():
        raise p.error(f"unexpected {p.peek().text!r} after concept")
    return c


def parse_tbox(text: str, filename: str = "<tbox>") -> TBox:
    """Parse ``<concept> SubClassOf <concept>`` inclusions."""
    p = _Parser(text, filename)
    cis: List[ConceptInclusion] = []
    while not p.at_eof():
        lhs = p.concept()
        tok = p.next()
        if tok.text != "SubClassOf":
            raise p.error("expected 'SubClassOf'", tok)
        cis.append(ConceptInclusion(lhs, p.concept()))
    return TBox(frozenset(cis))


def parse_cq(text: str, filename: str = "<query>") -> ConjQuery:
    p = _Parser(text, filename)
    q = p.rule()
    if not p.at_eof():
        raise p.error("expected end of input after the query")
    return q


def parse_ucq(text: str, filename: str = "<ucq>") -> UnionQuery:
    """Rules separated by ``|``; all must share the same answer variables.

    Empty input yields an empty union without answer variables.
    """
    p = _Parser(text, filename)
    if p.at_eof():
        return UnionQuery(())
    rules = [p.rule()]
    while p.at("|"):
        p.next()
        start = p.peek()
        rule = p.rule()
        if rule.answer_vars != rules[0].answer_vars:
            raise p.error(
                f"answer variables {rule.answer_vars} differ from {rules[0].answer_vars}", start
            )
        rules.append(rule)
    if not p.at_eof():
        raise p.error("expected '|' or end of input")
    return UnionQuery(rules[0].answer_vars, tuple(rules))


def parse_abox(text: str, filename: str = "<abox>") -> Abox:
    p = _Parser(text, filename)
    concepts: Set[Tuple[str, str]] = set()
    roles: Set[Tuple[str, str, str]] = set()
    while not p.at_eof():
        name = p.symbol("predicate name")
        p.expect("(")
        first = p.ident("individual").text
        if p.at(","):
            p.next()
            second = p.ident("individual").text
            roles.add((name, first, second))
        else:
            concepts.add((name, first))
        p.expect(")")
        if p.at("."):
            p.next()
    return Abox(frozenset(concepts), frozenset(roles))


def parse_signature(text: str, filename: str = "<signature>") -> Signature:
    """Symbol names, one per line; ``*`` admits every symbol."""
    p = _Parser(text, filename)
    names: Set[str] = set()
    full = False
    while not p.at_eof():
        if p.at("*"):
            p.next()
            full = True
            continue
        names.add(p.symbol("symbol name"))
    if full:
        return FULL
    return Signature.of_symbols(names)


def format_concept(c: Concept) -> str:
    """Native syntax with spaces after commas."""
    if isinstance(c, Exists):
        return f"some({c.role}, {format_concept(c.filler)})"
    parts = conjuncts(c)
    if len(parts) > 1:
        return "and(" + ", ".join(format_concept(x) for x in parts) + ")"
    return str(c)


def serialize_tbox(t: TBox) -> str:
    return "".join(f"{format_concept(ci.lhs)} SubClassOf {format_concept(ci.rhs)}\n" for ci in t)


def serialize_abox(a: Abox) -> str:
    return "".join(f"{line}\n" for line in str(a).splitlines())


def readable_names(q: ConjQuery) -> Dict[str, str]:
    """Map quantified variables to ``y1, y2, ...`` in canonical order."""
    taken = set(q.answer_vars)
    mapping: Dict[str, str] = {}
    i = 0
    for v in canonical_order(q):
        i += 1
        while f"y{i}" in taken:
            i += 1
        mapping[v] = f"y{i}"
    return mapping


def serialize_cq(q: ConjQuery, head: str = "q") -> str:
    renamed = q.rename(readable_names(q))
    body = ", ".join(_format_atom(a) for a in sorted(renamed.atoms, key=atom_key))
    args = ", ".join(q.answer_vars)
    return f"{head}({args}) :- {body}." if body else f"{head}({args})."


def _format_atom(a: Atom) -> str:
    if isinstance(a, RoleAtom):
        return f"{a.role}({a.source}, {a.target})"
    return str(a)


def serialize_ucq(u: UnionQuery, head: str = "q") -> str:
    """One rule per disjunct in canonical order, continuation rules prefixed ``| ``."""
    ordered = sorted(u.disjuncts, key=lambda d: d.code)
    lines = [serialize_cq(d, head) for d in ordered]
    return "".join(("| " if i else "") + line + "\n" for i, line in enumerate(lines))
