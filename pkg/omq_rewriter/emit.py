"""Rendering of UCQ rewritings as non-recursive Datalog and as SQL.

The relational schema has one unary table per concept name (column
``ind``) and one binary table per role name (columns ``src``, ``dst``).
Answer variables that occur in no atom range over the individuals view,
the union of every column of the schema.
"""

import logging
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional

from sqlalchemy import Column, MetaData, String, Table, and_, false, null, select, union
from sqlalchemy.engine import Connection
from sqlalchemy.schema import CreateTable
from sqlalchemy.sql import ColumnElement, Select

from .errors import OmqError
from .model import (
    Abox,
    ConceptAtom,
    ConjQuery,
    EqAtom,
    Omq,
    RoleAtom,
    UnionQuery,
    atom_key,
    is_reserved,
    rename_atom,
)
from .parser import readable_names

logger = logging.getLogger(__name__)

DOMAIN = "ind__"

_UNSAFE_RE = re.compile(r"[^A-Za-z0-9_]")


def sanitize(name: str) -> str:
    """Deterministic SQL-safe table name for a symbol."""
    clean = _UNSAFE_RE.sub("_", name)
    if not clean or clean[0].isdigit():
        clean = "t_" + clean
    return clean


@dataclass
class RelSchema:
    metadata: MetaData
    concept_tables: Dict[str, Table]
    role_tables: Dict[str, Table]

    def concept(self, name: str) -> Table:
        try:
            return self.concept_tables[name]
        except KeyError:
            raise OmqError(f"no table for concept name {name}") from None

    def role(self, name: str) -> Table:
        try:
            return self.role_tables[name]
        except KeyError:
            raise OmqError(f"no table for role name {name}") from None

    @property
    def tables(self) -> List[Table]:
        return sorted(self.metadata.tables.values(), key=lambda t: t.name)


def build_schema(concepts: Iterable[str], roles: Iterable[str]) -> RelSchema:
    metadata = MetaData()
    concept_tables: Dict[str, Table] = {}
    role_tables: Dict[str, Table] = {}
    for name in sorted(set(concepts)):
        concept_tables[name] = Table(sanitize(name), metadata, Column("ind", String, nullable=False))
    for name in sorted(set(roles)):
        table_name = sanitize(name)
        if table_name in metadata.tables:
            table_name += "_role"
        role_tables[name] = Table(
            table_name,
            metadata,
            Column("src", String, nullable=False),
            Column("dst", String, nullable=False),
        )
    return RelSchema(metadata, concept_tables, role_tables)


def schema_for(u: UnionQuery) -> RelSchema:
    return build_schema(u.concept_names(), u.role_names())


def schema_for_omq(omq: Omq, u: Optional[UnionQuery] = None) -> RelSchema:
    """Tables for every symbol a Σ-ABox of *omq* may use, plus those of *u*.

    Under the full signature that is the vocabulary of the TBox and query.
    Names of a restricted Σ that neither mentions are typed by the signature
    itself; a bare symbol list admits them as both kinds, and they get a
    concept table.
    """
    sigma = omq.sigma
    known = omq.concept_symbols() | omq.role_symbols()
    finite = sigma.finitize(omq.concept_symbols(), omq.role_symbols())
    concepts = set(finite.concept_names)
    roles = set(finite.role_names)
    for name in (sigma.concept_names | sigma.role_names) - known:
        if is_reserved(name):
            continue
        if name in sigma.concept_names:
            concepts.add(name)
        else:
            roles.add(name)
    if u is not None:
        concepts |= u.concept_names()
        roles |= u.role_names()
    return build_schema(concepts, roles)


def emit_ddl(schema: RelSchema) -> str:
    return "".join(f"{str(CreateTable(t).compile()).strip()};\n" for t in schema.tables)


def _individuals(schema: RelSchema):
    parts = [select(c.label("ind")) for t in schema.tables for c in t.columns]
    if not parts:
        # no symbols, no individuals
        return select(null().label("ind")).where(false())
    return parts[0] if len(parts) == 1 else union(*parts)


def _disjunct_select(d: ConjQuery, schema: RelSchema) -> Select:
    refs: Dict[str, List[ColumnElement]] = {}
    froms = []
    for i, a in enumerate(d.sorted_atoms):
        if isinstance(a, ConceptAtom):
            t = schema.concept(a.name).alias(f"t{i}")
            refs.setdefault(a.var, []).append(t.c.ind)
            froms.append(t)
        elif isinstance(a, RoleAtom):
            t = schema.role(a.role).alias(f"t{i}")
            refs.setdefault(a.source, []).append(t.c.src)
            refs.setdefault(a.target, []).append(t.c.dst)
            froms.append(t)
    for k, v in enumerate(d.answer_vars):
        if v not in refs:
            view = _individuals(schema).subquery(f"d{k}")
            refs[v] = [view.c.ind]
            froms.append(view)
    conds = [cols[0] == other for cols in refs.values() for other in cols[1:]]
    conds += [refs[e.left][0] == refs[e.right][0] for e in d.eq_atoms]
    stmt = select(*(refs[v][0].label(v) for v in d.answer_vars)).select_from(*froms)
    if conds:
        stmt = stmt.where(and_(*conds))
    return stmt


def emit_sql(u: UnionQuery, schema: Optional[RelSchema] = None) -> str:
    """One SELECT block per disjunct, joined by UNION."""
    schema = schema or schema_for(u)
    if not u.disjuncts:
        stmt = select(*(null().label(v) for v in u.answer_vars)).where(false())
    else:
        blocks = [_disjunct_select(d, schema) for d in u]
        stmt = blocks[0] if len(blocks) == 1 else union(*blocks)
    return str(stmt.compile(compile_kwargs={"literal_binds": True}))


def insert_abox(conn: Connection, schema: RelSchema, abox: Abox) -> None:
    """Load *abox* into the schema's tables; assertions over unknown symbols are skipped."""
    for name, table in schema.concept_tables.items():
        rows = [{"ind": a} for c, a in sorted(abox.concept_assertions) if c == name]
        if rows:
            conn.execute(table.insert(), rows)
    for name, table in schema.role_tables.items():
        rows = [{"src": a, "dst": b} for r, a, b in sorted(abox.role_assertions) if r == name]
        if rows:
            conn.execute(table.insert(), rows)


def _datalog_rule(d: ConjQuery, head: str) -> str:
    classes = d.eq_classes()
    mapping = dict(readable_names(d))
    mapping.update((v, classes.representative(v)) for v in d.answer_vars)
    atoms = sorted(
        (rename_atom(a, mapping) for a in d.atoms if not isinstance(a, EqAtom)), key=atom_key
    )
    body = []
    for a in atoms:
        if isinstance(a, ConceptAtom):
            body.append(f"{a.name}({a.var})")
        elif isinstance(a, RoleAtom):
            body.append(f"{a.role}({a.source},{a.target})")
    args = [mapping[v] for v in d.answer_vars]
    covered = {v for a in atoms for v in a.variables}
    for v in dict.fromkeys(args):
        if v not in covered:
            body.append(f"{DOMAIN}({v})")
    return f"{head}({','.join(args)}) :- {', '.join(body)}."


def _domain_rules(concepts: Iterable[str], roles: Iterable[str]) -> List[str]:
    rules = [f"{DOMAIN}(x) :- {c}(x)." for c in sorted(concepts)]
    for r in sorted(roles):
        rules.append(f"{DOMAIN}(x) :- {r}(x,y).")
        rules.append(f"{DOMAIN}(y) :- {r}(x,y).")
    return rules


def emit_datalog(u: UnionQuery, head: str = "Q", schema: Optional[RelSchema] = None) -> str:
    """One rule per disjunct; equalities become repeated head variables."""
    if not u.disjuncts:
        return "% empty rewriting: no answers\n"
    rules = [_datalog_rule(d, head) for d in sorted(u.disjuncts, key=lambda d: d.code)]
    if any(f"{DOMAIN}(" in r for r in rules):
        if schema is not None:
            rules += _domain_rules(schema.concept_tables, schema.role_tables)
        else:
            rules += _domain_rules(u.concept_names(), u.role_names())
    return "".join(r + "\n" for r in rules)
