"""Reduction of tree-quantified CQs to atomic queries.

A tqCQ ``q0`` over answer variables ``x1..xn`` is turned into the AQ ``N(x0)``
over an extended TBox whose names carry the answer variable they talk about
as a superscript (``A__at__x``).  Rewritings of the AQ translate back into
rewritings of ``q0``.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .errors import ReductionError, UnsupportedQueryError
from .model import (
    GOAL,
    Atom,
    Concept,
    ConceptAtom,
    ConceptInclusion,
    ConjQuery,
    Exists,
    Name,
    Omq,
    RoleAtom,
    TBox,
    Top,
    UnionQuery,
    atom_key,
    conj,
    conjuncts,
    exists_name,
    fresh_vars,
    is_reserved,
    is_tree_name,
    split_superscript,
    subconcepts,
    superscript,
    tree_name,
)
from .structure import QueryClass, classify, hangs_as_forest, hanging_trees, is_tree_shaped

logger = logging.getLogger(__name__)

ROOT = "x0"


@dataclass
class NameTables:
    """Fresh names introduced by a reduction, mapped back to what they stand for."""

    concepts: Dict[str, Tuple[str, str]] = field(default_factory=dict)
    roles: Dict[str, Tuple[str, str]] = field(default_factory=dict)
    exists: Dict[str, Tuple[Exists, str]] = field(default_factory=dict)
    trees: Dict[str, Concept] = field(default_factory=dict)

    def concept(self, name: str, var: str) -> str:
        fresh = superscript(name, var)
        self.concepts[fresh] = (name, var)
        return fresh

    def role(self, name: str, var: str) -> str:
        fresh = superscript(name, var)
        self.roles[fresh] = (name, var)
        return fresh

    def existential(self, c: Exists, var: str) -> str:
        fresh = exists_name(c, var)
        self.exists[fresh] = (c, var)
        return fresh


def superscript_left(c: Concept, var: str, names: NameTables) -> Concept:
    """``C^x_L``: names to ``A^x``, top-level ``∃r.E`` to ``A^x_{∃r.E}``."""
    parts: List[Concept] = []
    for part in conjuncts(c):
        if isinstance(part, Name):
            parts.append(Name(names.concept(part.name, var)))
        elif isinstance(part, Exists):
            parts.append(Name(names.existential(part, var)))
    return conj(*parts)


def superscript_right(c: Concept, var: str, names: NameTables) -> Concept:
    """``C^x_R``: names to ``A^x``, top-level ``∃r.E`` to ``∃r^x.E``."""
    parts: List[Concept] = []
    for part in conjuncts(c):
        if isinstance(part, Name):
            parts.append(Name(names.concept(part.name, var)))
        elif isinstance(part, Exists):
            parts.append(Exists(names.role(part.role, var), part.filler))
    return conj(*parts)


def lhs_subconcepts(t: TBox) -> FrozenSet[Concept]:
    """``sub_L(T)``: subconcepts of left-hand sides."""
    out: Set[Concept] = set()
    for ci in t:
        out |= subconcepts(ci.lhs)
    return frozenset(out)


def copy_inclusions(t: TBox, var: str, names: NameTables) -> List[ConceptInclusion]:
    """``C^x_L ⊑ D^x_R`` for every ``C ⊑ D`` in *t*."""
    out = []
    for ci in t:
        rhs = superscript_right(ci.rhs, var, names)
        if not isinstance(rhs, Top):
            out.append(ConceptInclusion(superscript_left(ci.lhs, var, names), rhs))
    return out


def existential_inclusions(
    t: TBox, variables: Iterable[str], role_atoms: Iterable[RoleAtom], names: NameTables
) -> List[ConceptInclusion]:
    """Define ``A^x_{∃r.E}``: via an anonymous ``r^x``-successor, or via a named one ``r(x, y)``."""
    existentials = sorted((c for c in lhs_subconcepts(t) if isinstance(c, Exists)), key=str)
    out: List[ConceptInclusion] = []
    for x in variables:
        for ex in existentials:
            out.append(
                ConceptInclusion(Exists(names.role(ex.role, x), ex.filler), Name(names.existential(ex, x)))
            )
    for atom in sorted(role_atoms, key=atom_key):
        for ex in existentials:
            if ex.role == atom.role:
                out.append(
                    ConceptInclusion(
                        superscript_left(ex.filler, atom.target, names),
                        Name(names.existential(ex, atom.source)),
                    )
                )
    return out


def superscripted_signature(omq: Omq, names: NameTables) -> Tuple[Set[str], Set[str]]:
    """Superscripted concept and role names whose base symbol Σ admits."""
    concepts = {n for n, (base, _) in names.concepts.items() if omq.sigma.admits_concept(base)}
    roles = {n for n, (base, _) in names.roles.items() if omq.sigma.admits_role(base)}
    return concepts, roles


@dataclass
class TqReduction:
    source: Omq
    target: Omq
    names: NameTables
    original: Omq
    root: str = ROOT

    @property
    def added(self) -> FrozenSet[ConceptInclusion]:
        return self.target.tbox.inclusions - self.source.tbox.inclusions


def eliminate_quantified_trees(omq: Omq) -> Omq:
    """Replace the quantified trees at each answer variable by one fresh name ``A_C``."""
    q = omq.query
    cls = classify(q)
    if cls not in (QueryClass.AQ, QueryClass.TREE_CQ, QueryClass.TQ_CQ):
        raise UnsupportedQueryError(f"tree elimination needs a tqCQ, got {cls}")
    answer = frozenset(q.answer_vars)
    atoms: Set[Atom] = {a for a in q.atoms if set(a.variables) <= answer}
    added: List[ConceptInclusion] = []
    for x, c in sorted(hanging_trees(q, answer).items()):
        a_c = tree_name(c)
        atoms.add(ConceptAtom(a_c, x))
        added.append(ConceptInclusion(c, Name(a_c)))
    return Omq(omq.tbox.union(added), omq.sigma, ConjQuery(q.answer_vars, frozenset(atoms)))


def build_aq_reduction(omq: Omq, original: Optional[Omq] = None) -> TqReduction:
    """Build ``Q' = (T', Σ', N(x0))`` for a query over answer variables only."""
    q0 = omq.query
    if q0.quantified_vars:
        raise ReductionError("query still has quantified variables; eliminate its trees first")
    t = omq.tbox
    names = NameTables()
    for ci in t:
        if isinstance(ci.rhs, Name) and is_tree_name(ci.rhs.name):
            names.trees[ci.rhs.name] = ci.lhs
    added: List[ConceptInclusion] = []
    for x in q0.answer_vars:
        added += copy_inclusions(t, x, names)
    added += existential_inclusions(t, q0.answer_vars, q0.role_atoms, names)
    goal = conj(*(Name(names.concept(a.name, a.var)) for a in q0.concept_atoms))
    added.append(ConceptInclusion(goal, Name(GOAL)))
    # Σ' also covers query-only symbols, so every A^x of q0 can occur in a rewriting.
    for x in q0.answer_vars:
        for n in sorted(omq.concept_symbols()):
            names.concept(n, x)
        for r in sorted(omq.role_symbols()):
            names.role(r, x)
    concepts, roles = superscripted_signature(omq, names)
    target = Omq(t.union(added), omq.sigma.extend(concepts, roles), ConjQuery((ROOT,), {ConceptAtom(GOAL, ROOT)}))
    logger.debug("tq reduction: %d inclusions added to %d", len(target.tbox) - len(t), len(t))
    return TqReduction(omq, target, names, original or omq)


def reduce_tq(omq: Omq) -> TqReduction:
    """Tree elimination followed by the AQ reduction."""
    return build_aq_reduction(eliminate_quantified_trees(omq), original=omq)


def conformant_cq(q: ConjQuery, root: str = ROOT) -> bool:
    """Superscripted names only at *root*, plain names only below it."""
    if q.answer_vars != (root,) or not is_tree_shaped(q, root):
        return False
    for a in q.concept_atoms:
        sup = split_superscript(a.name) is not None
        if sup != (a.var == root):
            return False
    for a in q.role_atoms:
        sup = split_superscript(a.role) is not None
        if sup != (a.source == root):
            return False
    return True


def is_conformant(u: UnionQuery, red: TqReduction) -> bool:
    return all(conformant_cq(d, red.root) for d in u)


def lower(
    qp: ConjQuery,
    root: str,
    answer_vars: Tuple[str, ...],
    allowed: FrozenSet[str],
    base_atoms: Iterable[Atom],
) -> ConjQuery:
    """Undo superscripts: ``A^x(x0)`` to ``A(x)``, ``r^x(x0, y)`` to ``r(x, y)``."""
    if not conformant_cq(qp, root):
        raise ReductionError(f"not a conformant tree CQ: {qp}")
    fresh = fresh_vars(set(qp.variables) | set(allowed) | set(answer_vars))
    renaming = {v: next(fresh) for v in qp.quantified_vars}
    atoms: Set[Atom] = set(base_atoms)
    for a in qp.atoms:
        if isinstance(a, ConceptAtom) and a.var == root:
            base, x = _unsuperscript(a.name, allowed)
            atoms.add(ConceptAtom(base, x))
        elif isinstance(a, RoleAtom) and a.source == root:
            base, x = _unsuperscript(a.role, allowed)
            atoms.add(RoleAtom(base, x, renaming[a.target]))
        elif isinstance(a, ConceptAtom):
            atoms.add(ConceptAtom(a.name, renaming[a.var]))
        elif isinstance(a, RoleAtom):
            atoms.add(RoleAtom(a.role, renaming[a.source], renaming[a.target]))
    return ConjQuery(answer_vars, frozenset(atoms))


def _unsuperscript(name: str, allowed: FrozenSet[str]) -> Tuple[str, str]:
    split = split_superscript(name)
    if split is None:
        raise ReductionError(f"{name} carries no superscript")
    base, x = split
    if is_reserved(base) or x not in allowed:
        raise ReductionError(f"{name} does not translate back to the source vocabulary")
    return base, x


def lift(q: ConjQuery, core: FrozenSet[str], root: str) -> ConjQuery:
    """Superscript a derivative: ``A(x)`` to ``A^x(x0)``, ``r(x, y)`` to ``r^x(x0, y)``."""
    used = set(q.variables) | {root}
    fresh = fresh_vars(used)
    renaming = {v: (next(fresh) if v == root else v) for v in q.quantified_vars if v not in core}
    names = NameTables()
    atoms: Set[Atom] = set()
    for a in q.atoms:
        if isinstance(a, ConceptAtom):
            if a.var in core:
                atoms.add(ConceptAtom(names.concept(a.name, a.var), root))
            else:
                atoms.add(ConceptAtom(a.name, renaming[a.var]))
        elif isinstance(a, RoleAtom):
            if a.source in core and a.target in core:
                continue
            if a.source in core:
                atoms.add(RoleAtom(names.role(a.role, a.source), root, renaming[a.target]))
            else:
                atoms.add(RoleAtom(a.role, renaming[a.source], renaming[a.target]))
    return ConjQuery((root,), frozenset(atoms))


def _core_atoms(q: ConjQuery, core: FrozenSet[str]) -> FrozenSet[Atom]:
    return frozenset(
        a for a in q.atoms if not isinstance(a, ConceptAtom) and set(a.variables) <= core
    )


def is_derivative(q: ConjQuery, base: ConjQuery, core: FrozenSet[str]) -> bool:
    """*q* keeps the core part of *base* and hangs trees off the core variables."""
    return (
        q.answer_vars == base.answer_vars
        and core <= set(q.variables)
        and _core_atoms(q, core) == _core_atoms(base, core)
        and hangs_as_forest(q, core)
    )


def to_source_ucq(u: UnionQuery, red: TqReduction) -> UnionQuery:
    """The UCQ for the source OMQ corresponding to a conformant tUCQ."""
    q0 = red.source.query
    answer = frozenset(q0.answer_vars)
    base = q0.role_atoms
    disjuncts = [lower(d, red.root, q0.answer_vars, answer, base) for d in u]
    for d in disjuncts:
        leftover = [a.name for a in d.concept_atoms if a.name in red.names.trees]
        if leftover:
            raise ReductionError(f"eliminated tree names survived into the rewriting: {leftover}")
    return UnionQuery.of(q0.answer_vars, disjuncts)


def to_target_ucq(u: UnionQuery, red: TqReduction) -> UnionQuery:
    """The tUCQ for the target OMQ corresponding to derivatives of the source query."""
    q0 = red.source.query
    answer = frozenset(q0.answer_vars)
    out = []
    for d in u:
        if not is_derivative(d, q0, answer) or d.eq_atoms:
            raise ReductionError(f"not a derivative of {q0}: {d}")
        out.append(lift(d, answer, red.root))
    return UnionQuery.of((red.root,), out)

