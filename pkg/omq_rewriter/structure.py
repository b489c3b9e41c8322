"""Structural toolkit on CQs.

Covers:
  - classification into AQ / tree CQ / tqCQ / rCQ,
  - fork rewritings,
  - cores and the trees hanging off them,
  - tree subqueries, the ≺ relation and ≺-minimization,
  - containment under a TBox,
  - splittings and splitting-based entailment.
"""

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import combinations
from typing import (
    Callable,
    Collection,
    Deque,
    Dict,
    FrozenSet,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
)

import networkx as nx

from .errors import ArityError, PreconditionError
from .model import (
    Abox,
    Concept,
    ConceptAtom,
    ConjQuery,
    EqAtom,
    EqClasses,
    Exists,
    Name,
    Omq,
    RoleAtom,
    TBox,
    concept_at,
    conj,
    cq_as_abox,
    rename_atom,
)
from .reasoner import certain_answer, reasoner_for

logger = logging.getLogger(__name__)


class QueryClass(str, Enum):
    AQ = "AQ"
    TREE_CQ = "TreeCQ"
    TQ_CQ = "TqCQ"
    RCQ = "RCQ"
    UNSUPPORTED = "Unsupported"

    def __str__(self) -> str:
        return self.value


def query_graph(q: ConjQuery) -> nx.MultiDiGraph:
    """Directed multigraph of the role atoms; equality atoms are not reflected."""
    g = nx.MultiDiGraph()
    g.add_nodes_from(q.variables)
    for a in q.role_atoms:
        g.add_edge(a.source, a.target, key=a.role)
    return g


def is_rooted(q: ConjQuery) -> bool:
    """Every variable is connected (ignoring direction) to an answer variable."""
    if not q.answer_vars:
        return False
    g = query_graph(q)
    answer = set(q.answer_vars)
    return all(comp & answer for comp in nx.weakly_connected_components(g))


def is_tree_shaped(q: ConjQuery, root: Optional[str] = None) -> bool:
    """G_q is a directed tree (rooted at *root* when given), no parallel roles."""
    if q.eq_atoms or not q.variables:
        return False
    g = query_graph(q)
    if not nx.is_arborescence(g):
        return False
    return root is None or g.in_degree(root) == 0


def _is_tree_cq(q: ConjQuery) -> bool:
    return len(q.answer_vars) == 1 and is_tree_shaped(q, q.answer_vars[0])


def hangs_as_forest(q: ConjQuery, core: Collection[str]) -> bool:
    """Non-*core* variables form trees whose roots are attached to *core* by one edge."""
    core = set(core)
    for v in q.variables:
        if v in core:
            continue
        if len(q.in_edges(v)) != 1:
            return False
    for a in q.role_atoms:
        if a.source not in core and a.target in core:
            return False
    # In-degree one everywhere outside the core: walking up must reach the core.
    for v in q.variables:
        seen = set()
        cur = v
        while cur not in core:
            if cur in seen:
                return False
            seen.add(cur)
            cur = q.in_edges(cur)[0][1]
    return True


def core_of(q: ConjQuery) -> FrozenSet[str]:
    """Smallest V ⊇ avar(q) such that the rest of *q* hangs off V as trees."""
    core: Set[str] = set(q.answer_vars)
    changed = True
    while changed:
        changed = False
        for v in q.variables:
            if v not in core and len(q.in_edges(v)) != 1:
                core.add(v)
                changed = True
        for a in q.role_atoms:
            if a.target in core and a.source not in core:
                core.add(a.source)
                changed = True
        for v in q.variables:
            if v in core:
                continue
            seen = set()
            cur = v
            while cur not in core and cur not in seen and len(q.in_edges(cur)) == 1:
                seen.add(cur)
                cur = q.in_edges(cur)[0][1]
            if cur not in core:
                core.add(v)
                changed = True
    return frozenset(core)


def trees_at(q: ConjQuery, core: Collection[str]) -> Dict[str, Concept]:
    """For each core variable, the concept formed by its names and hanging trees."""
    core = frozenset(core)
    out: Dict[str, Concept] = {}
    for x in q.variables:
        if x not in core:
            continue
        parts: List[Concept] = [Name(n) for n in q.names_at(x)]
        parts += [Exists(r, concept_at(q, y, core)) for r, y in q.out_edges(x) if y not in core]
        out[x] = conj(*parts)
    return out


def hanging_trees(q: ConjQuery, core: Collection[str]) -> Dict[str, Concept]:
    """Like :func:`trees_at` but without the names at the core variable itself."""
    core = frozenset(core)
    out: Dict[str, Concept] = {}
    for x in q.variables:
        if x in core:
            branches = [Exists(r, concept_at(q, y, core)) for r, y in q.out_edges(x) if y not in core]
            if branches:
                out[x] = conj(*branches)
    return out


def classify(q: ConjQuery) -> QueryClass:
    if not q.answer_vars or not is_rooted(q):
        return QueryClass.UNSUPPORTED
    if (
        len(q.answer_vars) == 1
        and len(q.atoms) == 1
        and isinstance(next(iter(q.atoms)), ConceptAtom)
    ):
        return QueryClass.AQ
    if _is_tree_cq(q):
        return QueryClass.TREE_CQ
    if core_of(q) == frozenset(q.answer_vars):
        return QueryClass.TQ_CQ
    return QueryClass.RCQ


def eq_classes(q: ConjQuery) -> EqClasses:
    return EqClasses.of(q)


def collapse_equalities(q: ConjQuery) -> Tuple[ConjQuery, Dict[str, str]]:
    """Identify equated answer variables; returns the query and the renaming."""
    classes = eq_classes(q)
    mapping = {v: classes.representative(v) for v in q.answer_vars}
    answer = tuple(dict.fromkeys(mapping[v] for v in q.answer_vars))
    atoms = frozenset(rename_atom(a, mapping) for a in q.atoms if not isinstance(a, EqAtom))
    return ConjQuery(answer, atoms), mapping


def _eliminate_fork(q: ConjQuery, a0: RoleAtom, a1: RoleAtom) -> ConjQuery:
    answer = set(q.answer_vars)
    x0, x1 = a0.source, a1.source
    if (x0 in answer) != (x1 in answer):
        keep, gone = (x0, x1) if x0 in answer else (x1, x0)
    elif x0 in answer:
        # both answer variables: the smaller name goes, an equality remembers it
        keep, gone = max(x0, x1), min(x0, x1)
    else:
        keep, gone = min(x0, x1), max(x0, x1)
    atoms = set()
    for a in q.atoms:
        if isinstance(a, EqAtom):
            atoms.add(a)
        else:
            atoms.add(rename_atom(a, {gone: keep}))
    if gone in answer:
        atoms.add(EqAtom(keep, gone))
    return ConjQuery(q.answer_vars, frozenset(atoms))


def fork_rewritings(q0: ConjQuery) -> Tuple[ConjQuery, ...]:
    """All queries reachable from *q0* by fork elimination, *q0* first, then by code."""
    answer = set(q0.answer_vars)
    seen = {q0.code: q0}
    work: Deque[ConjQuery] = deque([q0])
    while work:
        q = work.popleft()
        atoms = q.role_atoms
        for a0, a1 in combinations(atoms, 2):
            if a0.role != a1.role or a0.target != a1.target or a0.source == a1.source:
                continue
            if a0.target in answer:
                continue
            child = _eliminate_fork(q, a0, a1)
            if child.code not in seen:
                seen[child.code] = child
                work.append(child)
    rest = sorted((c for c in seen if c != q0.code))
    return (q0,) + tuple(seen[c] for c in rest)


def tree_subqueries(q: ConjQuery) -> Tuple[Tuple[RoleAtom, ConjQuery], ...]:
    """Pairs (link, subtree) with the subtree rooted at the link's target."""
    answer = set(q.answer_vars)
    g = query_graph(q)
    found: List[Tuple[RoleAtom, ConjQuery]] = []
    for link in q.role_atoms:
        y = link.target
        if y in answer or link.source == y:
            continue
        below = {y} | nx.descendants(g, y)
        if below & answer or link.source in below:
            continue
        incoming = [a for a in q.role_atoms if a.target in below and a.source not in below]
        if incoming != [link]:
            continue
        sub = ConjQuery(
            (y,),
            frozenset(a for a in q.atoms if set(a.variables) <= below),
        )
        if is_tree_shaped(sub, y):
            found.append((link, sub))
    return tuple(found)


def prec_children(q: ConjQuery) -> Tuple[ConjQuery, ...]:
    """The queries obtained by dropping one tree subquery with its link."""
    by_code: Dict[str, ConjQuery] = {}
    for link, sub in tree_subqueries(q):
        child = q.with_atoms(q.atoms - sub.atoms - {link})
        by_code.setdefault(child.code, child)
    return tuple(by_code[c] for c in sorted(by_code))


@lru_cache(maxsize=65536)
def contained_in(t: TBox, q1: ConjQuery, q0: ConjQuery) -> bool:
    """``q1 ⊆_t q0``, decided on the ABox image of *q1*."""
    if len(q1.answer_vars) != len(q0.answer_vars):
        raise ArityError(
            f"containment between arities {len(q1.answer_vars)} and {len(q0.answer_vars)}"
        )
    collapsed, mapping = collapse_equalities(q1)
    abox, _ = cq_as_abox(collapsed)
    answer = tuple(mapping[v] for v in q1.answer_vars)
    return certain_answer(abox, t, q0, answer)


def minimize_by(q: ConjQuery, goal: Callable[[ConjQuery], bool]) -> ConjQuery:
    """Greedy descent to the first (canonical order) ≺-child satisfying *goal*."""
    if not goal(q):
        raise PreconditionError(f"cannot minimize {q}: it does not satisfy the goal")
    while True:
        for child in prec_children(q):
            if goal(child):
                q = child
                break
        else:
            return q


def minimize(q: ConjQuery, t: TBox, q0: ConjQuery) -> ConjQuery:
    return minimize_by(q, lambda p: contained_in(t, p, q0))


@dataclass(frozen=True)
class Splitting:
    """``⟨R, S_1..S_l, r_1..r_l, μ, ν⟩``; ``mu[i]`` is the R-variable linking ``S[i]``."""

    R: FrozenSet[str]
    S: Tuple[FrozenSet[str], ...]
    roles: Tuple[str, ...]
    mu: Tuple[str, ...]
    nu: Tuple[Tuple[str, str], ...]
    roots: Tuple[str, ...] = ()

    @property
    def nu_map(self) -> Dict[str, str]:
        return dict(self.nu)


def part_concept(q: ConjQuery, s: Splitting, i: int) -> Concept:
    """``C_{q|S_i}``."""
    return concept_at(q, s.roots[i])


def _tree_parts(
    q: ConjQuery, g: nx.MultiDiGraph, r: FrozenSet[str]
) -> Optional[List[Tuple[FrozenSet[str], str, str, str]]]:
    rest = [v for v in q.variables if v not in r]
    parts: List[Tuple[FrozenSet[str], str, str, str]] = []
    for comp in nx.weakly_connected_components(g.subgraph(rest)):
        comp = frozenset(comp)
        incoming = [a for a in q.role_atoms if a.target in comp and a.source not in comp]
        if len(incoming) != 1:
            return None
        if any(a.source in comp and a.target not in comp for a in q.role_atoms):
            return None
        link = incoming[0]
        sub = ConjQuery((link.target,), frozenset(a for a in q.atoms if set(a.variables) <= comp))
        if not is_tree_shaped(sub, link.target):
            return None
        parts.append((comp, link.role, link.source, link.target))
    parts.sort(key=lambda p: (sorted(p[0]), p[1], p[2]))
    return parts


def _assignments(
    q: ConjQuery,
    r: FrozenSet[str],
    a: Abox,
    fixed: Mapping[str, str],
    allowed: Mapping[str, Collection[str]],
) -> Iterator[Dict[str, str]]:
    order = [v for v in q.variables if v in r]
    inds = sorted(a.individuals)
    edges = [x for x in q.role_atoms if x.source in r and x.target in r]
    nu: Dict[str, str] = {}

    def ok(v: str) -> bool:
        for e in edges:
            if v in e.variables and e.source in nu and e.target in nu:
                if (e.role, nu[e.source], nu[e.target]) not in a.role_assertions:
                    return False
        for e in q.eq_atoms:
            if v in e.variables and e.left in nu and e.right in nu and nu[e.left] != nu[e.right]:
                return False
        return True

    def search(i: int) -> Iterator[Dict[str, str]]:
        if i == len(order):
            yield dict(nu)
            return
        v = order[i]
        if v in fixed:
            options: Sequence[str] = [fixed[v]]
        elif v in allowed:
            options = sorted(allowed[v])
        else:
            options = inds
        for b in options:
            if b not in a.individuals:
                continue
            nu[v] = b
            if ok(v):
                yield from search(i + 1)
            del nu[v]

    yield from search(0)


def splittings(
    q: ConjQuery,
    a: Abox,
    *,
    fixed: Optional[Mapping[str, str]] = None,
    allowed: Optional[Mapping[str, Collection[str]]] = None,
) -> Tuple[Splitting, ...]:
    """All splittings of *q* w.r.t. *a*; ``fixed``/``allowed`` constrain ν."""
    fixed = dict(fixed or {})
    allowed = dict(allowed or {})
    g = query_graph(q)
    quantified = list(q.quantified_vars)
    found: List[Splitting] = []
    for size in range(len(quantified) + 1):
        for extra in combinations(quantified, size):
            r = frozenset(q.answer_vars) | frozenset(extra)
            parts = _tree_parts(q, g, r)
            if parts is None:
                continue
            for nu in _assignments(q, r, a, fixed, allowed):
                found.append(
                    Splitting(
                        R=r,
                        S=tuple(p[0] for p in parts),
                        roles=tuple(p[1] for p in parts),
                        mu=tuple(p[2] for p in parts),
                        nu=tuple(sorted(nu.items())),
                        roots=tuple(p[3] for p in parts),
                    )
                )
    logger.debug("%d splittings of %s", len(found), q)
    return tuple(found)


def lemma1_entails(omq: Omq, a: Abox, answer: Sequence[str]) -> bool:
    """Certain-answer check through fork rewritings and splittings."""
    q0 = omq.query
    if len(answer) != len(q0.answer_vars):
        raise ArityError(f"expected {len(q0.answer_vars)} answer values, got {len(answer)}")
    if any(b not in a.individuals for b in answer):
        return False
    fixed: Dict[str, str] = {}
    for v, b in zip(q0.answer_vars, answer):
        if fixed.setdefault(v, b) != b:
            return False
    model = reasoner_for(omq.tbox).model(a)
    for q in fork_rewritings(q0):
        for s in splittings(q, a, fixed=fixed):
            nu = s.nu_map
            if not all(model.holds(nu[x.var], Name(x.name)) for x in q.concept_atoms if x.var in s.R):
                continue
            if all(
                model.holds(nu[s.mu[i]], Exists(s.roles[i], part_concept(q, s, i)))
                for i in range(len(s.S))
            ):
                return True
    return False
