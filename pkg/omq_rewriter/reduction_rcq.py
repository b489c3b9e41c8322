"""Reduction of rooted CQs to atomic queries, one per fork rewriting.

For a fork rewriting ``q_r`` of ``q0`` the target OMQ keeps the core of
``q_r`` implicit: every core variable ``x`` gets superscripted copies of the
TBox, and the trees hanging off the core form the left-hand side of the
single inclusion into ``N``.  ``t_min`` adds the inclusions derived from
splittings, which make ≺-minimization agree with containment in ``q0``.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from .errors import ReductionError, UnsupportedQueryError
from .model import (
    GOAL,
    Concept,
    ConceptAtom,
    ConceptInclusion,
    ConjQuery,
    Exists,
    Name,
    Omq,
    TBox,
    conj,
    conjuncts,
    cq_as_abox,
)
from .reasoner import reasoner_for
from .reduction_tq import (
    ROOT,
    NameTables,
    copy_inclusions,
    existential_inclusions,
    is_derivative,
    lift,
    lower,
    superscript_right,
    superscripted_signature,
)
from .structure import (
    contained_in,
    core_of,
    eq_classes,
    fork_rewritings,
    is_rooted,
    part_concept,
    splittings,
    trees_at,
)

logger = logging.getLogger(__name__)


@dataclass
class RcqReduction:
    source: Omq
    fork: ConjQuery
    core: FrozenSet[str]
    target: Omq
    t_min: TBox
    witnesses: Tuple[ConceptInclusion, ...]
    names: NameTables
    root: str = ROOT

    @property
    def goal_query(self) -> ConjQuery:
        return self.target.query

    def goal(self, mode: str = "materialized") -> Callable[[ConjQuery], bool]:
        """Minimization test ``T^min ⊨ q ⊑ N`` for conformant tree CQs at the root."""
        if mode == "materialized":
            t_min, n = self.t_min, self.goal_query
            return lambda q: contained_in(t_min, q, n)
        if mode == "direct":
            return _DirectGoal(self)
        raise ValueError(f"unknown T^min mode {mode!r}")


class _DirectGoal:
    """Checks the splitting inclusions on demand instead of reasoning with ``t_min``.

    ``T^min ⊨ D ⊑ N`` holds iff ``T_{q_r} ⊨ D ⊑ N`` or ``D`` entails, under
    ``T_{q_r}``, the left-hand side of one splitting inclusion.
    """

    def __init__(self, red: RcqReduction) -> None:
        self.reasoner = reasoner_for(red.target.tbox)
        self.root = red.root
        self.lhs = [ci.lhs for ci in red.witnesses]

    def __call__(self, q: ConjQuery) -> bool:
        abox, _ = cq_as_abox(q)
        model = self.reasoner.model(abox)
        if model.holds(self.root, Name(GOAL)):
            return True
        return any(
            all(model.holds(self.root, c) for c in conjuncts(lhs)) for lhs in self.lhs
        )


def build_rcq_reduction(
    omq: Omq, q_r: ConjQuery, forks: Optional[Sequence[ConjQuery]] = None
) -> RcqReduction:
    q0 = omq.query
    forks = tuple(forks) if forks is not None else fork_rewritings(q0)
    if q_r.code not in {f.code for f in forks}:
        raise ReductionError(f"not a fork rewriting of {q0}: {q_r}")
    if not is_rooted(q_r):
        raise UnsupportedQueryError(f"not a rooted CQ: {q_r}")
    t = omq.tbox
    core = core_of(q_r)
    names = NameTables()
    added: List[ConceptInclusion] = []
    for x in sorted(core):
        added += copy_inclusions(t, x, names)
    core_roles = [a for a in q_r.role_atoms if a.source in core and a.target in core]
    added += existential_inclusions(t, sorted(core), core_roles, names)
    trees = trees_at(q_r, core)
    goal_lhs = conj(*(superscript_right(trees[x], x, names) for x in sorted(trees)))
    added.append(ConceptInclusion(goal_lhs, Name(GOAL)))
    t_qr = t.union(added)

    witnesses = _splitting_inclusions(q_r, core, forks, names, t_qr)
    for x in sorted(core):
        for n in sorted(omq.concept_symbols()):
            names.concept(n, x)
        for r in sorted(omq.role_symbols()):
            names.role(r, x)
    concepts, roles = superscripted_signature(omq, names)
    target = Omq(t_qr, omq.sigma.extend(concepts, roles), ConjQuery((ROOT,), {ConceptAtom(GOAL, ROOT)}))
    logger.debug(
        "rcq reduction for %s: core %s, %d added, %d splitting inclusions",
        q_r, sorted(core), len(added), len(witnesses),
    )
    return RcqReduction(omq, q_r, core, target, t_qr.union(witnesses), witnesses, names)


def _splitting_inclusions(
    q_r: ConjQuery,
    core: FrozenSet[str],
    forks: Sequence[ConjQuery],
    names: NameTables,
    t_qr: TBox,
) -> Tuple[ConceptInclusion, ...]:
    abox, _ = cq_as_abox(q_r)
    classes = eq_classes(q_r)
    found: Dict[ConceptInclusion, None] = {}
    for q in forks:
        allowed: Dict[str, Set[str]] = {v: set(core) for v in q.variables}
        for x in q.answer_vars:
            allowed[x] = set(classes.members(x)) & core
        for s in splittings(q, abox, allowed=allowed):
            nu = s.nu_map
            parts: List[Concept] = [
                Name(names.concept(a.name, nu[a.var])) for a in q.concept_atoms if a.var in s.R
            ]
            for i in range(len(s.S)):
                parts.append(Exists(names.role(s.roles[i], nu[s.mu[i]]), part_concept(q, s, i)))
            ci = ConceptInclusion(conj(*parts), Name(GOAL))
            if ci not in t_qr:
                found.setdefault(ci, None)
    return tuple(found)


def tau(q: ConjQuery, red: RcqReduction) -> ConjQuery:
    """Derivative of ``q_r`` to conformant tree CQ."""
    if q.eq_atoms != red.fork.eq_atoms or not is_derivative(q, red.fork, red.core):
        raise ReductionError(f"not a derivative of {red.fork}: {q}")
    return lift(q, red.core, red.root)


def pi(qp: ConjQuery, red: RcqReduction) -> ConjQuery:
    """Conformant tree CQ back to a derivative of ``q_r``."""
    base = [a for a in red.fork.atoms if not isinstance(a, ConceptAtom) and set(a.variables) <= red.core]
    return lower(qp, red.root, red.source.query.answer_vars, red.core, base)


