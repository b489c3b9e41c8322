"""Backwards-chaining rewriting engines and the top-level pipeline.

``bc_aq`` and ``bc_aq_plus`` close a set of tree CQs for an atomic query
under CI application and ≺-minimization; ``bc_rcq`` does the same on full
CQs.  Every closure runs under a :class:`Budget`: it either closes its
frontier (:class:`Rewriting`) or stops with a :class:`BudgetExhausted`
report.  :func:`rewrite` dispatches on the query class and strategy.
"""

import logging
import time
from collections import deque
from dataclasses import dataclass, replace
from itertools import product
from typing import Callable, Deque, Dict, FrozenSet, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from .errors import ConfigError, OmqError, ReductionError, UnsupportedQueryError
from .model import (
    Atom,
    Concept,
    ConceptAtom,
    ConceptInclusion,
    ConjQuery,
    Exists,
    Name,
    Omq,
    RoleAtom,
    Signature,
    TBox,
    UnionQuery,
    concept_at,
    normalize_query,
    top_level_names,
    tree_cq_to_concept,
    tree_name,
    unfold_concept,
)
from .reasoner import structurally_subsumes
from .reduction_rcq import RcqReduction, build_rcq_reduction, pi
from .reduction_tq import reduce_tq, to_source_ucq
from .structure import (
    QueryClass,
    classify,
    contained_in,
    core_of,
    fork_rewritings,
    hanging_trees,
    minimize,
    minimize_by,
    tree_subqueries,
)

logger = logging.getLogger(__name__)

STRATEGIES = ("auto", "direct", "reduction")
TMIN_MODES = ("materialized", "direct")

_EMPTY = TBox(frozenset())

Goal = Callable[[ConjQuery], bool]


@dataclass(frozen=True)
class Budget:
    max_queries: int = 100000
    max_depth: int = 30
    max_seconds: float = 300.0

    def __post_init__(self) -> None:
        for key in ("max_queries", "max_depth", "max_seconds"):
            value = getattr(self, key)
            if value <= 0:
                raise ConfigError(f"budget {key} must be positive, got {value}")

    def capped(self, depth: int) -> "Budget":
        return replace(self, max_depth=min(self.max_depth, depth))


class Frontier:
    """The member set of one closure: done codes, FIFO work queue, Σ-hits."""

    def __init__(self, sigma: Signature) -> None:
        self.sigma = sigma
        self.done: Dict[str, ConjQuery] = {}
        self.work: Deque[Tuple[ConjQuery, int]] = deque()
        self.sigma_hits: List[ConjQuery] = []
        self.max_depth = 0

    def __len__(self) -> int:
        return len(self.done)

    def __contains__(self, q: ConjQuery) -> bool:
        return q.code in self.done

    def push(self, q: ConjQuery, depth: int) -> bool:
        code = q.code
        if code in self.done:
            return False
        self.done[code] = q
        self.work.append((q, depth))
        if self.sigma.admits_query(q):
            self.sigma_hits.append(q)
        self.max_depth = max(self.max_depth, depth)
        logger.debug("frontier insert at depth %d: %s", depth, code)
        return True

    def pop(self) -> Tuple[ConjQuery, int]:
        return self.work.popleft()

    @property
    def pending(self) -> int:
        return len(self.work)

    def members(self) -> Tuple[ConjQuery, ...]:
        return tuple(self.done.values())


@dataclass(frozen=True)
class FrontierStats:
    label: str
    members: int
    sigma_hits: int
    max_depth: int
    seconds: float
    pending: int = 0


@dataclass(frozen=True)
class Rewriting:
    ucq: UnionQuery
    stats: Tuple[FrontierStats, ...] = ()


@dataclass(frozen=True)
class ChainWitness:
    """A member holding a long path of one role, the usual sign of non-rewritability."""

    role: str
    length: int
    query: ConjQuery


@dataclass(frozen=True)
class BudgetExhausted:
    reason: str
    frontier_size: int
    max_depth_reached: int
    largest: Optional[ConjQuery]
    sigma_hits: Tuple[ConjQuery, ...]
    members: Tuple[ConjQuery, ...]
    chain: Optional[ChainWitness] = None
    stats: Tuple[FrontierStats, ...] = ()


RewriteOutcome = Union[Rewriting, BudgetExhausted]


def _apply(
    q: ConjQuery,
    ci: ConceptInclusion,
    x: str,
    subtrees: Optional[Sequence[Tuple[RoleAtom, ConjQuery]]] = None,
) -> Tuple[ConjQuery, int]:
    rhs = ci.rhs
    names = top_level_names(rhs)
    removed: Set[Atom] = {a for a in q.concept_atoms if a.var == x and a.name in names}
    for link, sub in (tree_subqueries(q) if subtrees is None else subtrees):
        if link.source != x:
            continue
        if structurally_subsumes(rhs, Exists(link.role, concept_at(q, link.target))):
            removed |= sub.atoms | {link}
    used = set(q.variables)
    added = unfold_concept(ci.lhs, x, used)
    return q.with_atoms((q.atoms - removed) | added), len(removed)


def apply_ci(q: ConjQuery, ci: ConceptInclusion, x: str) -> FrozenSet[ConjQuery]:
    """Apply ``C ⊑ D`` at *x*: drop what ``D`` covers at *x*, then add ``C`` at *x*."""
    if x not in q.variables:
        raise OmqError(f"{x} is not a variable of {q}")
    return frozenset({_apply(q, ci, x)[0]})


@dataclass
class _Leg:
    label: str
    answer_vars: Tuple[str, ...]
    frontier: Frontier
    seconds: float
    exhausted: Optional[str]

    @property
    def ucq(self) -> UnionQuery:
        return UnionQuery.of(self.answer_vars, self.frontier.sigma_hits)

    @property
    def stats(self) -> FrontierStats:
        f = self.frontier
        return FrontierStats(self.label, len(f), len(f.sigma_hits), f.max_depth, self.seconds, f.pending)


def _closure(
    seeds: Sequence[ConjQuery],
    tbox: TBox,
    goal: Goal,
    sigma: Signature,
    budget: Budget,
    label: str,
    deadline: Optional[float] = None,
) -> _Leg:
    started = time.monotonic()
    if deadline is None:
        deadline = started + budget.max_seconds
    answer_vars = seeds[0].answer_vars if seeds else ()
    frontier = Frontier(sigma)
    for s in seeds:
        frontier.push(normalize_query(s), 0)
    inclusions = tuple(tbox)
    exhausted: Optional[str] = None
    logger.info("%s: closure started with %d seed(s)", label, len(frontier))

    while frontier.work and exhausted not in ("queries", "seconds"):
        if time.monotonic() > deadline:
            exhausted = "seconds"
            break
        q, depth = frontier.pop()
        subtrees = tree_subqueries(q)
        for ci in inclusions:
            for x in q.variables:
                child, removed = _apply(q, ci, x, subtrees)
                if not removed or not goal(child):
                    continue
                child = normalize_query(minimize_by(child, goal))
                if child in frontier:
                    continue
                if depth + 1 > budget.max_depth:
                    exhausted = exhausted or "depth"
                    continue
                if len(frontier) >= budget.max_queries:
                    exhausted = "queries"
                    break
                frontier.push(child, depth + 1)
            if exhausted == "queries":
                break

    seconds = time.monotonic() - started
    leg = _Leg(label, answer_vars, frontier, seconds, exhausted)
    if exhausted:
        logger.info(
            "%s: budget exhausted (%s) after %d members, depth %d, %.2fs",
            label, exhausted, len(frontier), frontier.max_depth, seconds,
        )
    else:
        logger.info(
            "%s: closed with %d members, %d in signature, %.2fs",
            label, len(frontier), len(frontier.sigma_hits), seconds,
        )
    return leg


def _aq_leg(
    omq: Omq,
    t_min: TBox,
    budget: Budget,
    label: str,
    goal: Optional[Goal] = None,
    deadline: Optional[float] = None,
) -> _Leg:
    q0 = omq.query
    if classify(q0) is not QueryClass.AQ:
        raise UnsupportedQueryError(f"expected an atomic query, got {q0}")
    if goal is None:
        goal = lambda q: contained_in(t_min, q, q0)  # noqa: E731
    return _closure([q0], omq.tbox, goal, omq.sigma, budget, label, deadline)


def bc_aq(omq: Omq, budget: Budget = Budget()) -> RewriteOutcome:
    return _outcome([_aq_leg(omq, omq.tbox, budget, "bc_aq")], omq.query.answer_vars)


def bc_aq_plus(omq: Omq, t_min: TBox, budget: Budget = Budget()) -> RewriteOutcome:
    """As :func:`bc_aq`, minimizing with *t_min* instead of the OMQ's TBox."""
    return _outcome([_aq_leg(omq, t_min, budget, "bc_aq")], omq.query.answer_vars)


def bc_rcq(omq: Omq, budget: Budget = Budget()) -> RewriteOutcome:
    q0, t = omq.query, omq.tbox
    if classify(q0) is QueryClass.UNSUPPORTED:
        raise UnsupportedQueryError(f"not a rooted CQ: {q0}")
    seeds = [minimize(q_r, t, q0) for q_r in fork_rewritings(q0)]
    leg = _closure(seeds, t, lambda q: contained_in(t, q, q0), omq.sigma, budget, "bc_rcq")
    return _outcome([leg], q0.answer_vars)


def _outcome(
    legs: Sequence[_Leg],
    answer_vars: Tuple[str, ...],
    disjuncts: Optional[Sequence[ConjQuery]] = None,
) -> RewriteOutcome:
    stats = tuple(leg.stats for leg in legs)
    failed = [leg for leg in legs if leg.exhausted]
    if not failed:
        if disjuncts is None:
            disjuncts = [d for leg in legs for d in leg.ucq]
        return Rewriting(UnionQuery.of(answer_vars, disjuncts), stats)
    members = tuple(m for leg in legs for m in leg.frontier.members())
    hits = tuple(h for leg in legs for h in leg.frontier.sigma_hits)
    return BudgetExhausted(
        reason=failed[0].exhausted or "",
        frontier_size=sum(len(leg.frontier) for leg in legs),
        max_depth_reached=max(leg.frontier.max_depth for leg in legs),
        largest=max(members, key=lambda m: (len(m.atoms), m.code)) if members else None,
        sigma_hits=hits,
        members=members,
        chain=chain_witness(members),
        stats=stats,
    )


def chain_witness(members: Sequence[ConjQuery]) -> Optional[ChainWitness]:
    """The longest path of a single role over all *members* (length ≥ 2)."""
    best: Optional[ChainWitness] = None
    for q in members:
        by_role: Dict[str, nx.DiGraph] = {}
        for a in q.role_atoms:
            by_role.setdefault(a.role, nx.DiGraph()).add_edge(a.source, a.target)
        for role, g in sorted(by_role.items()):
            if not nx.is_directed_acyclic_graph(g):
                continue
            length = nx.dag_longest_path_length(g)
            if length >= 2 and (best is None or length > best.length):
                best = ChainWitness(role, length, q)
    return best


def _rewrite_tq(omq: Omq, budget: Budget) -> RewriteOutcome:
    red = reduce_tq(omq)
    leg = _aq_leg(red.target, red.target.tbox, budget, "tq")
    if leg.exhausted:
        return _outcome([leg], omq.query.answer_vars)
    return _outcome([leg], omq.query.answer_vars, list(to_source_ucq(leg.ucq, red)))


def _rewrite_rcq(omq: Omq, budget: Budget, tmin: str) -> RewriteOutcome:
    q0 = omq.query
    forks = fork_rewritings(q0)
    deadline = time.monotonic() + budget.max_seconds
    legs: List[_Leg] = []
    disjuncts: List[ConjQuery] = []
    for i, q_r in enumerate(forks):
        red = build_rcq_reduction(omq, q_r, forks)
        leg = _aq_leg(red.target, red.t_min, budget, f"fork {i}", red.goal(tmin), deadline)
        legs.append(leg)
        if not leg.exhausted:
            disjuncts += _translate(leg.ucq, red)
    return _outcome(legs, q0.answer_vars, disjuncts)


def _translate(u: UnionQuery, red: RcqReduction) -> List[ConjQuery]:
    out = []
    for d in u:
        try:
            out.append(pi(d, red))
        except ReductionError as exc:
            logger.debug("skipping non-conformant member %s: %s", d, exc)
    return out


def _probe(omq: Omq, budget: Budget, probe_depth: int) -> Optional[Rewriting]:
    """Rewrite the trees away, rewrite every remaining concept atom on its own, recombine.

    Returns None when some atom's leg does not close or the recombined union
    is not sound; the caller then falls back to the reductions.
    """
    q0, t = omq.query, omq.tbox
    capped = budget.capped(probe_depth)
    deadline = time.monotonic() + budget.max_seconds
    legs: Dict[Tuple[TBox, str], _Leg] = {}
    disjuncts: List[ConjQuery] = []
    for q_r in fork_rewritings(q0):
        core = core_of(q_r)
        trees = hanging_trees(q_r, core)
        t_probe = t.union(ConceptInclusion(c, Name(tree_name(c))) for c in trees.values())
        base: List[Atom] = [
            a for a in q_r.atoms if not isinstance(a, ConceptAtom) and set(a.variables) <= core
        ]
        options: List[List[Tuple[str, Concept]]] = []
        for x in q_r.variables:
            if x not in core:
                continue
            wanted = set(q_r.names_at(x))
            if x in trees:
                wanted.add(tree_name(trees[x]))
            for name in sorted(wanted):
                key = (t_probe, name)
                if key not in legs:
                    aq = Omq(t_probe, omq.sigma, ConjQuery(("x",), {ConceptAtom(name, "x")}))
                    legs[key] = _aq_leg(aq, t_probe, capped, f"probe {name}", deadline=deadline)
                leg = legs[key]
                if leg.exhausted:
                    logger.warning("probe leg for %s did not close; falling back to the reductions", name)
                    return None
                options.append([(x, tree_cq_to_concept(d)) for d in leg.ucq])
        for combo in product(*options):
            used = set(q_r.variables)
            atoms = set(base)
            for x, c in combo:
                atoms |= unfold_concept(c, x, used)
            d = ConjQuery(q0.answer_vars, frozenset(atoms))
            if not contained_in(t, d, q0):
                logger.warning("probe produced an unsound disjunct %s; falling back", d)
                return None
            disjuncts.append(d)
    stats = tuple(leg.stats for leg in legs.values())
    return Rewriting(UnionQuery.of(q0.answer_vars, disjuncts), stats)


def prune_subsumed(u: UnionQuery) -> UnionQuery:
    """Drop disjuncts contained (without TBox) in another; equivalent ones keep the first."""
    ds = list(u)
    kept = []
    for i, d in enumerate(ds):
        dominated = False
        for j, e in enumerate(ds):
            if i == j or not contained_in(_EMPTY, d, e):
                continue
            if j < i or not contained_in(_EMPTY, e, d):
                dominated = True
                break
        if not dominated:
            kept.append(d)
    return UnionQuery.of(u.answer_vars, kept)


def rewrite(
    omq: Omq,
    budget: Budget = Budget(),
    strategy: str = "auto",
    *,
    tmin: str = "materialized",
    prune: bool = False,
    probe_depth: int = 8,
) -> RewriteOutcome:
    """UCQ-rewrite *omq*, or report why the budget ran out first."""
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}; expected one of {', '.join(STRATEGIES)}")
    if tmin not in TMIN_MODES:
        raise ConfigError(f"unknown T^min mode {tmin!r}; expected one of {', '.join(TMIN_MODES)}")
    cls = classify(omq.query)
    logger.info("rewriting %s query with strategy %s", cls, strategy)
    if cls is QueryClass.UNSUPPORTED:
        raise UnsupportedQueryError(f"query is not rooted: {omq.query}")

    outcome: Optional[RewriteOutcome] = None
    if cls is QueryClass.AQ:
        outcome = bc_aq(omq, budget)
    elif strategy == "direct":
        outcome = bc_rcq(omq, budget)
    else:
        if strategy == "auto":
            outcome = _probe(omq, budget, probe_depth)
        if outcome is None:
            if strategy == "reduction" and cls in (QueryClass.TREE_CQ, QueryClass.TQ_CQ):
                outcome = _rewrite_tq(omq, budget)
            else:
                outcome = _rewrite_rcq(omq, budget, tmin)

    if prune and isinstance(outcome, Rewriting):
        outcome = replace(outcome, ucq=prune_subsumed(outcome.ucq))
    return outcome
