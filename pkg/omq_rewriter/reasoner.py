"""EL reasoning: normalization, completion, subsumption, bounded chase, certain answers.

The reasoner rewrites a TBox into the internal shapes ``A1 ⊓ … ⊓ An ⊑ B``,
``A ⊑ ∃r.B`` and ``∃r.A ⊑ B`` (introducing private ``__el`` names) and runs
the usual completion rules.  Anonymous elements are represented by one shared
witness per filler ``B``; the chase unravels the witnesses lazily into trees
below the named individuals.
"""

import logging
from collections import defaultdict, deque
from dataclasses import dataclass
from functools import lru_cache
from itertools import count
from typing import (
    Callable,
    DefaultDict,
    Deque,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

from .errors import ArityError, NotTreeShapedError, OmqError
from .model import (
    Abox,
    And,
    Concept,
    ConceptInclusion,
    ConjQuery,
    Exists,
    Name,
    TBox,
    Top,
    concept_to_tree_cq,
    conjuncts,
    cq_as_abox,
    top_level_exists,
    top_level_names,
    tree_cq_to_concept,
)

logger = logging.getLogger(__name__)

_TOP = "__top"
_INTERNAL = "__el"
_MODEL_CACHE = 4096


@dataclass(frozen=True)
class NormalTBox:
    original: TBox
    normalized: TBox
    fresh_names: FrozenSet[str] = frozenset()


def normalize(t: TBox) -> NormalTBox:
    """Split top-level conjunctions on right-hand sides."""
    out = set()
    for ci in t:
        for part in conjuncts(ci.rhs):
            out.add(ConceptInclusion(ci.lhs, part))
    return NormalTBox(t, TBox(frozenset(out)))


def structurally_subsumes(c: Concept, d: Concept) -> bool:
    """``⊨ c ⊑ d`` with the empty TBox."""
    if not top_level_names(d) <= top_level_names(c):
        return False
    mine = top_level_exists(c)
    return all(
        any(e.role == f.role and structurally_subsumes(e.filler, f.filler) for e in mine)
        for f in top_level_exists(d)
    )


@dataclass(frozen=True)
class Witness:
    """The shared anonymous element created for filler ``name``."""

    name: str


Element = Union[str, Witness]


class CompactModel:
    """Finite model of an ABox and TBox: named individuals plus shared witnesses.

    Satisfies exactly the EL concepts entailed at each named individual.
    """

    def __init__(
        self,
        reasoner: "ElReasoner",
        abox: Abox,
        labels: Dict[str, Set[str]],
        succ: Dict[str, Set[Tuple[str, Element]]],
    ) -> None:
        self.reasoner = reasoner
        self.abox = abox
        self._labels = labels
        self._succ = succ
        self._memo: Dict[Tuple[Element, Concept], bool] = {}

    def raw_label(self, e: Element) -> Set[str]:
        if isinstance(e, Witness):
            return self.reasoner._witness_labels[e]
        return self._labels[e]

    def successors(self, e: Element) -> Iterable[Tuple[str, Element]]:
        if isinstance(e, Witness):
            return self.reasoner._witness_succ[e]
        return self._succ[e]

    def names(self, e: Element) -> FrozenSet[str]:
        return frozenset(n for n in self.raw_label(e) if self.reasoner.is_visible(n))

    def holds(self, e: Element, c: Concept) -> bool:
        key = (e, c)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._holds(e, c)
            self._memo[key] = hit
        return hit

    def _holds(self, e: Element, c: Concept) -> bool:
        if isinstance(c, Top):
            return True
        if isinstance(c, Name):
            return c.name in self.raw_label(e)
        if isinstance(c, And):
            return all(self.holds(e, x) for x in c.conjuncts)
        return any(r == c.role and self.holds(t, c.filler) for r, t in self.successors(e))


class ElReasoner:
    """Completion-based reasoner for one TBox; obtain instances via :func:`reasoner_for`."""

    def __init__(self, tbox: TBox) -> None:
        self.tbox = tbox
        self._fresh = count()
        self._internal: Set[str] = set()
        self._lhs_cache: Dict[Concept, str] = {}
        self._rhs_cache: Dict[Concept, str] = {}
        self._nf1: DefaultDict[str, List[Tuple[FrozenSet[str], str]]] = defaultdict(list)
        self._nf2: DefaultDict[str, List[Tuple[str, str]]] = defaultdict(list)
        self._nf3: DefaultDict[Tuple[str, str], List[str]] = defaultdict(list)
        for ci in normalize(tbox).normalized:
            self._entail(self._lhs(ci.lhs), ci.rhs)
        self._witness_labels: Dict[Witness, Set[str]] = {}
        self._witness_succ: Dict[Witness, Set[Tuple[str, Element]]] = {}
        self._complete_witnesses()
        self._subsumption: Dict[Tuple[Concept, Concept], bool] = {}
        self._models: Dict[Abox, CompactModel] = {}
        logger.debug(
            "reasoner for %d inclusions: %d internal names, %d witnesses",
            len(tbox), len(self._internal), len(self._witness_labels),
        )

    def is_visible(self, name: str) -> bool:
        return name != _TOP and name not in self._internal

    def _new_name(self) -> str:
        name = f"{_INTERNAL}{next(self._fresh)}"
        self._internal.add(name)
        return name

    def _lhs(self, c: Concept) -> str:
        """A name X with ``X ⊑ c`` and ``c ⊑ X`` on the left-hand side."""
        if isinstance(c, Top):
            return _TOP
        if isinstance(c, Name):
            return c.name
        hit = self._lhs_cache.get(c)
        if hit is not None:
            return hit
        x = self._new_name()
        if isinstance(c, And):
            parts = frozenset(self._lhs(p) for p in c.conjuncts) - {_TOP} or frozenset({_TOP})
            self._add_nf1(parts, x)
        else:
            self._nf3[(c.role, self._lhs(c.filler))].append(x)
        self._lhs_cache[c] = x
        return x

    def _rhs(self, c: Concept) -> str:
        """A name Z with ``Z ⊑ c``."""
        if isinstance(c, Top):
            return _TOP
        if isinstance(c, Name):
            return c.name
        hit = self._rhs_cache.get(c)
        if hit is not None:
            return hit
        z = self._new_name()
        self._rhs_cache[c] = z
        self._entail(z, c)
        return z

    def _entail(self, lhs: str, d: Concept) -> None:
        """Record ``lhs ⊑ d``."""
        if isinstance(d, Name):
            self._add_nf1(frozenset({lhs}), d.name)
        elif isinstance(d, And):
            for part in d.conjuncts:
                self._entail(lhs, part)
        elif isinstance(d, Exists):
            self._nf2[lhs].append((d.role, self._rhs(d.filler)))

    def _add_nf1(self, lhs: FrozenSet[str], rhs: str) -> None:
        for n in lhs:
            self._nf1[n].append((lhs, rhs))

    def _run(
        self,
        labels: Mapping[Element, Set[str]],
        succ: Mapping[Element, Set[Tuple[str, Element]]],
        pred: Mapping[Element, Set[Tuple[str, Element]]],
        lookup: Callable[[Witness], Set[str]],
    ) -> None:
        queue: Deque[Tuple[Element, str]] = deque(
            (e, n) for e in labels for n in sorted(labels[e])
        )

        def add(e: Element, n: str) -> None:
            if n not in labels[e]:
                labels[e].add(n)
                queue.append((e, n))

        while queue:
            e, n = queue.popleft()
            for lhs, b in self._nf1.get(n, ()):
                if lhs <= labels[e]:
                    add(e, b)
            for r, b in self._nf2.get(n, ()):
                w = Witness(b)
                if (r, w) in succ[e]:
                    continue
                succ[e].add((r, w))
                if w in pred:
                    pred[w].add((r, e))
                for m in list(lookup(w)):
                    for c in self._nf3.get((r, m), ()):
                        add(e, c)
            for r, p in list(pred.get(e, ())):
                for c in self._nf3.get((r, n), ()):
                    add(p, c)

    def _complete_witnesses(self) -> None:
        fillers = {b for edges in self._nf2.values() for _, b in edges}
        labels: Dict[Element, Set[str]] = {Witness(b): {b, _TOP} for b in sorted(fillers)}
        succ: Dict[Element, Set[Tuple[str, Element]]] = {w: set() for w in labels}
        pred: Dict[Element, Set[Tuple[str, Element]]] = {w: set() for w in labels}
        self._run(labels, succ, pred, lambda w: labels[w])
        self._witness_labels = {w: labels[w] for w in labels}  # type: ignore[misc]
        self._witness_succ = {w: succ[w] for w in succ}  # type: ignore[misc]

    def model(self, abox: Abox) -> CompactModel:
        hit = self._models.get(abox)
        if hit is None:
            if len(self._models) >= _MODEL_CACHE:
                self._models.clear()
            hit = self._models[abox] = self._build_model(abox)
        return hit

    def _build_model(self, abox: Abox) -> CompactModel:
        labels: Dict[Element, Set[str]] = {a: {_TOP} for a in abox.individuals}
        succ: Dict[Element, Set[Tuple[str, Element]]] = {a: set() for a in abox.individuals}
        pred: Dict[Element, Set[Tuple[str, Element]]] = {a: set() for a in abox.individuals}
        for name, a in abox.concept_assertions:
            labels[a].add(name)
        for r, a, b in abox.role_assertions:
            succ[a].add((r, b))
            pred[b].add((r, a))
        self._run(labels, succ, pred, self._witness_labels.__getitem__)
        return CompactModel(self, abox, labels, succ)  # type: ignore[arg-type]

    def saturate(self, abox: Abox) -> Abox:
        m = self.model(abox)
        extra = {(n, a) for a in abox.individuals for n in m.names(a)}
        return abox.extend(concepts=extra)

    def instance_of(self, abox: Abox, individual: str, c: Concept) -> bool:
        if individual not in abox.individuals:
            return False
        return self.model(abox).holds(individual, c)

    def subsumes(self, c: Concept, d: Concept) -> bool:
        key = (c, d)
        hit = self._subsumption.get(key)
        if hit is None:
            if not self.tbox:
                hit = structurally_subsumes(c, d)
            else:
                abox, _ = cq_as_abox(concept_to_tree_cq(c, "x"))
                hit = self.model(abox).holds("x", d)
            self._subsumption[key] = hit
        return hit

    def entailed_names(self, c: Concept) -> FrozenSet[str]:
        abox, _ = cq_as_abox(concept_to_tree_cq(c, "x"))
        return self.model(abox).names("x")

    def chase(self, abox: Abox, depth: int) -> "ChaseModel":
        if depth < 0:
            raise ValueError("chase depth must be non-negative")
        return ChaseModel(self.saturate(abox), self.model(abox), depth)


@lru_cache(maxsize=256)
def reasoner_for(t: TBox) -> ElReasoner:
    return ElReasoner(t)


# An anonymous element is the path (individual, (role, filler), ...).
AnonElement = Tuple[object, ...]
ChaseElement = Union[str, AnonElement]


class ChaseModel:
    """Depth-bounded unravelling of ``ch_T(A)``.

    ``base`` holds the saturated ABox; anonymous elements are materialized on
    demand (``anon`` lists the whole bounded forest).
    """

    def __init__(self, base: Abox, compact: CompactModel, depth: int) -> None:
        self.base = base
        self.compact = compact
        self.depth = depth
        self._out: Dict[str, List[Tuple[str, str]]] = defaultdict(list)
        self._in: Dict[str, List[Tuple[str, str]]] = defaultdict(list)
        for r, a, b in sorted(base.role_assertions):
            self._out[a].append((r, b))
            self._in[b].append((r, a))
        self._labels: Dict[str, FrozenSet[str]] = {a: frozenset() for a in base.individuals}
        grouped: Dict[str, Set[str]] = defaultdict(set)
        for n, a in base.concept_assertions:
            grouped[a].add(n)
        self._labels.update({a: frozenset(s) for a, s in grouped.items()})

    @property
    def individuals(self) -> FrozenSet[str]:
        return self.base.individuals

    @staticmethod
    def is_named(e: ChaseElement) -> bool:
        return isinstance(e, str)

    def _witness(self, e: ChaseElement) -> Element:
        if isinstance(e, str):
            return e
        return Witness(e[-1][1])  # type: ignore[index]

    def labels(self, e: ChaseElement) -> FrozenSet[str]:
        if isinstance(e, str):
            return self._labels.get(e, frozenset())
        return self.compact.names(self._witness(e))

    def children(self, e: ChaseElement) -> List[Tuple[str, AnonElement]]:
        level = 0 if isinstance(e, str) else len(e) - 1
        if level >= self.depth:
            return []
        path = (e,) if isinstance(e, str) else e
        out = []
        for r, w in sorted(self.compact.successors(self._witness(e)), key=_edge_key):
            if isinstance(w, Witness):
                out.append((r, path + ((r, w.name),)))
        return out

    def successors(self, e: ChaseElement, role: str) -> List[ChaseElement]:
        found: List[ChaseElement] = []
        if isinstance(e, str):
            found.extend(b for r, b in self._out.get(e, ()) if r == role)
        found.extend(c for r, c in self.children(e) if r == role)
        return found

    def predecessors(self, e: ChaseElement, role: str) -> List[ChaseElement]:
        if isinstance(e, str):
            return [a for r, a in self._in.get(e, ()) if r == role]
        if e[-1][0] != role:  # type: ignore[index]
            return []
        parent = e[:-1]
        return [parent[0] if len(parent) == 1 else parent]  # type: ignore[list-item]

    def elements(self) -> Iterator[ChaseElement]:
        stack: List[ChaseElement] = sorted(self.individuals, reverse=True)
        while stack:
            e = stack.pop()
            yield e
            stack.extend(c for _, c in reversed(self.children(e)))

    @property
    def anon(self) -> Dict[str, List[AnonElement]]:
        forest: Dict[str, List[AnonElement]] = {}
        for a in sorted(self.individuals):
            found: List[AnonElement] = []
            stack = [c for _, c in self.children(a)]
            while stack:
                e = stack.pop(0)
                found.append(e)
                stack.extend(c for _, c in self.children(e))
            forest[a] = found
        return forest

    def matches(
        self,
        q: ConjQuery,
        fixed: Optional[Mapping[str, str]] = None,
    ) -> Iterator[Dict[str, ChaseElement]]:
        """Homomorphisms of *q* into this model; answer variables go to named elements."""
        return _match(q, self, dict(fixed or {}))

    def satisfies(self, q: ConjQuery, answer: Sequence[str]) -> bool:
        if len(answer) != len(q.answer_vars):
            raise ArityError(f"expected {len(q.answer_vars)} answer values, got {len(answer)}")
        fixed: Dict[str, str] = {}
        for v, a in zip(q.answer_vars, answer):
            if fixed.setdefault(v, a) != a:
                return False
        return next(self.matches(q, fixed), None) is not None

    def answers(self, q: ConjQuery) -> FrozenSet[Tuple[str, ...]]:
        return frozenset(
            tuple(h[v] for v in q.answer_vars)  # type: ignore[misc]
            for h in self.matches(q)
        )


def _edge_key(edge: Tuple[str, Element]) -> Tuple[str, int, str]:
    r, w = edge
    if isinstance(w, Witness):
        return (r, 1, w.name)
    return (r, 0, w)


def _match(
    q: ConjQuery, model: ChaseModel, fixed: Dict[str, str]
) -> Iterator[Dict[str, ChaseElement]]:
    answer = set(q.answer_vars)
    for v, a in fixed.items():
        if a not in model.individuals:
            return
    variables = list(q.variables)
    assignment: Dict[str, ChaseElement] = dict(fixed)

    def consistent(v: str, e: ChaseElement) -> bool:
        if v in answer and not model.is_named(e):
            return False
        if not q.names_at(v) <= model.labels(e):
            return False
        for r, w in q.out_edges(v):
            target = e if w == v else assignment.get(w)
            if target is not None and target not in model.successors(e, r):
                return False
        for r, u in q.in_edges(v):
            source = assignment.get(u)
            if u != v and source is not None and e not in model.successors(source, r):
                return False
        for a in q.eq_atoms:
            if v in (a.left, a.right):
                other = a.right if v == a.left else a.left
                bound = e if other == v else assignment.get(other)
                if bound is not None and bound != e:
                    return False
        return True

    for v, e in fixed.items():
        if not consistent(v, e):
            return

    def pick() -> Optional[str]:
        best = None
        best_key = None
        for v in variables:
            if v in assignment:
                continue
            linked = sum(1 for _, w in q.out_edges(v) + q.in_edges(v) if w in assignment)
            key = (linked > 0, linked, v in answer, len(q.names_at(v)), -variables.index(v))
            if best_key is None or key > best_key:
                best, best_key = v, key
        return best

    def candidates(v: str) -> Iterable[ChaseElement]:
        for r, w in q.in_edges(v):
            if w in assignment and w != v:
                return model.successors(assignment[w], r)
        for r, w in q.out_edges(v):
            if w in assignment and w != v:
                return model.predecessors(assignment[w], r)
        if v in answer:
            return sorted(model.individuals)
        return model.elements()

    def search() -> Iterator[Dict[str, ChaseElement]]:
        v = pick()
        if v is None:
            yield dict(assignment)
            return
        for e in list(candidates(v)):
            if consistent(v, e):
                assignment[v] = e
                yield from search()
                del assignment[v]

    yield from search()


def subsumes(t: TBox, c: Concept, d: Concept) -> bool:
    """``t ⊨ c ⊑ d``."""
    return reasoner_for(t).subsumes(c, d)


def saturate(a: Abox, t: TBox) -> Abox:
    return reasoner_for(t).saturate(a)


def chase(a: Abox, t: TBox, depth: int) -> ChaseModel:
    return reasoner_for(t).chase(a, depth)


def instance_of(a: Abox, t: TBox, individual: str, c: Concept) -> bool:
    """``a, t ⊨ c(individual)``."""
    return reasoner_for(t).instance_of(a, individual, c)


def _tree_concept(q: ConjQuery) -> Optional[Concept]:
    try:
        return tree_cq_to_concept(q)
    except NotTreeShapedError:
        return None


def certain_answer(a: Abox, t: TBox, q: ConjQuery, answer: Sequence[str]) -> bool:
    """``a, t ⊨ q(answer)``."""
    if len(answer) != len(q.answer_vars):
        raise ArityError(f"expected {len(q.answer_vars)} answer values, got {len(answer)}")
    missing = [b for b in answer if b not in a.individuals]
    if missing:
        raise OmqError(f"not an individual of the ABox: {', '.join(missing)}")
    if len(q.answer_vars) == 1:
        c = _tree_concept(q)
        if c is not None:
            return reasoner_for(t).instance_of(a, answer[0], c)
    return chase(a, t, len(q.variables)).satisfies(q, answer)


def certain_answers(a: Abox, t: TBox, q: ConjQuery) -> FrozenSet[Tuple[str, ...]]:
    """All certain answer tuples of *q* over *a* and *t*."""
    return chase(a, t, len(q.variables)).answers(q)


def classify_names(t: TBox) -> Dict[str, FrozenSet[str]]:
    """Concept hierarchy: every concept name of *t* mapped to the names it entails."""
    r = reasoner_for(t)
    return {n: r.entailed_names(Name(n)) for n in sorted(t.concept_names())}

