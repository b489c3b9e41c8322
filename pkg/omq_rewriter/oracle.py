"""Brute-force checks of rewritings against certain answers.

Small Σ-ABoxes are enumerated exhaustively (up to renaming individuals);
on each one the UCQ is evaluated directly and compared with the certain
answers of the OMQ.
"""

import logging
from dataclasses import dataclass
from itertools import combinations, permutations, product
from math import comb
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple

from .errors import ArityError, ConfigError
from .model import Abox, Omq, Signature, TBox, UnionQuery, cq_as_abox
from .reasoner import certain_answers, chase
from .structure import collapse_equalities, contained_in

logger = logging.getLogger(__name__)

_EMPTY = TBox(frozenset())

Assertion = Tuple[str, ...]


@dataclass(frozen=True)
class Verdict:
    ok: bool
    checked: int = 0
    finitized: bool = False
    counterexample: Optional[Tuple[Abox, Tuple[str, ...]]] = None


class AboxEnumeration:
    """Every Σ-ABox over ``a1..an`` (n ≤ max_individuals), once per renaming class."""

    def __init__(
        self,
        sigma: Signature,
        max_individuals: int = 3,
        max_assertions: Optional[int] = None,
        finitized: bool = False,
    ) -> None:
        if sigma.full:
            raise ConfigError("cannot enumerate ABoxes over the full signature; finitize it first")
        if max_individuals < 1:
            raise ConfigError(f"max_individuals must be positive, got {max_individuals}")
        self.sigma = sigma
        self.max_individuals = max_individuals
        self.max_assertions = max_assertions
        self.finitized = finitized

    @classmethod
    def for_omq(
        cls, omq: Omq, max_individuals: int = 3, max_assertions: Optional[int] = None
    ) -> "AboxEnumeration":
        """Restrict Σ to the symbols of the TBox and query."""
        sigma = omq.sigma.finitize(omq.concept_symbols(), omq.role_symbols())
        return cls(sigma, max_individuals, max_assertions, finitized=omq.sigma.full)

    @staticmethod
    def individuals(n: int) -> Tuple[str, ...]:
        return tuple(f"a{i}" for i in range(1, n + 1))

    def _universe(self, n: int) -> List[Assertion]:
        inds = self.individuals(n)
        out: List[Assertion] = [(c, a) for c in sorted(self.sigma.concept_names) for a in inds]
        out += [(r, a, b) for r in sorted(self.sigma.role_names) for a, b in product(inds, inds)]
        return out

    def raw_count(self, n: int) -> int:
        """ABoxes over exactly ``a1..an`` before renaming classes are merged."""
        size = len(self._universe(n))
        if self.max_assertions is None:
            return 2 ** size
        return sum(comb(size, k) for k in range(min(size, self.max_assertions) + 1))

    def iter_raw(self, n: int) -> Iterator[Abox]:
        universe = self._universe(n)
        inds = frozenset(self.individuals(n))
        limit = len(universe) if self.max_assertions is None else min(len(universe), self.max_assertions)
        for k in range(limit + 1):
            for chosen in combinations(universe, k):
                yield _abox(chosen, inds)

    def __iter__(self) -> Iterator[Abox]:
        for n in range(1, self.max_individuals + 1):
            renamings = [dict(zip(self.individuals(n), p)) for p in permutations(self.individuals(n))]
            seen = set()
            for a in self.iter_raw(n):
                key = min(_signature_key(a, m) for m in renamings)
                if key in seen:
                    continue
                seen.add(key)
                yield a


def _abox(chosen: Sequence[Assertion], individuals: FrozenSet[str]) -> Abox:
    concepts = frozenset(x for x in chosen if len(x) == 2)
    roles = frozenset(x for x in chosen if len(x) == 3)
    return Abox(concepts, roles, individuals)  # type: ignore[arg-type]


def _signature_key(a: Abox, m: Dict[str, str]) -> Tuple[Tuple[str, ...], ...]:
    renamed = [(c, m[x]) for c, x in a.concept_assertions]
    renamed += [(r, m[x], m[y]) for r, x, y in a.role_assertions]
    return tuple(sorted(renamed))


def ucq_answers(a: Abox, u: UnionQuery) -> FrozenSet[Tuple[str, ...]]:
    """Answers of *u* on *a* read as a plain database."""
    model = chase(a, _EMPTY, 0)
    out: Set[Tuple[str, ...]] = set()
    for d in u:
        out |= model.answers(d)
    return frozenset(out)


def eval_ucq(a: Abox, u: UnionQuery, answer: Sequence[str]) -> bool:
    if len(answer) != len(u.answer_vars):
        raise ArityError(f"expected {len(u.answer_vars)} answer values, got {len(answer)}")
    model = chase(a, _EMPTY, 0)
    return any(model.satisfies(d, answer) for d in u)


def check_rewriting(
    omq: Omq,
    u: UnionQuery,
    max_individuals: int = 3,
    max_assertions: Optional[int] = None,
) -> Verdict:
    """Compare *u* with the certain answers of *omq* on every enumerated Σ-ABox."""
    q0 = omq.query
    if len(u.answer_vars) != len(q0.answer_vars):
        raise ArityError(f"rewriting has arity {len(u.answer_vars)}, query has {len(q0.answer_vars)}")
    enum = AboxEnumeration.for_omq(omq, max_individuals, max_assertions)
    checked = 0
    for a in enum:
        checked += 1
        expected = certain_answers(a, omq.tbox, q0)
        got = ucq_answers(a, u)
        if expected != got:
            witness = sorted(expected ^ got)[0]
            logger.warning("counterexample for %s on answer %s:\n%s", q0, witness, a)
            return Verdict(False, checked, enum.finitized, (a, witness))
    logger.info("rewriting agrees with %s on %d ABoxes", q0, checked)
    return Verdict(True, checked, enum.finitized)


def check_sound(omq: Omq, u: UnionQuery) -> Verdict:
    """Every disjunct, read as an ABox, has its own answer tuple as a certain answer."""
    q0 = omq.query
    for i, d in enumerate(u, start=1):
        if not contained_in(omq.tbox, d, q0):
            collapsed, mapping = collapse_equalities(d)
            a, _ = cq_as_abox(collapsed)
            return Verdict(False, i, False, (a, tuple(mapping[v] for v in d.answer_vars)))
    return Verdict(True, len(u))


def _plain_contained(u1: UnionQuery, u2: UnionQuery) -> bool:
    return all(any(contained_in(_EMPTY, d, e) for e in u2) for d in u1)


def ucq_equivalent(
    u1: UnionQuery,
    u2: UnionQuery,
    omq: Optional[Omq] = None,
    max_individuals: int = 3,
    max_assertions: Optional[int] = None,
) -> bool:
    """Plain mutual containment, or agreement on the ABoxes of *omq*'s signature."""
    if len(u1.answer_vars) != len(u2.answer_vars):
        raise ArityError(f"arities {len(u1.answer_vars)} and {len(u2.answer_vars)} differ")
    if omq is None:
        return _plain_contained(u1, u2) and _plain_contained(u2, u1)
    for a in AboxEnumeration.for_omq(omq, max_individuals, max_assertions):
        if ucq_answers(a, u1) != ucq_answers(a, u2):
            return False
    return True
