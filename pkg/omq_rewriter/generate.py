"""Seeded random TBoxes, queries and ABoxes for cross-validation corpora."""

import logging
import random
from pathlib import Path
from typing import List, Optional, Sequence, Set, Tuple

import yaml

from .model import (
    FULL,
    TOP,
    Abox,
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
    conj,
)
from .parser import serialize_cq, serialize_tbox
from .structure import QueryClass, classify

logger = logging.getLogger(__name__)

CONCEPTS = ("A", "B", "C")
ROLES = ("r", "s")


def random_concept(
    rng: random.Random,
    concepts: Sequence[str] = CONCEPTS,
    roles: Sequence[str] = ROLES,
    depth: int = 1,
) -> Concept:
    """A small EL concept with at most *depth* nested existentials."""
    parts: List[Concept] = []
    for _ in range(rng.randint(1, 2)):
        if depth > 0 and rng.random() < 0.4:
            filler = random_concept(rng, concepts, roles, depth - 1) if rng.random() < 0.7 else TOP
            parts.append(Exists(rng.choice(roles), filler))
        else:
            parts.append(Name(rng.choice(concepts)))
    return conj(*parts)


def random_tbox(
    rng: random.Random,
    size: int = 3,
    concepts: Sequence[str] = CONCEPTS,
    roles: Sequence[str] = ROLES,
    depth: int = 1,
) -> TBox:
    cis: Set[ConceptInclusion] = set()
    while len(cis) < size:
        lhs = random_concept(rng, concepts, roles, depth)
        rhs = random_concept(rng, concepts, roles, depth)
        if lhs != rhs:
            cis.add(ConceptInclusion(lhs, rhs))
    return TBox(frozenset(cis))


def random_query(
    rng: random.Random,
    max_vars: int = 4,
    answer: int = 1,
    concepts: Sequence[str] = CONCEPTS,
    roles: Sequence[str] = ROLES,
    extra_edges: float = 0.3,
) -> ConjQuery:
    """A rooted CQ: a random spanning tree over the variables plus a few extra edges."""
    answer_vars = ("x", "z")[:answer]
    n = rng.randint(max(answer, 1), max(max_vars, answer))
    variables = list(answer_vars) + [f"y{i}" for i in range(1, n - len(answer_vars) + 1)]
    atoms: Set[Atom] = set()
    for i, v in enumerate(variables[1:], start=1):
        u = variables[rng.randrange(i)]
        src, dst = (u, v) if rng.random() < 0.8 else (v, u)
        atoms.add(RoleAtom(rng.choice(roles), src, dst))
    for _ in range(len(variables)):
        if len(variables) > 1 and rng.random() < extra_edges:
            src, dst = rng.sample(variables, 2)
            atoms.add(RoleAtom(rng.choice(roles), src, dst))
    for v in variables:
        if rng.random() < 0.5:
            atoms.add(ConceptAtom(rng.choice(concepts), v))
    if not atoms:
        atoms.add(ConceptAtom(rng.choice(concepts), answer_vars[0]))
    return ConjQuery(answer_vars, frozenset(atoms))


def random_abox(
    rng: random.Random,
    individuals: int = 3,
    assertions: int = 4,
    concepts: Sequence[str] = CONCEPTS,
    roles: Sequence[str] = ROLES,
) -> Abox:
    inds = [f"a{i}" for i in range(1, individuals + 1)]
    ca: Set[Tuple[str, str]] = set()
    ra: Set[Tuple[str, str, str]] = set()
    for _ in range(assertions):
        if rng.random() < 0.5:
            ca.add((rng.choice(concepts), rng.choice(inds)))
        else:
            ra.add((rng.choice(roles), rng.choice(inds), rng.choice(inds)))
    return Abox(frozenset(ca), frozenset(ra), frozenset(inds))


def random_omq(
    rng: random.Random,
    tbox_size: int = 2,
    max_vars: int = 3,
    answer: int = 1,
    sigma: Optional[Signature] = None,
) -> Omq:
    """A random OMQ whose query is rooted and supported."""
    while True:
        q = random_query(rng, max_vars=max_vars, answer=answer)
        if classify(q) is not QueryClass.UNSUPPORTED:
            break
    return Omq(random_tbox(rng, tbox_size), sigma or FULL, q)


def write_corpus(directory: Path, count: int, seed: int) -> List[Path]:
    """Write *count* random bench cases (tbox, query and case YAML) into *directory*."""
    rng = random.Random(seed)
    directory.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    for i in range(1, count + 1):
        omq = random_omq(rng, answer=1 if rng.random() < 0.7 else 2)
        stem = f"random{i:03d}"
        (directory / f"{stem}.tbox").write_text(serialize_tbox(omq.tbox))
        (directory / f"{stem}.cq").write_text(serialize_cq(omq.query) + "\n")
        case = {
            "name": stem,
            "ontology": "random",
            "tbox": f"{stem}.tbox",
            "query": f"{stem}.cq",
        }
        path = directory / f"{stem}.yaml"
        path.write_text(yaml.safe_dump(case, sort_keys=True))
        written.append(path)
    logger.info("wrote %d random cases to %s (seed %d)", count, directory, seed)
    return written
