"""Immutable domain types: EL concepts, TBoxes, ABoxes, queries, signatures, OMQs.

Concepts double as tree-shaped CQs; ``concept_to_tree_cq`` and
``tree_cq_to_concept`` convert between the two views.  Queries carry a
canonical code (``ConjQuery.code``) that is equal for two queries iff they are
isomorphic via a renaming that fixes the answer variables.
"""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import count
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Set,
    Tuple,
    Union,
)

from .errors import ArityError, NotTreeShapedError, OmqError

# Every generated name contains this marker; user input never does.
RESERVED = "__"
GOAL = "__N"
_AT = "__at__"
_TREE = "AC__"


@dataclass(frozen=True)
class Top:
    def __str__(self) -> str:
        return "Top"


@dataclass(frozen=True)
class Name:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class And:
    """Conjunction; conjuncts are flattened, Top-free, deduplicated and sorted."""

    conjuncts: Tuple["Concept", ...]

    def __post_init__(self) -> None:
        flat = _flatten(self.conjuncts)
        if len(flat) < 2:
            raise ValueError("And needs at least two distinct non-Top conjuncts; use conj()")
        object.__setattr__(self, "conjuncts", flat)

    def __str__(self) -> str:
        return concept_code(self)


@dataclass(frozen=True)
class Exists:
    role: str
    filler: "Concept" = field(default_factory=Top)

    def __str__(self) -> str:
        return concept_code(self)


Concept = Union[Top, Name, And, Exists]
TOP = Top()


def _flatten(concepts: Iterable[Concept]) -> Tuple[Concept, ...]:
    seen: Dict[str, Concept] = {}
    for c in concepts:
        parts = c.conjuncts if isinstance(c, And) else (c,)
        for p in parts:
            if not isinstance(p, Top):
                seen.setdefault(concept_code(p), p)
    return tuple(seen[k] for k in sorted(seen))


def conj(*concepts: Concept) -> Concept:
    """Smart conjunction: Top for no conjuncts, the conjunct itself for one."""
    flat = _flatten(concepts)
    if not flat:
        return TOP
    if len(flat) == 1:
        return flat[0]
    return And(flat)


@lru_cache(maxsize=None)
def concept_code(c: Concept) -> str:
    """Deterministic encoding; coincides with the native concept syntax."""
    if isinstance(c, Top):
        return "Top"
    if isinstance(c, Name):
        return c.name
    if isinstance(c, And):
        return "and(" + ",".join(concept_code(x) for x in c.conjuncts) + ")"
    return f"some({c.role},{concept_code(c.filler)})"


def conjuncts(c: Concept) -> Tuple[Concept, ...]:
    if isinstance(c, Top):
        return ()
    if isinstance(c, And):
        return c.conjuncts
    return (c,)


def top_level_names(c: Concept) -> FrozenSet[str]:
    return frozenset(x.name for x in conjuncts(c) if isinstance(x, Name))


def top_level_exists(c: Concept) -> Tuple[Exists, ...]:
    return tuple(x for x in conjuncts(c) if isinstance(x, Exists))


def concept_names(c: Concept) -> FrozenSet[str]:
    if isinstance(c, Name):
        return frozenset({c.name})
    if isinstance(c, And):
        return frozenset().union(*(concept_names(x) for x in c.conjuncts))
    if isinstance(c, Exists):
        return concept_names(c.filler)
    return frozenset()


def role_names(c: Concept) -> FrozenSet[str]:
    if isinstance(c, And):
        return frozenset().union(*(role_names(x) for x in c.conjuncts))
    if isinstance(c, Exists):
        return frozenset({c.role}) | role_names(c.filler)
    return frozenset()


def subconcepts(c: Concept) -> FrozenSet[Concept]:
    """All subconcepts of *c*, including *c*."""
    out: Set[Concept] = {c}
    if isinstance(c, And):
        for x in c.conjuncts:
            out |= subconcepts(x)
    elif isinstance(c, Exists):
        out |= subconcepts(c.filler)
    return frozenset(out)


def concept_depth(c: Concept) -> int:
    if isinstance(c, And):
        return max(concept_depth(x) for x in c.conjuncts)
    if isinstance(c, Exists):
        return 1 + concept_depth(c.filler)
    return 0


def concept_size(c: Concept) -> int:
    """Number of name and existential occurrences (Top counts as zero)."""
    if isinstance(c, And):
        return sum(concept_size(x) for x in c.conjuncts)
    if isinstance(c, Exists):
        return 1 + concept_size(c.filler)
    return 1 if isinstance(c, Name) else 0


@dataclass(frozen=True)
class ConceptInclusion:
    lhs: Concept
    rhs: Concept

    def __str__(self) -> str:
        return f"{concept_code(self.lhs)} SubClassOf {concept_code(self.rhs)}"


def _ci_key(ci: ConceptInclusion) -> Tuple[str, str]:
    return concept_code(ci.lhs), concept_code(ci.rhs)


@dataclass(frozen=True)
class TBox:
    inclusions: FrozenSet[ConceptInclusion] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "inclusions", frozenset(self.inclusions))

    def __iter__(self) -> Iterator[ConceptInclusion]:
        return iter(self.sorted_inclusions)

    def __len__(self) -> int:
        return len(self.inclusions)

    def __contains__(self, ci: object) -> bool:
        return ci in self.inclusions

    @cached_property
    def sorted_inclusions(self) -> Tuple[ConceptInclusion, ...]:
        return tuple(sorted(self.inclusions, key=_ci_key))

    def union(self, extra: Iterable[ConceptInclusion]) -> "TBox":
        return TBox(self.inclusions | frozenset(extra))

    def concept_names(self) -> FrozenSet[str]:
        return frozenset().union(
            *(concept_names(ci.lhs) | concept_names(ci.rhs) for ci in self.inclusions)
        )

    def role_names(self) -> FrozenSet[str]:
        return frozenset().union(
            *(role_names(ci.lhs) | role_names(ci.rhs) for ci in self.inclusions)
        )


@dataclass(frozen=True)
class ConceptAtom:
    name: str
    var: str

    @property
    def variables(self) -> Tuple[str, ...]:
        return (self.var,)

    def __str__(self) -> str:
        return f"{self.name}({self.var})"


@dataclass(frozen=True)
class RoleAtom:
    role: str
    source: str
    target: str

    @property
    def variables(self) -> Tuple[str, ...]:
        return (self.source, self.target)

    def __str__(self) -> str:
        return f"{self.role}({self.source}, {self.target})"


@dataclass(frozen=True)
class EqAtom:
    left: str
    right: str

    def __post_init__(self) -> None:
        if self.right < self.left:
            left, right = self.right, self.left
            object.__setattr__(self, "left", left)
            object.__setattr__(self, "right", right)

    @property
    def variables(self) -> Tuple[str, ...]:
        return (self.left, self.right)

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


Atom = Union[ConceptAtom, RoleAtom, EqAtom]


def atom_key(a: Atom) -> Tuple[str, ...]:
    if isinstance(a, ConceptAtom):
        return ("0", a.name, a.var)
    if isinstance(a, RoleAtom):
        return ("1", a.role, a.source, a.target)
    return ("2", a.left, a.right)


def rename_atom(a: Atom, mapping: Mapping[str, str]) -> Atom:
    m = lambda v: mapping.get(v, v)  # noqa: E731
    if isinstance(a, ConceptAtom):
        return ConceptAtom(a.name, m(a.var))
    if isinstance(a, RoleAtom):
        return RoleAtom(a.role, m(a.source), m(a.target))
    return EqAtom(m(a.left), m(a.right))


@dataclass(frozen=True)
class ConjQuery:
    """A CQ ``q(answer_vars) = ∃y atoms``.

    Equality atoms may only relate answer variables.  Answer variables may
    occur in no atom at all (e.g. after fork elimination).
    """

    answer_vars: Tuple[str, ...]
    atoms: FrozenSet[Atom] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "answer_vars", tuple(self.answer_vars))
        object.__setattr__(self, "atoms", frozenset(self.atoms))
        if len(set(self.answer_vars)) != len(self.answer_vars):
            raise OmqError(f"duplicate answer variable in {self.answer_vars}")
        for a in self.atoms:
            if isinstance(a, EqAtom) and not (
                a.left in self.answer_vars and a.right in self.answer_vars
            ):
                raise OmqError(f"equality atom {a} must relate answer variables")

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in self.sorted_atoms)
        head = f"q({', '.join(self.answer_vars)})"
        return f"{head} :- {body}." if body else f"{head}."

    @cached_property
    def sorted_atoms(self) -> Tuple[Atom, ...]:
        return tuple(sorted(self.atoms, key=atom_key))

    @cached_property
    def variables(self) -> Tuple[str, ...]:
        """Answer variables first (in order), then quantified ones sorted."""
        return self.answer_vars + self.quantified_vars

    @cached_property
    def quantified_vars(self) -> Tuple[str, ...]:
        answer = set(self.answer_vars)
        found = {v for a in self.atoms for v in a.variables if v not in answer}
        return tuple(sorted(found))

    @cached_property
    def concept_atoms(self) -> Tuple[ConceptAtom, ...]:
        return tuple(a for a in self.sorted_atoms if isinstance(a, ConceptAtom))

    @cached_property
    def role_atoms(self) -> Tuple[RoleAtom, ...]:
        return tuple(a for a in self.sorted_atoms if isinstance(a, RoleAtom))

    @cached_property
    def eq_atoms(self) -> Tuple[EqAtom, ...]:
        return tuple(a for a in self.sorted_atoms if isinstance(a, EqAtom))

    @cached_property
    def _labels(self) -> Dict[str, FrozenSet[str]]:
        out: Dict[str, Set[str]] = {v: set() for v in self.variables}
        for a in self.concept_atoms:
            out[a.var].add(a.name)
        return {v: frozenset(s) for v, s in out.items()}

    @cached_property
    def _out(self) -> Dict[str, Tuple[Tuple[str, str], ...]]:
        out: Dict[str, List[Tuple[str, str]]] = {v: [] for v in self.variables}
        for a in self.role_atoms:
            out[a.source].append((a.role, a.target))
        return {v: tuple(sorted(e)) for v, e in out.items()}

    @cached_property
    def _in(self) -> Dict[str, Tuple[Tuple[str, str], ...]]:
        out: Dict[str, List[Tuple[str, str]]] = {v: [] for v in self.variables}
        for a in self.role_atoms:
            out[a.target].append((a.role, a.source))
        return {v: tuple(sorted(e)) for v, e in out.items()}

    def names_at(self, var: str) -> FrozenSet[str]:
        return self._labels.get(var, frozenset())

    def out_edges(self, var: str) -> Tuple[Tuple[str, str], ...]:
        """``(role, target)`` pairs for atoms ``role(var, target)``."""
        return self._out.get(var, ())

    def in_edges(self, var: str) -> Tuple[Tuple[str, str], ...]:
        """``(role, source)`` pairs for atoms ``role(source, var)``."""
        return self._in.get(var, ())

    def concept_names(self) -> FrozenSet[str]:
        return frozenset(a.name for a in self.concept_atoms)

    def role_names(self) -> FrozenSet[str]:
        return frozenset(a.role for a in self.role_atoms)

    def rename(self, mapping: Mapping[str, str]) -> "ConjQuery":
        return ConjQuery(
            tuple(mapping.get(v, v) for v in self.answer_vars),
            frozenset(rename_atom(a, mapping) for a in self.atoms),
        )

    def with_atoms(self, atoms: Iterable[Atom]) -> "ConjQuery":
        return ConjQuery(self.answer_vars, frozenset(atoms))

    def eq_classes(self) -> "EqClasses":
        return EqClasses.of(self)

    @property
    def code(self) -> str:
        return canonical_code(self)

    def canonical_code(self) -> str:
        return canonical_code(self)


@dataclass(frozen=True)
class EqClasses:
    """Partition of the answer variables induced by equality atoms."""

    classes: Tuple[Tuple[str, ...], ...]

    @classmethod
    def of(cls, q: ConjQuery) -> "EqClasses":
        parent = {v: v for v in q.answer_vars}

        def find(v: str) -> str:
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for a in q.eq_atoms:
            ra, rb = find(a.left), find(a.right)
            if ra != rb:
                parent[rb] = ra
        groups: Dict[str, List[str]] = {}
        for v in q.answer_vars:
            groups.setdefault(find(v), []).append(v)
        return cls(tuple(tuple(g) for g in groups.values()))

    def members(self, var: str) -> Tuple[str, ...]:
        for c in self.classes:
            if var in c:
                return c
        return (var,)

    def representative(self, var: str) -> str:
        """First member in answer-variable order."""
        return self.members(var)[0]


@dataclass(frozen=True)
class UnionQuery:
    answer_vars: Tuple[str, ...]
    disjuncts: Tuple[ConjQuery, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "answer_vars", tuple(self.answer_vars))
        object.__setattr__(self, "disjuncts", tuple(self.disjuncts))
        for d in self.disjuncts:
            if d.answer_vars != self.answer_vars:
                raise ArityError(
                    f"disjunct answer variables {d.answer_vars} differ from {self.answer_vars}"
                )

    @classmethod
    def of(cls, answer_vars: Iterable[str], disjuncts: Iterable[ConjQuery]) -> "UnionQuery":
        """Deduplicate by canonical code and order disjuncts by code."""
        by_code: Dict[str, ConjQuery] = {}
        for d in disjuncts:
            by_code.setdefault(d.code, d)
        return cls(tuple(answer_vars), tuple(by_code[k] for k in sorted(by_code)))

    def __iter__(self) -> Iterator[ConjQuery]:
        return iter(self.disjuncts)

    def __len__(self) -> int:
        return len(self.disjuncts)

    def concept_names(self) -> FrozenSet[str]:
        return frozenset().union(*(d.concept_names() for d in self.disjuncts))

    def role_names(self) -> FrozenSet[str]:
        return frozenset().union(*(d.role_names() for d in self.disjuncts))


@dataclass(frozen=True)
class Abox:
    concept_assertions: FrozenSet[Tuple[str, str]] = frozenset()
    role_assertions: FrozenSet[Tuple[str, str, str]] = frozenset()
    individuals: FrozenSet[str] = frozenset()

    def __post_init__(self) -> None:
        ca = frozenset(self.concept_assertions)
        ra = frozenset(self.role_assertions)
        inds = set(self.individuals)
        inds.update(b for _, b in ca)
        for _, b, c in ra:
            inds.update((b, c))
        object.__setattr__(self, "concept_assertions", ca)
        object.__setattr__(self, "role_assertions", ra)
        object.__setattr__(self, "individuals", frozenset(inds))

    def __len__(self) -> int:
        return len(self.concept_assertions) + len(self.role_assertions)

    def __str__(self) -> str:
        lines = [f"{a}({b})" for a, b in sorted(self.concept_assertions)]
        lines += [f"{r}({b}, {c})" for r, b, c in sorted(self.role_assertions)]
        return "\n".join(lines)

    def concept_names(self) -> FrozenSet[str]:
        return frozenset(a for a, _ in self.concept_assertions)

    def role_names(self) -> FrozenSet[str]:
        return frozenset(r for r, _, _ in self.role_assertions)

    def extend(self, concepts: Iterable[Tuple[str, str]] = (), roles: Iterable[Tuple[str, str, str]] = ()) -> "Abox":
        return Abox(
            self.concept_assertions | frozenset(concepts),
            self.role_assertions | frozenset(roles),
            self.individuals,
        )


@dataclass(frozen=True)
class Signature:
    """Admitted ABox symbols.  ``full`` admits every non-reserved name."""

    concept_names: FrozenSet[str] = frozenset()
    role_names: FrozenSet[str] = frozenset()
    full: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "concept_names", frozenset(self.concept_names))
        object.__setattr__(self, "role_names", frozenset(self.role_names))

    @classmethod
    def full_signature(cls) -> "Signature":
        return cls(full=True)

    @classmethod
    def of_symbols(cls, names: Iterable[str]) -> "Signature":
        """A bare symbol list; each name may be used as concept or role."""
        ns = frozenset(names)
        return cls(ns, ns)

    def admits_concept(self, name: str) -> bool:
        return name in self.concept_names or (self.full and not is_reserved(name))

    def admits_role(self, name: str) -> bool:
        return name in self.role_names or (self.full and not is_reserved(name))

    def admits_query(self, q: ConjQuery) -> bool:
        return all(self.admits_concept(a.name) for a in q.concept_atoms) and all(
            self.admits_role(a.role) for a in q.role_atoms
        )

    def extend(self, concepts: Iterable[str] = (), roles: Iterable[str] = ()) -> "Signature":
        return Signature(
            self.concept_names | frozenset(concepts),
            self.role_names | frozenset(roles),
            self.full,
        )

    def finitize(self, concepts: Iterable[str], roles: Iterable[str]) -> "Signature":
        """Restrict to the given symbols, dropping the full flag."""
        return Signature(
            frozenset(c for c in concepts if self.admits_concept(c)),
            frozenset(r for r in roles if self.admits_role(r)),
        )


FULL = Signature.full_signature()


@dataclass(frozen=True)
class Omq:
    tbox: TBox
    sigma: Signature
    query: ConjQuery

    def __post_init__(self) -> None:
        if self.query.eq_atoms:
            raise OmqError("the query of an OMQ may not contain equality atoms")

    def concept_symbols(self) -> FrozenSet[str]:
        return self.tbox.concept_names() | self.query.concept_names()

    def role_symbols(self) -> FrozenSet[str]:
        return self.tbox.role_names() | self.query.role_names()


def is_reserved(name: str) -> bool:
    return RESERVED in name


def superscript(name: str, var: str) -> str:
    """``A^x`` / ``r^x``."""
    return f"{name}{_AT}{var}"


def exists_name(concept: Exists, var: str) -> str:
    """``A^x_{∃r.E}``."""
    return f"EX{RESERVED}{concept.role}{RESERVED}{concept_code(concept.filler)}{_AT}{var}"


def tree_name(c: Concept) -> str:
    """``A_C`` for an eliminated quantified tree ``C``."""
    return f"{_TREE}{concept_code(c)}"


def is_tree_name(name: str) -> bool:
    return name.startswith(_TREE)


def split_superscript(name: str) -> Optional[Tuple[str, str]]:
    """``A__at__x`` -> ``("A", "x")``; None for names without a superscript."""
    if _AT not in name:
        return None
    base, var = name.rsplit(_AT, 1)
    return base, var


def fresh_vars(used: Iterable[str], prefix: str = "__v") -> Iterator[str]:
    taken = set(used)
    for i in count():
        name = f"{prefix}{i}"
        if name not in taken:
            taken.add(name)
            yield name


def unfold_concept(c: Concept, var: str, used: Set[str]) -> Set[Atom]:
    """Atoms of *c* rooted at *var*; fresh variables avoid and extend *used*."""
    atoms: Set[Atom] = set()
    fresh = fresh_vars(used)
    stack = [(c, var)]
    while stack:
        cur, v = stack.pop()
        for part in conjuncts(cur):
            if isinstance(part, Name):
                atoms.add(ConceptAtom(part.name, v))
            else:
                y = next(fresh)
                used.add(y)
                atoms.add(RoleAtom(part.role, v, y))
                stack.append((part.filler, y))
    return atoms


def concept_to_tree_cq(c: Concept, root: str = "x", avoid: Iterable[str] = ()) -> ConjQuery:
    used = set(avoid) | {root}
    return ConjQuery((root,), unfold_concept(c, root, used))


def concept_at(q: ConjQuery, var: str, stop: FrozenSet[str] = frozenset()) -> Concept:
    """The concept described by *var* and everything below it, not entering *stop*.

    Callers guarantee the part of *q* below *var* is acyclic.
    """
    parts: List[Concept] = [Name(n) for n in q.names_at(var)]
    for role, child in q.out_edges(var):
        if child not in stop:
            parts.append(Exists(role, concept_at(q, child, stop)))
    return conj(*parts)


def tree_cq_to_concept(q: ConjQuery) -> Concept:
    if len(q.answer_vars) != 1:
        raise NotTreeShapedError(f"tree CQ needs exactly one answer variable, got {q.answer_vars}")
    if q.eq_atoms:
        raise NotTreeShapedError("tree CQ may not contain equality atoms")
    root = q.answer_vars[0]
    if q.in_edges(root):
        raise NotTreeShapedError(f"root {root} has an incoming role atom")
    seen = {root}
    stack = [root]
    while stack:
        v = stack.pop()
        for _, child in q.out_edges(v):
            if child in seen or len(q.in_edges(child)) != 1:
                raise NotTreeShapedError(f"variable {child} has more than one incoming role atom")
            seen.add(child)
            stack.append(child)
    if len(seen) != len(q.variables):
        raise NotTreeShapedError("not every variable is reachable from the root")
    return concept_at(q, root)


def cq_as_abox(q: ConjQuery) -> Tuple[Abox, Dict[str, str]]:
    """View *q* as an ABox whose individuals are the variable names."""
    concepts = {(a.name, a.var) for a in q.concept_atoms}
    roles = {(a.role, a.source, a.target) for a in q.role_atoms}
    mapping = {v: v for v in q.variables}
    return Abox(frozenset(concepts), frozenset(roles), frozenset(q.variables)), mapping


def _initial_colours(q: ConjQuery) -> Dict[str, int]:
    keys = {}
    for i, v in enumerate(q.answer_vars):
        keys[v] = (0, str(i), ())
    for v in q.quantified_vars:
        keys[v] = (1, "", tuple(sorted(q.names_at(v))))
    return _rank(keys)


def _rank(keys: Mapping[str, object]) -> Dict[str, int]:
    ordered = sorted(set(keys.values()))
    index = {k: i for i, k in enumerate(ordered)}
    return {v: index[k] for v, k in keys.items()}


def _refine(q: ConjQuery, colours: Dict[str, int]) -> Dict[str, int]:
    while True:
        keys = {
            v: (
                colours[v],
                tuple(sorted((r, colours[w]) for r, w in q.out_edges(v))),
                tuple(sorted((r, colours[u]) for r, u in q.in_edges(v))),
            )
            for v in colours
        }
        new = _rank(keys)
        if len(set(new.values())) == len(set(colours.values())):
            return new
        colours = new


def _leaf_code(q: ConjQuery, colours: Dict[str, int]) -> Tuple[str, Dict[str, str]]:
    quantified = sorted(q.quantified_vars, key=lambda v: colours[v])
    mapping = {v: f"_{i}" for i, v in enumerate(quantified)}
    atoms = sorted(atom_key(rename_atom(a, mapping)) for a in q.atoms)
    body = ";".join("|".join(k) for k in atoms)
    return f"{','.join(q.answer_vars)}:{body}", mapping


def _search(q: ConjQuery, colours: Dict[str, int]) -> Tuple[str, Dict[str, str]]:
    colours = _refine(q, colours)
    cells: Dict[int, List[str]] = {}
    for v, c in colours.items():
        cells.setdefault(c, []).append(v)
    target = next((c for c in sorted(cells) if len(cells[c]) > 1), None)
    if target is None:
        return _leaf_code(q, colours)
    best: Optional[Tuple[str, Dict[str, str]]] = None
    for v in sorted(cells[target]):
        keys = {u: (c, 0 if u == v else 1) for u, c in colours.items()}
        result = _search(q, _rank(keys))
        if best is None or result[0] < best[0]:
            best = result
    assert best is not None
    return best


@lru_cache(maxsize=262144)
def _canonical(q: ConjQuery) -> Tuple[str, Tuple[Tuple[str, str], ...]]:
    code, mapping = _search(q, _initial_colours(q))
    return code, tuple(sorted(mapping.items()))


def canonical_code(q: ConjQuery) -> str:
    """Equal for two CQs iff isomorphic by a renaming fixing answer variables."""
    return _canonical(q)[0]


def canonical_order(q: ConjQuery) -> List[str]:
    """Quantified variables of *q* in canonical order."""
    mapping = dict(_canonical(q)[1])
    return sorted(q.quantified_vars, key=lambda v: int(mapping[v][1:]))


def normalize_query(q: ConjQuery, prefix: str = "__v") -> ConjQuery:
    """Rename quantified variables to ``<prefix><i>`` in canonical order."""
    names = fresh_vars(q.answer_vars, prefix)
    return q.rename({v: next(names) for v in canonical_order(q)})
