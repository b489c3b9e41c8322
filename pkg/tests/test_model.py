"""Tests for the immutable domain types in omq_rewriter.model."""

import pytest

from omq_rewriter.errors import ArityError, NotTreeShapedError, OmqError
from omq_rewriter.model import (
    FULL,
    TOP,
    Abox,
    And,
    ConceptAtom,
    ConjQuery,
    EqAtom,
    Exists,
    Name,
    Omq,
    RoleAtom,
    Signature,
    TBox,
    UnionQuery,
    concept_code,
    concept_depth,
    concept_size,
    concept_to_tree_cq,
    conj,
    cq_as_abox,
    is_reserved,
    normalize_query,
    split_superscript,
    superscript,
    top_level_exists,
    top_level_names,
    tree_cq_to_concept,
)
from omq_rewriter.parser import parse_concept, parse_cq


class TestConcepts:
    def test_conj_of_nothing_is_top(self):
        assert conj() == TOP

    def test_conj_single_conjunct(self):
        assert conj(Name("A"), TOP) == Name("A")

    def test_conj_flattens_sorts_and_dedups(self):
        c = conj(Name("B"), conj(Name("A"), Name("B")), TOP)
        assert isinstance(c, And)
        assert c.conjuncts == (Name("A"), Name("B"))

    def test_and_needs_two_conjuncts(self):
        with pytest.raises(ValueError):
            And((Name("A"), Name("A")))

    def test_code_matches_native_syntax(self):
        c = parse_concept("some(r, and(B, A))")
        assert concept_code(c) == "some(r,and(A,B))"
        assert parse_concept(concept_code(c)) == c

    def test_depth_and_size(self):
        c = parse_concept("and(A, some(r, some(s, B)))")
        assert concept_depth(c) == 2
        assert concept_size(c) == 4
        assert concept_size(TOP) == 0

    def test_top_level_parts(self):
        c = parse_concept("and(A, B, some(r, C))")
        assert top_level_names(c) == {"A", "B"}
        assert top_level_exists(c) == (Exists("r", Name("C")),)

    def test_tbox_symbols(self, t1):
        assert t1.concept_names() == {"Albinism", "HereditaryDisease", "Person", "GeneticRiskPatient"}
        assert t1.role_names() == {"hasDisease"}


class TestQueries:
    def test_duplicate_answer_variable_rejected(self):
        with pytest.raises(OmqError):
            ConjQuery(("x", "x"), frozenset())

    def test_equality_on_quantified_variable_rejected(self):
        with pytest.raises(OmqError):
            ConjQuery(("x",), frozenset({RoleAtom("r", "x", "y"), EqAtom("x", "y")}))

    def test_eq_atom_is_ordered(self):
        a = EqAtom("y", "x")
        assert (a.left, a.right) == ("x", "y")

    def test_variables_answer_first(self):
        q = parse_cq("q(y, x) :- r(y, b), r(x, a).")
        assert q.variables == ("y", "x", "a", "b")
        assert q.quantified_vars == ("a", "b")

    def test_code_ignores_quantified_names(self):
        a = parse_cq("q(x) :- r(x, y), A(y).")
        b = parse_cq("q(x) :- r(x, z), A(z).")
        assert a.code == b.code
        assert a != b

    def test_code_respects_answer_positions(self):
        a = parse_cq("q(x, y) :- r(x, y).")
        b = parse_cq("q(x, y) :- r(y, x).")
        assert a.code != b.code

    def test_code_on_symmetric_query(self):
        a = parse_cq("q(x) :- r(x, y1), r(x, y2), A(y1), B(y2).")
        b = parse_cq("q(x) :- r(x, y2), r(x, y1), A(y2), B(y1).")
        assert a.code == b.code

    def test_normalize_query(self):
        q = normalize_query(parse_cq("q(x) :- r(x, y), A(y)."))
        assert str(q) == "q(x) :- A(__v0), r(x, __v0)."

    def test_eq_classes(self):
        q = ConjQuery(("x", "y", "z"), frozenset({EqAtom("y", "z")}))
        classes = q.eq_classes()
        assert classes.members("z") == ("y", "z")
        assert classes.representative("z") == "y"
        assert classes.representative("x") == "x"

    def test_cq_as_abox(self, q2):
        a, mapping = cq_as_abox(q2)
        assert a.concept_assertions == {("GeneticRiskPatient", "x"), ("Albinism", "y")}
        assert a.role_assertions == {("hasDisease", "x", "y")}
        assert mapping == {"x": "x", "y": "y"}


class TestTreeConversion:
    def test_concept_to_tree_cq_and_back(self):
        c = parse_concept("and(A, some(r, and(B, some(s, A))))")
        q = concept_to_tree_cq(c)
        assert q.answer_vars == ("x",)
        assert len(q.role_atoms) == 2
        assert tree_cq_to_concept(q) == c

    def test_non_tree_rejected(self):
        q = parse_cq("q(x) :- r(x, y), s(x, z), t(y, z).")
        with pytest.raises(NotTreeShapedError):
            tree_cq_to_concept(q)

    def test_root_with_incoming_edge_rejected(self):
        with pytest.raises(NotTreeShapedError):
            tree_cq_to_concept(parse_cq("q(x) :- r(y, x)."))


class TestUnionQuery:
    def test_of_dedups_isomorphic_disjuncts(self):
        a = parse_cq("q(x) :- r(x, y).")
        b = parse_cq("q(x) :- r(x, z).")
        u = UnionQuery.of(("x",), [a, b])
        assert len(u) == 1

    def test_arity_mismatch(self):
        with pytest.raises(ArityError):
            UnionQuery(("x",), (parse_cq("q(x, y) :- r(x, y)."),))

    def test_symbols(self):
        u = UnionQuery.of(("x",), [parse_cq("q(x) :- A(x), r(x, y).")])
        assert u.concept_names() == {"A"}
        assert u.role_names() == {"r"}


class TestAboxSignatureOmq:
    def test_individuals_are_derived(self):
        a = Abox(frozenset({("A", "a")}), frozenset({("r", "b", "c")}), frozenset({"d"}))
        assert a.individuals == {"a", "b", "c", "d"}
        assert len(a) == 2

    def test_full_signature_skips_reserved_names(self):
        assert FULL.admits_concept("Person")
        assert not FULL.admits_concept(superscript("Person", "x"))
        assert is_reserved(superscript("Person", "x"))

    def test_finitize(self):
        sigma = Signature.of_symbols({"A", "r"})
        fin = sigma.finitize({"A", "B"}, {"r", "s"})
        assert fin.concept_names == {"A"}
        assert fin.role_names == {"r"}
        assert not fin.full
        assert FULL.finitize({"A"}, {"r"}) == Signature(frozenset({"A"}), frozenset({"r"}))

    def test_extend_keeps_full_flag(self):
        extended = FULL.extend({superscript("A", "x")})
        assert extended.full
        assert extended.admits_concept(superscript("A", "x"))

    def test_admits_query(self, person_grp_sigma, q1, q2):
        assert person_grp_sigma.admits_query(q1)
        assert not person_grp_sigma.admits_query(q2)

    def test_omq_rejects_equalities(self):
        q = ConjQuery(("x", "y"), frozenset({ConceptAtom("A", "x"), EqAtom("x", "y")}))
        with pytest.raises(OmqError):
            Omq(TBox(), FULL, q)

    def test_superscript_round_trip(self):
        assert split_superscript(superscript("hasDisease", "y1")) == ("hasDisease", "y1")
        assert split_superscript("hasDisease") is None
