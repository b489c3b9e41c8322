"""Tests for the tree-quantified reduction to atomic queries."""

import pytest

from omq_rewriter.errors import ReductionError, UnsupportedQueryError
from omq_rewriter.model import (
    FULL,
    GOAL,
    ConceptAtom,
    ConceptInclusion,
    ConjQuery,
    Exists,
    Name,
    Omq,
    RoleAtom,
    UnionQuery,
    conj,
    exists_name,
    superscript,
    tree_name,
)
from omq_rewriter.parser import parse_concept, parse_cq
from omq_rewriter.reduction_tq import (
    ROOT,
    build_aq_reduction,
    conformant_cq,
    eliminate_quantified_trees,
    lower,
    reduce_tq,
    to_source_ucq,
    to_target_ucq,
)

HD_SOME = Exists("hasDisease", Name("HereditaryDisease"))


@pytest.fixture
def tq_reduction(t1, tq_query):
    return reduce_tq(Omq(t1, FULL, tq_query))


class TestTreeElimination:
    def test_tree_replaced_by_fresh_name(self, t1, tq_query):
        omq = eliminate_quantified_trees(Omq(t1, FULL, tq_query))
        tree = parse_concept("some(hasDisease, Albinism)")
        assert omq.query.atoms == {
            ConceptAtom("GeneticRiskPatient", "x"),
            RoleAtom("hasDisease", "x", "y"),
            ConceptAtom("Disease", "y"),
            ConceptAtom(tree_name(tree), "x"),
        }
        assert ConceptInclusion(tree, Name(tree_name(tree))) in omq.tbox

    def test_rejects_rooted_cqs(self, t3, q3):
        with pytest.raises(UnsupportedQueryError):
            eliminate_quantified_trees(Omq(t3, FULL, q3))

    def test_aq_reduction_needs_answer_variables_only(self, t1, tq_query):
        with pytest.raises(ReductionError):
            build_aq_reduction(Omq(t1, FULL, tq_query))


class TestTargetOmq:
    def test_goal_inclusion(self, tq_reduction):
        tree = tree_name(parse_concept("some(hasDisease, Albinism)"))
        goal = ConceptInclusion(
            conj(
                Name(superscript("GeneticRiskPatient", "x")),
                Name(superscript("Disease", "y")),
                Name(superscript(tree, "x")),
            ),
            Name(GOAL),
        )
        assert goal in tq_reduction.added

    def test_existential_definitions(self, tq_reduction):
        ex = Name(exists_name(HD_SOME, "x"))
        anonymous = ConceptInclusion(Exists(superscript("hasDisease", "x"), Name("HereditaryDisease")), ex)
        named = ConceptInclusion(Name(superscript("HereditaryDisease", "y")), ex)
        assert anonymous in tq_reduction.added
        assert named in tq_reduction.added

    def test_copied_inclusion(self, tq_reduction):
        copied = ConceptInclusion(
            conj(Name(superscript("Person", "x")), Name(exists_name(HD_SOME, "x"))),
            Name(superscript("GeneticRiskPatient", "x")),
        )
        assert copied in tq_reduction.added

    def test_query_and_signature(self, tq_reduction):
        target = tq_reduction.target
        assert target.query == ConjQuery((ROOT,), {ConceptAtom(GOAL, ROOT)})
        assert target.sigma.admits_concept(superscript("GeneticRiskPatient", "x"))
        assert target.sigma.admits_role(superscript("hasDisease", "y"))
        assert not target.sigma.admits_concept(GOAL)

    def test_restricted_signature_stays_restricted(self, t1, tq_query):
        red = reduce_tq(Omq(t1, FULL.finitize(["Person"], ["hasDisease"]), tq_query))
        assert red.target.sigma.admits_concept(superscript("Person", "x"))
        assert not red.target.sigma.admits_concept(superscript("Albinism", "x"))


class TestConformance:
    def test_conformant_shapes(self):
        gx = superscript("GeneticRiskPatient", "x")
        hx = superscript("hasDisease", "x")
        assert conformant_cq(ConjQuery((ROOT,), {ConceptAtom(gx, ROOT)}))
        assert conformant_cq(
            ConjQuery((ROOT,), {RoleAtom(hx, ROOT, "y"), ConceptAtom("Albinism", "y")})
        )
        assert not conformant_cq(ConjQuery((ROOT,), {ConceptAtom("Person", ROOT)}))
        assert not conformant_cq(
            ConjQuery((ROOT,), {RoleAtom(hx, ROOT, "y"), ConceptAtom(superscript("Albinism", "x"), "y")})
        )

    def test_lower_rejects_foreign_superscripts(self):
        qp = ConjQuery((ROOT,), {ConceptAtom(superscript("Person", "w"), ROOT)})
        with pytest.raises(ReductionError):
            lower(qp, ROOT, ("x",), frozenset({"x"}), ())


class TestTranslations:
    def test_source_ucq(self, tq_reduction):
        member = ConjQuery(
            (ROOT,),
            {
                ConceptAtom(superscript("Person", "x"), ROOT),
                RoleAtom(superscript("hasDisease", "x"), ROOT, "v"),
                ConceptAtom("Albinism", "v"),
                ConceptAtom(superscript("Disease", "y"), ROOT),
            },
        )
        u = to_source_ucq(UnionQuery.of((ROOT,), [member]), tq_reduction)
        expected = parse_cq(
            "q(x, y) :- Person(x), hasDisease(x, w), Albinism(w), hasDisease(x, y), Disease(y)."
        )
        assert [d.code for d in u] == [expected.code]

    def test_tree_names_must_not_survive(self, tq_reduction):
        tree = tree_name(parse_concept("some(hasDisease, Albinism)"))
        member = ConjQuery((ROOT,), {ConceptAtom(superscript(tree, "x"), ROOT)})
        with pytest.raises(ReductionError):
            to_source_ucq(UnionQuery.of((ROOT,), [member]), tq_reduction)

    def test_target_ucq(self, tq_reduction):
        derivative = parse_cq(
            "q(x, y) :- GeneticRiskPatient(x), hasDisease(x, y), Disease(y), hasDisease(x, w), Albinism(w)."
        )
        (lifted,) = to_target_ucq(UnionQuery.of(("x", "y"), [derivative]), tq_reduction)
        assert lifted.answer_vars == (ROOT,)
        assert ConceptAtom(superscript("GeneticRiskPatient", "x"), ROOT) in lifted.atoms
        assert ConceptAtom(superscript("Disease", "y"), ROOT) in lifted.atoms
        assert conformant_cq(lifted)

    def test_target_ucq_rejects_non_derivatives(self, tq_reduction):
        missing_core_edge = parse_cq("q(x, y) :- GeneticRiskPatient(x), Disease(y).")
        with pytest.raises(ReductionError):
            to_target_ucq(UnionQuery.of(("x", "y"), [missing_core_edge]), tq_reduction)
