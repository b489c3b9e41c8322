"""Tests for the rooted-CQ reduction of one fork rewriting to an atomic query."""

import pytest

from omq_rewriter.errors import ReductionError
from omq_rewriter.generate import random_concept
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
    conj,
    exists_name,
    superscript,
    unfold_concept,
)
from omq_rewriter.parser import parse_concept, parse_cq
from omq_rewriter.reduction_rcq import build_rcq_reduction, pi, tau
from omq_rewriter.reduction_tq import ROOT
from omq_rewriter.structure import contained_in, fork_rewritings, minimize, prec_children

HD_SOME = Exists("hasDisease", Name("HereditaryDisease"))


@pytest.fixture
def omq3(t3, q3):
    return Omq(t3, FULL, q3)


@pytest.fixture
def red3(omq3, q3):
    return build_rcq_reduction(omq3, q3)


@pytest.fixture
def reductions(t2, t3, q2, q3, intro_omq):
    out = []
    for omq in (Omq(t3, FULL, q3), Omq(t2, FULL, q2), intro_omq):
        forks = fork_rewritings(omq.query)
        out += [build_rcq_reduction(omq, f, forks) for f in forks if not f.eq_atoms]
    return out


def _random_derivative(rng, red):
    """Keep the fork's core, drop or add concept atoms there, hang random trees off it."""
    concepts = sorted(red.source.concept_symbols())
    roles = sorted(red.source.role_symbols())
    fork, core = red.fork, red.core
    atoms = {a for a in fork.atoms if not isinstance(a, ConceptAtom) and set(a.variables) <= core}
    atoms |= {a for a in fork.concept_atoms if a.var in core and rng.random() < 0.7}
    used = set(fork.variables)
    for x in sorted(core):
        if rng.random() < 0.3:
            atoms.add(ConceptAtom(rng.choice(concepts), x))
        for _ in range(rng.choice((0, 0, 1, 2))):
            tree = Exists(rng.choice(roles), random_concept(rng, concepts, roles, depth=1))
            atoms |= unfold_concept(tree, x, used)
    covered = {v for a in atoms for v in a.variables} | set(fork.answer_vars)
    for x in sorted(core - covered):
        atoms.add(ConceptAtom(rng.choice(concepts), x))
    return ConjQuery(fork.answer_vars, frozenset(atoms))


def _witness_query():
    return ConjQuery(
        (ROOT,),
        {
            ConceptAtom(superscript("Person", "x"), ROOT),
            RoleAtom(superscript("hasDisease", "x"), ROOT, "v"),
            ConceptAtom("ImpairedVision", "v"),
            ConceptAtom("MelaninDeficiency", "v"),
            RoleAtom("causedBy", "v", "w"),
            ConceptAtom("GeneDefect", "w"),
        },
    )


class TestBuild:
    def test_core(self, red3):
        assert red3.core == {"x", "y1", "y2", "z"}

    def test_goal_inclusion(self, red3):
        goal = ConceptInclusion(
            conj(
                Name(superscript("Person", "x")),
                Name(superscript("MelaninDeficiency", "y1")),
                Name(superscript("ImpairedVision", "y2")),
                Name(superscript("GeneDefect", "z")),
            ),
            Name(GOAL),
        )
        assert goal in red3.target.tbox

    def test_copied_and_existential_inclusions(self, red3):
        ex = Name(exists_name(HD_SOME, "x"))
        copied = ConceptInclusion(
            conj(Name(superscript("Person", "x")), ex), Name(superscript("GeneticRiskPatient", "x"))
        )
        defined = ConceptInclusion(Exists(superscript("hasDisease", "x"), Name("HereditaryDisease")), ex)
        assert copied in red3.target.tbox
        assert defined in red3.target.tbox

    def test_splitting_inclusion_from_merged_fork(self, red3):
        part = parse_concept("and(ImpairedVision, MelaninDeficiency, some(causedBy, GeneDefect))")
        witness = ConceptInclusion(
            conj(Name(superscript("Person", "x")), Exists(superscript("hasDisease", "x"), part)),
            Name(GOAL),
        )
        assert witness in red3.witnesses
        assert witness in red3.t_min
        assert witness not in red3.target.tbox

    def test_rejects_non_fork(self, omq3):
        with pytest.raises(ReductionError):
            build_rcq_reduction(omq3, parse_cq("q(x) :- Person(x)."))

    def test_goal_query(self, red3):
        assert red3.goal_query == ConjQuery((ROOT,), {ConceptAtom(GOAL, ROOT)})


class TestGoals:
    def test_witness_needs_t_min(self, red3):
        d = _witness_query()
        assert not contained_in(red3.target.tbox, d, red3.goal_query)
        assert red3.goal("materialized")(d)
        assert red3.goal("direct")(d)

    def test_modes_agree_on_insufficient_query(self, red3):
        d = ConjQuery((ROOT,), {ConceptAtom(superscript("Person", "x"), ROOT)})
        assert not red3.goal("materialized")(d)
        assert not red3.goal("direct")(d)

    def test_unknown_mode(self, red3):
        with pytest.raises(ValueError):
            red3.goal("lazy")


class TestTranslations:
    def test_tau_then_pi(self, red3, q3):
        lifted = tau(q3, red3)
        assert lifted.atoms == {
            ConceptAtom(superscript("Person", "x"), ROOT),
            ConceptAtom(superscript("MelaninDeficiency", "y1"), ROOT),
            ConceptAtom(superscript("ImpairedVision", "y2"), ROOT),
            ConceptAtom(superscript("GeneDefect", "z"), ROOT),
        }
        assert pi(lifted, red3).code == q3.code

    def test_pi_of_witness_hangs_tree_off_core(self, red3):
        lowered = pi(_witness_query(), red3)
        assert ConceptAtom("Person", "x") in lowered.atoms
        assert RoleAtom("causedBy", "y1", "z") in lowered.atoms
        assert len(lowered.role_atoms) == 6

    def test_tau_rejects_non_derivative(self, red3, q3_fork):
        with pytest.raises(ReductionError):
            tau(q3_fork, red3)


class TestRandomDerivatives:
    def test_pi_undoes_tau(self, rng, reductions):
        for i in range(500):
            red = reductions[i % len(reductions)]
            d = _random_derivative(rng, red)
            assert pi(tau(d, red), red).code == d.code, str(d)

    def test_goal_modes_agree(self, rng, reductions):
        for i in range(150):
            red = reductions[i % len(reductions)]
            lifted = tau(_random_derivative(rng, red), red)
            assert red.goal("materialized")(lifted) == red.goal("direct")(lifted), str(lifted)

    def test_goal_matches_containment(self, rng, reductions):
        for i in range(150):
            red = reductions[i % len(reductions)]
            d = _random_derivative(rng, red)
            expected = contained_in(red.source.tbox, d, red.source.query)
            assert red.goal()(tau(d, red)) == expected, str(d)

    def test_minimal_derivative_lifts_to_minimal_query(self, rng, reductions):
        checked = 0
        for i in range(300):
            red = reductions[i % len(reductions)]
            t, q0 = red.source.tbox, red.source.query
            d = _random_derivative(rng, red)
            if not contained_in(t, d, q0):
                continue
            checked += 1
            lifted = tau(minimize(d, t, q0), red)
            goal = red.goal()
            assert goal(lifted), str(d)
            assert not any(goal(c) for c in prec_children(lifted)), str(d)
        assert checked > 0
