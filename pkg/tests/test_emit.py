"""Tests for Datalog and SQL rendering, including a round trip through SQLite."""

import pytest
from sqlalchemy import create_engine, text

from omq_rewriter.emit import (
    build_schema,
    emit_datalog,
    emit_ddl,
    emit_sql,
    insert_abox,
    sanitize,
    schema_for,
    schema_for_omq,
)
from omq_rewriter.engine import Rewriting, rewrite
from omq_rewriter.errors import OmqError
from omq_rewriter.generate import CONCEPTS, ROLES, random_abox, random_query
from omq_rewriter.model import FULL, Abox, ConceptAtom, ConjQuery, EqAtom, Omq, UnionQuery
from omq_rewriter.oracle import ucq_answers
from omq_rewriter.parser import parse_abox, parse_cq, parse_signature, parse_tbox
from omq_rewriter.reasoner import certain_answers

ABOX = """
Person(a). hasDisease(a, d). Albinism(d).
GeneticRiskPatient(b). hasDisease(b, e). Albinism(e).
Person(c). hasDisease(c, f).
"""


@pytest.fixture
def t2_q2_rewriting(q2):
    return UnionQuery.of(
        ("x",), [q2, parse_cq("q(x) :- Person(x), hasDisease(x, y), Albinism(y).")]
    )


@pytest.fixture
def anywhere_omq():
    """Every individual has an r-successor in A, so ``q(x) :- r(x, y), A(y)`` holds everywhere."""
    return Omq(
        parse_tbox("Top SubClassOf some(r, A)\n"),
        parse_signature("A\nr\nB\n"),
        parse_cq("q(x) :- r(x, y), A(y)."),
    )


def _run(u, abox, schema=None):
    schema = schema or schema_for(u)
    engine = create_engine("sqlite+pysqlite:///:memory:")
    with engine.begin() as conn:
        schema.metadata.create_all(conn)
        insert_abox(conn, schema, abox)
        rows = conn.execute(text(emit_sql(u, schema))).fetchall()
    return {tuple(r) for r in rows}


class TestSchema:
    def test_sanitize(self):
        assert sanitize("has-Disease") == "has_Disease"
        assert sanitize("1st") == "t_1st"
        assert sanitize("Person") == "Person"

    def test_role_table_avoids_concept_table(self):
        schema = build_schema(["A"], ["A"])
        assert schema.concept("A").name == "A"
        assert schema.role("A").name == "A_role"

    def test_unknown_symbol(self):
        schema = build_schema(["A"], [])
        with pytest.raises(OmqError):
            schema.role("r")

    def test_ddl(self, t2_q2_rewriting):
        ddl = emit_ddl(schema_for(t2_q2_rewriting))
        assert ddl.count("CREATE TABLE") == 4
        assert "CREATE TABLE " in ddl and "ind VARCHAR NOT NULL" in ddl

    def test_omq_schema_covers_signature(self, anywhere_omq):
        schema = schema_for_omq(anywhere_omq)
        assert sorted(schema.concept_tables) == ["A", "B"]
        assert sorted(schema.role_tables) == ["r"]

    def test_omq_schema_under_full_signature(self, t2, q2):
        schema = schema_for_omq(Omq(t2, FULL, q2), UnionQuery.of(("x",), [parse_cq("q(x) :- D(x).")]))
        assert sorted(schema.concept_tables) == [
            "Albinism",
            "D",
            "GeneticRiskPatient",
            "HereditaryDisease",
            "Person",
        ]
        assert sorted(schema.role_tables) == ["hasDisease", "hasParent"]

    def test_empty_schema_has_no_individuals(self):
        u = UnionQuery.of(("x", "y"), [ConjQuery(("x", "y"), {EqAtom("x", "y")})])
        assert _run(u, Abox(), build_schema([], [])) == set()


class TestSql:
    def test_sqlite_round_trip(self, t2_q2_rewriting):
        abox = parse_abox(ABOX)
        assert _run(t2_q2_rewriting, abox) == {("a",), ("b",)}
        assert _run(t2_q2_rewriting, abox) == set(ucq_answers(abox, t2_q2_rewriting))

    def test_unbound_answer_variable_ranges_over_individuals(self):
        u = UnionQuery.of(("x", "y"), [ConjQuery(("x", "y"), {ConceptAtom("A", "x")})])
        abox = parse_abox("A(a). r(a, b).")
        assert _run(u, abox, build_schema(["A"], ["r"])) == {("a", "a"), ("a", "b")}

    def test_equality_disjunct(self):
        u = UnionQuery.of(("x", "y"), [parse_cq("q(x, y) :- B(y), x = y.")])
        abox = parse_abox("B(a). r(a, b).")
        assert _run(u, abox, build_schema(["B"], ["r"])) == {("a", "a")}

    def test_atom_free_disjunct_answers_every_individual(self, anywhere_omq):
        outcome = rewrite(anywhere_omq)
        assert isinstance(outcome, Rewriting)
        assert any(not d.atoms for d in outcome.ucq)
        abox = parse_abox("B(c). r(a, b).")
        got = _run(outcome.ucq, abox, schema_for_omq(anywhere_omq, outcome.ucq))
        assert got == {("a",), ("b",), ("c",)}
        assert got == set(certain_answers(abox, anywhere_omq.tbox, anywhere_omq.query))

    def test_individual_outside_the_rewriting_tables(self):
        u = UnionQuery.of(("x", "y"), [ConjQuery(("x", "y"), {ConceptAtom("A", "x")})])
        abox = parse_abox("A(a). B(c).")
        assert _run(u, abox, build_schema(["A", "B"], [])) == {("a", "a"), ("a", "c")}
        assert _run(u, abox) == {("a", "a")}

    @pytest.mark.parametrize("answer", [1, 2])
    def test_random_round_trip(self, rng, answer):
        answer_vars = ("x", "z")[:answer]
        schema = build_schema(CONCEPTS + ("D",), ROLES)
        for _ in range(60):
            disjuncts = [random_query(rng, max_vars=3, answer=answer) for _ in range(rng.randint(1, 3))]
            if rng.random() < 0.3:
                disjuncts.append(ConjQuery(answer_vars))
            if answer == 2 and rng.random() < 0.3:
                disjuncts.append(ConjQuery(answer_vars, {EqAtom("x", "z"), ConceptAtom("A", "z")}))
            if answer == 2 and rng.random() < 0.3:
                disjuncts.append(ConjQuery(answer_vars, {ConceptAtom(rng.choice(CONCEPTS), "x")}))
            u = UnionQuery.of(answer_vars, disjuncts)
            a = random_abox(rng, individuals=3, assertions=rng.randint(0, 6))
            extra = {("D", "a4")} if rng.random() < 0.5 else set()
            abox = Abox(a.concept_assertions | extra, a.role_assertions)
            assert _run(u, abox, schema) == set(ucq_answers(abox, u)), (str(u), str(abox))

    def test_union_of_blocks(self, t2_q2_rewriting):
        sql = emit_sql(t2_q2_rewriting)
        assert sql.count("SELECT") == 2
        assert "UNION" in sql


class TestDatalog:
    def test_one_rule_per_disjunct(self, t2_q2_rewriting):
        assert emit_datalog(t2_q2_rewriting).splitlines() == [
            "Q(x) :- Albinism(y1), GeneticRiskPatient(x), hasDisease(x,y1).",
            "Q(x) :- Albinism(y1), Person(x), hasDisease(x,y1).",
        ]

    def test_equality_repeats_head_variable(self):
        u = UnionQuery.of(("x", "y"), [parse_cq("q(x, y) :- B(y), x = y.")])
        assert emit_datalog(u) == "Q(x,x) :- B(x).\n"

    def test_domain_rules_for_unbound_variables(self):
        u = UnionQuery.of(("x", "y"), [ConjQuery(("x", "y"), {ConceptAtom("A", "x")})])
        assert emit_datalog(u, head="Ans").splitlines() == [
            "Ans(x,y) :- A(x), ind__(y).",
            "ind__(x) :- A(x).",
        ]

    def test_domain_rules_cover_the_signature(self, anywhere_omq):
        u = UnionQuery.of(("x",), [ConjQuery(("x",))])
        assert emit_datalog(u, schema=schema_for_omq(anywhere_omq, u)).splitlines() == [
            "Q(x) :- ind__(x).",
            "ind__(x) :- A(x).",
            "ind__(x) :- B(x).",
            "ind__(x) :- r(x,y).",
            "ind__(y) :- r(x,y).",
        ]

    def test_empty(self):
        assert emit_datalog(UnionQuery.of(("x",), [])) == "% empty rewriting: no answers\n"
