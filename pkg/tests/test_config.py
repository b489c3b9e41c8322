"""Tests for run profiles, bench case files and the seed setting."""

import json
from pathlib import Path

import pytest

from omq_rewriter.config import (
    DEFAULT_SEED,
    SEED_ENV,
    RunConfig,
    build_run_config,
    load_bench_case,
    load_run_profile,
    seed_from_env,
    validate_config,
)
from omq_rewriter.errors import ConfigError


def test_load_run_profile_plain(tmp_path):
    p = tmp_path / "plain.json"
    p.write_text(json.dumps({"strategy": "direct"}))
    assert load_run_profile(str(p)) == {"strategy": "direct"}


def test_relative_paths_resolve_against_profile(tmp_path):
    d = tmp_path / "profiles"
    d.mkdir()
    p = d / "run.yaml"
    p.write_text("tbox: ../t.tbox\nquery: q.cq\n")
    data = load_run_profile(str(p))
    assert data["tbox"] == str((tmp_path / "t.tbox").resolve())
    assert data["query"] == str((d / "q.cq").resolve())


class TestExtends:
    def test_shipped_profile(self, corpus_dir):
        data = load_run_profile(str(corpus_dir / "profiles" / "t2_q2.yaml"))
        assert data["strategy"] == "auto"
        assert data["budget"] == {"queries": 20000, "depth": 12, "seconds": 60}
        assert data["emit"] == "datalog"
        assert Path(data["tbox"]).name == "t2.tbox"
        assert "extends" not in data

    def test_child_overlays_nested_budget(self, tmp_path):
        (tmp_path / "base.yaml").write_text("budget: {queries: 10, depth: 3}\nemit: sql\n")
        child = tmp_path / "child.yaml"
        child.write_text("extends: base\nbudget: {depth: 7}\n")
        data = load_run_profile(str(child))
        assert data["budget"] == {"queries": 10, "depth": 7}
        assert data["emit"] == "sql"

    def test_multiple_parents_merge_in_order(self, tmp_path):
        (tmp_path / "a.yaml").write_text("strategy: direct\nemit: sql\n")
        (tmp_path / "b.json").write_text('{"strategy": "reduction"}')
        child = tmp_path / "c.yaml"
        child.write_text("extends: [a, b]\n")
        data = load_run_profile(str(child))
        assert data == {"strategy": "reduction", "emit": "sql"}

    def test_missing_parent(self, tmp_path):
        p = tmp_path / "p.yaml"
        p.write_text("extends: nowhere\n")
        with pytest.raises(ConfigError, match="not found"):
            load_run_profile(str(p))

    def test_cycle(self, tmp_path):
        (tmp_path / "a.yaml").write_text("extends: b\n")
        (tmp_path / "b.yaml").write_text("extends: a\n")
        with pytest.raises(ConfigError, match="Circular"):
            load_run_profile(str(tmp_path / "a.yaml"))

    def test_not_a_mapping(self, tmp_path):
        p = tmp_path / "list.yaml"
        p.write_text("- a\n- b\n")
        with pytest.raises(ConfigError, match="mapping"):
            load_run_profile(str(p))

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_run_profile(str(tmp_path / "missing.yaml"))


class TestValidateConfig:
    def test_valid(self):
        data = {"strategy": "direct", "budget": {"queries": 5, "seconds": 1.5}, "verify": True}
        assert validate_config(data) == []

    def test_reports_every_problem(self):
        errors = validate_config(
            {
                "colour": "red",
                "strategy": "fastest",
                "budget": {"depth": 0, "memory": 1},
                "verify": "yes",
                "probe_depth": -2,
            }
        )
        assert "Unknown keys: colour" in errors
        assert "'strategy' must be one of auto, direct, reduction" in errors
        assert "Unknown budget keys: memory" in errors
        assert "'budget.depth' must be a positive number" in errors
        assert "'verify' must be a boolean" in errors
        assert "'probe_depth' must be a positive integer" in errors

    def test_not_a_mapping(self):
        assert validate_config(["a"]) == ["Profile must be a mapping"]


class TestBuildRunConfig:
    def test_defaults(self):
        cfg = build_run_config()
        assert cfg == RunConfig()
        assert cfg.budget().max_queries == 100000

    def test_profile_then_overrides(self, corpus_dir):
        cfg = build_run_config(
            [str(corpus_dir / "profiles" / "t2_q2.yaml")],
            {"emit": "sql", "budget_depth": None, "strategy": None},
        )
        assert cfg.emit == "sql"
        assert cfg.budget_depth == 12
        assert cfg.budget_queries == 20000
        assert cfg.tbox.name == "t2.tbox"
        assert cfg.sigma.name == "full.sig"

    def test_override_paths(self, tmp_path):
        cfg = build_run_config(overrides={"tbox": str(tmp_path / "t.tbox")})
        assert cfg.tbox == tmp_path / "t.tbox"

    def test_invalid_profile(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("emit: html\n")
        with pytest.raises(ConfigError, match="'emit' must be one of"):
            build_run_config([str(p)])

    def test_unknown_override(self):
        with pytest.raises(ConfigError):
            build_run_config(overrides={"colour": "red"})

    def test_budget_checked(self):
        with pytest.raises(ConfigError):
            build_run_config(overrides={"budget_seconds": 0})


class TestBenchCase:
    def test_shipped_case(self, corpus_dir):
        case = load_bench_case(str(corpus_dir / "cases" / "t1_tq.yaml"))
        assert case.name == "t1_tq"
        assert case.ontology == "hereditary"
        assert case.strategy == "reduction"
        assert case.tbox == (corpus_dir / "t1.tbox").resolve()
        assert case.sigma is None

    def test_defaults_from_file_name(self, tmp_path):
        p = tmp_path / "mine.yaml"
        p.write_text("tbox: a.tbox\nquery: a.cq\nsigma: a.sig\n")
        case = load_bench_case(str(p))
        assert (case.name, case.ontology, case.strategy) == ("mine", "mine", "auto")
        assert case.sigma == (tmp_path / "a.sig").resolve()

    def test_missing_keys(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("name: bad\nextra: 1\n")
        with pytest.raises(ConfigError) as exc:
            load_bench_case(str(p))
        message = str(exc.value)
        assert "missing 'tbox'" in message
        assert "missing 'query'" in message
        assert "Unknown keys: extra" in message


class TestSeed:
    def test_default(self, clean_seed_env):
        assert seed_from_env() == DEFAULT_SEED

    def test_from_environment(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV, "7")
        assert seed_from_env() == 7

    def test_blank_uses_default(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV, "  ")
        assert seed_from_env(3) == 3

    def test_rejects_non_integer(self, monkeypatch):
        monkeypatch.setenv(SEED_ENV, "seven")
        with pytest.raises(ConfigError, match=SEED_ENV):
            seed_from_env()
