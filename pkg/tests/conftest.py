"""Shared fixtures: the running hereditary-disease examples, read from ``corpus/``."""

import os
import random
from pathlib import Path

import pytest

from omq_rewriter.config import seed_from_env
from omq_rewriter.model import FULL, Omq
from omq_rewriter.parser import parse_abox, parse_cq, parse_signature, parse_tbox

CORPUS = Path(__file__).resolve().parents[1] / "corpus"


def _text(name):
    return (CORPUS / name).read_text()


@pytest.fixture
def corpus_dir():
    return CORPUS


@pytest.fixture
def t1():
    return parse_tbox(_text("t1.tbox"), "t1.tbox")


@pytest.fixture
def t2():
    return parse_tbox(_text("t2.tbox"), "t2.tbox")


@pytest.fixture
def t3():
    return parse_tbox(_text("t3.tbox"), "t3.tbox")


@pytest.fixture
def intro_tbox():
    return parse_tbox(_text("intro.tbox"))


@pytest.fixture
def parent_tbox():
    return parse_tbox(_text("parent.tbox"))


@pytest.fixture
def equality_tbox():
    return parse_tbox(_text("equality.tbox"))


@pytest.fixture
def q1():
    return parse_cq(_text("q1.cq"))


@pytest.fixture
def q2():
    return parse_cq(_text("q2.cq"))


@pytest.fixture
def q3():
    return parse_cq(_text("q3.cq"))


@pytest.fixture
def q3_fork():
    return parse_cq(_text("q3_fork.cq"))


@pytest.fixture
def tq_query():
    return parse_cq(_text("tq.cq"))


@pytest.fixture
def intro_query():
    return parse_cq(_text("intro.cq"))


@pytest.fixture
def equality_query():
    return parse_cq(_text("equality.cq"))


@pytest.fixture
def example1_abox():
    return parse_abox(_text("example1.abox"))


@pytest.fixture
def oca1a_abox():
    return parse_abox(_text("oca1a.abox"))


@pytest.fixture
def person_grp_sigma():
    return parse_signature(_text("person_grp.sig"))


@pytest.fixture
def equality_omq(equality_tbox, equality_query):
    return Omq(equality_tbox, parse_signature(_text("equality.sig")), equality_query)


@pytest.fixture
def intro_omq(intro_tbox, intro_query):
    return Omq(intro_tbox, FULL, intro_query)


@pytest.fixture
def rng():
    return random.Random(seed_from_env())


@pytest.fixture
def clean_seed_env(monkeypatch):
    monkeypatch.delenv("OMQ_REWRITER_SEED", raising=False)
    return os.environ
