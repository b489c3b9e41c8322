__version__ = "0.1.0"

from .engine import Budget, BudgetExhausted, Rewriting, rewrite
from .emit import emit_datalog, emit_sql
from .model import FULL, Abox, ConjQuery, Omq, Signature, TBox, UnionQuery
from .oracle import check_rewriting
from .parser import parse_abox, parse_cq, parse_signature, parse_tbox, parse_ucq
from .reasoner import certain_answer
from .structure import classify

__all__ = [
    "FULL",
    "Abox",
    "Budget",
    "BudgetExhausted",
    "ConjQuery",
    "Omq",
    "Rewriting",
    "Signature",
    "TBox",
    "UnionQuery",
    "certain_answer",
    "check_rewriting",
    "classify",
    "emit_datalog",
    "emit_sql",
    "parse_abox",
    "parse_cq",
    "parse_signature",
    "parse_tbox",
    "parse_ucq",
    "rewrite",
]
