"""Declarative rule engine for representing, monitoring and enforcing SLAs."""
from .kb import KnowledgeBase, RuleModule, kb_apply, register_attachment, subtype_of
from .lang import emit_rbsla, parse_program, parse_query, parse_rbsla
from .solver import FALSE, TRUE, UNDEFINED, Answer, SolverConfig, TruthValue, check_consistency, solve, truth_of
from .terms import Compound, Const, Literal, Rule, Var, unify

__version__ = "0.1.0"

__all__ = [
    "FALSE",
    "TRUE",
    "UNDEFINED",
    "Answer",
    "Compound",
    "Const",
    "KnowledgeBase",
    "Literal",
    "Rule",
    "RuleModule",
    "SolverConfig",
    "TruthValue",
    "Var",
    "check_consistency",
    "emit_rbsla",
    "kb_apply",
    "parse_program",
    "parse_query",
    "parse_rbsla",
    "register_attachment",
    "solve",
    "subtype_of",
    "truth_of",
    "unify",
]
