from .loader import Contracts, load_contracts, load_programs, read_program
from .parser import Program, parse_literal, parse_program, parse_query, parse_term
from .rbsla import emit_rbsla, parse_rbsla

__all__ = [
    "Contracts",
    "Program",
    "emit_rbsla",
    "load_contracts",
    "load_programs",
    "parse_literal",
    "parse_program",
    "parse_query",
    "parse_rbsla",
    "parse_term",
    "read_program",
]
