"""Loading contract files (text or XML) with import resolution."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from ..errors import ParseError
from ..kb import AddModule, KnowledgeBase, kb_apply
from .parser import Program, parse_program
from .rbsla import parse_rbsla


def read_program(path) -> Program:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", 0, 0, str(path)) from None
    if path.suffix.lower() in (".xml", ".rbsla"):
        return parse_rbsla(data, str(path))
    return parse_program(data, str(path))


def load_programs(paths: Iterable) -> list[Program]:
    """Parse ``paths`` and, depth-first, everything they import (once each).

    Imports are resolved relative to the importing file; cycles are errors.
    """
    loaded: dict = {}
    order: list[Program] = []

    def visit(path: Path, chain: tuple, origin: Optional[Program]):
        key = path.resolve()
        if key in chain:
            cycle = " -> ".join(str(p.name) for p in chain + (key,))
            where = origin.origin if origin else str(path)
            raise ParseError(f"import cycle: {cycle}", 0, 0, where)
        if key in loaded:
            return
        prog = read_program(path)
        for imp in prog.imports:
            visit(path.parent / imp, chain + (key,), prog)
        loaded[key] = prog
        order.append(prog)

    for p in paths:
        visit(Path(p), (), None)
    return order


@dataclass
class Contracts:
    kb: KnowledgeBase
    programs: list = field(default_factory=list)

    @property
    def tests(self) -> list:
        return [t for p in self.programs for t in p.tests]

    @property
    def contract_id(self) -> str:
        return self.programs[-1].module.id if self.programs else "empty"


def load_contracts(paths: Iterable, kb: Optional[KnowledgeBase] = None) -> Contracts:
    """Each file (and each import) becomes its own KB module."""
    programs = load_programs(paths)
    kb = kb or KnowledgeBase()
    if programs:
        kb, _ = kb_apply(kb, [AddModule(p.module) for p in programs])
    return Contracts(kb, programs)
