"""Plain data declarations produced by the front end: ECA rules, norms, tests."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .terms import Term

ON_INGEST = "on_ingest"
NORM_KINDS = ("obligation", "prohibition", "permission")
EXPECT_KEYWORDS = ("true", "false", "undefined")


@dataclass(frozen=True)
class EcaRule:
    id: str
    every: Union[int, str, None] = None  # period in ms, ON_INGEST, or None for the engine default
    event: tuple = ()  # query literals; a single detect(Expr) literal is an event-algebra query
    condition: tuple = ()
    action: tuple = ()  # action terms, see slalog.eca
    else_action: tuple = ()

    def __post_init__(self):
        if self.every not in (None, ON_INGEST) and (not isinstance(self.every, int) or self.every < 1):
            raise ValueError(f"eca {self.id}: period must be >= 1 ms or on_ingest")
        if not self.action:
            raise ValueError(f"eca {self.id}: action must be nonempty")


@dataclass(frozen=True)
class Norm:
    id: str
    kind: str
    target: Term
    bearer: Optional[Term] = None
    trigger: Optional[Term] = None  # event expression; None activates at time 0 unless a reparation
    deadline: Optional[int] = None
    relative: bool = True  # deadline counted from activation
    standing: bool = False
    reparation: Optional[str] = None
    breach: Optional[Term] = None  # event that violates a standing obligation

    def __post_init__(self):
        if self.kind not in NORM_KINDS:
            raise ValueError(f"norm {self.id}: unknown kind {self.kind!r}")
        if self.kind != "permission" and self.deadline is None and not self.standing:
            raise ValueError(f"norm {self.id}: {self.kind} needs a deadline or 'standing'")


@dataclass(frozen=True)
class TestCase:
    id: str
    query: tuple  # literals
    expect: Union[str, tuple]  # "true" | "false" | "undefined" | ("answers", (bindings, ...))
    given: Optional[str] = None
    at: Optional[int] = None

    __test__ = False  # not a pytest class
