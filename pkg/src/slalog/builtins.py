"""Arithmetic and comparison attachments registered in every knowledge base."""
from __future__ import annotations

import operator

from .kb import Attachment
from .terms import Compound, term_order

IN2 = ("in", "in")
IN2_OUT = ("in", "in", "out")

# infix operators of the text syntax map onto these names
COMPARISONS = {
    "<": "lessThan",
    "<=": "lessEq",
    ">": "greaterThan",
    ">=": "greaterEq",
    "!=": "neq",
}


def _num(x):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise TypeError(f"arithmetic on non-number {x!r}")
    return x


def _arith(op):
    def fn(a, b):
        # ints stay exact; any decimal operand promotes to float
        return (op(_num(a), _num(b)),)

    return fn


def _div(a, b):
    a, b = _num(a), _num(b)
    if b == 0:
        return None
    if isinstance(a, int) and isinstance(b, int) and a % b == 0:
        return (a // b,)
    return (a / b,)


def _key(x):
    from .terms import to_term

    return term_order(x if isinstance(x, Compound) else to_term(x))


def _compare(op):
    def fn(a, b):
        if isinstance(a, (int, float)) and isinstance(b, (int, float)) and not isinstance(a, bool):
            return op(a, b)
        return op(_key(a), _key(b))

    return fn


def default_attachments() -> list[Attachment]:
    return [
        Attachment("add", IN2_OUT, _arith(operator.add)),
        Attachment("sub", IN2_OUT, _arith(operator.sub)),
        Attachment("mul", IN2_OUT, _arith(operator.mul)),
        Attachment("div", IN2_OUT, _div),
        Attachment("min", IN2_OUT, lambda a, b: (min(_num(a), _num(b)),)),
        Attachment("max", IN2_OUT, lambda a, b: (max(_num(a), _num(b)),)),
        Attachment("lessThan", IN2, _compare(operator.lt)),
        Attachment("lessEq", IN2, _compare(operator.le)),
        Attachment("greaterThan", IN2, _compare(operator.gt)),
        Attachment("greaterEq", IN2, _compare(operator.ge)),
        Attachment("neq", IN2, lambda a, b: _key(a) != _key(b)),
    ]
