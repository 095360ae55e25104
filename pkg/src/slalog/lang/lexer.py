"""Tokenizer for the textual rule language (.ctr files)."""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ParseError


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # VAR IDENT QATOM INT DEC STRING PUNCT EOF
    value: str
    line: int
    col: int


_PUNCT = [":-", ":=", ":~", "<=", ">=", "!=", "(", ")", "[", "]", "{", "}", ",", ".", ";", ":", "<", ">", "=", "+", "-"]

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<block>/\*)
  | (?P<DEC>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<INT>\d+)
  | (?P<VAR>[A-Z_][A-Za-z0-9_]*)
  | (?P<IDENT>[a-z][A-Za-z0-9_]*)
  | (?P<STRING>")
  | (?P<QATOM>')
  | (?P<PUNCT>"""
    + "|".join(re.escape(p) for p in _PUNCT)
    + r""")
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'", "r": "\r", "0": "\0"}


def tokenize(src: str, origin: str = "<string>") -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    n = len(src)

    def err(msg, at):
        raise ParseError(msg, line, at - line_start + 1, origin)

    while pos < n:
        m = _TOKEN.match(src, pos)
        if m is None:
            err(f"unexpected character {src[pos]!r}", pos)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind in ("ws", "comment"):
            chunk = m.group()
            nl = chunk.count("\n")
            if nl:
                line += nl
                line_start = pos + chunk.rfind("\n") + 1
            pos = m.end()
            continue
        if kind == "block":
            end = src.find("*/", pos + 2)
            if end < 0:
                err("unterminated block comment", pos)
            chunk = src[pos : end + 2]
            nl = chunk.count("\n")
            if nl:
                line += nl
                line_start = pos + chunk.rfind("\n") + 1
            pos = end + 2
            continue
        if kind in ("STRING", "QATOM"):
            quote = m.group()
            i = pos + 1
            out = []
            while True:
                if i >= n or src[i] == "\n":
                    err("unterminated quoted text", pos)
                c = src[i]
                if c == "\\":
                    if i + 1 >= n:
                        err("unterminated escape", i)
                    esc = src[i + 1]
                    if esc not in _ESCAPES:
                        err(f"unknown escape \\{esc}", i)
                    out.append(_ESCAPES[esc])
                    i += 2
                    continue
                if c == quote:
                    break
                out.append(c)
                i += 1
            tokens.append(Token(kind, "".join(out), line, col))
            pos = i + 1
            continue
        tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens
