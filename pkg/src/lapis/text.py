"""Lexical conventions shared by the parser and the emitter.

Prose (descriptions, triggers, meta values) is written raw. A ``#`` that
starts the text or follows whitespace opens a comment, so the emitter escapes
it as ``\\#``; a backslash escapes any character. Quoted strings use double
quotes with ``\\"`` and ``\\\\`` as the only escapes.
"""

from __future__ import annotations

import math
import re

from .model import IDENT_RE, Literal

# characters that carry meaning at the start of an indented line
_PROSE_LEADERS = set('><!~?#\\"+@')

_INT_RE = re.compile(r"[+-]?\d+\Z")
_FLOAT_RE = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?\Z")
_BARE_LITERAL_RE = re.compile(r'[^\s"#@\\=]+\Z')
_BARE_VARIANT_RE = re.compile(r'[^\s|"#\\]+\Z')


def quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def read_quoted(s: str, i: int) -> tuple[str, int]:
    """Read a quoted string starting at ``s[i] == '"'``; return (value, end)."""
    assert s[i] == '"'
    out = []
    j = i + 1
    while j < len(s):
        c = s[j]
        if c == "\\" and j + 1 < len(s) and s[j + 1] in '"\\':
            out.append(s[j + 1])
            j += 2
            continue
        if c == '"':
            return "".join(out), j + 1
        out.append(c)
        j += 1
    raise ValueError("unterminated string")


def strip_comment(s: str) -> str:
    """Drop a trailing ``# comment`` that is outside quoted strings."""
    in_quote = False
    j = 0
    while j < len(s):
        c = s[j]
        if in_quote:
            if c == "\\" and j + 1 < len(s):
                j += 2
                continue
            if c == '"':
                in_quote = False
        elif c == '"':
            in_quote = True
        elif c == "#" and (j == 0 or s[j - 1].isspace()):
            return s[:j].rstrip()
        j += 1
    return s.rstrip()


def escape_prose(text: str) -> str:
    out = text.replace("\\", "\\\\")
    out = re.sub(r"(?<=\s)#", r"\\#", out)
    if out and out[0] in _PROSE_LEADERS and not out.startswith("\\\\"):
        out = "\\" + out
    return out


def read_prose(s: str) -> str:
    """Unescape a prose run, stopping at an unescaped comment."""
    out = []
    j = 0
    while j < len(s):
        c = s[j]
        if c == "\\" and j + 1 < len(s):
            out.append(s[j + 1])
            j += 2
            continue
        if c == "#" and (j == 0 or s[j - 1].isspace()):
            break
        out.append(c)
        j += 1
    return "".join(out).rstrip()


def parse_literal(token: str) -> Literal:
    if token.startswith('"'):
        value, end = read_quoted(token, 0)
        if end != len(token):
            raise ValueError(f"unexpected text after string: {token[end:]!r}")
        return value
    if _INT_RE.match(token):
        return int(token)
    if _FLOAT_RE.match(token):
        return float(token)
    if token == "true":
        return True
    if token == "false":
        return False
    return token


def format_literal(value: Literal) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite default {value!r}")
        return repr(value)
    if _BARE_LITERAL_RE.match(value) and parse_literal(value) == value and isinstance(parse_literal(value), str):
        return value
    return quote(value)


def format_name(name: str) -> str:
    return name if IDENT_RE.match(name) else quote(name)


def format_variant(value: str) -> str:
    return value if _BARE_VARIANT_RE.match(value) else quote(value)
