"""LAPIS text -> :class:`~lapis.model.LapisDocument`.

The grammar is line oriented. A line at indent 0 is either a section header
(``[ops]``) or the head of an entry; the entry's children sit exactly one
indent unit deeper (flow continuation lines two units). The indent unit is
taken from the first indented line and is 2 spaces in canonical text.

Errors never abort the parse: a bad line is reported and skipped, so one pass
reports every independent problem.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .model import (
    AUTH_LOCATIONS,
    AUTH_SCHEMES,
    LOCATIONS,
    METHODS,
    MODIFIERS,
    PERIODS,
    SCALARS,
    Array,
    AuthSpec,
    Branch,
    Diagnostic,
    EnumBody,
    ErrorDef,
    ErrorSection,
    Field,
    Flow,
    FlowExpr,
    LapisDocument,
    LimitsSection,
    Map,
    Meta,
    Named,
    ObjectBody,
    OnExceed,
    Operation,
    Param,
    Plan,
    RateSpec,
    Scalar,
    Seq,
    SourceSpan,
    Step,
    TypeDef,
    TypeExpr,
    Wait,
    Webhook,
    infer_location,
)
from .text import parse_literal, read_prose, read_quoted, strip_comment

SECTIONS = ("meta", "types", "ops", "webhooks", "errors", "limits", "flows")
REQUIRED_SECTIONS = ("meta", "ops")

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_SECTION_RE = re.compile(r"\[([^\]]*)\]\Z")
_OP_RE = re.compile(rf"({_IDENT})\s+(\S+)\s+(\S+)((?:\s+\S+)*)\Z")
_WEBHOOK_RE = re.compile(rf"({_IDENT})\s+->\s+(\S+)\s+(\S+)\Z")
_ERROR_RE = re.compile(r"(\d+)\s+(\S+)(?:\s+@ops:(\S*))?\Z")
_BASE_RE = re.compile(rf"#\s*Base structure:\s*({_IDENT})\s*\Z")
_RATE_RE = re.compile(r"(\d+)/([a-z]+)\Z")
_FIELD_HEAD_RE = re.compile(rf'(?:{_IDENT}|"(?:[^"\\]|\\.)*")\??:(?:\s|\Z)')
_FLOW_TOKEN_RE = re.compile(r"\s*(?:(->)|(\|)|(\*)|\.\.\.\(([^)]*)\)|(" + _IDENT + r"))")


@dataclass(frozen=True)
class ParseError(Diagnostic):
    """A diagnostic raised while reading LAPIS text."""


class LapisSyntaxError(ValueError):
    """Raised when LAPIS text cannot be read; carries every diagnostic."""

    def __init__(self, diagnostics: list[ParseError]) -> None:
        self.diagnostics = diagnostics
        self.errors = [d for d in diagnostics if d.is_error]
        first = self.errors[0] if self.errors else diagnostics[0]
        more = f" (+{len(self.errors) - 1} more)" if len(self.errors) > 1 else ""
        super().__init__(f"{first}{more}")


class _LineError(Exception):
    def __init__(self, code: str, message: str, column: int = 1) -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.column = column


@dataclass
class _Line:
    no: int
    indent: int
    text: str  # content after the indentation
    offset: int = 0  # indentation width in characters

    def span(self, column: int = 1) -> SourceSpan:
        return SourceSpan(self.no, self.offset + column, len(self.text))


# -- type expressions ----------------------------------------------------------


def _skip_ws(s: str, i: int) -> int:
    while i < len(s) and s[i] in " \t":
        i += 1
    return i


def _read_type(s: str, i: int, nested: bool = False) -> tuple[TypeExpr, int]:
    if nested:
        i = _skip_ws(s, i)
    if i >= len(s):
        raise _LineError("type-expr", "expected a type expression", i + 1)
    c = s[i]
    if c == "[":
        item, j = _read_type(s, i + 1, nested=True)
        j = _skip_ws(s, j)
        if j >= len(s) or s[j] != "]":
            raise _LineError("type-expr", "expected ']' to close array type", j + 1)
        return Array(item), j + 1
    if c == "{":
        j = _skip_ws(s, i + 1)
        m = re.compile(_IDENT).match(s, j)
        if not m:
            raise _LineError("type-expr", "expected map key type 'str'", j + 1)
        if m.group(0) != "str":
            raise _LineError("type-expr", f"map keys must be str, got {m.group(0)!r}", j + 1)
        j = _skip_ws(s, m.end())
        if j >= len(s) or s[j] != ":":
            raise _LineError("type-expr", "expected ':' in map type", j + 1)
        value, j = _read_type(s, j + 1, nested=True)
        j = _skip_ws(s, j)
        if j >= len(s) or s[j] != "}":
            raise _LineError("type-expr", "expected '}' to close map type", j + 1)
        return Map(value), j + 1
    m = re.compile(_IDENT).match(s, i)
    if not m:
        raise _LineError("type-expr", f"expected a type name, found {s[i:i + 10]!r}", i + 1)
    name = m.group(0)
    return (Scalar(name) if name in SCALARS else Named(name)), m.end()


def parse_type_expr(text: str) -> TypeExpr:
    """Parse a bare type expression such as ``[InvoiceLine]`` or ``{str:any}``."""
    s = text.strip()
    try:
        t, end = _read_type(s, 0)
        if _skip_ws(s, end) != len(s):
            raise _LineError("type-expr", f"unexpected text after type: {s[end:]!r}", end + 1)
    except _LineError as e:
        raise LapisSyntaxError([ParseError(e.code, "error", e.message, SourceSpan(1, e.column))]) from None
    return t


# -- auth ----------------------------------------------------------------------


def _read_auth(s: str) -> AuthSpec:
    parts = s.split()
    if not parts:
        raise _LineError("auth", "expected an auth scheme")
    scheme = parts[0]
    if scheme not in AUTH_SCHEMES:
        raise _LineError("auth", f"unknown auth scheme {scheme!r}; expected one of {', '.join(AUTH_SCHEMES)}")
    if len(parts) == 1:
        return AuthSpec(scheme)
    if len(parts) > 2:
        raise _LineError("auth", "expected '<scheme> [location:name]'")
    location, sep, name = parts[1].partition(":")
    if not sep or not name or location not in AUTH_LOCATIONS:
        raise _LineError("auth", f"malformed credential carrier {parts[1]!r}; expected location:name")
    if scheme == "none":
        raise _LineError("auth", "auth scheme 'none' takes no credential carrier")
    return AuthSpec(scheme, location, name)


def parse_auth(text: str) -> AuthSpec:
    """Parse the value of an ``auth:`` key, e.g. ``bearer header:Authorization``."""
    try:
        return _read_auth(strip_comment(text))
    except _LineError as e:
        raise LapisSyntaxError([ParseError(e.code, "error", e.message, SourceSpan(1, e.column))]) from None


# -- flows ---------------------------------------------------------------------


def _read_flow(s: str) -> FlowExpr:
    tokens: list[tuple[str, str, int]] = []
    i = 0
    s = s.rstrip()
    while i < len(s):
        m = _FLOW_TOKEN_RE.match(s, i)
        if not m:
            raise _LineError("flow-expr", f"unexpected {s[_skip_ws(s, i):][:10]!r} in flow", _skip_ws(s, i) + 1)
        col = m.start() + len(m.group(0)) - len(m.group(0).lstrip()) + 1
        if m.group(1):
            tokens.append(("->", "", col))
        elif m.group(2):
            tokens.append(("|", "", col))
        elif m.group(3):
            tokens.append(("*", "", col))
        elif m.group(5):
            tokens.append(("name", m.group(5), col))
        else:
            tokens.append(("wait", m.group(4).strip(), col))
        i = m.end()
    if not tokens:
        raise _LineError("flow-expr", "expected a flow expression")

    pos = 0

    def term() -> FlowExpr:
        nonlocal pos
        if pos >= len(tokens):
            col = tokens[-1][2] if tokens else 1
            raise _LineError("flow-expr", "dangling operator at end of flow", col)
        kind, value, col = tokens[pos]
        if kind == "name":
            pos += 1
            if pos < len(tokens) and tokens[pos][0] == "*":
                pos += 1
                return Step(value, repeated=True)
            return Step(value)
        if kind == "wait":
            pos += 1
            return Wait(value)
        if kind == "|":
            raise _LineError("flow-expr", "empty branch arm", col)
        raise _LineError("flow-expr", f"expected a step before {kind!r}", col)

    def alt() -> FlowExpr:
        nonlocal pos
        arms = [term()]
        while pos < len(tokens) and tokens[pos][0] == "|":
            pos += 1
            if pos >= len(tokens) or tokens[pos][0] in ("|", "->"):
                raise _LineError("flow-expr", "empty branch arm", tokens[pos - 1][2])
            arms.append(term())
        return arms[0] if len(arms) == 1 else Branch(tuple(arms))

    items = [alt()]
    while pos < len(tokens):
        kind, _, col = tokens[pos]
        if kind != "->":
            raise _LineError("flow-expr", f"expected '->' but found {kind!r}", col)
        pos += 1
        if pos >= len(tokens):
            raise _LineError("flow-expr", "dangling arrow at end of flow", col)
        items.append(alt())
    return items[0] if len(items) == 1 else Seq(tuple(items))


def parse_flow_expr(text: str) -> FlowExpr:
    """Parse a flow body such as ``a -> b* -> ...(wait) -> c | d``."""
    try:
        return _read_flow(" ".join(part.strip() for part in text.splitlines()))
    except _LineError as e:
        raise LapisSyntaxError([ParseError(e.code, "error", e.message, SourceSpan(1, e.column))]) from None


# -- field / parameter lines ---------------------------------------------------


@dataclass
class _FieldParts:
    name: str
    optional: bool
    type: TypeExpr
    default: object = None
    since: str | None = None
    deprecated: str | None = None
    location: str | None = None
    alias: str | None = None


def _read_field(s: str, *, allow_location: bool, allow_meta: bool) -> _FieldParts:
    if s.startswith('"'):
        try:
            name, i = read_quoted(s, 0)
        except ValueError:
            raise _LineError("field", "unterminated quoted name") from None
    else:
        m = re.compile(_IDENT).match(s)
        if not m:
            raise _LineError("field", "expected a field name")
        name, i = m.group(0), m.end()
    optional = False
    if i < len(s) and s[i] == "?":
        optional = True
        i += 1
    if i >= len(s) or s[i] != ":":
        raise _LineError("field", "expected ':' after field name", i + 1)
    i = _skip_ws(s, i + 1)
    t, i = _read_type(s, i)
    parts = _FieldParts(name, optional, t)
    rest = s[i:]
    if rest and not rest[0].isspace():
        raise _LineError("field", f"unexpected {rest[:10]!r} after type", i + 1)
    i = _skip_ws(s, i)
    if i < len(s) and s[i] == "=":
        i = _skip_ws(s, i + 1)
        if i < len(s) and s[i] == '"':
            try:
                _, end = read_quoted(s, i)
            except ValueError:
                raise _LineError("default", "unterminated string default", i + 1) from None
        else:
            end = i
            while end < len(s) and not s[end].isspace():
                end += 1
        if end == i:
            raise _LineError("default", "expected a default value after '='", i + 1)
        parts.default = parse_literal(s[i:end])
        i = _skip_ws(s, end)
    while i < len(s):
        if s[i] != "@":
            raise _LineError("field", f"unexpected {s[i:i + 10]!r}; expected an @annotation", i + 1)
        end = i
        while end < len(s) and not s[end].isspace():
            end += 1
        word = s[i + 1:end]
        key, sep, arg = word.partition(":")
        col = i + 1
        i = _skip_ws(s, end)
        if allow_meta and key == "since":
            if not arg:
                raise _LineError("annotation", "expected @since:<version>", col)
            parts.since = arg
        elif allow_meta and key == "deprecated" and not sep:
            parts.deprecated = ""
            if i < len(s) and s[i] == '"':
                try:
                    parts.deprecated, i = read_quoted(s, i)
                except ValueError:
                    raise _LineError("annotation", "unterminated deprecation reason", i + 1) from None
                i = _skip_ws(s, i)
        elif allow_location and key in LOCATIONS:
            if parts.location is not None:
                raise _LineError("annotation", "location given twice", col)
            if sep and not arg:
                raise _LineError("annotation", f"expected @{key}:<name>", col)
            parts.location = key
            parts.alias = arg or None
        else:
            raise _LineError("annotation", f"unknown annotation @{word}", col)
    return parts


def _to_field(p: _FieldParts, span: SourceSpan) -> Field:
    return Field(p.name, p.type, p.optional, p.default, p.since, p.deprecated, span=span)


# -- the document parser -------------------------------------------------------


class _Parser:
    def __init__(self, text: str, fragment: bool) -> None:
        self.text = text.replace("\r\n", "\n")
        self.fragment = fragment
        self.diags: list[ParseError] = []
        self.unit = 0
        self.seen_sections: list[str] = []
        self.meta_values: dict[str, tuple[str, _Line]] = {}
        self.meta_line: _Line | None = None
        self.types: list[TypeDef] = []
        self.ops: list[Operation] = []
        self.webhooks: list[Webhook] = []
        self.error_base: str | None = None
        self.error_entries: list[ErrorDef] = []
        self.errors_seen = False
        self.on_exceed: OnExceed | None = None
        self.plans: list[Plan] = []
        self.limits_seen = False
        self.flows: list[Flow] = []

    # diagnostics

    def error(self, line: _Line | None, code: str, message: str, column: int = 1) -> None:
        span = line.span(column) if line else None
        self.diags.append(ParseError(code, "error", message, span))

    def warning(self, line: _Line | None, code: str, message: str) -> None:
        self.diags.append(ParseError(code, "warning", message, line.span() if line else None))

    # lines

    def lines(self) -> list[_Line]:
        out = []
        for no, raw in enumerate(self.text.split("\n"), start=1):
            if not raw.strip():
                continue
            stripped = raw.lstrip(" \t")
            lead = raw[: len(raw) - len(stripped)]
            if "\t" in lead:
                self.error(_Line(no, 0, raw), "tab-indent", "tab characters are not allowed in indentation")
                continue
            indent = len(lead)
            if indent and not self.unit:
                self.unit = indent
            if self.unit and indent % self.unit:
                self.error(
                    _Line(no, 0, raw),
                    "bad-indent",
                    f"indentation of {indent} is not a multiple of {self.unit}",
                    indent + 1,
                )
                continue
            out.append(_Line(no, indent // self.unit if self.unit else 0, stripped.rstrip(), indent))
        return out

    def run(self) -> LapisDocument | None:
        section: str | None = None
        entry: _Line | None = None
        children: list[_Line] = []

        def flush() -> None:
            if entry is not None:
                self.entry(section, entry, children)

        for line in self.lines():
            if line.indent == 0:
                if line.text.startswith("#"):
                    m = _BASE_RE.match(line.text)
                    if section == "errors" and m:
                        flush()
                        entry, children = None, []
                        if self.error_base is not None:
                            self.error(line, "duplicate-base", "base structure declared twice")
                        self.error_base = m.group(1)
                    continue
                flush()
                entry, children = None, []
                head = strip_comment(line.text)
                m = _SECTION_RE.match(head)
                if m:
                    section = self.section(line, m.group(1).strip())
                elif section is None:
                    self.error(line, "no-section", "expected a section header such as [meta]")
                else:
                    entry = line
            else:
                if line.text.startswith("#") and not (section == "errors" and entry is None):
                    continue
                if entry is None:
                    if section is not None:
                        self.error(line, "bad-indent", "indented line outside of an entry", 1)
                    continue
                children.append(line)
        flush()
        return self.finish()

    def section(self, line: _Line, name: str) -> str | None:
        if name not in SECTIONS:
            self.error(line, "unknown-section", f"unknown section [{name}]; expected one of {', '.join(SECTIONS)}")
            return "?"
        if name in self.seen_sections:
            self.error(line, "duplicate-section", f"section [{name}] appears twice")
        elif self.seen_sections and SECTIONS.index(name) < SECTIONS.index(self.seen_sections[-1]):
            self.warning(line, "section-order", f"section [{name}] is out of order")
        self.seen_sections.append(name)
        if name == "meta":
            self.meta_line = self.meta_line or line
        elif name == "errors":
            self.errors_seen = True
        elif name == "limits":
            self.limits_seen = True
        return name

    def entry(self, section: str | None, head: _Line, children: list[_Line]) -> None:
        handler = getattr(self, f"entry_{section}", None)
        if handler is None:
            return  # unknown section: already reported at its header
        try:
            handler(head, children)
        except _LineError as e:
            self.error(head, e.code, e.message, e.column)
            # still read the children so their own problems surface
            self.orphan_children(section, children)

    def orphan_children(self, section: str, children: list[_Line]) -> None:
        for child in children:
            try:
                if section in ("types", "ops", "webhooks", "errors"):
                    text = child.text
                    if text[:1] in "<>~":
                        text = text[1:].lstrip()
                    elif section != "types":
                        continue
                    _read_field(strip_comment(text), allow_location=True, allow_meta=True)
            except _LineError as e:
                self.error(child, e.code, e.message, e.column)

    def child_lines(self, children: list[_Line], allow_deeper: bool = False):
        for child in children:
            if child.indent == 1 or (allow_deeper and child.indent == 2):
                yield child
            else:
                self.error(child, "bad-indent", f"expected indent of one unit, found {child.indent}")

    def no_children(self, children: list[_Line], what: str) -> None:
        for child in children:
            self.error(child, "bad-indent", f"{what} takes no indented lines")

    # [meta]

    def entry_meta(self, head: _Line, children: list[_Line]) -> None:
        self.no_children(children, "a meta entry")
        key, sep, value = head.text.partition(":")
        key = key.strip()
        if not sep or key not in ("api", "base", "version", "desc", "auth"):
            raise _LineError("meta-key", f"expected one of api/base/version/desc/auth, found {key!r}")
        if key in self.meta_values:
            raise _LineError("meta-key", f"meta key {key!r} given twice")
        value = value.strip()
        if key == "auth":
            try:
                _read_auth(strip_comment(value))
            except _LineError as e:
                e.column = len(head.text) - len(value) + 1
                raise
        self.meta_values[key] = (value, head)

    # [types]

    def entry_types(self, head: _Line, children: list[_Line]) -> None:
        text = strip_comment(head.text)
        m = re.compile(rf"({_IDENT})\s*:\s*(.*)\Z").match(text)
        if not m:
            raise _LineError("type-def", "expected 'Name:' or 'Name: a | b'")
        name, rest = m.group(1), m.group(2)
        if rest:
            self.no_children(children, "an enum definition")
            body: ObjectBody | EnumBody = EnumBody(self.variants(rest, m.start(2) + 1))
        else:
            fields = []
            for child in self.child_lines(children):
                try:
                    fields.append(_to_field(self.field(child.text), child.span()))
                except _LineError as e:
                    self.error(child, e.code, e.message, e.column)
            body = ObjectBody(tuple(fields))
        self.types.append(TypeDef(name, body, span=head.span()))

    def variants(self, s: str, col: int) -> tuple[str, ...]:
        out = []
        i = 0
        while True:
            i = _skip_ws(s, i)
            if i < len(s) and s[i] == '"':
                try:
                    value, i = read_quoted(s, i)
                except ValueError:
                    raise _LineError("enum", "unterminated enum variant", col + i) from None
            else:
                start = i
                while i < len(s) and s[i] != "|" and not s[i].isspace():
                    i += 1
                value = s[start:i]
                if not value:
                    raise _LineError("enum", "empty enum variant", col + start)
            out.append(value)
            i = _skip_ws(s, i)
            if i >= len(s):
                return tuple(out)
            if s[i] != "|":
                raise _LineError("enum", f"expected '|' between variants, found {s[i]!r}", col + i)
            i += 1

    def field(self, text: str, *, location: bool = False) -> _FieldParts:
        return _read_field(strip_comment(text), allow_location=location, allow_meta=not location)

    # [ops]

    def entry_ops(self, head: _Line, children: list[_Line]) -> None:
        text = strip_comment(head.text)
        m = _OP_RE.match(text)
        if not m:
            raise _LineError("op-signature", "expected 'name METHOD /path [+modifier...]'")
        name, method, path, mods = m.groups()
        if method not in METHODS:
            raise _LineError("http-method", f"unknown HTTP method {method!r}", m.start(2) + 1)
        if not path.startswith("/"):
            raise _LineError("route", f"expected a route starting with '/', found {path!r}", m.start(3) + 1)
        modifiers = set()
        for word in mods.split():
            if not word.startswith("+") or word[1:] not in MODIFIERS:
                raise _LineError("modifier", f"unknown modifier {word!r}", text.find(word) + 1)
            modifiers.add(word[1:])
        desc: list[str] = []
        inputs: list[Param] = []
        out_fields: list[Field] = []
        output: TypeExpr | ObjectBody | None = None
        saw_io = False
        for child in self.child_lines(children):
            try:
                marker = child.text[0]
                if marker == ">":
                    saw_io = True
                    inputs.append(self.param(child, method, path, webhook=False))
                elif marker == "<":
                    saw_io = True
                    body = child.text[1:].lstrip()
                    if _FIELD_HEAD_RE.match(body):
                        if output is not None:
                            raise _LineError("output", "cannot mix a named output with output fields")
                        out_fields.append(_to_field(self.field(body), child.span()))
                    else:
                        if output is not None or out_fields:
                            raise _LineError("output", "an operation has a single output")
                        output = self.type_line(body)
                elif saw_io:
                    raise _LineError("desc", "description lines must come before '>' and '<' lines")
                else:
                    desc.append(read_prose(child.text))
            except _LineError as e:
                self.error(child, e.code, e.message, e.column)
        if out_fields:
            output = ObjectBody(tuple(out_fields))
        self.ops.append(
            Operation(name, method, path, tuple(desc), tuple(inputs), output, frozenset(modifiers), span=head.span())
        )

    def type_line(self, body: str) -> TypeExpr:
        s = strip_comment(body)
        t, end = _read_type(s, 0)
        if end != len(s):
            raise _LineError("type-expr", f"unexpected {s[end:][:10]!r} after type", end + 2)
        return t

    def param(self, child: _Line, method: str, path: str, webhook: bool) -> Param:
        p = self.field(child.text[1:].lstrip(), location=True)
        if p.location is None:
            location = "body" if webhook else infer_location(p.name, method, path)
            explicit = False
        else:
            location, explicit = p.location, True
        return Param(p.name, p.type, p.optional, p.default, location, explicit, p.alias, span=child.span())

    # [webhooks]

    def entry_webhooks(self, head: _Line, children: list[_Line]) -> None:
        m = _WEBHOOK_RE.match(strip_comment(head.text))
        if not m:
            raise _LineError("webhook-signature", "expected 'name -> METHOD /path'")
        name, method, path = m.groups()
        if method not in METHODS:
            raise _LineError("http-method", f"unknown HTTP method {method!r}", m.start(2) + 1)
        if not path.startswith("/"):
            raise _LineError("route", f"expected a route starting with '/', found {path!r}", m.start(3) + 1)
        trigger = ""
        payload: list[Param] = []
        for child in self.child_lines(children):
            try:
                if child.text.startswith("!"):
                    if trigger:
                        raise _LineError("webhook-trigger", "a webhook has one trigger line")
                    trigger = read_prose(child.text[1:].lstrip())
                elif child.text.startswith("<"):
                    payload.append(self.param(child, method, path, webhook=True))
                else:
                    raise _LineError("webhook-line", "expected '! trigger' or '< payload field'")
            except _LineError as e:
                self.error(child, e.code, e.message, e.column)
        self.webhooks.append(Webhook(name, method, path, trigger, tuple(payload), span=head.span()))

    # [errors]

    def entry_errors(self, head: _Line, children: list[_Line]) -> None:
        m = _ERROR_RE.match(strip_comment(head.text))
        if not m:
            raise _LineError("error-def", "expected 'CODE label [@ops:name,...]'")
        code, label, ops = m.groups()
        bound: tuple[str, ...] | None = None
        if ops is not None:
            bound = tuple(o for o in ops.split(","))
            if not all(bound):
                raise _LineError("error-def", "empty name in @ops list", m.start(3) + 1)
        desc: list[str] = []
        extra: list[Field] = []
        for child in self.child_lines(children):
            try:
                if child.text.startswith("~"):
                    extra.append(_to_field(self.field(child.text[1:].lstrip()), child.span()))
                elif extra:
                    raise _LineError("desc", "description lines must come before '~' fields")
                else:
                    desc.append(read_prose(child.text))
            except _LineError as e:
                self.error(child, e.code, e.message, e.column)
        self.error_entries.append(ErrorDef(int(code), label, tuple(desc), bound, tuple(extra), span=head.span()))

    # [limits]

    def entry_limits(self, head: _Line, children: list[_Line]) -> None:
        text = strip_comment(head.text)
        key, sep, value = text.partition(":")
        if key == "on_exceed" and sep:
            self.no_children(children, "on_exceed")
            parts = value.split()
            if len(parts) != 2 or not parts[0].isdigit():
                raise _LineError("limits", "expected 'on_exceed: CODE behavior'")
            if self.on_exceed is not None:
                raise _LineError("limits", "on_exceed given twice")
            self.on_exceed = OnExceed(int(parts[0]), parts[1])
        elif key == "plan" and sep:
            name = value.strip()
            if not name or " " in name:
                raise _LineError("limits", "expected 'plan: name'")
            rates: list[RateSpec] = []
            quotas: list[RateSpec] = []
            for child in self.child_lines(children):
                try:
                    kind, spec = self.rate(child.text)
                    (rates if kind == "rate" else quotas).append(spec)
                except _LineError as e:
                    self.error(child, e.code, e.message, e.column)
            self.plans.append(Plan(name, tuple(rates), tuple(quotas), span=head.span()))
        else:
            raise _LineError("limits", "expected 'on_exceed:' or 'plan:'")

    def rate(self, text: str) -> tuple[str, RateSpec]:
        s = strip_comment(text)
        kind, sep, rest = s.partition(":")
        if kind not in ("rate", "quota") or not sep:
            raise _LineError("limits", "expected 'rate:' or 'quota:'")
        rest = rest.strip()
        i = 0
        while i < len(rest) and not rest[i].isspace():
            i += 1
        m = _RATE_RE.match(rest[:i])
        if not m:
            raise _LineError("limits", "expected AMOUNT/PERIOD such as 60/m", len(kind) + 3)
        if m.group(2) not in PERIODS:
            raise _LineError("limits", f"unknown period {m.group(2)!r}; expected one of {', '.join(PERIODS)}")
        scope = note = None
        i = _skip_ws(rest, i)
        if i < len(rest) and rest[i] == "@":
            j = i
            while j < len(rest) and not rest[j].isspace():
                j += 1
            scope = rest[i + 1:j]
            if not scope:
                raise _LineError("limits", "expected a scope after '@'")
            i = _skip_ws(rest, j)
        if i < len(rest) and rest[i] == '"':
            try:
                note, i = read_quoted(rest, i)
            except ValueError:
                raise _LineError("limits", "unterminated note") from None
            i = _skip_ws(rest, i)
        if i != len(rest):
            raise _LineError("limits", f"unexpected {rest[i:][:10]!r} in rate")
        return kind, RateSpec(int(m.group(1)), m.group(2), scope, note)

    # [flows]

    def entry_flows(self, head: _Line, children: list[_Line]) -> None:
        text = strip_comment(head.text)
        m = re.compile(rf"({_IDENT})(?:\s+(\".*))?\Z").match(text)
        if not m:
            raise _LineError("flow", "expected 'name \"Title\"'")
        name, title = m.group(1), None
        if m.group(2):
            try:
                title, end = read_quoted(m.group(2), 0)
            except ValueError:
                raise _LineError("flow", "unterminated flow title", m.start(2) + 1) from None
            if m.group(2)[end:].strip():
                raise _LineError("flow", "unexpected text after flow title", m.start(2) + end + 1)
        expr_parts: list[str] = []
        expr_line: _Line | None = None
        expr_done = False
        conditions: list[tuple[str, str]] = []
        for child in self.child_lines(children, allow_deeper=True):
            try:
                if child.indent == 2:
                    if expr_line is None or expr_done:
                        raise _LineError("bad-indent", "continuation line without a flow expression")
                    expr_parts.append(strip_comment(child.text))
                    continue
                if expr_line is not None:
                    expr_done = True
                if child.text.startswith("?"):
                    cm = re.compile(rf"\?\s*({_IDENT})\s*:\s*(.*)\Z").match(child.text)
                    if not cm:
                        raise _LineError("flow-condition", "expected '? step: condition'")
                    conditions.append((cm.group(1), read_prose(cm.group(2))))
                elif expr_line is None:
                    expr_line = child
                    expr_parts.append(strip_comment(child.text))
                else:
                    raise _LineError("flow-expr", "a flow has a single expression")
            except _LineError as e:
                self.error(child, e.code, e.message, e.column)
        if expr_line is None:
            raise _LineError("flow-expr", f"flow {name!r} has no expression")
        try:
            expr = _read_flow(" ".join(expr_parts))
        except _LineError as e:
            self.error(expr_line, e.code, e.message, e.column)
            return
        self.flows.append(Flow(name, expr, title, tuple(conditions), span=head.span()))

    # assembly

    def finish(self) -> LapisDocument | None:
        if not self.fragment:
            for name in REQUIRED_SECTIONS:
                if name not in self.seen_sections:
                    self.error(None, "missing-section", f"required section [{name}] absent")
        values = {k: v for k, (v, _) in self.meta_values.items()}
        if "meta" in self.seen_sections:
            for key in ("api", "base"):
                if key not in values:
                    self.error(self.meta_line, "meta-required", f"[meta] requires '{key}:'")
        auth = AuthSpec()
        if "auth" in values:
            auth = _read_auth(strip_comment(values["auth"]))
        meta_span = self.meta_line.span() if self.meta_line else None
        meta = Meta(
            read_prose(values.get("api", "")),
            read_prose(values.get("base", "")),
            auth,
            read_prose(values["version"]) if "version" in values else None,
            read_prose(values["desc"]) if "desc" in values else None,
            span=meta_span,
        )
        if any(d.is_error for d in self.diags):
            return None
        errors = None
        if self.error_base is not None or self.error_entries:
            errors = ErrorSection(self.error_base, tuple(self.error_entries))
        limits = None
        if self.on_exceed is not None or self.plans:
            limits = LimitsSection(self.on_exceed, tuple(self.plans))
        return LapisDocument(
            meta=meta,
            types=tuple(self.types),
            ops=tuple(self.ops),
            webhooks=tuple(self.webhooks),
            errors=errors,
            limits=limits,
            flows=tuple(self.flows),
        )


def parse_document(
    text: str,
    *,
    diagnostics: list[ParseError] | None = None,
    fragment: bool = False,
) -> LapisDocument:
    """Parse LAPIS text.

    Raises :class:`LapisSyntaxError` listing every error found. Warnings (for
    example a misordered section) are appended to ``diagnostics`` when a list
    is supplied. ``fragment=True`` accepts text without ``[meta]``/``[ops]``,
    as used for sidecar files merged into converter output.
    """
    parser = _Parser(text, fragment)
    doc = parser.run()
    if diagnostics is not None:
        diagnostics.extend(parser.diags)
    if doc is None:
        raise LapisSyntaxError(parser.diags)
    return doc
