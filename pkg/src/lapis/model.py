"""LAPIS document model and structural validation.

Every node is a frozen dataclass. Equality is structural and covers every
semantic field; the ``span`` attribute attached by the parser is excluded from
comparison so that a parsed document equals its hand-built counterpart.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Union
from urllib.parse import urlparse

SCALARS = ("str", "int", "float", "bool", "date", "datetime", "file", "any")
METHODS = ("GET", "POST", "PUT", "PATCH", "DELETE", "HEAD", "OPTIONS")
LOCATIONS = ("path", "query", "body", "header")
MODIFIERS = ("paginated", "idempotent", "stream", "deprecated")
AUTH_SCHEMES = ("bearer", "apikey", "basic", "oauth2", "none")
AUTH_LOCATIONS = ("header", "query", "cookie")
PERIODS = ("s", "m", "h", "d", "mo")

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_UPPER_CAMEL_RE = re.compile(r"[A-Z][A-Za-z0-9]*\Z")
_SNAKE_RE = re.compile(r"[a-z_][a-z0-9_]*\Z")
PATH_PARAM_RE = re.compile(r"\{([^{}]+)\}")


def is_identifier(name: str) -> bool:
    return bool(IDENT_RE.match(name))


def path_params(path: str) -> list[str]:
    """Names of the ``{param}`` segments of a route template, in order."""
    return PATH_PARAM_RE.findall(path)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int = 1
    length: int = 0

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError(f"span must be 1-based, got {self.line}:{self.column}")

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


_SPAN = field(default=None, compare=False, repr=False)


# -- type expressions --------------------------------------------------------


@dataclass(frozen=True)
class Scalar:
    name: str

    def __post_init__(self) -> None:
        if self.name not in SCALARS:
            raise ValueError(f"unknown scalar {self.name!r}")


@dataclass(frozen=True)
class Named:
    name: str


@dataclass(frozen=True)
class Array:
    item: TypeExpr


@dataclass(frozen=True)
class Map:
    """``{str:T}``; keys are always strings."""

    value: TypeExpr


TypeExpr = Union[Scalar, Named, Array, Map]

Literal = Union[str, int, float, bool]


def type_names(t: TypeExpr) -> Iterator[str]:
    """Yield every named-type reference inside ``t``."""
    while isinstance(t, (Array, Map)):
        t = t.item if isinstance(t, Array) else t.value
    if isinstance(t, Named):
        yield t.name


# -- types section -----------------------------------------------------------


@dataclass(frozen=True)
class Field:
    name: str
    type: TypeExpr
    optional: bool = False
    default: Literal | None = None
    since: str | None = None
    # None: not deprecated; "": deprecated without a reason
    deprecated: str | None = None
    span: SourceSpan | None = _SPAN


@dataclass(frozen=True)
class ObjectBody:
    fields: tuple[Field, ...] = ()


@dataclass(frozen=True)
class EnumBody:
    variants: tuple[str, ...]


@dataclass(frozen=True)
class TypeDef:
    name: str
    body: ObjectBody | EnumBody
    span: SourceSpan | None = _SPAN


# -- meta --------------------------------------------------------------------


@dataclass(frozen=True)
class AuthSpec:
    scheme: str = "none"
    location: str | None = None
    name: str | None = None


@dataclass(frozen=True)
class Meta:
    api: str
    base: str
    auth: AuthSpec = AuthSpec()
    version: str | None = None
    desc: str | None = None
    span: SourceSpan | None = _SPAN


# -- ops and webhooks --------------------------------------------------------


@dataclass(frozen=True)
class Param:
    name: str
    type: TypeExpr
    optional: bool = False
    default: Literal | None = None
    location: str = "body"
    location_explicit: bool = False
    # wire name when it differs from ``name`` (``@header:X-Event-ID``)
    alias: str | None = None
    span: SourceSpan | None = _SPAN

    @property
    def wire_name(self) -> str:
        return self.alias if self.alias is not None else self.name


@dataclass(frozen=True)
class Operation:
    name: str
    method: str
    path: str
    desc: tuple[str, ...] = ()
    inputs: tuple[Param, ...] = ()
    output: TypeExpr | ObjectBody | None = None
    modifiers: frozenset[str] = frozenset()
    span: SourceSpan | None = _SPAN


@dataclass(frozen=True)
class Webhook:
    name: str
    method: str
    path: str
    trigger: str = ""
    payload: tuple[Param, ...] = ()
    span: SourceSpan | None = _SPAN


# -- errors ------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorDef:
    code: int
    label: str
    desc: tuple[str, ...] = ()
    # None: global; otherwise the operations the error is scoped to
    ops: tuple[str, ...] | None = None
    extra_fields: tuple[Field, ...] = ()
    span: SourceSpan | None = _SPAN


@dataclass(frozen=True)
class ErrorSection:
    base_type: str | None = None
    entries: tuple[ErrorDef, ...] = ()
    span: SourceSpan | None = _SPAN


# -- limits ------------------------------------------------------------------


@dataclass(frozen=True)
class RateSpec:
    amount: int
    period: str
    scope: str | None = None
    note: str | None = None


@dataclass(frozen=True)
class Plan:
    name: str
    rates: tuple[RateSpec, ...] = ()
    quotas: tuple[RateSpec, ...] = ()
    span: SourceSpan | None = _SPAN


@dataclass(frozen=True)
class OnExceed:
    code: int
    behavior: str


@dataclass(frozen=True)
class LimitsSection:
    on_exceed: OnExceed | None = None
    plans: tuple[Plan, ...] = ()
    span: SourceSpan | None = _SPAN


# -- flows -------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    name: str
    repeated: bool = False


@dataclass(frozen=True)
class Wait:
    label: str


@dataclass(frozen=True)
class Branch:
    alternatives: tuple[FlowExpr, ...]


@dataclass(frozen=True)
class Seq:
    items: tuple[FlowExpr, ...]


FlowExpr = Union[Step, Wait, Branch, Seq]


def flow_steps(expr: FlowExpr) -> Iterator[Step]:
    if isinstance(expr, Step):
        yield expr
    elif isinstance(expr, Branch):
        for alt in expr.alternatives:
            yield from flow_steps(alt)
    elif isinstance(expr, Seq):
        for item in expr.items:
            yield from flow_steps(item)


@dataclass(frozen=True)
class Flow:
    name: str
    expr: FlowExpr
    title: str | None = None
    conditions: tuple[tuple[str, str], ...] = ()
    span: SourceSpan | None = _SPAN


# -- document ----------------------------------------------------------------


@dataclass(frozen=True)
class LapisDocument:
    meta: Meta
    types: tuple[TypeDef, ...] = ()
    ops: tuple[Operation, ...] = ()
    webhooks: tuple[Webhook, ...] = ()
    errors: ErrorSection | None = None
    limits: LimitsSection | None = None
    flows: tuple[Flow, ...] = ()

    def type_def(self, name: str) -> TypeDef | None:
        return next((t for t in self.types if t.name == name), None)

    def op(self, name: str) -> Operation | None:
        return next((o for o in self.ops if o.name == name), None)


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: str  # "error" | "warning"
    message: str
    span: SourceSpan | None = None
    path: str = ""

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        ctx = f" [{self.path}]" if self.path else ""
        return f"{where}{self.severity} {self.code}: {self.message}{ctx}"


def infer_location(name: str, method: str, path: str) -> str:
    """Location a parameter gets when no ``@annotation`` is written."""
    if name in path_params(path):
        return "path"
    return "body" if method in ("POST", "PUT", "PATCH") else "query"


def default_compatible(t: TypeExpr, value: Literal, types: dict[str, TypeDef]) -> bool:
    if isinstance(t, (Array, Map)):
        return False
    if isinstance(t, Named):
        td = types.get(t.name)
        if td is None or isinstance(td.body, ObjectBody):
            return False
        return isinstance(value, str) and value in td.body.variants
    kind = t.name
    if kind == "any":
        return True
    if kind == "bool":
        return isinstance(value, bool)
    if kind == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "float":
        if isinstance(value, float):
            return math.isfinite(value)
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, str)


def prose_ok(text: str) -> bool:
    """Whether ``text`` survives a trip through a single prose line."""
    return bool(text) and "\n" not in text and "\r" not in text and text == text.strip()


def _quoted_ok(text: str) -> bool:
    return "\n" not in text and "\r" not in text


class _Validator:
    def __init__(self, doc: LapisDocument) -> None:
        self.doc = doc
        self.out: list[Diagnostic] = []
        self.types: dict[str, TypeDef] = {}

    def err(self, code: str, msg: str, node: object = None, path: str = "") -> None:
        self.out.append(Diagnostic(code, "error", msg, getattr(node, "span", None), path))

    def warn(self, code: str, msg: str, node: object = None, path: str = "") -> None:
        self.out.append(Diagnostic(code, "warning", msg, getattr(node, "span", None), path))

    def run(self) -> list[Diagnostic]:
        doc = self.doc
        self.meta(doc.meta)
        self.type_defs(doc.types)
        self.operations(doc.ops)
        self.webhooks(doc.webhooks)
        if doc.errors is not None:
            self.errors(doc.errors)
        if doc.limits is not None:
            self.limits(doc.limits)
        self.flows(doc.flows)
        return self.out

    # helpers

    def ident(self, name: str, what: str, node: object, path: str) -> bool:
        if not is_identifier(name):
            self.err("invalid-identifier", f"{what} {name!r} is not an identifier", node, path)
            return False
        return True

    def type_ref(self, t: TypeExpr, node: object, path: str) -> None:
        for name in type_names(t):
            if name not in self.types:
                self.err("dangling-type", f"dangling type reference {name!r}", node, path)

    def prose(self, text: str, node: object, path: str) -> None:
        if not prose_ok(text):
            self.err("unrepresentable-text", f"text {text!r} cannot be written on one line", node, path)

    def field_like(self, f: Field | Param, node_path: str, kind: str) -> None:
        if not f.name or not _quoted_ok(f.name):
            self.err("invalid-identifier", f"{kind} name {f.name!r} is not writable", f, node_path)
        elif is_identifier(f.name) and not _SNAKE_RE.match(f.name):
            self.warn("naming", f"{kind} {f.name!r} is not snake_case", f, node_path)
        self.type_ref(f.type, f, node_path)
        if f.default is not None:
            if isinstance(f.default, str) and not _quoted_ok(f.default):
                self.err("unrepresentable-text", "default contains a line break", f, node_path)
            if not default_compatible(f.type, f.default, self.types):
                self.err("default-type", f"default {f.default!r} does not fit the declared type", f, node_path)

    def fields(self, fields: tuple[Field, ...], path: str, kind: str = "field") -> None:
        seen: set[str] = set()
        for f in fields:
            p = f"{path}.{f.name}"
            if f.name in seen:
                self.err("duplicate-name", f"duplicate {kind} {f.name!r}", f, p)
            seen.add(f.name)
            self.field_like(f, p, kind)
            if f.since is not None and (not f.since or any(c.isspace() for c in f.since) or '"' in f.since):
                self.err("invalid-annotation", f"@since tag {f.since!r} is not a token", f, p)
            if f.deprecated is not None and not _quoted_ok(f.deprecated):
                self.err("unrepresentable-text", "deprecation reason contains a line break", f, p)

    # sections

    def meta(self, m: Meta) -> None:
        if not m.api:
            self.err("meta-required", "meta 'api' is empty", m, "meta.api")
        else:
            self.prose(m.api, m, "meta.api")
        url = urlparse(m.base)
        if not m.base or not url.scheme or not url.netloc:
            self.err("meta-base-url", f"base {m.base!r} is not an absolute URL", m, "meta.base")
        elif not prose_ok(m.base) or any(c.isspace() for c in m.base):
            self.err("meta-base-url", f"base {m.base!r} contains whitespace", m, "meta.base")
        for key in ("version", "desc"):
            value = getattr(m, key)
            if value is not None:
                self.prose(value, m, f"meta.{key}")
        a = m.auth
        if a.scheme not in AUTH_SCHEMES:
            self.err("auth-scheme", f"unknown auth scheme {a.scheme!r}", m, "meta.auth")
        if (a.location is None) != (a.name is None):
            self.err("auth-carrier", "auth location and name must be given together", m, "meta.auth")
        if a.scheme == "none" and a.location is not None:
            self.err("auth-carrier", "auth scheme 'none' takes no carrier", m, "meta.auth")
        if a.location is not None and a.location not in AUTH_LOCATIONS:
            self.err("auth-carrier", f"unknown auth location {a.location!r}", m, "meta.auth")
        if a.name is not None and (not a.name or any(c.isspace() for c in a.name) or "#" in a.name):
            self.err("auth-carrier", f"auth carrier name {a.name!r} is not a token", m, "meta.auth")

    def type_defs(self, types: tuple[TypeDef, ...]) -> None:
        for td in types:
            if td.name in self.types:
                self.err("duplicate-name", f"duplicate type {td.name!r}", td, f"types.{td.name}")
            else:
                self.types[td.name] = td
            if self.ident(td.name, "type name", td, f"types.{td.name}"):
                if td.name in SCALARS:
                    self.err("invalid-identifier", f"type name {td.name!r} shadows a scalar", td, f"types.{td.name}")
                elif not _UPPER_CAMEL_RE.match(td.name):
                    self.warn("naming", f"type {td.name!r} is not UpperCamelCase", td, f"types.{td.name}")
        for td in types:
            path = f"types.{td.name}"
            if isinstance(td.body, EnumBody):
                variants = td.body.variants
                if not variants:
                    self.err("empty-enum", f"enum {td.name!r} has no variants", td, path)
                if len(set(variants)) != len(variants):
                    self.err("duplicate-name", f"enum {td.name!r} repeats a variant", td, path)
                for v in variants:
                    if not _quoted_ok(v):
                        self.err("unrepresentable-text", f"enum variant {v!r} contains a line break", td, path)
            else:
                self.fields(td.body.fields, path)

    def params(self, params: tuple[Param, ...], method: str, route: str, path: str, webhook: bool) -> None:
        seen: set[tuple[str, str]] = set()
        for p in params:
            pp = f"{path}.{p.name}"
            key = (p.name, p.location)
            if key in seen:
                self.err("duplicate-name", f"duplicate input {p.name!r} @{p.location}", p, pp)
            seen.add(key)
            self.field_like(p, pp, "parameter")
            if p.location not in LOCATIONS:
                self.err("param-location", f"unknown location {p.location!r}", p, pp)
                continue
            if webhook and p.location not in ("body", "header"):
                self.err("param-location", "webhook payload must be @body or @header", p, pp)
            if p.alias is not None:
                if not p.location_explicit:
                    self.err("param-location", "a wire-name alias needs an explicit @location", p, pp)
                if not p.alias or any(c.isspace() or c in '"#' for c in p.alias):
                    self.err("invalid-identifier", f"alias {p.alias!r} is not a token", p, pp)
            if not p.location_explicit:
                inferred = "body" if webhook else infer_location(p.name, method, route)
                if inferred != p.location:
                    self.err(
                        "param-location",
                        f"{p.name!r} is @{p.location} but would be read back as @{inferred}",
                        p,
                        pp,
                    )

    def route(self, node: Operation | Webhook, path: str) -> None:
        if node.method not in METHODS:
            self.err("http-method", f"unknown HTTP method {node.method!r}", node, path)
        if not node.path.startswith("/") or any(c.isspace() or c == "#" for c in node.path):
            self.err("route", f"route {node.path!r} must start with '/' and contain no spaces", node, path)

    def operations(self, ops: tuple[Operation, ...]) -> None:
        if not ops:
            self.warn("no-ops", "the [ops] section declares no operations")
        seen: set[str] = set()
        for op in ops:
            path = f"ops.{op.name}"
            if op.name in seen:
                self.err("duplicate-name", f"duplicate operation {op.name!r}", op, path)
            seen.add(op.name)
            if self.ident(op.name, "operation name", op, path) and not _SNAKE_RE.match(op.name):
                self.warn("naming", f"operation {op.name!r} is not snake_case", op, path)
            self.route(op, path)
            for line in op.desc:
                self.prose(line, op, path)
            self.params(op.inputs, op.method, op.path, path, webhook=False)
            wired = {p.wire_name for p in op.inputs if p.location == "path"}
            template = path_params(op.path)
            for name in template:
                if name not in wired:
                    self.err("path-param", f"route parameter {{{name}}} has no @path input", op, path)
            for name in wired - set(template):
                self.err("path-param", f"@path input {name!r} is not in the route", op, path)
            bad = set(op.modifiers) - set(MODIFIERS)
            if bad:
                self.err("modifier", f"unknown modifiers {sorted(bad)}", op, path)
            if isinstance(op.output, ObjectBody):
                if not op.output.fields:
                    self.err("empty-output", "inline output needs at least one field", op, path)
                self.fields(op.output.fields, f"{path}.output")
            elif op.output is not None:
                self.type_ref(op.output, op, f"{path}.output")

    def webhooks(self, hooks: tuple[Webhook, ...]) -> None:
        seen: set[str] = set()
        for wh in hooks:
            path = f"webhooks.{wh.name}"
            if wh.name in seen:
                self.err("duplicate-name", f"duplicate webhook {wh.name!r}", wh, path)
            seen.add(wh.name)
            self.ident(wh.name, "webhook name", wh, path)
            self.route(wh, path)
            if not wh.trigger:
                self.warn("webhook-trigger", f"webhook {wh.name!r} has no trigger condition", wh, path)
            else:
                self.prose(wh.trigger, wh, path)
            self.params(wh.payload, wh.method, wh.path, path, webhook=True)

    def errors(self, es: ErrorSection) -> None:
        if es.base_type is not None:
            if es.base_type not in self.types:
                self.err("dangling-type", f"dangling type reference {es.base_type!r}", es, "errors")
        op_names = {op.name for op in self.doc.ops}
        seen: set[tuple[int, str]] = set()
        for e in es.entries:
            path = f"errors.{e.code}.{e.label}"
            if not 400 <= e.code <= 599:
                self.err("error-code", f"status {e.code} is outside 400-599", e, path)
            if (e.code, e.label) in seen:
                self.err("duplicate-name", f"duplicate error {e.code} {e.label}", e, path)
            seen.add((e.code, e.label))
            self.ident(e.label, "error label", e, path)
            for line in e.desc:
                self.prose(line, e, path)
            if e.ops is not None:
                if not e.ops:
                    self.err("unknown-op", "@ops binding lists no operations", e, path)
                for name in e.ops:
                    if name not in op_names:
                        self.err("unknown-op", f"unknown op in @ops: {name!r}", e, path)
            self.fields(e.extra_fields, path)

    def limits(self, lim: LimitsSection) -> None:
        if lim.on_exceed is not None:
            if not 400 <= lim.on_exceed.code <= 599:
                self.err("error-code", f"on_exceed status {lim.on_exceed.code} is outside 400-599", lim, "limits")
            self.ident(lim.on_exceed.behavior, "on_exceed behavior", lim, "limits")
        seen: set[str] = set()
        for plan in lim.plans:
            path = f"limits.{plan.name}"
            if plan.name in seen:
                self.err("duplicate-name", f"duplicate plan {plan.name!r}", plan, path)
            seen.add(plan.name)
            self.ident(plan.name, "plan name", plan, path)
            for r in (*plan.rates, *plan.quotas):
                if isinstance(r.amount, bool) or r.amount <= 0:
                    self.err("rate", f"rate amount {r.amount} must be positive", plan, path)
                if r.period not in PERIODS:
                    self.err("rate", f"unknown period {r.period!r}", plan, path)
                if r.scope is not None:
                    self.ident(r.scope, "rate scope", plan, path)
                if r.note is not None and not _quoted_ok(r.note):
                    self.err("unrepresentable-text", "rate note contains a line break", plan, path)

    def flow_expr(self, expr: FlowExpr, flow: Flow, path: str, top: bool = True) -> None:
        if isinstance(expr, Seq):
            if len(expr.items) < 2:
                self.err("flow-shape", "a sequence needs at least two steps", flow, path)
            if not top:
                self.err("flow-shape", "sequences cannot nest", flow, path)
            for item in expr.items:
                self.flow_expr(item, flow, path, top=False)
        elif isinstance(expr, Branch):
            if len(expr.alternatives) < 2:
                self.err("flow-shape", "a branch needs at least two alternatives", flow, path)
            for alt in expr.alternatives:
                if not isinstance(alt, (Step, Wait)):
                    self.err("flow-shape", "branch arms must be single steps", flow, path)
                else:
                    self.flow_expr(alt, flow, path, top=False)
        elif isinstance(expr, Wait):
            if ")" in expr.label or "#" in expr.label or not _quoted_ok(expr.label) or expr.label != expr.label.strip():
                self.err("unrepresentable-text", f"wait label {expr.label!r} cannot be written", flow, path)
        elif isinstance(expr, Step):
            targets = {op.name for op in self.doc.ops} | {wh.name for wh in self.doc.webhooks}
            if expr.name not in targets:
                self.err("flow-step", f"flow step {expr.name!r} is neither an op nor a webhook", flow, path)

    def flows(self, flows: tuple[Flow, ...]) -> None:
        seen: set[str] = set()
        for fl in flows:
            path = f"flows.{fl.name}"
            if fl.name in seen:
                self.err("duplicate-name", f"duplicate flow {fl.name!r}", fl, path)
            seen.add(fl.name)
            self.ident(fl.name, "flow name", fl, path)
            if fl.title is not None and not _quoted_ok(fl.title):
                self.err("unrepresentable-text", "flow title contains a line break", fl, path)
            self.flow_expr(fl.expr, fl, path)
            steps = {s.name for s in flow_steps(fl.expr)}
            for name, text in fl.conditions:
                if name not in steps:
                    self.err("flow-condition", f"condition {name!r} matches no step of the flow", fl, path)
                self.prose(text, fl, path)


def validate(doc: LapisDocument) -> list[Diagnostic]:
    """Return every invariant violation in ``doc`` (errors and warnings)."""
    return _Validator(doc).run()


def errors_only(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.is_error]
