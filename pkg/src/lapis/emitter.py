"""Canonical LAPIS text from a :class:`~lapis.model.LapisDocument`."""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    MODIFIERS,
    Array,
    AuthSpec,
    Branch,
    EnumBody,
    ErrorDef,
    Field,
    Flow,
    FlowExpr,
    LapisDocument,
    Map,
    Named,
    ObjectBody,
    Operation,
    Param,
    RateSpec,
    Scalar,
    Seq,
    Step,
    TypeExpr,
    Wait,
    Webhook,
    errors_only,
    validate,
)
from .text import escape_prose, format_literal, format_name, format_variant, quote


@dataclass(frozen=True)
class EmitStyle:
    indent_width: int = 2
    max_line: int | None = 100
    blank_line_between_ops: bool = True

    def __post_init__(self) -> None:
        if self.indent_width < 1:
            raise ValueError("indent_width must be at least 1")


class EmitError(ValueError):
    """Raised for documents that fail validation and so have no canonical text."""

    def __init__(self, diagnostics: list) -> None:
        self.diagnostics = diagnostics
        super().__init__("cannot emit an invalid document: " + "; ".join(str(d) for d in diagnostics[:5]))


def emit_type_expr(t: TypeExpr) -> str:
    if isinstance(t, Array):
        return f"[{emit_type_expr(t.item)}]"
    if isinstance(t, Map):
        return f"{{str:{emit_type_expr(t.value)}}}"
    if isinstance(t, (Scalar, Named)):
        return t.name
    raise TypeError(f"not a type expression: {t!r}")


def emit_auth(auth: AuthSpec) -> str:
    if auth.location is None:
        return auth.scheme
    return f"{auth.scheme} {auth.location}:{auth.name}"


def _field(f: Field) -> str:
    out = f"{format_name(f.name)}{'?' if f.optional else ''}: {emit_type_expr(f.type)}"
    if f.default is not None:
        out += f" = {format_literal(f.default)}"
    if f.since is not None:
        out += f" @since:{f.since}"
    if f.deprecated is not None:
        out += " @deprecated" + (f" {quote(f.deprecated)}" if f.deprecated else "")
    return out


def _param(p: Param) -> str:
    out = f"{format_name(p.name)}{'?' if p.optional else ''}: {emit_type_expr(p.type)}"
    if p.default is not None:
        out += f" = {format_literal(p.default)}"
    if p.location_explicit:
        out += f" @{p.location}" + (f":{p.alias}" if p.alias is not None else "")
    return out


def emit_flow_expr(expr: FlowExpr) -> str:
    if isinstance(expr, Step):
        return expr.name + ("*" if expr.repeated else "")
    if isinstance(expr, Wait):
        return f"...({expr.label})"
    if isinstance(expr, Branch):
        return " | ".join(emit_flow_expr(a) for a in expr.alternatives)
    if isinstance(expr, Seq):
        return " -> ".join(emit_flow_expr(i) for i in expr.items)
    raise TypeError(f"not a flow expression: {expr!r}")


class _Writer:
    def __init__(self, style: EmitStyle) -> None:
        self.style = style
        self.pad = " " * style.indent_width
        self.lines: list[str] = []

    def put(self, depth: int, text: str) -> None:
        self.lines.append(self.pad * depth + text)

    def meta(self, doc: LapisDocument) -> None:
        m = doc.meta
        self.put(0, "[meta]")
        self.put(0, f"api: {escape_prose(m.api)}")
        self.put(0, f"base: {escape_prose(m.base)}")
        if m.version is not None:
            self.put(0, f"version: {escape_prose(m.version)}")
        if m.desc is not None:
            self.put(0, f"desc: {escape_prose(m.desc)}")
        self.put(0, f"auth: {emit_auth(m.auth)}")

    def types(self, doc: LapisDocument) -> None:
        if not doc.types:
            return
        self.put(0, "[types]")
        for td in doc.types:
            if isinstance(td.body, EnumBody):
                self.put(0, f"{td.name}: " + " | ".join(format_variant(v) for v in td.body.variants))
            else:
                self.put(0, f"{td.name}:")
                for f in td.body.fields:
                    self.put(1, _field(f))

    def op(self, op: Operation) -> None:
        mods = "".join(f" +{m}" for m in MODIFIERS if m in op.modifiers)
        self.put(0, f"{op.name} {op.method} {op.path}{mods}")
        for line in op.desc:
            self.put(1, escape_prose(line))
        for p in op.inputs:
            self.put(1, f"> {_param(p)}")
        if isinstance(op.output, ObjectBody):
            for f in op.output.fields:
                self.put(1, f"< {_field(f)}")
        elif op.output is not None:
            self.put(1, f"< {emit_type_expr(op.output)}")

    def ops(self, doc: LapisDocument) -> None:
        self.put(0, "[ops]")
        for i, op in enumerate(doc.ops):
            if i and self.style.blank_line_between_ops:
                self.lines.append("")
            self.op(op)

    def webhook(self, wh: Webhook) -> None:
        self.put(0, f"{wh.name} -> {wh.method} {wh.path}")
        if wh.trigger:
            self.put(1, f"! {escape_prose(wh.trigger)}")
        for p in wh.payload:
            self.put(1, f"< {_param(p)}")

    def webhooks(self, doc: LapisDocument) -> None:
        if not doc.webhooks:
            return
        self.put(0, "[webhooks]")
        for wh in doc.webhooks:
            self.webhook(wh)

    def error(self, e: ErrorDef) -> None:
        scope = f" @ops:{','.join(e.ops)}" if e.ops is not None else ""
        self.put(0, f"{e.code} {e.label}{scope}")
        for line in e.desc:
            self.put(1, escape_prose(line))
        for f in e.extra_fields:
            self.put(1, f"~ {_field(f)}")

    def errors(self, doc: LapisDocument) -> None:
        es = doc.errors
        if es is None or (es.base_type is None and not es.entries):
            return
        self.put(0, "[errors]")
        if es.base_type is not None:
            self.put(0, f"# Base structure: {es.base_type}")
        for e in es.entries:
            self.error(e)

    @staticmethod
    def rate(kind: str, r: RateSpec) -> str:
        out = f"{kind}: {r.amount}/{r.period}"
        if r.scope is not None:
            out += f" @{r.scope}"
        if r.note is not None:
            out += f" {quote(r.note)}"
        return out

    def limits(self, doc: LapisDocument) -> None:
        lim = doc.limits
        if lim is None or (lim.on_exceed is None and not lim.plans):
            return
        self.put(0, "[limits]")
        if lim.on_exceed is not None:
            self.put(0, f"on_exceed: {lim.on_exceed.code} {lim.on_exceed.behavior}")
        for plan in lim.plans:
            self.put(0, f"plan: {plan.name}")
            for r in plan.rates:
                self.put(1, self.rate("rate", r))
            for q in plan.quotas:
                self.put(1, self.rate("quota", q))

    def flow_body(self, expr: FlowExpr) -> None:
        parts = [emit_flow_expr(i) for i in expr.items] if isinstance(expr, Seq) else [emit_flow_expr(expr)]
        limit = self.style.max_line
        line = self.pad + parts[0]
        depth_pad = self.pad * 2
        for part in parts[1:]:
            candidate = f"{line} -> {part}"
            if limit is not None and len(candidate) > limit:
                self.lines.append(line)
                line = f"{depth_pad}-> {part}"
            else:
                line = candidate
        self.lines.append(line)

    def flow(self, fl: Flow) -> None:
        self.put(0, fl.name + (f" {quote(fl.title)}" if fl.title is not None else ""))
        self.flow_body(fl.expr)
        for name, text in fl.conditions:
            self.put(1, f"? {name}: {escape_prose(text)}")

    def flows(self, doc: LapisDocument) -> None:
        if not doc.flows:
            return
        self.put(0, "[flows]")
        for fl in doc.flows:
            self.flow(fl)


def emit_document(doc: LapisDocument, style: EmitStyle | None = None) -> str:
    """Render ``doc`` as canonical LAPIS text.

    Raises :class:`EmitError` when ``doc`` has validation errors, since such a
    document has no text that reads back to it.
    """
    problems = errors_only(validate(doc))
    if problems:
        raise EmitError(problems)
    w = _Writer(style or EmitStyle())
    w.meta(doc)
    w.types(doc)
    w.ops(doc)
    w.webhooks(doc)
    w.errors(doc)
    w.limits(doc)
    w.flows(doc)
    return "\n".join(w.lines) + "\n"


def emit_section(doc: LapisDocument, section: str, style: EmitStyle | None = None) -> str:
    """Render a single section (``"errors"``, ``"types"``, ...) of ``doc``."""
    w = _Writer(style or EmitStyle())
    getattr(w, section)(doc)
    return "\n".join(w.lines) + "\n" if w.lines else ""
