"""OpenAPI 3.x -> LAPIS conversion.

The seven rules run in order: references are resolved at load time, schemas
are normalized (``allOf`` merged, unions collapsed), shared schemas become
named types, operations are named and their parameters placed, error
responses are centralized, webhooks are mapped and documentation-only
metadata is dropped. Every construct without a LAPIS equivalent degrades to
``any`` and is reported as a warning; conversion itself never fails.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from http import HTTPStatus
from urllib.parse import urljoin

from .model import (
    Array,
    AuthSpec,
    EnumBody,
    ErrorDef,
    ErrorSection,
    Field,
    LapisDocument,
    Map,
    Meta,
    Named,
    ObjectBody,
    Operation,
    Param,
    Scalar,
    TypeDef,
    TypeExpr,
    Webhook,
    default_compatible,
    infer_location,
    is_identifier,
    path_params,
)
from .openapi import (
    ANY,
    AllOfSchema,
    AnySchema,
    ArraySchema,
    ObjectSchema,
    OpenApiDoc,
    RawOperation,
    RawParam,
    RefSchema,
    ScalarSchema,
    Schema,
    SCHEMA_REF_PREFIX,
    UnionSchema,
    normalize,
)

MAX_DESC = 200


@dataclass(frozen=True)
class ConvertOptions:
    inline_threshold: int = 1
    max_union_variants: int = 4
    keep_descriptions: bool = True
    error_label_source: str = "reason_phrase"  # or "description_slug"

    def __post_init__(self) -> None:
        if self.inline_threshold < 0:
            raise ValueError("inline_threshold must be >= 0")
        if self.max_union_variants < 1:
            raise ValueError("max_union_variants must be >= 1")
        if self.error_label_source not in ("reason_phrase", "description_slug"):
            raise ValueError(f"unknown error_label_source {self.error_label_source!r}")


@dataclass(frozen=True)
class ErrorClass:
    """Which operations one emitted error entry stands for."""

    code: int
    label: str
    ops: tuple[str, ...]
    is_global: bool


@dataclass
class ConvertReport:
    named_types_emitted: int = 0
    schemas_inlined: int = 0
    error_defs_in: int = 0
    error_defs_out: int = 0
    discarded_fields: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    error_classes: list[ErrorClass] = field(default_factory=list)
    # declaring operations per status code, before centralization
    error_sources: dict[int, tuple[str, ...]] = field(default_factory=dict)


# -- naming helpers ------------------------------------------------------------


def snake_case(text: str) -> str:
    s = re.sub(r"([A-Z]+)([A-Z][a-z])", r"\1_\2", text)
    s = re.sub(r"([a-z0-9])([A-Z])", r"\1_\2", s)
    s = re.sub(r"[^A-Za-z0-9]+", "_", s).strip("_").lower()
    return s


def upper_camel(text: str) -> str:
    parts = [p for p in re.split(r"[^A-Za-z0-9]+", text) if p]
    out = "".join(p[0].upper() + p[1:] for p in parts)
    if not out:
        return "T"
    return "T" + out if out[0].isdigit() else out


def kebab_case(text: str) -> str:
    return snake_case(text).replace("_", "-") or "event"


def collapse_ws(text: str) -> str:
    return " ".join(text.split())


def short_description(text: str) -> str:
    """Whitespace-collapsed text, cut to its first sentence when long."""
    text = collapse_ws(text)
    if len(text) > MAX_DESC:
        m = re.search(r"[.!?](?=\s)", text)
        if m:
            text = text[: m.end()]
    return text


def synthesize_op_name(op: RawOperation) -> str:
    """Operation name before collision handling."""
    if op.operation_id:
        name = snake_case(op.operation_id)
        if name:
            return name if not name[0].isdigit() else f"op_{name}"
    segments = [s for s in op.path.split("/") if s and not (s.startswith("{") and s.endswith("}"))]
    last = snake_case(segments[-1]) if segments else "root"
    return f"{op.method.lower()}_{last or 'root'}"


def _unique(name: str, taken: set[str]) -> str:
    if name not in taken:
        taken.add(name)
        return name
    n = 2
    while f"{name}_{n}" in taken:
        n += 1
    taken.add(f"{name}_{n}")
    return f"{name}_{n}"


def _unique_type(name: str, taken: set[str]) -> str:
    if name not in taken:
        taken.add(name)
        return name
    n = 2
    while f"{name}{n}" in taken:
        n += 1
    taken.add(f"{name}{n}")
    return f"{name}{n}"


def reason_label(code: int) -> str:
    try:
        phrase = HTTPStatus(code).phrase
    except ValueError:
        return f"error_{code}"
    return snake_case(phrase.replace("'", "")) or f"error_{code}"


def _slug_label(text: str, code: int) -> str:
    words = snake_case(text.replace("'", "")).split("_")[:4]
    slug = "_".join(w for w in words if w)
    if not slug or not is_identifier(slug):
        return reason_label(code)
    return slug


# -- structural identity -------------------------------------------------------


class _Canon:
    """Stable structural keys for schemas; descriptions and order never count."""

    def __init__(self, doc: OpenApiDoc, norm: dict[str, Schema]) -> None:
        self.doc = doc
        self.norm = norm
        self.memo: dict[str, object] = {}

    def key(self, s: Schema | None) -> str:
        return json.dumps(self.form(s), sort_keys=True, default=str)

    def form(self, s: Schema | None, visiting: frozenset[str] = frozenset()) -> object:
        if s is None:
            return ["none"]
        if isinstance(s, RefSchema):
            if s.name in visiting:
                return ["cycle", s.name]
            if s.name not in self.memo:
                target = self.norm.get(s.name, ANY)
                self.memo[s.name] = self.form(target, visiting | {s.name})
            return self.memo[s.name]
        if isinstance(s, ObjectSchema):
            props = sorted([n, self.form(sub, visiting), n in s.required] for n, sub in s.properties)
            extra = self.form(s.additional, visiting) if s.additional is not None else None
            return ["object", props, extra]
        if isinstance(s, ArraySchema):
            return ["array", self.form(s.items, visiting)]
        if isinstance(s, ScalarSchema):
            enum = sorted(map(str, s.enum_values)) if s.enum_values else None
            return ["scalar", s.kind, s.format, enum]
        if isinstance(s, UnionSchema):
            return ["union", sorted(json.dumps(self.form(v, visiting), sort_keys=True) for v in s.variants)]
        if isinstance(s, AllOfSchema):
            return ["allOf", [self.form(p, visiting) for p in s.parts]]
        return ["any"]


def _shallow_key(s: Schema) -> str:
    """Identity of an anonymous object without expanding component references."""

    def form(x: Schema) -> object:
        if isinstance(x, RefSchema):
            return ["ref", x.name]
        if isinstance(x, ObjectSchema):
            return ["object", [[n, form(sub), n in x.required] for n, sub in x.properties],
                    form(x.additional) if x.additional is not None else None]
        if isinstance(x, ArraySchema):
            return ["array", form(x.items)]
        if isinstance(x, ScalarSchema):
            return ["scalar", x.kind, x.format, list(map(str, x.enum_values)) if x.enum_values else None]
        return ["any"]

    return json.dumps(form(s), sort_keys=True, default=str)


# -- enum census ---------------------------------------------------------------


def _string_enum(node: dict) -> tuple[str, ...] | None:
    values = node.get("enum")
    if not isinstance(values, list) or node.get("type", "string") not in ("string", ["string", "null"]):
        return None
    values = [v for v in values if v is not None]
    if not values or not all(isinstance(v, str) for v in values):
        return None
    return tuple(values)


def enum_census(doc: OpenApiDoc) -> tuple[Counter[tuple[str, ...]], dict[tuple[str, ...], str]]:
    """Count how often each string-enum variant set is used across the document.

    An enum written inline counts once per occurrence; an enum defined as a
    component schema counts once per reference to it. The second result maps
    each variant set to a naming hint taken from its first occurrence.
    """
    counts: Counter[tuple[str, ...]] = Counter()
    hints: dict[tuple[str, ...], str] = {}
    component_sets: dict[str, tuple[str, ...]] = {}

    def walk(node: object, hint: str) -> None:
        if isinstance(node, list):
            for x in node:
                walk(x, hint)
            return
        if not isinstance(node, dict):
            return
        values = _string_enum(node)
        if values is not None:
            counts[values] += 1
            hints.setdefault(values, hint)
        if isinstance(node.get("name"), str) and "in" in node:
            hint = node["name"]
        for key, value in node.items():
            if key == "properties" and isinstance(value, dict):
                for prop, sub in value.items():
                    walk(sub, prop)
            elif key in ("enum", "default", "const", "required"):
                continue
            else:
                walk(value, hint)

    pruned = doc.pruned
    for key, value in pruned.items():
        if key != "components":
            walk(value, "")
    for group, members in (pruned.get("components") or {}).items():
        if not isinstance(members, dict):
            continue
        for name, node in members.items():
            if group == "schemas" and isinstance(node, dict):
                values = _string_enum(node)
                if values is not None:
                    component_sets[name] = values
                    hints.setdefault(values, name)
                    # the definition itself is not a use; its body has nothing else
                    continue
            walk(node, name)
    for name, values in component_sets.items():
        counts[values] += doc.ref_counts.get(name, 0)
    return counts, hints


# -- the converter -------------------------------------------------------------


class _Converter:
    def __init__(self, doc: OpenApiDoc, opts: ConvertOptions) -> None:
        self.doc = doc
        self.opts = opts
        self.report = ConvertReport(discarded_fields=dict(doc.discard_tally))
        self.warnings = self.report.warnings
        self.warnings.extend(doc.warnings)
        self.norm: dict[str, Schema] = {}
        for name, s in doc.components_schemas.items():
            self.norm[name] = normalize(s, doc, opts.max_union_variants, self.warnings)
        self.canon = _Canon(doc, self.norm)
        self.taken_types: set[str] = set()
        self.component_type: dict[str, str] = {}
        for name in doc.components_schemas:
            self.component_type[name] = _unique_type(upper_camel(name), self.taken_types)
        counts, hints = enum_census(doc)
        self.enum_names: dict[tuple[str, ...], str] = {}
        for values, n in counts.items():
            if n > opts.inline_threshold:
                self.enum_names[values] = ""  # named lazily on first use
        self.enum_hints = hints
        self.types: dict[str, TypeDef] = {}
        self.type_order: list[str] = []
        self.pending: list[str] = []
        self.requested: set[str] = set()
        self.synth_by_key: dict[str, str] = {}
        self.used_components: set[str] = set()
        self.inlined_components: set[str] = set()

    # -- schemas

    def target(self, s: Schema, depth: int = 0) -> Schema:
        """Follow component references to the normalized schema they name."""
        while isinstance(s, RefSchema) and depth < 64:
            s = self.norm.get(s.name, ANY)
            depth += 1
        return s

    def is_named_object(self, name: str) -> bool:
        body = self.norm.get(name)
        return isinstance(body, ObjectSchema) and bool(body.properties)

    def request_component(self, name: str) -> str:
        tname = self.component_type[name]
        if name not in self.requested:
            self.requested.add(name)
            self.pending.append(name)
        return tname

    def enum_type(self, values: tuple[str, ...], hint: str) -> TypeExpr:
        name = self.enum_names.get(values)
        if name is None:
            return Scalar("str")
        if not name:
            base = self.enum_hints.get(values) or hint or "Enum"
            component = next(
                (n for n, s in self.doc.components_schemas.items()
                 if isinstance(s, ScalarSchema) and s.enum_values == values),
                None,
            )
            if component is not None:
                name = self.component_type[component]
                self.used_components.add(component)
            else:
                name = _unique_type(upper_camel(base), self.taken_types)
            self.enum_names[values] = name
            self.add_type(TypeDef(name, EnumBody(tuple(dict.fromkeys(values)))))
        return Named(name)

    def add_type(self, td: TypeDef) -> None:
        if td.name not in self.types:
            self.types[td.name] = td
            self.type_order.append(td.name)

    def expr(self, s: Schema, hint: str, visiting: frozenset[str] = frozenset()) -> TypeExpr:
        """Type expression for ``s`` in a field or parameter position."""
        s = normalize(s, self.doc, self.opts.max_union_variants, self.warnings) if isinstance(
            s, (AllOfSchema, UnionSchema)
        ) else s
        if isinstance(s, RefSchema):
            name = s.name
            self.used_components.add(name)
            if self.is_named_object(name):
                return Named(self.request_component(name))
            if name in visiting:
                self.warnings.append(f"schema {name!r}: recursive alias replaced by any")
                return Scalar("any")
            self.inlined_components.add(name)
            return self.expr(self.norm.get(name, ANY), hint or name, visiting | {name})
        if isinstance(s, ArraySchema):
            return Array(self.expr(s.items, f"{hint}Item", visiting))
        if isinstance(s, ObjectSchema):
            if not s.properties:
                if s.additional is not None and not isinstance(s.additional, AnySchema):
                    return Map(self.expr(s.additional, f"{hint}Value", visiting))
                return Map(Scalar("any")) if s.additional is not None else Scalar("any")
            return Named(self.synth_object(s, hint))
        if isinstance(s, ScalarSchema):
            if s.kind == "string" and s.enum_values and all(isinstance(v, str) for v in s.enum_values):
                return self.enum_type(tuple(s.enum_values), hint)
            return Scalar(_scalar_name(s))
        return Scalar("any")

    def synth_object(self, s: ObjectSchema, hint: str) -> str:
        key = _shallow_key(s)
        if key in self.synth_by_key:
            return self.synth_by_key[key]
        name = _unique_type(upper_camel(hint or "Object"), self.taken_types)
        self.synth_by_key[key] = name
        # reserve the slot first so recursive shapes terminate
        self.types[name] = TypeDef(name, ObjectBody())
        self.type_order.append(name)
        self.types[name] = TypeDef(name, ObjectBody(self.fields(s, name)))
        return name

    def fields(self, s: ObjectSchema, owner: str) -> tuple[Field, ...]:
        out = []
        for prop, sub in s.properties:
            t = self.expr(sub, owner + upper_camel(prop))
            out.append(Field(prop, t, prop not in s.required, self.default(sub, t)))
        return tuple(out)

    def default(self, s: Schema, t: TypeExpr) -> object:
        s = self.target(s)
        if not isinstance(s, ScalarSchema) or s.default is None:
            return None
        value = s.default
        if isinstance(value, str) and ("\n" in value or "\r" in value):
            return None
        if isinstance(value, float) and value.is_integer() and isinstance(t, Scalar) and t.name == "int":
            value = int(value)
        if not isinstance(value, (str, int, float, bool)):
            return None
        types = dict(self.types)
        return value if default_compatible(t, value, types) else None

    def drain(self) -> None:
        while self.pending:
            name = self.pending.pop(0)
            tname = self.component_type[name]
            body = self.norm[name]
            assert isinstance(body, ObjectSchema)
            self.types[tname] = TypeDef(tname, ObjectBody())
            self.type_order.append(tname)
            self.types[tname] = TypeDef(tname, ObjectBody(self.fields(body, tname)))

    # -- operations

    def output(self, op: RawOperation, op_name: str) -> TypeExpr | ObjectBody | None:
        best = None
        for status, resp in op.responses:
            if resp.schema is None:
                continue
            code = status.upper()
            rank = int(code) if code.isdigit() else (250 if code == "2XX" else None)
            if rank is None or not 200 <= rank < 300:
                continue
            if best is None or rank < best[0]:
                best = (rank, resp)
        if best is None:
            return None
        s = best[1].schema
        assert s is not None
        s = normalize(s, self.doc, self.opts.max_union_variants, self.warnings)
        hint = upper_camel(op_name) + "Response"
        if isinstance(s, RefSchema) and self.is_named_object(s.name):
            self.used_components.add(s.name)
            if self.doc.ref_counts.get(s.name, 0) > self.opts.inline_threshold or s.name in self.doc.cycle_names:
                return Named(self.request_component(s.name))
            self.inlined_components.add(s.name)
            target = self.norm[s.name]
            assert isinstance(target, ObjectSchema)
            return ObjectBody(self.fields(target, self.component_type[s.name]))
        if isinstance(s, ObjectSchema) and s.properties:
            return ObjectBody(self.fields(s, hint))
        return self.expr(s, hint)

    def param(self, p: RawParam, method: str, route: str, owner: str) -> Param | None:
        hint = owner + upper_camel(p.name)
        if p.location == "cookie":
            self.warnings.append(f"{method} {route}: cookie parameter {p.name!r} dropped")
            return None
        t = self.expr(p.schema, hint)
        default = self.default(p.schema, t)
        if p.location == "header":
            name = re.sub(r"[^a-z0-9]+", "_", p.name.lower()).strip("_")
            if name.startswith("x_"):
                name = name[2:]
            if not name or name[0].isdigit():
                name = f"h_{name}"
            alias = p.name if p.name != name else None
            return Param(name, t, not p.required, default, "header", True, alias)
        location = p.location
        explicit = infer_location(p.name, method, route) != location
        return Param(p.name, t, not p.required and location != "path", default, location, explicit)

    def inputs(self, op: RawOperation, op_name: str) -> tuple[Param, ...]:
        owner = upper_camel(op_name)
        template = path_params(op.path)
        out: list[Param] = []
        seen: set[tuple[str, str]] = set()

        def add(p: Param) -> None:
            key = (p.name, p.location)
            if key in seen:
                base = p.name
                n = 2
                while (f"{base}_{n}", p.location) in seen:
                    n += 1
                new_name = f"{base}_{n}"
                explicit = p.location == "header" or infer_location(new_name, op.method, op.path) != p.location
                p = replace(p, name=new_name, location_explicit=explicit,
                            alias=p.alias if p.alias is not None else (base if p.location == "header" else None))
                if p.location != "header":
                    self.warnings.append(f"{op_name}: duplicate parameter {base!r} renamed {new_name!r}")
                    if p.location == "path":
                        return
            seen.add((p.name, p.location))
            out.append(p)

        declared_path = {p.name for p in op.parameters if p.location == "path"}
        for name in template:
            if name not in declared_path:
                self.warnings.append(f"{op_name}: path parameter {{{name}}} undeclared; typed as str")
                add(Param(name, Scalar("str"), False, None, "path", False))
        for p in op.parameters:
            if p.location == "path" and p.name not in template:
                self.warnings.append(f"{op_name}: path parameter {p.name!r} not in route; dropped")
                continue
            if p.location not in ("path", "query", "header", "cookie"):
                continue
            converted = self.param(p, op.method, op.path, owner)
            if converted is not None:
                add(converted)
        if op.request_body_schema is not None:
            body = normalize(op.request_body_schema, self.doc, self.opts.max_union_variants, self.warnings)
            target = self.target(body)
            if isinstance(body, RefSchema):
                self.used_components.add(body.name)
            if isinstance(target, ObjectSchema) and target.properties:
                if isinstance(body, RefSchema):
                    self.inlined_components.add(body.name)
                for prop, sub in target.properties:
                    t = self.expr(sub, owner + upper_camel(prop))
                    explicit = infer_location(prop, op.method, op.path) != "body"
                    add(Param(prop, t, prop not in target.required, self.default(sub, t), "body", explicit))
            else:
                t = self.expr(body, owner + "Body")
                explicit = infer_location("body", op.method, op.path) != "body"
                add(Param("body", t, not op.request_body_required, None, "body", explicit))
        return tuple(out)

    def operations(self) -> list[Operation]:
        taken: set[str] = set()
        ops = []
        for op in self.doc.operations:
            name = _unique(synthesize_op_name(op), taken)
            desc: tuple[str, ...] = ()
            if self.opts.keep_descriptions:
                text = short_description(op.summary or op.description)
                desc = (text,) if text else ()
            mods = set()
            if op.deprecated:
                mods.add("deprecated")
            if op.paginated:
                mods.add("paginated")
            if op.streaming:
                mods.add("stream")
            if any(p.location == "header" and p.name.lower() == "idempotency-key" for p in op.parameters):
                mods.add("idempotent")
            ops.append(
                Operation(name, op.method, op.path, desc, self.inputs(op, name), self.output(op, name),
                          frozenset(mods))
            )
            self.op_sources.append((name, op))
        return ops

    # -- errors

    def errors(self) -> ErrorSection | None:
        classes: dict[tuple[int, str], list] = {}
        declaring: dict[int, list[str]] = {}
        total = 0
        for name, op in self.op_sources:
            for status, resp in op.responses:
                if not status.isdigit() or not 400 <= int(status) <= 599:
                    continue
                total += 1
                code = int(status)
                schema = (
                    normalize(resp.schema, self.doc, self.opts.max_union_variants, self.warnings)
                    if resp.schema is not None else None
                )
                key = (code, self.canon.key(schema))
                entry = classes.setdefault(key, [schema, [], resp.description])
                if name not in entry[1]:
                    entry[1].append(name)
                if name not in declaring.setdefault(code, []):
                    declaring[code].append(name)
        self.report.error_defs_in = total
        self.report.error_sources = {c: tuple(v) for c, v in sorted(declaring.items())}
        if not classes:
            return None

        # base structure: the most frequent object shape, when shared by >= 2 classes
        shapes: Counter[str] = Counter()
        first_schema: dict[str, Schema] = {}
        for (_, skey), (schema, _, _) in classes.items():
            if schema is not None and isinstance(self.target(schema), ObjectSchema) and self.target(schema).properties:
                shapes[skey] += 1
                first_schema.setdefault(skey, schema)
        base_key = None
        base_props: dict[str, Schema] = {}
        base_name = None
        if shapes:
            skey, n = max(shapes.items(), key=lambda kv: kv[1])
            if n >= 2:
                base_key = skey
                schema = first_schema[skey]
                target = self.target(schema)
                assert isinstance(target, ObjectSchema)
                base_props = dict(target.properties)
                if isinstance(schema, RefSchema):
                    self.used_components.add(schema.name)
                    base_name = self.request_component(schema.name)
                else:
                    base_name = _unique_type("ApiError", self.taken_types)
                    self.types[base_name] = TypeDef(base_name, ObjectBody())
                    self.type_order.append(base_name)
                    self.types[base_name] = TypeDef(base_name, ObjectBody(self.fields(target, base_name)))

        entries: list[ErrorDef] = []
        by_code: dict[int, list[tuple[str, list]]] = {}
        for (code, skey), value in classes.items():
            by_code.setdefault(code, []).append((skey, value))
        for code in sorted(by_code):
            group = self.absorb(by_code[code])
            n_declaring = len(declaring[code])
            # largest class first; stable on first appearance
            ranked = sorted(range(len(group)), key=lambda i: -len(group[i][1][1]))
            global_idx = ranked[0] if 2 * len(group[ranked[0]][1][1]) >= n_declaring else None
            order = ([global_idx] if global_idx is not None else []) + [i for i in range(len(group)) if i != global_idx]
            labels: set[str] = set()
            for i in order:
                skey, (schema, members, description) = group[i]
                is_global = i == global_idx
                summary = short_description(description)
                text = summary if self.opts.keep_descriptions else ""
                if self.opts.error_label_source == "description_slug" and summary:
                    label = _slug_label(summary, code)
                else:
                    label = reason_label(code)
                label = _unique(label, labels)
                extra = self.extra_fields(schema, skey, base_key, base_props, f"{upper_camel(label)}Error")
                entries.append(ErrorDef(
                    code, label, (text,) if text else (), None if is_global else tuple(members), extra
                ))
                self.report.error_classes.append(ErrorClass(code, label, tuple(members), is_global))
        self.report.error_defs_out = len(entries)
        return ErrorSection(base_name, tuple(entries))

    def absorb(self, group: list[tuple[str, list]]) -> list[tuple[str, list]]:
        """Fold classes that add no structure into the largest class of their code.

        A response without a body, with an empty object body, or whose object
        properties all appear with the same structure in the largest class,
        describes nothing the largest class does not already say.
        """
        if len(group) < 2:
            return group
        lead = max(range(len(group)), key=lambda i: (len(group[i][1][1]), -i))
        lead_schema = group[lead][1][0]
        lead_target = self.target(lead_schema) if lead_schema is not None else None
        lead_props = (
            {n: self.canon.key(sub) for n, sub in lead_target.properties}
            if isinstance(lead_target, ObjectSchema) else {}
        )
        kept = []
        for i, (skey, value) in enumerate(group):
            if i != lead and self.subsumed(value[0], lead_props):
                members = group[lead][1][1]
                members.extend(m for m in value[1] if m not in members)
                continue
            kept.append((skey, value))
        return kept

    def subsumed(self, schema: Schema | None, lead_props: dict[str, str]) -> bool:
        if schema is None:
            return True
        target = self.target(schema)
        if isinstance(target, AnySchema):
            return True
        if not isinstance(target, ObjectSchema):
            return False
        if not target.properties:
            return target.additional is None
        return all(lead_props.get(n) == self.canon.key(sub) for n, sub in target.properties)

    def extra_fields(
        self, schema: Schema | None, skey: str, base_key: str | None, base_props: dict[str, Schema], owner: str
    ) -> tuple[Field, ...]:
        if schema is None or skey == base_key:
            return ()
        target = self.target(schema)
        if isinstance(schema, RefSchema):
            self.used_components.add(schema.name)
        if not isinstance(target, ObjectSchema) or not target.properties:
            t = self.expr(schema, owner)
            return (Field("body", t),) if not (isinstance(t, Scalar) and t.name == "any") else ()
        out = []
        for prop, sub in target.properties:
            if prop in base_props and self.canon.key(base_props[prop]) == self.canon.key(sub):
                continue
            t = self.expr(sub, owner + upper_camel(prop))
            out.append(Field(prop, t, prop not in target.required, self.default(sub, t)))
        return tuple(out)

    # -- webhooks

    def webhooks(self) -> list[Webhook]:
        if not self.doc.is_31:
            return []
        taken: set[str] = set()
        out = []
        for key, op in self.doc.webhooks:
            name = snake_case(key) or "event"
            if name[0].isdigit():
                name = f"on_{name}"
            name = _unique(name, taken)
            trigger = short_description(op.description or op.summary)
            if not trigger:
                self.warnings.append(f"webhook {key!r}: no description; trigger omitted")
            owner = upper_camel(name)
            payload: list[Param] = []
            for p in op.parameters:
                if p.location != "header":
                    self.warnings.append(f"webhook {key!r}: {p.location} parameter {p.name!r} dropped")
                    continue
                converted = self.param(p, op.method, op.path, owner)
                if converted is not None:
                    payload.append(converted)
            if op.request_body_schema is not None:
                body = normalize(op.request_body_schema, self.doc, self.opts.max_union_variants, self.warnings)
                target = self.target(body)
                if isinstance(target, ObjectSchema) and target.properties:
                    if isinstance(body, RefSchema):
                        self.used_components.add(body.name)
                        self.inlined_components.add(body.name)
                    for prop, sub in target.properties:
                        t = self.expr(sub, owner + upper_camel(prop))
                        payload.append(Param(prop, t, prop not in target.required, self.default(sub, t)))
                else:
                    payload.append(Param("body", self.expr(body, owner + "Body"), not op.request_body_required))
            names = set()
            unique_payload = []
            for p in payload:
                if (p.name, p.location) in names:
                    continue
                names.add((p.name, p.location))
                unique_payload.append(p)
            out.append(Webhook(name, op.method, f"/webhooks/{kebab_case(key)}", trigger, tuple(unique_payload)))
        return out

    # -- meta

    def meta(self) -> Meta:
        info = self.doc.info
        api = collapse_ws(info.get("title", "")) or "API"
        if self.doc.servers:
            base = urljoin("https://localhost/", self.doc.servers[0]) if "://" not in self.doc.servers[0] else self.doc.servers[0]
        else:
            base = "https://localhost"
            self.warnings.append("no servers declared; base set to https://localhost")
        base = base.replace(" ", "%20")
        version = collapse_ws(info.get("version", "")) or None
        desc = None
        if self.opts.keep_descriptions and info.get("description"):
            desc = short_description(info["description"]) or None
        return Meta(api, base, self.auth(), version, desc)

    def auth(self) -> AuthSpec:
        schemes = self.doc.security_schemes
        if not schemes:
            return AuthSpec()
        chosen = None
        if self.doc.security:
            chosen = next((n for n in self.doc.security if n in schemes), None)
        if chosen is None:
            usage: Counter[str] = Counter()
            for op in self.doc.operations:
                for n in op.security or ():
                    if n in schemes:
                        usage[n] += 1
            if usage:
                chosen = max(usage.items(), key=lambda kv: kv[1])[0]
        if chosen is None:
            chosen = next(iter(schemes))
        s = schemes[chosen]
        if not isinstance(s, dict):
            return AuthSpec()
        kind = str(s.get("type", "")).lower()
        if kind == "http":
            scheme = str(s.get("scheme", "")).lower()
            if scheme == "bearer":
                return AuthSpec("bearer", "header", "Authorization")
            if scheme == "basic":
                return AuthSpec("basic")
            self.warnings.append(f"security scheme {chosen!r}: http scheme {scheme!r} mapped to bearer")
            return AuthSpec("bearer", "header", "Authorization")
        if kind == "apikey":
            location = str(s.get("in", "header"))
            name = str(s.get("name", "")) or "api_key"
            if location not in ("header", "query", "cookie") or any(c.isspace() or c in '"#' for c in name):
                self.warnings.append(f"security scheme {chosen!r}: carrier not expressible; kept scheme only")
                return AuthSpec("apikey")
            return AuthSpec("apikey", location, name)
        if kind in ("oauth2", "openidconnect"):
            return AuthSpec("oauth2")
        self.warnings.append(f"security scheme {chosen!r} of type {kind!r} has no LAPIS form")
        return AuthSpec()

    # -- assembly

    def run(self) -> LapisDocument:
        self.op_sources: list[tuple[str, RawOperation]] = []
        meta = self.meta()
        ops = self.operations()
        hooks = self.webhooks()
        errors = self.errors()
        self.drain()
        component_names = set(self.component_type.values())
        ordered = [self.component_type[n] for n in self.doc.components_schemas if self.component_type[n] in self.types]
        ordered += [n for n in self.type_order if n not in component_names]
        types = tuple(self.types[n] for n in ordered)
        self.report.named_types_emitted = len(types)
        self.report.schemas_inlined = len(self.inlined_components - self.requested)
        if not ops:
            self.warnings.append("document declares no operations")
        return LapisDocument(meta, types, tuple(ops), tuple(hooks), errors, None, ())


def _scalar_name(s: ScalarSchema) -> str:
    fmt = (s.format or "").lower()
    if s.kind == "string":
        if fmt == "date":
            return "date"
        if fmt == "date-time":
            return "datetime"
        if fmt in ("binary", "file"):
            return "file"
        return "str"
    if s.kind == "integer":
        return "int"
    if s.kind == "number":
        return "float"
    if s.kind == "boolean":
        return "bool"
    return "any"


def map_schema_to_type_expr(
    s: Schema, doc: OpenApiDoc, opts: ConvertOptions | None = None, hint: str = "Inline"
) -> tuple[TypeExpr, dict[str, TypeDef]]:
    """Map one schema to a type expression plus the named types it needs."""
    conv = _Converter(doc, opts or ConvertOptions())
    t = conv.expr(s, hint)
    conv.drain()
    return t, dict(conv.types)


def convert(doc: OpenApiDoc, opts: ConvertOptions | None = None) -> tuple[LapisDocument, ConvertReport]:
    """Convert a loaded OpenAPI document. Deterministic for a given input."""
    conv = _Converter(doc, opts or ConvertOptions())
    out = conv.run()
    return out, conv.report


def merge_fragment(doc: LapisDocument, fragment: LapisDocument) -> LapisDocument:
    """Overlay authoring-only content from a LAPIS fragment onto converter output.

    Types and webhooks are appended; ``[errors]``, ``[limits]`` and ``[flows]``
    from the fragment replace the converted ones when present.
    """
    known = {t.name for t in doc.types}
    hooks = {w.name for w in doc.webhooks}
    return replace(
        doc,
        types=doc.types + tuple(t for t in fragment.types if t.name not in known),
        webhooks=doc.webhooks + tuple(w for w in fragment.webhooks if w.name not in hooks),
        errors=fragment.errors if fragment.errors is not None else doc.errors,
        limits=fragment.limits if fragment.limits is not None else doc.limits,
        flows=fragment.flows or doc.flows,
    )


__all__ = [
    "ConvertOptions",
    "ConvertReport",
    "ErrorClass",
    "SCHEMA_REF_PREFIX",
    "convert",
    "enum_census",
    "map_schema_to_type_expr",
    "merge_fragment",
    "reason_label",
    "snake_case",
    "synthesize_op_name",
    "upper_camel",
]
