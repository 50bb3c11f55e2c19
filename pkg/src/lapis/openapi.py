"""Load OpenAPI 3.x documents into a normalized, converter-ready form.

Loading runs in four steps: decode JSON or YAML, gate on the version, discard
metadata that LAPIS never carries, then resolve ``$ref`` pointers. References
to ``#/components/schemas/<Name>`` stay symbolic as :class:`RefSchema` so the
converter can decide between naming and inlining; every other internal
reference is inlined.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Union

import yaml

HTTP_METHODS = ("get", "put", "post", "delete", "options", "head", "patch", "trace")
SCHEMA_REF_PREFIX = "#/components/schemas/"

# pagination markers used by common OpenAPI generators; only explicit markers count
PAGINATION_EXTENSIONS = ("x-pagination", "x-paginated", "x-ms-pageable", "x-fern-pagination", "x-speakeasy-pagination")
STREAM_MEDIA_TYPES = ("text/event-stream", "application/x-ndjson", "application/jsonl", "application/stream+json")


class OpenApiError(ValueError):
    """The input cannot be loaded as an OpenAPI 3.x document."""


# -- schema tree ---------------------------------------------------------------


@dataclass(frozen=True)
class ObjectSchema:
    properties: tuple[tuple[str, "Schema"], ...] = ()
    required: frozenset[str] = frozenset()
    # schema of extra keys when ``additionalProperties`` is a schema
    additional: "Schema | None" = None

    def __post_init__(self) -> None:
        missing = self.required - {name for name, _ in self.properties}
        if missing:
            object.__setattr__(self, "required", self.required - missing)

    def prop(self, name: str) -> "Schema | None":
        return next((s for n, s in self.properties if n == name), None)


@dataclass(frozen=True)
class ArraySchema:
    items: "Schema"


@dataclass(frozen=True)
class ScalarSchema:
    kind: str  # string | integer | number | boolean | null
    format: str | None = None
    enum_values: tuple[Any, ...] | None = None
    default: Any = None

    def __post_init__(self) -> None:
        if self.enum_values is not None and not self.enum_values:
            object.__setattr__(self, "enum_values", None)


@dataclass(frozen=True)
class RefSchema:
    name: str


@dataclass(frozen=True)
class UnionSchema:
    variants: tuple["Schema", ...]
    flavor: str = "oneOf"


@dataclass(frozen=True)
class AllOfSchema:
    parts: tuple["Schema", ...]


@dataclass(frozen=True)
class AnySchema:
    pass


Schema = Union[ObjectSchema, ArraySchema, ScalarSchema, RefSchema, UnionSchema, AllOfSchema, AnySchema]
ANY = AnySchema()


# -- operations ----------------------------------------------------------------


@dataclass(frozen=True)
class RawParam:
    name: str
    location: str  # path | query | header | cookie
    required: bool
    schema: Schema
    description: str = ""


@dataclass(frozen=True)
class RawResponse:
    description: str = ""
    schema: Schema | None = None
    media_type: str | None = None


@dataclass(frozen=True)
class RawOperation:
    method: str
    path: str
    operation_id: str | None = None
    summary: str = ""
    description: str = ""
    parameters: tuple[RawParam, ...] = ()
    request_body_schema: Schema | None = None
    request_media_type: str | None = None
    request_body_required: bool = False
    responses: tuple[tuple[str, RawResponse], ...] = ()
    deprecated: bool = False
    tags: tuple[str, ...] = ()
    paginated: bool = False
    streaming: bool = False
    security: tuple[str, ...] | None = None

    def error_codes(self) -> list[int]:
        """Concrete 4xx/5xx status codes declared by this operation, in order."""
        return [int(s) for s, _ in self.responses if s.isdigit() and 400 <= int(s) <= 599]


@dataclass(frozen=True)
class OpenApiDoc:
    version: str
    info: dict[str, str]
    servers: tuple[str, ...]
    security_schemes: dict[str, dict]
    security: tuple[str, ...] | None
    operations: tuple[RawOperation, ...]
    webhooks: tuple[tuple[str, RawOperation], ...]
    components_schemas: dict[str, Schema]
    ref_counts: dict[str, int]
    cycle_names: frozenset[str] = frozenset()
    discard_tally: dict[str, int] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()
    skipped_methods: tuple[tuple[str, str], ...] = ()
    raw: dict = field(default_factory=dict, repr=False, compare=False)
    pruned: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def is_31(self) -> bool:
        return self.version.startswith("3.1")


# -- decoding ------------------------------------------------------------------

_BaseLoader = getattr(yaml, "CSafeLoader", yaml.SafeLoader)


class _Loader(_BaseLoader):  # type: ignore[misc,valid-type]
    """Safe YAML loader that keeps keys and dates as the strings written."""


def _construct_mapping(loader: yaml.SafeLoader, node: yaml.MappingNode) -> dict:
    loader.flatten_mapping(node)
    out: dict[str, Any] = {}
    for key_node, value_node in node.value:
        if isinstance(key_node, yaml.ScalarNode):
            key = key_node.value
        else:
            key = str(loader.construct_object(key_node, deep=True))
        out[key] = loader.construct_object(value_node, deep=True)
    return out


_Loader.add_constructor("tag:yaml.org,2002:map", _construct_mapping)
_Loader.add_constructor("tag:yaml.org,2002:timestamp", lambda loader, node: loader.construct_scalar(node))


def decode(data: bytes | str, format_hint: str | None = None) -> dict:
    """Parse JSON or YAML text into plain Python containers."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    text = text.lstrip("﻿")
    fmt = format_hint or ("json" if text.lstrip()[:1] == "{" else "yaml")
    try:
        tree = json.loads(text) if fmt == "json" else yaml.load(text, Loader=_Loader)
    except json.JSONDecodeError as e:
        raise OpenApiError(f"malformed JSON at {e.lineno}:{e.colno}: {e.msg}") from None
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        where = f" at {mark.line + 1}:{mark.column + 1}" if mark else ""
        raise OpenApiError(f"malformed YAML{where}: {e.problem}") from None
    except yaml.YAMLError as e:
        raise OpenApiError(f"malformed YAML: {e}") from None
    if not isinstance(tree, dict):
        raise OpenApiError("document root is not a mapping")
    return tree


def check_version(tree: dict) -> str:
    version = tree.get("openapi")
    if version is None:
        if "swagger" in tree:
            raise OpenApiError(f"unsupported version: swagger {tree['swagger']} (OpenAPI 3.x required)")
        raise OpenApiError("unsupported version: no 'openapi' field")
    version = str(version)
    if not re.match(r"3\.\d", version):
        raise OpenApiError(f"unsupported version: {version} (OpenAPI 3.x required)")
    return version


# -- metadata discard ----------------------------------------------------------

# keys dropped wherever they occur in a structural (non-name) mapping
_DROP_ANYWHERE = {"externalDocs": "externalDocs", "example": "examples", "examples": "examples",
                  "xml": "xml", "discriminator": "discriminator"}
# keys whose value must not be walked (free-form literals)
_LITERAL_KEYS = {"default", "enum", "const", "required", "value"}
# keys whose value is a mapping from user names to objects
_NAME_MAPS = {
    "properties", "patternProperties", "schemas", "parameters", "requestBodies", "securitySchemes",
    "links", "callbacks", "pathItems", "content", "encoding", "variables", "scopes", "mapping",
    "definitions", "$defs", "dependentSchemas",
}
# name maps in which x-* keys are still extensions
_EXTENSIBLE_NAME_MAPS = {"paths", "responses", "webhooks", "callbacks"}


def discard_metadata(tree: dict) -> tuple[dict, dict[str, int]]:
    """Remove documentation-only fields; return the pruned copy and a tally.

    The tally counts removals by category: ``openapi``, ``info.contact``,
    ``info.license``, ``info.termsOfService``, ``externalDocs``, ``tags``,
    ``x-*``, ``servers.extra`` (one per server beyond the first), ``headers``
    (response headers), ``examples`` (``example`` and ``examples``), ``xml``
    and ``discriminator``.
    """
    tally: Counter[str] = Counter()

    def obj(node: Any, response: bool = False) -> Any:
        if isinstance(node, list):
            return [obj(x) for x in node]
        if not isinstance(node, dict):
            return node
        out = {}
        for key, value in node.items():
            if key.startswith("x-"):
                tally["x-*"] += 1
            elif key in _DROP_ANYWHERE:
                tally[_DROP_ANYWHERE[key]] += 1
            elif response and key == "headers":
                tally["headers"] += 1
            elif key in _LITERAL_KEYS:
                out[key] = value
            elif key in _EXTENSIBLE_NAME_MAPS and isinstance(value, dict):
                out[key] = names(value, extensible=True, responses=key == "responses")
            elif key in _NAME_MAPS and isinstance(value, dict):
                out[key] = names(value)
            else:
                out[key] = obj(value)
        return out

    def names(node: dict, extensible: bool = False, responses: bool = False) -> dict:
        out = {}
        for key, value in node.items():
            if extensible and key.startswith("x-"):
                tally["x-*"] += 1
                continue
            out[key] = obj(value, response=responses)
        return out

    pruned: dict[str, Any] = {}
    for key, value in tree.items():
        if key == "openapi":
            tally["openapi"] += 1
        elif key == "tags":
            tally["tags"] += 1
        elif key == "servers" and isinstance(value, list):
            if len(value) > 1:
                tally["servers.extra"] += len(value) - 1
            pruned[key] = obj(value[:1])
        elif key == "info" and isinstance(value, dict):
            info = {}
            for k, v in value.items():
                if k in ("contact", "license", "termsOfService"):
                    tally[f"info.{k}"] += 1
                else:
                    info[k] = v
            pruned[key] = obj(info)
        elif key == "components" and isinstance(value, dict):
            comps = {}
            for k, v in value.items():
                if k.startswith("x-"):
                    tally["x-*"] += 1
                elif k in ("examples",):
                    tally["examples"] += 1
                elif isinstance(v, dict):
                    comps[k] = names(v, responses=k == "responses")
                else:
                    comps[k] = v
            pruned[key] = comps
        elif key.startswith("x-"):
            tally["x-*"] += 1
        elif key in _EXTENSIBLE_NAME_MAPS and isinstance(value, dict):
            pruned[key] = names(value, extensible=True)
        else:
            pruned[key] = obj(value)
    return pruned, dict(sorted(tally.items()))


# -- reference resolution ------------------------------------------------------


def _pointer(tree: dict, ref: str) -> Any:
    if not ref.startswith("#"):
        raise OpenApiError(f"external reference {ref!r} is not supported")
    node: Any = tree
    for raw in ref[1:].split("/")[1:]:
        part = raw.replace("~1", "/").replace("~0", "~")
        part = re.sub(r"%([0-9A-Fa-f]{2})", lambda m: chr(int(m.group(1), 16)), part)
        if isinstance(node, dict) and part in node:
            node = node[part]
        elif isinstance(node, list) and part.isdigit() and int(part) < len(node):
            node = node[int(part)]
        else:
            raise OpenApiError(f"unresolvable reference {ref!r}")
    return node


def count_schema_refs(tree: Any) -> Counter[str]:
    """Count ``$ref`` occurrences that name a component schema."""
    counts: Counter[str] = Counter()
    stack = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, dict):
            ref = node.get("$ref")
            if isinstance(ref, str) and ref.startswith(SCHEMA_REF_PREFIX) and "/" not in ref[len(SCHEMA_REF_PREFIX):]:
                counts[_unescape(ref[len(SCHEMA_REF_PREFIX):])] += 1
            stack.extend(node.values())
        elif isinstance(node, list):
            stack.extend(node)
    return counts


def _unescape(part: str) -> str:
    return part.replace("~1", "/").replace("~0", "~")


class _Resolver:
    def __init__(self, tree: dict) -> None:
        self.tree = tree
        self.schema_names = set((tree.get("components") or {}).get("schemas") or {})
        self.warnings: list[str] = []

    def deref(self, node: Any, seen: tuple[str, ...] = ()) -> Any:
        """Follow non-schema ``$ref`` chains (parameters, responses, ...)."""
        while isinstance(node, dict) and isinstance(node.get("$ref"), str):
            ref = node["$ref"]
            if ref in seen:
                raise OpenApiError(f"reference cycle through {ref!r}")
            seen = (*seen, ref)
            node = _pointer(self.tree, ref)
        return node

    def schema(self, node: Any, seen: tuple[str, ...] = ()) -> Schema:
        if node is True or node is None or node == {}:
            return ANY
        if not isinstance(node, dict):
            return ANY
        ref = node.get("$ref")
        if isinstance(ref, str):
            tail = ref[len(SCHEMA_REF_PREFIX):] if ref.startswith(SCHEMA_REF_PREFIX) else None
            if tail is not None and "/" not in tail and _unescape(tail) in self.schema_names:
                return RefSchema(_unescape(tail))
            if ref in seen:
                self.warnings.append(f"cyclic inline reference {ref!r} replaced by any")
                return ANY
            return self.schema(_pointer(self.tree, ref), (*seen, ref))
        if "allOf" in node:
            parts = [self.schema(p, seen) for p in node["allOf"] or []]
            rest = {k: v for k, v in node.items() if k != "allOf"}
            if "properties" in rest or "additionalProperties" in rest:
                parts.append(self.schema(rest, seen))
            return parts[0] if len(parts) == 1 else AllOfSchema(tuple(parts))
        for flavor in ("oneOf", "anyOf"):
            if flavor in node and node[flavor]:
                variants = tuple(self.schema(v, seen) for v in node[flavor])
                return variants[0] if len(variants) == 1 else UnionSchema(variants, flavor)
        kind = node.get("type")
        if isinstance(kind, list):
            kinds = [k for k in kind if k != "null"]
            if len(kinds) == 0:
                return ScalarSchema("null")
            if len(kinds) > 1:
                return UnionSchema(tuple(self.schema({**node, "type": k}, seen) for k in kinds), "anyOf")
            kind = kinds[0]
        if kind == "object" or (kind is None and ("properties" in node or "additionalProperties" in node)):
            props = node.get("properties") or {}
            required = node.get("required") or []
            extra = node.get("additionalProperties")
            additional = self.schema(extra, seen) if isinstance(extra, dict) and extra else None
            if extra is True or extra == {}:
                additional = ANY if not props else None
            return ObjectSchema(
                tuple((str(name), self.schema(sub, seen)) for name, sub in props.items()),
                frozenset(str(r) for r in required if isinstance(r, str)),
                additional,
            )
        if kind == "array" or (kind is None and "items" in node):
            return ArraySchema(self.schema(node.get("items"), seen))
        if kind in ("string", "integer", "number", "boolean", "null"):
            enum = node.get("enum")
            if enum is None and "const" in node:
                enum = [node["const"]]
            if isinstance(enum, list):
                enum = tuple(v for v in enum if v is not None) or None
            else:
                enum = None
            return ScalarSchema(kind, node.get("format"), enum, node.get("default"))
        if kind is None and "enum" in node and isinstance(node["enum"], list):
            values = tuple(v for v in node["enum"] if v is not None)
            if values and all(isinstance(v, str) for v in values):
                return ScalarSchema("string", None, values, node.get("default"))
        return ANY


def _cycle_names(schemas: dict[str, Schema]) -> frozenset[str]:
    """Component schemas that take part in a reference cycle (Tarjan's SCC)."""
    graph = {name: sorted(set(_refs(s))) for name, s in schemas.items()}
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    cyclic: set[str] = set()
    counter = 0
    for root in graph:
        if root in index:
            continue
        work = [(root, iter(graph[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            child = next(it, None)
            if child is not None:
                if child not in graph:
                    continue
                if child not in index:
                    index[child] = low[child] = counter
                    counter += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(graph[child])))
                elif child in on_stack:
                    low[node] = min(low[node], index[child])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                component = []
                while True:
                    top = stack.pop()
                    on_stack.discard(top)
                    component.append(top)
                    if top == node:
                        break
                if len(component) > 1 or node in graph[node]:
                    cyclic.update(component)
    return frozenset(cyclic)


def _refs(s: Schema):
    if isinstance(s, RefSchema):
        yield s.name
    elif isinstance(s, ObjectSchema):
        for _, sub in s.properties:
            yield from _refs(sub)
        if s.additional is not None:
            yield from _refs(s.additional)
    elif isinstance(s, ArraySchema):
        yield from _refs(s.items)
    elif isinstance(s, UnionSchema):
        for v in s.variants:
            yield from _refs(v)
    elif isinstance(s, AllOfSchema):
        for p in s.parts:
            yield from _refs(p)


schema_refs = _refs


# -- operations ----------------------------------------------------------------


def _pick_media(content: Any) -> tuple[str | None, Any]:
    if not isinstance(content, dict) or not content:
        return None, None
    for media in content:
        base = media.split(";")[0].strip().lower()
        if base == "application/json" or base.endswith("+json"):
            return media, content[media]
    media = next(iter(content))
    return media, content[media]


def _text(value: Any) -> str:
    return value if isinstance(value, str) else ""


def _build_operation(
    r: _Resolver, method: str, path: str, node: dict, path_params: list, raw_node: dict
) -> RawOperation:
    params: dict[tuple[str, str], RawParam] = {}
    for p in [*path_params, *(node.get("parameters") or [])]:
        p = r.deref(p)
        if not isinstance(p, dict) or "name" not in p or "in" not in p:
            continue
        if "schema" in p:
            schema = r.schema(p["schema"])
        else:
            _, media = _pick_media(p.get("content"))
            schema = r.schema((media or {}).get("schema")) if isinstance(media, dict) else ANY
        loc = str(p["in"])
        params[(str(p["name"]), loc)] = RawParam(
            str(p["name"]), loc, bool(p.get("required")) or loc == "path", schema, _text(p.get("description"))
        )
    body_schema = None
    body_media = None
    body_required = False
    body = r.deref(node.get("requestBody"))
    if isinstance(body, dict):
        body_media, media = _pick_media(body.get("content"))
        body_required = bool(body.get("required"))
        if body_media is not None:
            base = body_media.split(";")[0].strip().lower()
            if isinstance(media, dict) and media.get("schema") is not None:
                body_schema = r.schema(media["schema"])
            elif base in ("application/octet-stream",) or base.startswith(("image/", "audio/", "video/")):
                body_schema = ScalarSchema("string", "binary")
            else:
                body_schema = ANY
    responses = []
    streaming = False
    for status, resp in (node.get("responses") or {}).items():
        resp = r.deref(resp)
        if not isinstance(resp, dict):
            continue
        media_type, media = _pick_media(resp.get("content"))
        for m in resp.get("content") or {}:
            if m.split(";")[0].strip().lower() in STREAM_MEDIA_TYPES:
                streaming = True
        schema = None
        if isinstance(media, dict) and media.get("schema") is not None:
            schema = r.schema(media["schema"])
        responses.append((str(status), RawResponse(_text(resp.get("description")), schema, media_type)))
    security = node.get("security")
    sec_names = None
    if isinstance(security, list):
        sec_names = tuple(name for req in security if isinstance(req, dict) for name in req)
    tags = tuple(str(t) for t in (node.get("tags") or []) if isinstance(t, (str, int)))
    return RawOperation(
        method=method.upper(),
        path=path,
        operation_id=str(node["operationId"]) if node.get("operationId") else None,
        summary=_text(node.get("summary")),
        description=_text(node.get("description")),
        parameters=tuple(params.values()),
        request_body_schema=body_schema,
        request_media_type=body_media,
        request_body_required=body_required,
        responses=tuple(responses),
        deprecated=bool(node.get("deprecated")),
        tags=tags,
        paginated=any(k in raw_node for k in PAGINATION_EXTENSIONS),
        streaming=streaming,
        security=sec_names,
    )


def _path_items(r: _Resolver, items: dict, raw_items: dict, skipped: list) -> list[RawOperation]:
    ops = []
    for path, item in items.items():
        item = r.deref(item)
        raw_item = raw_items.get(path) if isinstance(raw_items, dict) else None
        raw_item = raw_item if isinstance(raw_item, dict) else {}
        if "$ref" in raw_item:
            try:
                raw_item = _pointer(r.tree, raw_item["$ref"]) or {}
            except OpenApiError:
                raw_item = {}
        if not isinstance(item, dict):
            continue
        shared = item.get("parameters") or []
        for method in HTTP_METHODS:
            node = item.get(method)
            if not isinstance(node, dict):
                continue
            if method == "trace":
                skipped.append((method.upper(), str(path)))
                continue
            raw_node = raw_item.get(method) if isinstance(raw_item.get(method), dict) else {}
            ops.append(_build_operation(r, method, str(path), node, shared, raw_node))
    return ops


def _server_url(server: dict) -> str:
    """Server URL with ``{variable}`` placeholders replaced by their defaults."""
    url = str(server["url"])
    variables = server.get("variables") or {}
    for name, spec in variables.items():
        if isinstance(spec, dict) and spec.get("default") is not None:
            url = url.replace("{" + name + "}", str(spec["default"]))
    return url


def load_openapi(data: bytes | str, format_hint: str | None = None) -> OpenApiDoc:
    """Load an OpenAPI 3.x document from JSON or YAML bytes.

    Raises :class:`OpenApiError` for malformed input, a non-3.x version,
    external references or references that do not resolve.
    """
    raw = decode(data, format_hint)
    version = check_version(raw)
    pruned, tally = discard_metadata(raw)
    r = _Resolver(pruned)
    comps = pruned.get("components") or {}
    schemas = {str(name): r.schema(node) for name, node in (comps.get("schemas") or {}).items()}
    counts = count_schema_refs(pruned)
    ref_counts = {name: counts.get(name, 0) for name in schemas}
    skipped: list[tuple[str, str]] = []
    ops = _path_items(r, pruned.get("paths") or {}, raw.get("paths") or {}, skipped)
    hooks: list[tuple[str, RawOperation]] = []
    if version.startswith("3.1"):
        for name, item in (pruned.get("webhooks") or {}).items():
            for op in _path_items(r, {f"/{name}": item}, {}, skipped):
                hooks.append((str(name), op))
    info = pruned.get("info") or {}
    servers = tuple(
        _server_url(s) for s in pruned.get("servers") or [] if isinstance(s, dict) and isinstance(s.get("url"), str)
    )
    security = pruned.get("security")
    global_security = None
    if isinstance(security, list):
        global_security = tuple(name for req in security if isinstance(req, dict) for name in req)
    warnings = list(r.warnings)
    for method, path in skipped:
        warnings.append(f"{method} {path}: method has no LAPIS equivalent and was skipped")
    return OpenApiDoc(
        version=version,
        info={k: _text(info.get(k)) for k in ("title", "version", "description") if info.get(k) is not None},
        servers=servers,
        security_schemes=dict(comps.get("securitySchemes") or {}),
        security=global_security,
        operations=tuple(ops),
        webhooks=tuple(hooks),
        components_schemas=schemas,
        ref_counts=ref_counts,
        cycle_names=_cycle_names(schemas),
        discard_tally=tally,
        warnings=tuple(warnings),
        skipped_methods=tuple(skipped),
        raw=raw,
        pruned=pruned,
    )


# -- normalization -------------------------------------------------------------


def _resolve_part(part: Schema, components: dict[str, Schema] | None, visiting: frozenset[str]) -> Schema:
    if isinstance(part, RefSchema) and components is not None and part.name in components:
        if part.name in visiting:
            return ANY
        return merge_all_of(components[part.name], components, None, visiting | {part.name})
    return part


def merge_all_of(
    s: Schema,
    components: dict[str, Schema] | None = None,
    warnings: list[str] | None = None,
    _visiting: frozenset[str] = frozenset(),
) -> Schema:
    """Replace every ``allOf`` node under ``s`` with a single merged schema.

    Object parts are merged property by property, later parts overriding
    earlier ones, and their required sets are unioned. A part that is a
    component reference is expanded through ``components`` when given. Mixing
    an object part with a scalar part yields :data:`ANY` plus a warning.
    """
    warn = warnings.append if warnings is not None else (lambda _msg: None)
    if isinstance(s, ObjectSchema):
        return ObjectSchema(
            tuple((n, merge_all_of(sub, components, warnings, _visiting)) for n, sub in s.properties),
            s.required,
            merge_all_of(s.additional, components, warnings, _visiting) if s.additional is not None else None,
        )
    if isinstance(s, ArraySchema):
        return ArraySchema(merge_all_of(s.items, components, warnings, _visiting))
    if isinstance(s, UnionSchema):
        return UnionSchema(tuple(merge_all_of(v, components, warnings, _visiting) for v in s.variants), s.flavor)
    if not isinstance(s, AllOfSchema):
        return s
    parts = [
        merge_all_of(_resolve_part(p, components, _visiting), components, warnings, _visiting) for p in s.parts
    ]
    parts = [p for p in parts if not isinstance(p, AnySchema)]
    if not parts:
        return ANY
    if len(parts) == 1:
        return parts[0]
    if all(isinstance(p, ObjectSchema) for p in parts):
        props: dict[str, Schema] = {}
        required: set[str] = set()
        additional = None
        for p in parts:
            assert isinstance(p, ObjectSchema)
            for name, sub in p.properties:
                if name in props and props[name] != sub:
                    warn(f"allOf: property {name!r} overridden by a later part")
                props[name] = sub
            required |= p.required
            additional = p.additional if p.additional is not None else additional
        return ObjectSchema(tuple(props.items()), frozenset(required), additional if not props else None)
    if all(isinstance(p, ScalarSchema) for p in parts) and len({p.kind for p in parts}) == 1:  # type: ignore[union-attr]
        merged = parts[0]
        for p in parts[1:]:
            assert isinstance(p, ScalarSchema) and isinstance(merged, ScalarSchema)
            merged = ScalarSchema(
                merged.kind,
                p.format or merged.format,
                p.enum_values if p.enum_values is not None else merged.enum_values,
                p.default if p.default is not None else merged.default,
            )
        return merged
    if any(isinstance(p, ObjectSchema) for p in parts) and any(isinstance(p, ScalarSchema) for p in parts):
        warn("allOf mixes object and scalar parts; using any")
        return ANY
    # arrays, unions or references that could not be expanded: keep the first part
    warn("allOf with non-object parts kept its first part")
    return parts[0]


def _category(s: Schema, components: dict[str, Schema], depth: int = 0) -> str:
    if isinstance(s, RefSchema):
        target = components.get(s.name)
        if target is None or depth > 20:
            return "object"
        return _category(target, components, depth + 1)
    if isinstance(s, (ObjectSchema, AllOfSchema)):
        return "object"
    if isinstance(s, ArraySchema):
        return "array"
    if isinstance(s, ScalarSchema):
        return "scalar"
    if isinstance(s, UnionSchema):
        return "union"
    return "any"


def _is_null(s: Schema) -> bool:
    return isinstance(s, ScalarSchema) and s.kind == "null"


def collapse_union(s: Schema, doc: OpenApiDoc | None = None, max_variants: int = 4) -> Schema:
    """Reduce a ``oneOf``/``anyOf`` node to a single schema.

    Null variants are ignored. A single remaining variant is returned as is.
    More than ``max_variants`` variants, or a mix of object and scalar
    variants, collapse to :data:`ANY`. Otherwise the variant with the highest
    document-wide reference count wins, ties going to the first listed.
    """
    if not isinstance(s, UnionSchema):
        return s
    variants = [v for v in s.variants if not _is_null(v)]
    if not variants:
        return ANY
    if len(variants) == 1:
        return variants[0]
    if len(variants) > max_variants:
        return ANY
    components = doc.components_schemas if doc is not None else {}
    kinds = {_category(v, components) for v in variants}
    if "object" in kinds and "scalar" in kinds:
        return ANY
    ref_counts = doc.ref_counts if doc is not None else {}
    best, best_count = variants[0], -1
    for v in variants:
        count = ref_counts.get(v.name, 0) if isinstance(v, RefSchema) else 0
        if count > best_count:
            best, best_count = v, count
    return best


def normalize(
    s: Schema, doc: OpenApiDoc | None = None, max_variants: int = 4, warnings: list[str] | None = None
) -> Schema:
    """Merge every ``allOf`` and collapse every union, at all depths."""
    components = doc.components_schemas if doc is not None else None
    s = merge_all_of(s, components, warnings)
    if isinstance(s, UnionSchema):
        picked = collapse_union(s, doc, max_variants)
        if isinstance(picked, UnionSchema) or picked is s:
            return picked if not isinstance(picked, UnionSchema) else ANY
        return normalize(picked, doc, max_variants, warnings)
    if isinstance(s, ObjectSchema):
        return ObjectSchema(
            tuple((n, normalize(sub, doc, max_variants, warnings)) for n, sub in s.properties),
            s.required,
            normalize(s.additional, doc, max_variants, warnings) if s.additional is not None else None,
        )
    if isinstance(s, ArraySchema):
        return ArraySchema(normalize(s.items, doc, max_variants, warnings))
    return s
