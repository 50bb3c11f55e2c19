from __future__ import annotations

import json
import re
from collections import Counter

import pytest

from lapis.openapi import (
    ANY,
    AllOfSchema,
    ArraySchema,
    ObjectSchema,
    OpenApiError,
    RefSchema,
    ScalarSchema,
    UnionSchema,
    count_schema_refs,
    discard_metadata,
    load_openapi,
    merge_all_of,
    normalize,
)

from conftest import fixture_bytes

STR, INT, BOOL = ScalarSchema("string"), ScalarSchema("integer"), ScalarSchema("boolean")


def _spec(**extra) -> dict:
    spec = {"openapi": "3.0.3", "info": {"title": "T", "version": "1"}, "paths": {}}
    spec.update(extra)
    return spec


def _load(**extra):
    return load_openapi(json.dumps(_spec(**extra)))


def test_petstore_counts(petstore):
    assert len(petstore.operations) == 19
    raw_schemas = petstore.raw["components"]["schemas"]
    assert set(petstore.components_schemas) == set(raw_schemas)
    assert petstore.info["title"].startswith("Swagger Petstore")


@pytest.mark.xfail(strict=True, reason="the public petstore3 document declares 7 component schemas; the reference count is 33")
def test_petstore_reference_schema_count(petstore):
    assert len(petstore.components_schemas) == 33


def test_httpbin_counts(httpbin):
    paired = sum(
        1 for item in httpbin.raw["paths"].values() for m in item if m in ("get", "put", "post", "delete", "patch", "head", "options")
    )
    assert len(httpbin.operations) == paired == 73
    assert httpbin.components_schemas == {}
    assert len(httpbin.skipped_methods) == 5
    assert all(method == "TRACE" for method, _ in httpbin.skipped_methods)


@pytest.mark.parametrize(
    "tree,fragment",
    [
        ({"swagger": "2.0", "info": {}, "paths": {}}, "unsupported version"),
        (_spec(openapi="2.0"), "unsupported version"),
        (_spec(openapi="4.0.0"), "unsupported version"),
    ],
)
def test_version_gate(tree, fragment):
    with pytest.raises(OpenApiError, match=fragment):
        load_openapi(json.dumps(tree))


def test_malformed_input_has_location():
    with pytest.raises(OpenApiError, match=r"at 2:\d+"):
        load_openapi(b'{"openapi": "3.0.0",\n "info": ]')
    with pytest.raises(OpenApiError):
        load_openapi(b"openapi: 3.0.0\ninfo: [unclosed\n")


def test_yaml_and_json_load_identically(petstore):
    import yaml

    as_json = json.dumps(yaml.safe_load(fixture_bytes("openapi/petstore3.yaml")))
    again = load_openapi(as_json)
    assert again.operations == petstore.operations
    assert again.components_schemas == petstore.components_schemas


def test_external_and_broken_refs_rejected():
    ext = {"/a": {"get": {"responses": {"200": {"description": "ok", "content": {"application/json": {"schema": {"$ref": "other.yaml#/X"}}}}}}}}
    with pytest.raises(OpenApiError, match="external"):
        _load(paths=ext)
    broken = {"/a": {"get": {"responses": {"200": {"description": "ok", "content": {"application/json": {"schema": {"$ref": "#/components/schemas/Nope"}}}}}}}}
    with pytest.raises(OpenApiError, match="unresolvable"):
        _load(paths=broken)


def test_ref_counts_match_textual_scan(petstore):
    text = fixture_bytes("openapi/petstore3.yaml").decode()
    found = Counter(re.findall(r"""\$ref:\s*['"]?#/components/schemas/([A-Za-z0-9_.-]+)""", text))
    assert petstore.ref_counts == {name: found.get(name, 0) for name in petstore.components_schemas}
    assert sum(petstore.ref_counts.values()) == sum(found.values())


def test_ref_counts_cover_every_schema():
    doc = _load(components={"schemas": {"A": {"type": "string"}, "B": {"$ref": "#/components/schemas/A"}}})
    assert doc.ref_counts == {"A": 1, "B": 0}
    assert count_schema_refs({"x": [{"$ref": "#/components/schemas/A"}, {"$ref": "#/components/parameters/p"}]}) == {"A": 1}


def test_cycles_terminate_and_stay_named():
    schemas = {
        "Node": {"type": "object", "properties": {"next": {"$ref": "#/components/schemas/Node"}}},
        "A": {"type": "object", "properties": {"b": {"$ref": "#/components/schemas/B"}}},
        "B": {"type": "object", "properties": {"a": {"$ref": "#/components/schemas/A"}}},
        "Leaf": {"type": "string"},
    }
    doc = _load(components={"schemas": schemas})
    assert doc.cycle_names == frozenset({"Node", "A", "B"})
    assert doc.components_schemas["Node"].prop("next") == RefSchema("Node")


def test_non_schema_refs_are_inlined():
    comps = {"parameters": {"Limit": {"name": "limit", "in": "query", "schema": {"type": "integer"}}}}
    paths = {"/a": {"get": {"parameters": [{"$ref": "#/components/parameters/Limit"}], "responses": {"200": {"description": "ok"}}}}}
    op = _load(paths=paths, components=comps).operations[0]
    assert [(p.name, p.location, p.schema) for p in op.parameters] == [("limit", "query", INT)]


def test_trace_skipped_with_warning():
    paths = {"/a": {"trace": {"responses": {"200": {"description": "ok"}}}, "get": {"responses": {"200": {"description": "ok"}}}}}
    doc = _load(paths=paths)
    assert [o.method for o in doc.operations] == ["GET"]
    assert any("TRACE" in w for w in doc.warnings)


def test_server_variables_substituted():
    servers = [{"url": "https://{region}.x.io/{ver}", "variables": {"region": {"default": "eu"}, "ver": {"default": "v2"}}}]
    assert _load(servers=servers).servers == ("https://eu.x.io/v2",)


# -- allOf -------------------------------------------------------------------


def test_merge_disjoint():
    s = AllOfSchema((ObjectSchema((("a", STR),), frozenset({"a"})), ObjectSchema((("b", INT),))))
    assert merge_all_of(s) == ObjectSchema((("a", STR), ("b", INT)), frozenset({"a"}))


def test_merge_override_warns():
    warnings: list[str] = []
    s = AllOfSchema((ObjectSchema((("a", STR),)), ObjectSchema((("a", INT),))))
    assert merge_all_of(s, warnings=warnings) == ObjectSchema((("a", INT),))
    assert len(warnings) == 1 and "'a'" in warnings[0]


def test_merge_object_with_scalar_is_any():
    warnings: list[str] = []
    s = AllOfSchema((ObjectSchema((("a", STR),)), STR))
    assert merge_all_of(s, warnings=warnings) is ANY
    assert warnings


def test_merge_object_with_scalar_from_document():
    schemas = {"Bad": {"allOf": [{"type": "object", "properties": {"a": {"type": "string"}}}, {"type": "string"}]}}
    doc = _load(components={"schemas": schemas})
    warnings: list[str] = []
    assert normalize(doc.components_schemas["Bad"], doc, warnings=warnings) is ANY
    assert warnings


def test_merge_expands_component_parts_and_is_idempotent():
    schemas = {
        "Base": {"type": "object", "required": ["id"], "properties": {"id": {"type": "integer"}}},
        "Pet": {"allOf": [{"$ref": "#/components/schemas/Base"}, {"type": "object", "properties": {"name": {"type": "string"}}}]},
    }
    doc = _load(components={"schemas": schemas})
    once = merge_all_of(doc.components_schemas["Pet"], doc.components_schemas)
    assert once == ObjectSchema((("id", INT), ("name", STR)), frozenset({"id"}))
    assert merge_all_of(once, doc.components_schemas) == once


def test_merge_nested_depth():
    inner = AllOfSchema((ObjectSchema((("x", STR),)), ObjectSchema((("y", STR),))))
    s = ObjectSchema((("items", ArraySchema(inner)),))
    merged = merge_all_of(s)
    assert merged.prop("items") == ArraySchema(ObjectSchema((("x", STR), ("y", STR))))


# -- unions --------------------------------------------------------------------


def _union_doc():
    pet = {"$ref": "#/components/schemas/Pet"}
    tag = {"$ref": "#/components/schemas/Tag"}
    schemas = {
        "Pet": {"type": "object", "properties": {"tag": tag, "friends": {"type": "array", "items": pet}}},
        "Tag": {"type": "object", "properties": {"n": {"type": "string"}}},
        "Either": {"oneOf": [pet, tag]},
    }
    paths = {
        f"/p{i}": {"get": {"responses": {"200": {"description": "ok", "content": {"application/json": {"schema": pet}}}}}}
        for i in range(3)
    }
    return _load(paths=paths, components={"schemas": schemas})


def test_union_picks_most_referenced():
    doc = _union_doc()
    text = json.dumps(doc.raw)
    assert doc.ref_counts["Pet"] == text.count('"#/components/schemas/Pet"') == 5
    assert doc.ref_counts["Tag"] == text.count('"#/components/schemas/Tag"') == 2
    from lapis.openapi import collapse_union

    assert collapse_union(doc.components_schemas["Either"], doc) == RefSchema("Pet")


def test_union_rules():
    from lapis.openapi import collapse_union

    five = UnionSchema((STR, INT, BOOL, ObjectSchema(), ArraySchema(STR)))
    assert collapse_union(five) is ANY
    assert collapse_union(UnionSchema((RefSchema("X"),), "anyOf")) == RefSchema("X")
    assert collapse_union(UnionSchema((ObjectSchema(), STR))) is ANY
    assert collapse_union(UnionSchema((STR, INT))) == STR
    assert collapse_union(UnionSchema((ScalarSchema("null"), INT))) == INT
    assert collapse_union(UnionSchema((STR, INT, BOOL, STR, INT)), max_variants=5) == STR


# -- discard -------------------------------------------------------------------


def test_discard_tally_rule_list():
    tree = _spec(
        info={"title": "T", "version": "1", "contact": {"name": "c"}},
        servers=[{"url": "https://a"}, {"url": "https://b"}, {"url": "https://c"}],
    )
    pruned, tally = discard_metadata(tree)
    assert tally == {"info.contact": 1, "openapi": 1, "servers.extra": 2}
    assert pruned["servers"] == [{"url": "https://a"}]
    assert "contact" not in pruned["info"]


def test_discard_counts_extensions():
    tree = _spec(**{f"x-ext-{i}": i for i in range(40)})
    _, tally = discard_metadata(tree)
    assert tally["x-*"] == 40


def test_discard_keeps_properties_named_like_metadata():
    schema = {"type": "object", "properties": {"example": {"type": "string"}, "x-id": {"type": "string"}, "tags": {"type": "string"}}}
    pruned, tally = discard_metadata(_spec(components={"schemas": {"S": schema}}))
    assert list(pruned["components"]["schemas"]["S"]["properties"]) == ["example", "x-id", "tags"]
    assert tally == {"openapi": 1}


def test_petstore_discards_examples_and_tags(petstore):
    def count(node, key):
        if isinstance(node, dict):
            own = sum(1 for k in node if k == key)
            return own + sum(count(v, key) for v in node.values())
        if isinstance(node, list):
            return sum(count(v, key) for v in node)
        return 0

    assert petstore.discard_tally["tags"] == 1
    brute = count(petstore.raw, "example") + count(petstore.raw, "examples")
    assert petstore.discard_tally["examples"] == brute > 0
    assert petstore.discard_tally["xml"] == count(petstore.raw, "xml") > 0
