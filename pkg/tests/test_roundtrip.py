from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from lapis.emitter import emit_document, emit_type_expr
from lapis.model import (
    SCALARS,
    Array,
    Field,
    LapisDocument,
    Map,
    Meta,
    Named,
    ObjectBody,
    Operation,
    Scalar,
    errors_only,
    validate,
)
from lapis.parser import parse_document, parse_type_expr

from docgen import random_document

scalars = st.sampled_from(SCALARS).map(Scalar)
names = st.from_regex(r"[A-Z][a-z]{0,6}", fullmatch=True).filter(lambda n: n not in SCALARS).map(Named)
type_exprs = st.recursive(scalars | names, lambda inner: inner.map(Array) | inner.map(Map), max_leaves=6)


@given(type_exprs)
def test_type_expr_render_parse_identity(t):
    assert parse_type_expr(emit_type_expr(t)) == t


prose = st.text(
    st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp"), blacklist_characters="\x85"), min_size=1, max_size=30
).map(str.strip).filter(bool)
literals = st.one_of(
    st.booleans(),
    st.integers(-(10**12), 10**12),
    st.floats(allow_nan=False, allow_infinity=False),
    st.text(st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp"), blacklist_characters="\x85"), max_size=20),
)


@settings(max_examples=200)
@given(prose, prose, literals)
def test_prose_and_defaults_survive(desc, deprecation, default):
    kind = {bool: "bool", int: "int", float: "float", str: "str"}[type(default)]
    f = Field("value", Scalar(kind), default=default, deprecated=deprecation)
    op = Operation("get_value", "GET", "/value", (desc,), output=ObjectBody((f,)))
    doc = LapisDocument(Meta(desc, "https://a.b", desc=desc), ops=(op,))
    assert errors_only(validate(doc)) == []
    text = emit_document(doc)
    assert parse_document(text) == doc
    assert emit_document(parse_document(text)) == text


def test_generated_documents_round_trip():
    failures = []
    for seed in range(1000):
        doc = random_document(seed)
        assert errors_only(validate(doc)) == [], seed
        text = emit_document(doc)
        again = parse_document(text)
        if again != doc or emit_document(again) != text:
            failures.append(seed)
    assert failures == []
