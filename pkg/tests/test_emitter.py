from __future__ import annotations

import re

import pytest

from lapis.emitter import EmitError, EmitStyle, emit_document, emit_section, emit_type_expr
from lapis.model import Array, LapisDocument, Map, Meta, Named, Operation, Scalar
from lapis.parser import parse_document

from conftest import FIXTURES
from test_parser import MINIMAL


@pytest.mark.parametrize(
    "t,text",
    [
        (Map(Scalar("any")), "{str:any}"),
        (Scalar("str"), "str"),
        (Array(Map(Named("X"))), "[{str:X}]"),
        (Array(Array(Scalar("int"))), "[[int]]"),
    ],
)
def test_type_rendering(t, text):
    assert emit_type_expr(t) == text


def test_minimal_document_is_seven_lines():
    text = emit_document(parse_document(MINIMAL))
    assert text == MINIMAL
    assert len(text.splitlines()) == 7


def test_invoice_errors_section_matches_fixture(invoice_text):
    expected = (FIXTURES / "lapis" / "invoice_errors.lapis").read_text(encoding="utf-8")
    assert emit_section(parse_document(invoice_text), "errors") == expected


def test_invoice_round_trip_and_idempotence(invoice_text):
    doc = parse_document(invoice_text)
    text = emit_document(doc)
    assert parse_document(text) == doc
    assert emit_document(parse_document(text)) == text


def test_canonical_text_is_frugal(invoice_text):
    text = emit_document(parse_document(invoice_text))
    assert text.endswith("\n") and not text.endswith("\n\n")
    assert "\r" not in text and "\t" not in text
    assert "\n\n\n" not in text
    for line in text.splitlines():
        assert line == line.rstrip()
        assert "  " not in line.lstrip(" "), line


def test_section_order_is_fixed():
    text = "[ops]\nping GET /ping\n[meta]\napi: X\nbase: https://a.b\n"
    out = emit_document(parse_document(text, diagnostics=[]))
    assert re.findall(r"^\[(\w+)\]", out, re.M) == ["meta", "ops"]


def test_refuses_invalid_documents():
    bad = LapisDocument(Meta("X", "https://a.b"), ops=(Operation("get", "GET", "/x", output=Named("Nope")),))
    with pytest.raises(EmitError):
        emit_document(bad)


def test_flow_wraps_before_arrow(invoice_text):
    doc = parse_document(invoice_text)
    wide = emit_document(doc)
    narrow = emit_document(doc, EmitStyle(max_line=40))
    flow_lines = narrow[narrow.index("[flows]"):].splitlines()
    assert any(line.startswith("    -> ") for line in flow_lines)
    assert parse_document(narrow) == parse_document(wide)


def test_style_options(invoice_text):
    doc = parse_document(invoice_text)
    four = emit_document(doc, EmitStyle(indent_width=4, blank_line_between_ops=False))
    assert "\n    > email: str" in four
    assert "\n\n" not in four
    assert parse_document(four) == doc
    with pytest.raises(ValueError):
        EmitStyle(indent_width=0)


def test_operation_order_preserved():
    text = MINIMAL + "\nalpha GET /a\n"
    doc = parse_document(text)
    assert [o.name for o in parse_document(emit_document(doc)).ops] == ["ping", "alpha"]
