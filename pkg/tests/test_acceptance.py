"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed in the summary."""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from decimal import Decimal

import pytest

from lapis.analyzer import error_duplication_report, source_formats
from lapis.converter import convert
from lapis.emitter import emit_document, emit_section
from lapis.model import errors_only, validate
from lapis.openapi import load_openapi
from lapis.parser import parse_document
from lapis.tokenmeter import divergence_pct, estimate_cost, reduction_pct

from conftest import FIXTURES, LARGE, fixture_bytes
from docgen import random_document

RESULTS: list[str] = []

# tolerances and bounds
PETSTORE_MIN_REDUCTION = 75.0
HTTPBIN_MIN_REDUCTION = 64.0
GITHUB_MIN_REDUCTION = 75.0
GITHUB_MAX_ERROR_ENTRIES = 20
MAX_DIVERGENCE = 5.0
STATS_SECONDS = 1.0
REDUCTION_SECONDS = 10.0
GITHUB_SECONDS = 60.0
ROUND_TRIP_DOCS = 1000
ROUND_TRIP_SECONDS = 30.0


@contextmanager
def criterion(number: int, title: str):
    details: list[str] = []
    try:
        yield details
    except pytest.skip.Exception as e:
        RESULTS.append(f"SKIP criterion {number}: {title} ({e.msg})")
        raise
    except BaseException as e:
        RESULTS.append(f"FAIL criterion {number}: {title}; {'; '.join(details) or type(e).__name__}: {e}")
        raise
    RESULTS.append(f"PASS criterion {number}: {title}; {'; '.join(details)}")


def _reduction(data: bytes, tok) -> tuple[float, int, int]:
    doc = load_openapi(data)
    lapis = emit_document(convert(doc)[0])
    yaml_tokens = tok.count(source_formats(data)["yaml"])
    lapis_tokens = tok.count(lapis)
    return reduction_pct(lapis_tokens, yaml_tokens), yaml_tokens, lapis_tokens


def test_c1_analyzer_exactness():
    with criterion(1, "Petstore stats 19 / 26 / 3 / 400x15") as d:
        start = time.perf_counter()
        report = error_duplication_report(load_openapi(fixture_bytes("openapi/petstore3.yaml")))
        elapsed = time.perf_counter() - start
        got = (report.op_count, report.error_def_count, report.unique_codes, report.most_repeated)
        d.append(f"got {got} in {elapsed:.3f}s; default responses excluded")
        assert got == (19, 26, 3, (400, 15))
        assert elapsed < STATS_SECONDS


@pytest.mark.parametrize(
    "name,path,bound", [("Petstore", "openapi/petstore3.yaml", PETSTORE_MIN_REDUCTION), ("HTTPBin", "openapi/httpbin.json", HTTPBIN_MIN_REDUCTION)]
)
def test_c2_token_reduction(cl100k, name, path, bound):
    with criterion(2, f"{name} cl100k reduction vs YAML >= {bound}%") as d:
        start = time.perf_counter()
        pct, yaml_tokens, lapis_tokens = _reduction(fixture_bytes(path), cl100k)
        elapsed = time.perf_counter() - start
        d.append(f"{yaml_tokens} -> {lapis_tokens} tokens = {pct}% in {elapsed:.2f}s")
        assert pct >= bound
        assert elapsed < REDUCTION_SECONDS


def test_c3_large_spec_scaling(cl100k):
    path = LARGE / "github.json"
    with criterion(3, "GitHub converts < 60 s, reduction >= 75%, <= 20 error entries") as d:
        if not path.is_file():
            pytest.skip("optional GitHub fixture not fetched")
        start = time.perf_counter()
        data = path.read_bytes()
        doc, _ = convert(load_openapi(data))
        text = emit_document(doc)
        elapsed = time.perf_counter() - start
        yaml_tokens = cl100k.count(source_formats(data)["yaml"])
        pct = reduction_pct(cl100k.count(text), yaml_tokens)
        entries = len(doc.errors.entries) if doc.errors else 0
        d.append(f"convert {elapsed:.1f}s; reduction {pct}%; {entries} error entries")
        assert elapsed < GITHUB_SECONDS
        assert pct >= GITHUB_MIN_REDUCTION
        assert entries <= GITHUB_MAX_ERROR_ENTRIES


def _corpus():
    specs = [("petstore3", FIXTURES / "openapi/petstore3.yaml"), ("httpbin", FIXTURES / "openapi/httpbin.json")]
    specs += [(p.stem, p) for p in sorted(LARGE.glob("*.json"))]
    return specs


def test_c4_tokenizer_consistency(cl100k, o200k):
    with criterion(4, f"|cl100k vs o200k| <= {MAX_DIVERGENCE}% on every converted spec") as d:
        worst = 0.0
        for name, path in _corpus():
            text = emit_document(convert(load_openapi(path.read_bytes()))[0])
            div = divergence_pct(cl100k.count(text), o200k.count(text))
            d.append(f"{name} {div:+.1f}%")
            worst = max(worst, abs(div))
        assert worst <= MAX_DIVERGENCE


def test_c5_bpe_oracle(cl100k, o200k):
    with criterion(5, "BPE rank sequences equal the reference oracle") as d:
        records = json.loads((FIXTURES / "bpe_oracle.json").read_text(encoding="utf-8"))
        toks = {"cl100k_base": cl100k, "o200k_base": o200k}
        bad = [r["text"][:30] for r in records if toks[r["vocab"]].encode(r["text"]) != r["ranks"]]
        d.append(f"{len(records) - len(bad)}/{len(records)} exact")
        assert len(records) >= 50
        assert bad == []


def test_c6_cost_arithmetic():
    with criterion(6, "cost at $3.00/M: 313,101 -> $0.94, 1,811,843 -> $5.44") as d:
        a = estimate_cost(313101, Decimal("3.00")).per_call
        b = estimate_cost(1811843, Decimal("3.00")).per_call
        d.append(f"${a}, ${b}")
        assert (a, b) == (Decimal("0.94"), Decimal("5.44"))


def test_c7_round_trip_suite():
    with criterion(7, f"{ROUND_TRIP_DOCS} generated documents round-trip and re-emit identically") as d:
        start = time.perf_counter()
        failures = []
        for seed in range(ROUND_TRIP_DOCS):
            doc = random_document(seed)
            text = emit_document(doc)
            again = parse_document(text)
            if again != doc or emit_document(again) != text:
                failures.append(seed)
        elapsed = time.perf_counter() - start
        d.append(f"{len(failures)} failures in {elapsed:.1f}s")
        assert failures == []
        assert elapsed < ROUND_TRIP_SECONDS


def test_c8_errors_section_fidelity(invoice_text):
    with criterion(8, "invoice document validates and re-emits the expected [errors] section byte for byte") as d:
        doc = parse_document(invoice_text)
        errors = errors_only(validate(doc))
        expected = (FIXTURES / "lapis" / "invoice_errors.lapis").read_text(encoding="utf-8")
        section = emit_section(doc, "errors")
        d.append(f"{len(errors)} validation errors; [errors] {'identical' if section == expected else 'differs'}")
        assert errors == []
        assert section == expected
        assert emit_section(parse_document(emit_document(doc)), "errors") == expected
