"""Structural waste in OpenAPI inputs: error duplication and savings breakdown."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

import yaml

from .emitter import emit_document, emit_section
from .model import LapisDocument
from .openapi import OpenApiDoc, decode

_Dumper = getattr(yaml, "CSafeDumper", yaml.SafeDumper)

# the fixed YAML style used whenever a JSON source has to be measured as YAML
YAML_STYLE = "PyYAML safe_dump, block style, source key order, allow_unicode, width 80"


def to_yaml(tree: object) -> str:
    return yaml.dump(tree, Dumper=_Dumper, sort_keys=False, allow_unicode=True)


def source_formats(data: bytes | str) -> dict[str, str]:
    """The source spec rendered in the formats that get compared with LAPIS.

    ``yaml`` is the original text for YAML sources and a fixed-style dump for
    JSON sources. ``json`` is indented by 2; ``json-min`` has no whitespace.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    tree = decode(text)
    is_json = text.lstrip("﻿").lstrip()[:1] == "{"
    return {
        "yaml": to_yaml(tree) if is_json else text,
        "json": json.dumps(tree, indent=2, ensure_ascii=False) + "\n",
        "json-min": json.dumps(tree, separators=(",", ":"), ensure_ascii=False),
    }


@dataclass(frozen=True)
class DuplicationReport:
    op_count: int
    error_def_count: int
    unique_codes: int
    per_code_counts: dict[int, int]
    most_repeated: tuple[int, int] | None

    def row(self, api: str) -> str:
        most = f"{self.most_repeated[0]} ({self.most_repeated[1]:,}×)" if self.most_repeated else "-"
        return f"{api:<12} {self.op_count:>6,} {self.error_def_count:>11,} {self.unique_codes:>13} {most}"


TABLE_HEADER = f"{'API':<12} {'Ops':>6} {'Error defs':>11} {'Unique codes':>13} Most repeated"


def error_duplication_report(doc: OpenApiDoc) -> DuplicationReport:
    """Count every concrete 4xx/5xx response of every operation, before dedup.

    ``default`` and range keys such as ``4XX`` are not counted.
    """
    counts: Counter[int] = Counter()
    for op in doc.operations:
        counts.update(op.error_codes())
    per_code = dict(sorted(counts.items()))
    most = None
    if per_code:
        top = max(per_code.values())
        most = (min(c for c, n in per_code.items() if n == top), top)
    return DuplicationReport(len(doc.operations), sum(per_code.values()), len(per_code), per_code, most)


# -- savings decomposition -----------------------------------------------------

BUCKETS = ("metadata", "signature", "types", "errors")


@dataclass(frozen=True)
class WasteBreakdown:
    """Characters saved per source of waste, measured on the YAML rendering."""

    source_chars: int
    lapis_chars: int
    buckets: dict[str, int]
    residual: int

    @property
    def total_savings(self) -> int:
        return self.source_chars - self.lapis_chars

    def share(self, bucket: str) -> float:
        total = self.total_savings
        return 100.0 * self.buckets[bucket] / total if total else 0.0

    def largest(self) -> str:
        return max(BUCKETS, key=lambda b: self.buckets[b])


def _without_error_responses(tree: dict) -> dict:
    paths = tree.get("paths")
    if not isinstance(paths, dict):
        return tree
    new_paths = {}
    for route, item in paths.items():
        if not isinstance(item, dict):
            new_paths[route] = item
            continue
        new_item = {}
        for key, op in item.items():
            if isinstance(op, dict) and isinstance(op.get("responses"), dict):
                kept = {s: r for s, r in op["responses"].items() if not (str(s).isdigit() and int(s) >= 400)}
                op = {**op, "responses": kept}
            new_item[key] = op
        new_paths[route] = new_item
    return {**tree, "paths": new_paths}


def _without_schemas(tree: dict) -> dict:
    comps = tree.get("components")
    if not isinstance(comps, dict) or "schemas" not in comps:
        return tree
    return {**tree, "components": {k: v for k, v in comps.items() if k != "schemas"}}


def waste_decomposition(doc: OpenApiDoc, converted: LapisDocument) -> WasteBreakdown:
    """Attribute the character savings of a conversion to four buckets.

    The source is re-measured after each class of waste is replaced by its
    LAPIS counterpart, in a fixed order:

    * ``metadata``: documentation-only fields dropped;
    * ``errors``: per-operation error responses replaced by the ``[errors]`` section;
    * ``types``: component schemas replaced by the ``[types]`` section;
    * ``signature``: the remaining nested operation structure replaced by
      the ``[meta]``, ``[ops]`` and ``[webhooks]`` text.

    The steps telescope, so the buckets add up to the total savings exactly
    and the residual is zero unless a step is undefined for the input.
    """
    version = {"openapi": doc.raw["openapi"]} if "openapi" in doc.raw else {}
    m0 = len(to_yaml(doc.raw))
    pruned = {**version, **doc.pruned}
    m1 = len(to_yaml(pruned))
    errors_text = emit_section(converted, "errors")
    types_text = emit_section(converted, "types")
    step2 = _without_error_responses(pruned)
    m2 = len(to_yaml(step2)) + len(errors_text)
    step3 = _without_schemas(step2)
    m3 = len(to_yaml(step3)) + len(errors_text) + len(types_text)
    final = len(emit_document(converted))
    buckets = {"metadata": m0 - m1, "errors": m1 - m2, "types": m2 - m3, "signature": m3 - final}
    residual = (m0 - final) - sum(buckets.values())
    return WasteBreakdown(m0, final, {b: buckets[b] for b in BUCKETS}, residual)
