"""LAPIS: a compact, line-oriented description format for HTTP APIs.

The package reads and writes LAPIS text, converts OpenAPI 3.x documents into
it, and measures the size difference in characters, lines and BPE tokens.
"""

from __future__ import annotations

from .analyzer import DuplicationReport, WasteBreakdown, error_duplication_report, waste_decomposition
from .converter import ConvertOptions, ConvertReport, convert, merge_fragment
from .emitter import EmitError, EmitStyle, emit_document
from .model import Diagnostic, LapisDocument, validate
from .openapi import OpenApiDoc, OpenApiError, load_openapi
from .parser import LapisSyntaxError, parse_document
from .tokenmeter import estimate_cost, get_tokenizer, load_bpe_vocab, measure

__all__ = [
    "ConvertOptions",
    "ConvertReport",
    "Diagnostic",
    "DuplicationReport",
    "EmitError",
    "EmitStyle",
    "LapisDocument",
    "LapisSyntaxError",
    "OpenApiDoc",
    "OpenApiError",
    "WasteBreakdown",
    "convert",
    "emit_document",
    "error_duplication_report",
    "estimate_cost",
    "get_tokenizer",
    "load_bpe_vocab",
    "load_openapi",
    "measure",
    "merge_fragment",
    "parse_document",
    "validate",
    "waste_decomposition",
]
