"""``lapis`` command line: convert, validate, fmt, stats, bench.

Exit codes: 0 success, 1 parse/validation/load errors, 2 usage, 3 I/O.
Artifacts go to stdout (or ``-o``); diagnostics go to stderr. ``-`` names
stdin or stdout wherever a file is expected.
"""

from __future__ import annotations

import argparse
import json
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Sequence

from .analyzer import TABLE_HEADER, YAML_STYLE, error_duplication_report, source_formats
from .converter import ConvertOptions, convert, merge_fragment
from .emitter import EmitError, EmitStyle, emit_document
from .model import Diagnostic, validate
from .openapi import OpenApiError, load_openapi
from .parser import LapisSyntaxError, parse_document
from .tokenmeter import (
    VocabError,
    divergence_pct,
    estimate_cost,
    get_tokenizer,
    load_bpe_vocab,
    measure,
)

OK, INVALID, USAGE, IO_ERROR = 0, 1, 2, 3


class _IOFailure(Exception):
    pass


def _read(path: str) -> bytes:
    try:
        if path == "-":
            return sys.stdin.buffer.read()
        return Path(path).read_bytes()
    except OSError as e:
        raise _IOFailure(f"cannot read {path}: {e.strerror or e}") from None


def _read_text(path: str) -> str:
    data = _read(path)
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise _IOFailure(f"{path} is not valid UTF-8: {e}") from None


def _write(path: str | None, text: str) -> None:
    try:
        if path is None or path == "-":
            sys.stdout.write(text)
            sys.stdout.flush()
        else:
            Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise _IOFailure(f"cannot write {path}: {e.strerror or e}") from None


def _report(name: str, diags: Sequence[Diagnostic]) -> None:
    for d in diags:
        where = f"{name}:{d.span.line}:{d.span.column}" if d.span else name
        ctx = f" [{d.path}]" if d.path else ""
        print(f"{where}: {d.severity} {d.code}: {d.message}{ctx}", file=sys.stderr)


def _display(path: str) -> str:
    return "<stdin>" if path == "-" else path


# -- subcommands ---------------------------------------------------------------


def cmd_convert(args: argparse.Namespace) -> int:
    data = _read(args.input)
    try:
        doc = load_openapi(data)
    except OpenApiError as e:
        print(f"{_display(args.input)}: error: {e}", file=sys.stderr)
        return INVALID
    opts = ConvertOptions(
        inline_threshold=args.inline_threshold,
        max_union_variants=args.max_union_variants,
        keep_descriptions=not args.no_descriptions,
        error_label_source="description_slug" if args.error_labels == "slug" else "reason_phrase",
    )
    lapis, report = convert(doc, opts)
    if args.merge:
        fragment_text = _read_text(args.merge)
        try:
            lapis = merge_fragment(lapis, parse_document(fragment_text, fragment=True))
        except LapisSyntaxError as e:
            _report(_display(args.merge), e.diagnostics)
            return INVALID
    if args.verbose:
        for w in report.warnings:
            print(f"warning: {w}", file=sys.stderr)
    try:
        text = emit_document(lapis)
    except EmitError as e:
        _report(_display(args.input), e.diagnostics)
        return INVALID
    _write(args.output, text)
    return OK


def _load_lapis(path: str) -> tuple[object | None, list[Diagnostic]]:
    text = _read_text(path)
    diags: list = []
    try:
        doc = parse_document(text, diagnostics=diags)
    except LapisSyntaxError:
        return None, diags
    return doc, diags + validate(doc)


def cmd_validate(args: argparse.Namespace) -> int:
    doc, diags = _load_lapis(args.input)
    shown = diags if not args.quiet else [d for d in diags if d.is_error]
    _report(_display(args.input), shown)
    return INVALID if doc is None or any(d.is_error for d in diags) else OK


def cmd_fmt(args: argparse.Namespace) -> int:
    doc, diags = _load_lapis(args.input)
    errors = [d for d in diags if d.is_error]
    if doc is None or errors:
        _report(_display(args.input), errors)
        return INVALID
    style = EmitStyle(args.indent, args.max_line or None, not args.compact)
    _write(args.output, emit_document(doc, style))  # type: ignore[arg-type]
    return OK


def cmd_stats(args: argparse.Namespace) -> int:
    data = _read(args.input)
    try:
        doc = load_openapi(data)
    except OpenApiError as e:
        print(f"{_display(args.input)}: error: {e}", file=sys.stderr)
        return INVALID
    report = error_duplication_report(doc)
    name = args.name or (Path(args.input).stem if args.input != "-" else "stdin")
    if args.format == "json":
        payload = {
            "api": name,
            "op_count": report.op_count,
            "error_def_count": report.error_def_count,
            "unique_codes": report.unique_codes,
            "per_code_counts": {str(k): v for k, v in report.per_code_counts.items()},
            "most_repeated": list(report.most_repeated) if report.most_repeated else None,
        }
        _write(args.output, json.dumps(payload, indent=2) + "\n")
    else:
        _write(args.output, f"{TABLE_HEADER}\n{report.row(name)}\n")
    return OK


def _tokenizers(args: argparse.Namespace) -> list:
    toks = []
    for path in args.vocab or []:
        toks.append(load_bpe_vocab(path))
    for name in args.tokenizer or []:
        toks.append(get_tokenizer(name, args.vocab_dir))
    if not toks:
        toks = [get_tokenizer(n, args.vocab_dir) for n in ("cl100k_base", "o200k_base")]
    return toks


def cmd_bench(args: argparse.Namespace) -> int:
    data = _read(args.input)
    try:
        doc = load_openapi(data)
        formats = source_formats(data)
    except OpenApiError as e:
        print(f"{_display(args.input)}: error: {e}", file=sys.stderr)
        return INVALID
    try:
        toks = _tokenizers(args)
    except FileNotFoundError as e:
        raise _IOFailure(f"{e} (or pass --tokenizer approx)") from None
    except VocabError as e:
        print(f"error: {e}", file=sys.stderr)
        return INVALID
    lapis, _ = convert(doc)
    formats["lapis"] = emit_document(lapis)
    report = measure(formats, toks, "yaml", (f"yaml style: {YAML_STYLE}",))
    names = [t.name for t in toks]
    price = None
    if args.price_per_m is not None:
        try:
            price = Decimal(args.price_per_m)
        except InvalidOperation:
            print(f"error: invalid price {args.price_per_m!r}", file=sys.stderr)
            return USAGE
    if args.format == "json":
        payload: dict = {
            "baseline": report.baseline,
            "notes": list(report.notes),
            "formats": {
                fmt: {"chars": s.chars, "lines": s.lines, "tokens": s.tokens,
                      "reduction_pct": report.reduction_pct[fmt], "ratio": report.ratio[fmt]}
                for fmt, s in report.formats.items()
            },
        }
        if len(names) >= 2:
            lt = report.formats["lapis"].tokens
            payload["divergence_pct"] = divergence_pct(lt[names[0]], lt[names[1]]) if lt[names[0]] else None
        if price is not None:
            payload["cost"] = {
                fmt: {"per_call": str(c.per_call), "total": str(c.total), "calls": c.calls}
                for fmt in ("yaml", "lapis")
                for c in [estimate_cost(report.formats[fmt].tokens[names[0]], price, args.calls)]
            }
        _write(args.output, json.dumps(payload, indent=2) + "\n")
        return OK

    lines = [f"# {note}" for note in report.notes]
    header = f"{'format':<10} {'chars':>12} {'lines':>9}" + "".join(f" {n:>12}" for n in names)
    header += f" {'reduction':>10} {'ratio':>6}"
    lines.append(header)
    for fmt, size in report.formats.items():
        row = f"{fmt:<10} {size.chars:>12,} {size.lines:>9,}" + "".join(f" {size.tokens[n]:>12,}" for n in names)
        red = report.reduction_pct[fmt].get(names[0])
        rat = report.ratio[fmt].get(names[0])
        row += f" {red:>9.1f}%" if red is not None else f" {'-':>10}"
        row += f" {rat:>5.2f}x" if rat is not None else f" {'-':>6}"
        lines.append(row)
    if len(names) >= 2:
        lt = report.formats["lapis"].tokens
        if lt[names[0]]:
            lines.append(
                f"lapis tokens {names[0]} {lt[names[0]]:,} vs {names[1]} {lt[names[1]]:,}: "
                f"{divergence_pct(lt[names[0]], lt[names[1]]):+.1f}%"
            )
    if price is not None:
        for fmt in ("yaml", "lapis"):
            cost = estimate_cost(report.formats[fmt].tokens[names[0]], price, args.calls)
            lines.append(f"cost {fmt:<6} ${cost.per_call}/call  ${cost.total:,} per {args.calls:,} calls")
    _write(args.output, "\n".join(lines) + "\n")
    return OK


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lapis", description="Token-minimal API descriptions from OpenAPI.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    c = sub.add_parser("convert", help="convert an OpenAPI 3.x document to LAPIS")
    c.add_argument("input", help="OpenAPI JSON or YAML file, or - for stdin")
    c.add_argument("-o", "--output", help="output file (default: stdout)")
    c.add_argument("--merge", metavar="FRAGMENT", help="LAPIS fragment with [limits]/[flows] to merge in")
    c.add_argument("--inline-threshold", type=int, default=1, metavar="N",
                   help="inline schemas referenced at most N times (default: 1)")
    c.add_argument("--max-union-variants", type=int, default=4, metavar="N",
                   help="unions with more variants become any (default: 4)")
    c.add_argument("--error-labels", choices=("reason", "slug"), default="reason",
                   help="label errors by HTTP reason phrase or by description")
    c.add_argument("--no-descriptions", action="store_true", help="drop operation and error descriptions")
    c.add_argument("-v", "--verbose", action="store_true", help="print conversion warnings to stderr")
    c.set_defaults(func=cmd_convert)

    v = sub.add_parser("validate", help="check a LAPIS document")
    v.add_argument("input", help="LAPIS file, or - for stdin")
    v.add_argument("-q", "--quiet", action="store_true", help="show errors only")
    v.set_defaults(func=cmd_validate)

    f = sub.add_parser("fmt", help="rewrite a LAPIS document in canonical form")
    f.add_argument("input", help="LAPIS file, or - for stdin")
    f.add_argument("-o", "--output", help="output file (default: stdout)")
    f.add_argument("--indent", type=int, default=2, help="spaces per indent level (default: 2)")
    f.add_argument("--max-line", type=int, default=100, help="wrap flows past this width; 0 disables")
    f.add_argument("--compact", action="store_true", help="no blank line between operations")
    f.set_defaults(func=cmd_fmt)

    s = sub.add_parser("stats", help="error duplication statistics of an OpenAPI document")
    s.add_argument("input", help="OpenAPI JSON or YAML file, or - for stdin")
    s.add_argument("--name", help="API name shown in the table (default: file stem)")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.add_argument("-o", "--output", help="output file (default: stdout)")
    s.set_defaults(func=cmd_stats)

    b = sub.add_parser("bench", help="size, token and cost comparison against LAPIS")
    b.add_argument("input", help="OpenAPI JSON or YAML file, or - for stdin")
    b.add_argument("--tokenizer", action="append", metavar="NAME",
                   help="cl100k_base, o200k_base or approx; repeatable")
    b.add_argument("--vocab", action="append", metavar="PATH", help="vocabulary rank file; repeatable")
    b.add_argument("--vocab-dir", metavar="DIR", help="vocabulary directory (default: $LAPIS_VOCAB_DIR)")
    b.add_argument("--price-per-m", metavar="USD", help="input price per million tokens")
    b.add_argument("--calls", type=int, default=1000, help="calls for the total cost (default: 1000)")
    b.add_argument("--format", choices=("text", "json"), default="text")
    b.add_argument("-o", "--output", help="output file (default: stdout)")
    b.set_defaults(func=cmd_bench)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code not in (0, None) else OK
    if getattr(args, "indent", 1) < 1 or getattr(args, "inline_threshold", 0) < 0:
        print("error: --indent must be >= 1 and --inline-threshold >= 0", file=sys.stderr)
        return USAGE
    if getattr(args, "max_union_variants", 1) < 1 or getattr(args, "calls", 0) < 0:
        print("error: --max-union-variants must be >= 1 and --calls >= 0", file=sys.stderr)
        return USAGE
    try:
        return args.func(args)
    except _IOFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return IO_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
