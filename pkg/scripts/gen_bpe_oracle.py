#!/usr/bin/env python3
"""Freeze reference token-rank sequences for the BPE equivalence tests.

Runs the reference ``tiktoken`` implementation (a dev-only dependency, never
imported by the package) over a fixed corpus of 50 snippets and writes
``tests/fixtures/bpe_oracle.json``. Regenerate only when the corpus changes::

    pip install tiktoken
    LAPIS_VOCAB_DIR=.fixtures/vocab python scripts/gen_bpe_oracle.py
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import tiktoken
from tiktoken.load import load_tiktoken_bpe
from tiktoken_ext import openai_public

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"

EDGE_CASES = [
    "",
    "hello world",
    "Hello, World! It's 2026 and we'd've thought they'll be here.",
    "  leading and trailing spaces   ",
    "tabs\tand\nnewlines\r\nCRLF\r\n\r\n",
    "numbers 1234567890 3.14159 -42 1e-9 0x1F",
    "unicode: café naïve façade — “quotes” … ünïcödé",
    "CJK: 日本語のテキスト 中文文本 한국어",
    "emoji: 🚀🔥👍🏽 👨‍👩‍👧‍👦 flags 🇪🇸",
    "<|endoftext|> is plain text here <|fim_prefix|>",
    "     \n\n\n      \t\t  ",
    "aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa",
    "SGVsbG8gV29ybGQhIFRoaXMgaXMgYmFzZTY0IGVuY29kZWQgdGV4dA==",
    "snake_case_identifier camelCaseIdentifier UPPER_CASE kebab-case-id",
    "{str:any} [[int]] {str:[Pet]} @since:2.1 @deprecated \"old\"",
    "GET /users/{id}/repos?per_page=100&page=2#fragment",
    "I'M SHOUTING, DON'T YOU'LL SEE IT'S LOUD",
    "Ωmega ΣΙΓΜΑ δέλτα Привет мир",
]


def _corpus() -> list[str]:
    texts = list(EDGE_CASES)
    sources = [
        FIXTURES / "lapis" / "invoice.lapis",
        FIXTURES / "openapi" / "petstore3.yaml",
        FIXTURES / "openapi" / "httpbin.json",
    ]
    blobs = [p.read_text(encoding="utf-8") for p in sources]
    # fixed windows so regenerating is deterministic
    for i in range(32):
        blob = blobs[i % len(blobs)]
        start = (i * 977) % max(1, len(blob) - 600)
        texts.append(blob[start:start + 120 + (i * 37) % 480])
    assert len(texts) == 50
    return texts


def _encoding(name: str) -> tiktoken.Encoding:
    vocab_dir = Path(os.environ.get("LAPIS_VOCAB_DIR", ROOT / ".fixtures" / "vocab"))
    local = vocab_dir / f"{name}.tiktoken"
    # the reference constructors fetch by URL; point them at the local copy instead
    original = openai_public.load_tiktoken_bpe
    openai_public.load_tiktoken_bpe = lambda url, expected_hash=None: load_tiktoken_bpe(
        str(local), expected_hash=expected_hash
    )
    try:
        spec = getattr(openai_public, name)()
    finally:
        openai_public.load_tiktoken_bpe = original
    return tiktoken.Encoding(
        name=name, pat_str=spec["pat_str"], mergeable_ranks=spec["mergeable_ranks"], special_tokens={}
    )


def main() -> None:
    records = []
    for name in ("cl100k_base", "o200k_base"):
        enc = _encoding(name)
        for text in _corpus():
            records.append({"vocab": name, "text": text, "ranks": enc.encode_ordinary(text)})
    out = FIXTURES / "bpe_oracle.json"
    out.write_text(json.dumps(records, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {len(records)} records to {out}")


if __name__ == "__main__":
    main()
