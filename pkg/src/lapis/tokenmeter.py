"""Token, character and line measurement plus cost arithmetic.

:class:`BpeTokenizer` is a byte-level BPE encoder over a rank vocabulary file
(one ``base64(bytes) rank`` pair per line). Text is first split with the
vocabulary's pre-tokenization pattern; each piece is then merged greedily,
always joining the adjacent pair with the lowest rank. Special tokens are
never recognized: every input is plain text.
"""

from __future__ import annotations

import base64
import math
import os
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Protocol

import regex

CL100K_PATTERN = (
    r"""'(?i:[sdmt]|ll|ve|re)|[^\r\n\p{L}\p{N}]?+\p{L}++|\p{N}{1,3}+| ?[^\s\p{L}\p{N}]++[\r\n]*+|\s++$|\s*[\r\n]|\s+(?!\S)|\s"""
)
O200K_PATTERN = "|".join(
    [
        r"""[^\r\n\p{L}\p{N}]?[\p{Lu}\p{Lt}\p{Lm}\p{Lo}\p{M}]*[\p{Ll}\p{Lm}\p{Lo}\p{M}]+(?i:'s|'t|'re|'ve|'m|'ll|'d)?""",
        r"""[^\r\n\p{L}\p{N}]?[\p{Lu}\p{Lt}\p{Lm}\p{Lo}\p{M}]+[\p{Ll}\p{Lm}\p{Lo}\p{M}]*(?i:'s|'t|'re|'ve|'m|'ll|'d)?""",
        r"""\p{N}{1,3}""",
        r""" ?[^\s\p{L}\p{N}]+[\r\n/]*""",
        r"""\s*[\r\n]+""",
        r"""\s+(?!\S)""",
        r"""\s+""",
    ]
)
PATTERNS = {"cl100k_base": CL100K_PATTERN, "o200k_base": O200K_PATTERN}
VOCAB_FILES = {"cl100k_base": "cl100k_base.tiktoken", "o200k_base": "o200k_base.tiktoken"}
# SHA-256 of the published vocabulary files
VOCAB_SHA256 = {
    "cl100k_base": "223921b76ee99bde995b7ff738513eef100fb51d18c93597a113bcffe865b2a7",
    "o200k_base": "446a9538cb6c348e3516120d7c08b09f57c36495e2acfffe59a5bf8b0cfb1a2d",
}


class VocabError(ValueError):
    """A vocabulary file is malformed or incomplete."""


class Tokenizer(Protocol):
    name: str

    def encode(self, text: str) -> list[int]: ...

    def count(self, text: str) -> int: ...


class BpeTokenizer:
    """Greedy rank-merge byte-pair encoder."""

    def __init__(self, name: str, ranks: dict[bytes, int], pattern: str) -> None:
        self.name = name
        self.ranks = ranks
        self.pattern = pattern
        self._split = regex.compile(pattern)
        self._cache: dict[str, tuple[int, ...]] = {}
        self._decoder: dict[int, bytes] | None = None

    def _merge(self, piece: bytes) -> tuple[int, ...]:
        ranks = self.ranks
        direct = ranks.get(piece)
        if direct is not None:
            return (direct,)
        parts = [piece[i:i + 1] for i in range(len(piece))]
        while len(parts) > 1:
            best_rank = None
            best_i = -1
            for i in range(len(parts) - 1):
                r = ranks.get(parts[i] + parts[i + 1])
                if r is not None and (best_rank is None or r < best_rank):
                    best_rank, best_i = r, i
            if best_rank is None:
                break
            parts[best_i:best_i + 2] = [parts[best_i] + parts[best_i + 1]]
        return tuple(ranks[p] for p in parts)

    def encode(self, text: str) -> list[int]:
        out: list[int] = []
        cache = self._cache
        for piece in self._split.findall(text):
            ids = cache.get(piece)
            if ids is None:
                ids = self._merge(piece.encode("utf-8"))
                if len(cache) < 500_000:
                    cache[piece] = ids
            out.extend(ids)
        return out

    def count(self, text: str) -> int:
        total = 0
        cache = self._cache
        for piece in self._split.findall(text):
            ids = cache.get(piece)
            if ids is None:
                ids = self._merge(piece.encode("utf-8"))
                if len(cache) < 500_000:
                    cache[piece] = ids
            total += len(ids)
        return total

    def decode(self, ids: Iterable[int]) -> str:
        if self._decoder is None:
            self._decoder = {r: b for b, r in self.ranks.items()}
        return b"".join(self._decoder[i] for i in ids).decode("utf-8", errors="replace")


class ApproxTokenizer:
    """Characters / 4, rounded up. Offline estimate only; it reproduces no vocabulary."""

    name = "approx"

    def count(self, text: str) -> int:
        return math.ceil(len(text) / 4)

    def encode(self, text: str) -> list[int]:
        return [0] * self.count(text)


def read_vocab(path: str | os.PathLike) -> dict[bytes, int]:
    """Read and check a rank file: dense ranks from 0, all 256 single bytes."""
    ranks: dict[bytes, int] = {}
    seen_ranks: set[int] = set()
    with open(path, "rb") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 2:
                raise VocabError(f"{path}:{lineno}: expected 'base64 rank'")
            try:
                token = base64.b64decode(parts[0], validate=True)
                rank = int(parts[1])
            except ValueError as e:
                raise VocabError(f"{path}:{lineno}: {e}") from None
            if rank in seen_ranks:
                raise VocabError(f"{path}:{lineno}: duplicate rank {rank}")
            if token in ranks:
                raise VocabError(f"{path}:{lineno}: duplicate token {token!r}")
            seen_ranks.add(rank)
            ranks[token] = rank
    if seen_ranks != set(range(len(seen_ranks))):
        raise VocabError(f"{path}: ranks are not dense from 0")
    missing = [b for b in range(256) if bytes([b]) not in ranks]
    if missing:
        raise VocabError(f"{path}: {len(missing)} single-byte tokens missing (first: {missing[0]})")
    return ranks


def vocab_name(path: str | os.PathLike) -> str:
    stem = Path(path).name
    for name in PATTERNS:
        if stem.startswith(name) or name.split("_")[0] in stem:
            return name
    raise VocabError(f"cannot tell the split pattern for {stem!r}; name the file after its vocabulary")


def load_bpe_vocab(path: str | os.PathLike, name: str | None = None) -> BpeTokenizer:
    """Load a rank file. The split pattern is chosen from the vocabulary name."""
    name = name or vocab_name(path)
    if name not in PATTERNS:
        raise VocabError(f"unknown vocabulary {name!r}")
    return BpeTokenizer(name, read_vocab(path), PATTERNS[name])


def vocab_dir() -> Path:
    return Path(os.environ.get("LAPIS_VOCAB_DIR", ".fixtures/vocab"))


def find_vocab(name: str, directory: str | os.PathLike | None = None) -> Path:
    path = Path(directory) if directory is not None else vocab_dir()
    candidate = path / VOCAB_FILES.get(name, name)
    if not candidate.is_file():
        raise FileNotFoundError(f"vocabulary {name!r} not found at {candidate}; set LAPIS_VOCAB_DIR")
    return candidate


_LOADED: dict[tuple[str, str], BpeTokenizer] = {}


def get_tokenizer(name: str, directory: str | os.PathLike | None = None) -> Tokenizer:
    """``approx`` or a named vocabulary found in ``directory`` / ``LAPIS_VOCAB_DIR``."""
    if name == "approx":
        return ApproxTokenizer()
    path = find_vocab(name, directory)
    key = (name, str(path.resolve()))
    if key not in _LOADED:
        _LOADED[key] = load_bpe_vocab(path, name)
    return _LOADED[key]


# -- reporting -----------------------------------------------------------------


def round_half_up(value: Decimal, places: str) -> Decimal:
    return value.quantize(Decimal(places), rounding=ROUND_HALF_UP)


def reduction_pct(lapis: int, baseline: int) -> float:
    """``100 * (1 - lapis / baseline)`` to one decimal, rounding halves up."""
    if baseline <= 0:
        raise ValueError("baseline must be positive")
    exact = Decimal(100) * (Decimal(1) - Decimal(lapis) / Decimal(baseline))
    return float(round_half_up(exact, "0.1"))


def ratio(lapis: int, baseline: int) -> float:
    if baseline <= 0:
        raise ValueError("baseline must be positive")
    return float(round_half_up(Decimal(lapis) / Decimal(baseline), "0.01"))


def line_count(text: str) -> int:
    return len(text.splitlines())


@dataclass(frozen=True)
class FormatSize:
    chars: int
    lines: int
    tokens: dict[str, int]


@dataclass(frozen=True)
class SizeReport:
    formats: dict[str, FormatSize]
    baseline: str
    tokenizers: tuple[str, ...]
    notes: tuple[str, ...] = ()
    reduction_pct: dict[str, dict[str, float]] = field(default_factory=dict)
    ratio: dict[str, dict[str, float]] = field(default_factory=dict)


def measure(
    inputs: dict[str, str], tokenizers: list[Tokenizer], baseline: str, notes: tuple[str, ...] = ()
) -> SizeReport:
    """Count chars, lines and tokens per format; compare each to ``baseline``."""
    if baseline not in inputs:
        raise ValueError(f"baseline format {baseline!r} not among inputs")
    formats = {
        fmt: FormatSize(len(text), line_count(text), {t.name: t.count(text) for t in tokenizers})
        for fmt, text in inputs.items()
    }
    base = formats[baseline]
    reductions: dict[str, dict[str, float]] = {}
    ratios: dict[str, dict[str, float]] = {}
    for fmt, size in formats.items():
        reductions[fmt] = {}
        ratios[fmt] = {}
        for t in tokenizers:
            b = base.tokens[t.name]
            if b > 0:
                reductions[fmt][t.name] = reduction_pct(size.tokens[t.name], b)
                ratios[fmt][t.name] = ratio(size.tokens[t.name], b)
    return SizeReport(formats, baseline, tuple(t.name for t in tokenizers), notes, reductions, ratios)


def tokenizer_divergence(text: str, t1: Tokenizer, t2: Tokenizer) -> float:
    """Signed ``100 * (count2 - count1) / count1``, one decimal."""
    c1 = t1.count(text)
    if c1 == 0:
        raise ValueError("first tokenizer produced no tokens")
    return divergence_pct(c1, t2.count(text))


def divergence_pct(c1: int, c2: int) -> float:
    if c1 == 0:
        raise ValueError("first count is zero")
    return float(round_half_up(Decimal(100) * (Decimal(c2) - Decimal(c1)) / Decimal(c1), "0.1"))


@dataclass(frozen=True)
class CostEstimate:
    per_call: Decimal
    total: Decimal
    calls: int


def estimate_cost(tokens: int, price_per_million: Decimal | str | float, calls: int = 1) -> CostEstimate:
    """Input-token cost: per call rounded to cents; total from the unrounded per-call cost."""
    if tokens < 0 or calls < 0:
        raise ValueError("tokens and calls must be non-negative")
    price = Decimal(str(price_per_million))
    if price < 0:
        raise ValueError("price must be non-negative")
    exact = Decimal(tokens) * price / Decimal(1_000_000)
    return CostEstimate(round_half_up(exact, "0.01"), round_half_up(exact * calls, "0.01"), calls)
