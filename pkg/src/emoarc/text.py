"""Text preprocessing, tokenization and per-instance lexicon scoring."""

from __future__ import annotations

import enum
import math
import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .lexicon import FallbackChain

__all__ = [
    "OOVPolicy",
    "ScoredInstance",
    "preprocess",
    "tokenize",
    "score_instance",
    "score_texts",
]

URL_RE = re.compile(r"\b(?:https?://|www\.)\S*", re.IGNORECASE)
MARKER_RE = re.compile(r"(?<!\S)[@#]+(?=\w)")


class OOVPolicy(str, enum.Enum):
    """What an out-of-vocabulary token contributes to an instance score."""

    SKIP = "skip"  # disregarded entirely
    ZERO = "zero"  # counts as a 0-scored token

    @classmethod
    def parse(cls, value: "str | OOVPolicy") -> "OOVPolicy":
        if isinstance(value, OOVPolicy):
            return value
        v = value.strip().lower()
        if v in ("skip", "na"):
            return cls.SKIP
        if v in ("zero", "0"):
            return cls.ZERO
        raise ValueError(f"unknown OOV policy {value!r}; expected skip or zero")


@dataclass(frozen=True)
class ScoredInstance:
    token_count: int
    in_vocab_count: int
    score_sum: float
    score: float | None

    def denominator(self, policy: OOVPolicy) -> int:
        return self.in_vocab_count if policy is OOVPolicy.SKIP else self.token_count


def _is_number_token(token: str) -> bool:
    has_digit = False
    for ch in token:
        if ch.isalpha():
            return False
        if ch.isdigit():
            has_digit = True
    return has_digit


def preprocess(
    raw: str,
    *,
    lowercase: bool = True,
    strip_urls: bool = True,
    strip_numbers: bool = True,
    strip_markers: bool = True,
) -> str:
    """Normalize a raw instance: lowercase, drop URLs and numbers, unwrap @/# markers."""
    text = unicodedata.normalize("NFC", raw)
    if lowercase:
        text = unicodedata.normalize("NFC", text.lower())
    if strip_urls:
        text = URL_RE.sub(" ", text)
    if strip_markers:
        text = MARKER_RE.sub("", text)
    parts = text.split()
    if strip_numbers:
        parts = [p for p in parts if not _is_number_token(p)]
    return " ".join(parts)


@lru_cache(maxsize=4096)
def _is_edge_char(ch: str) -> bool:
    # punctuation, symbols, format chars (ZWJ) and emoji variation selectors
    cat = unicodedata.category(ch)
    return cat[0] in "PS" or cat == "Cf" or "\ufe00" <= ch <= "\ufe0f"


def _strip_edges(token: str) -> str:
    start, end = 0, len(token)
    while start < end and _is_edge_char(token[start]):
        start += 1
    while end > start and _is_edge_char(token[end - 1]):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> list[str]:
    """Whitespace split, then trim punctuation/symbols from both ends of each token."""
    tokens = []
    for part in text.split():
        tok = _strip_edges(part)
        if tok:
            tokens.append(tok)
    return tokens


def score_instance(tokens: Sequence[str], chain: FallbackChain, policy: OOVPolicy | str) -> ScoredInstance:
    """Average lexicon score of an instance under an OOV policy.

    SKIP averages over in-vocabulary tokens only; ZERO divides the same
    sum by the full token count.  Sums use ``math.fsum`` so the result is
    independent of token order.
    """
    policy = OOVPolicy.parse(policy)
    table = chain.table
    found = [hit[0] for hit in map(table.get, tokens) if hit is not None]
    total = math.fsum(found)
    denom = len(found) if policy is OOVPolicy.SKIP else len(tokens)
    return ScoredInstance(
        token_count=len(tokens),
        in_vocab_count=len(found),
        score_sum=total,
        score=total / denom if denom else None,
    )


def score_texts(
    texts: Iterable[str],
    chain: FallbackChain,
    policy: OOVPolicy | str,
    **preprocess_opts,
) -> list[ScoredInstance]:
    policy = OOVPolicy.parse(policy)
    return [score_instance(tokenize(preprocess(t, **preprocess_opts)), chain, policy) for t in texts]
