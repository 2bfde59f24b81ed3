"""Emotion lexicons: loading, validation, thresholding, binarizing and fallback chains.

A lexicon maps normalized terms to a score for a single emotion (or
dimension such as valence).  On disk the canonical format is a UTF-8 TSV
of ``term<TAB>score`` lines; ``#`` starts a comment line.  Two other
layouts cover the way the NRC resources are usually distributed:

``wide``
    a header row naming one column per emotion (NRC VAD style);
    the column matching ``emotion`` is read.
``long``
    three columns, ``term emotion score`` or ``term score emotion``
    (EmoLex / Affect Intensity style); rows for other emotions are skipped.
"""

from __future__ import annotations

import bisect
import enum
import hashlib
import logging
import math
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

logger = logging.getLogger(__name__)

__all__ = [
    "Kind",
    "Lexicon",
    "LexiconError",
    "FallbackChain",
    "normalize_term",
    "load_lexicon",
    "apply_threshold",
    "binarize",
    "lookup",
]


class LexiconError(ValueError):
    """Raised for malformed lexicon files and invalid lexicon operations."""


class Kind(str, enum.Enum):
    CATEGORICAL = "cat"
    CONTINUOUS = "cont"

    @classmethod
    def parse(cls, value: "str | Kind") -> "Kind":
        if isinstance(value, Kind):
            return value
        aliases = {
            "cat": cls.CATEGORICAL,
            "categorical": cls.CATEGORICAL,
            "cont": cls.CONTINUOUS,
            "continuous": cls.CONTINUOUS,
            "real": cls.CONTINUOUS,
        }
        try:
            return aliases[value.strip().lower()]
        except KeyError:
            raise LexiconError(f"unknown lexicon kind {value!r}; expected cat or cont") from None


def normalize_term(term: str) -> str:
    """Canonical form used for both lexicon keys and text tokens."""
    return unicodedata.normalize("NFC", unicodedata.normalize("NFC", term.strip()).lower())


@dataclass(frozen=True)
class Lexicon:
    name: str
    emotion: str
    kind: Kind
    score_range: tuple[float, float]
    entries: Mapping[str, float]
    labels: tuple[float, ...] | None = None
    source: str | None = None
    duplicates: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        lo, hi = self.score_range
        if not lo <= hi:
            raise LexiconError(f"empty score range {self.score_range}")
        if self.kind is Kind.CATEGORICAL and not self.labels:
            raise LexiconError("categorical lexicon needs a label set")
        entries = dict(self.entries)
        allowed = set(self.labels) if self.kind is Kind.CATEGORICAL else None
        for term, score in entries.items():
            if not lo <= score <= hi:
                raise LexiconError(f"score {score} for {term!r} outside range [{lo}, {hi}]")
            if allowed is not None and score not in allowed:
                raise LexiconError(f"score {score} for {term!r} not in label set {sorted(allowed)}")
        object.__setattr__(self, "entries", MappingProxyType(entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, term: object) -> bool:
        return term in self.entries

    def get(self, term: str) -> float | None:
        return self.entries.get(term)

    @property
    def terms(self) -> frozenset[str]:
        return frozenset(self.entries)

    def checksum(self) -> str:
        h = hashlib.sha256()
        for term in sorted(self.entries):
            h.update(f"{term}\t{self.entries[term]!r}\n".encode("utf-8"))
        return h.hexdigest()

    def replace_entries(self, entries: Mapping[str, float], **changes) -> "Lexicon":
        fields = dict(
            name=self.name,
            emotion=self.emotion,
            kind=self.kind,
            score_range=self.score_range,
            labels=self.labels,
            source=self.source,
        )
        fields.update(changes)
        return Lexicon(entries=entries, **fields)


def _parse_score(text: str, lineno: int, path: Path) -> float:
    try:
        score = float(text)
    except ValueError:
        raise LexiconError(f"{path}:{lineno}: cannot parse score {text!r}") from None
    if not math.isfinite(score):
        raise LexiconError(f"{path}:{lineno}: non-finite score {text!r}")
    return score


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _iter_rows(path: Path, emotion: str, layout: str) -> Iterable[tuple[int, str, float]]:
    with path.open(encoding="utf-8") as fh:
        lines = [(i, line.rstrip("\r\n")) for i, line in enumerate(fh, 1)]
    lines = [(i, line) for i, line in lines if line.strip() and not line.lstrip().startswith("#")]

    if layout == "pair":
        for lineno, line in lines:
            parts = line.split("\t")
            if len(parts) != 2:
                raise LexiconError(f"{path}:{lineno}: expected 'term<TAB>score', got {len(parts)} field(s)")
            yield lineno, parts[0], _parse_score(parts[1], lineno, path)
    elif layout == "wide":
        if not lines:
            return
        header_no, header = lines[0]
        names = [c.strip().lower() for c in header.split("\t")]
        if emotion.lower() not in names[1:]:
            raise LexiconError(f"{path}:{header_no}: no column named {emotion!r} in header {names}")
        col = names.index(emotion.lower())
        for lineno, line in lines[1:]:
            parts = line.split("\t")
            if len(parts) != len(names):
                raise LexiconError(f"{path}:{lineno}: expected {len(names)} fields, got {len(parts)}")
            yield lineno, parts[0], _parse_score(parts[col], lineno, path)
    elif layout == "long":
        target = emotion.lower()
        for lineno, line in lines:
            parts = line.split("\t")
            if len(parts) != 3:
                raise LexiconError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
            term, a, b = parts
            if _is_number(a) and not _is_number(b):
                score_text, label = a, b
            elif _is_number(b) and not _is_number(a):
                score_text, label = b, a
            elif lineno == lines[0][0]:
                continue  # header row
            else:
                raise LexiconError(f"{path}:{lineno}: cannot tell score from emotion in {parts[1:]}")
            if label.strip().lower() == target:
                yield lineno, term, _parse_score(score_text, lineno, path)
    else:
        raise LexiconError(f"unknown layout {layout!r}; expected pair, wide or long")


def _default_labels(lo: float, hi: float) -> tuple[float, ...]:
    return tuple(float(v) for v in range(math.ceil(lo), math.floor(hi) + 1))


def load_lexicon(
    path: str | Path,
    kind: Kind | str,
    emotion: str,
    *,
    score_range: tuple[float, float] | None = None,
    labels: Sequence[float] | None = None,
    name: str | None = None,
    layout: str = "pair",
) -> Lexicon:
    """Read and validate a lexicon file.

    Terms are normalized (stripped, lowercased, NFC).  A repeated term
    with the same score is tolerated with a warning; a repeated term with
    a different score is an error.  When ``score_range`` is omitted the
    observed min/max is used.  Categorical lexicons default to the
    integers inside the range as their label set.
    """
    path = Path(path)
    kind = Kind.parse(kind)
    entries: dict[str, float] = {}
    first_seen: dict[str, int] = {}
    duplicates: list[str] = []
    for lineno, raw_term, score in _iter_rows(path, emotion, layout):
        term = normalize_term(raw_term)
        if not term:
            raise LexiconError(f"{path}:{lineno}: empty term")
        if term in entries:
            if entries[term] != score:
                raise LexiconError(
                    f"{path}:{lineno}: term {term!r} has score {score} but line "
                    f"{first_seen[term]} gave {entries[term]}"
                )
            duplicates.append(term)
            continue
        entries[term] = score
        first_seen[term] = lineno
    if not entries:
        raise LexiconError(f"{path}: no entries")
    if duplicates:
        logger.warning("%s: %d duplicate term(s) with identical scores ignored", path, len(duplicates))

    if score_range is None:
        score_range = (min(entries.values()), max(entries.values()))
    lo, hi = float(score_range[0]), float(score_range[1])
    for term, score in entries.items():
        if not lo <= score <= hi:
            raise LexiconError(
                f"{path}:{first_seen[term]}: score {score} for {term!r} outside declared range [{lo}, {hi}]"
            )
    if kind is Kind.CATEGORICAL:
        label_set = tuple(float(v) for v in labels) if labels is not None else _default_labels(lo, hi)
        allowed = set(label_set)
        for term, score in entries.items():
            if score not in allowed:
                raise LexiconError(
                    f"{path}:{first_seen[term]}: score {score} for {term!r} is not a declared label {sorted(allowed)}"
                )
    else:
        label_set = None
    lex = Lexicon(
        name=name or path.stem,
        emotion=emotion,
        kind=kind,
        score_range=(lo, hi),
        entries=entries,
        labels=label_set,
        source=str(path),
        duplicates=tuple(duplicates),
    )
    logger.info("loaded lexicon %s (%s, %s): %d entries", lex.name, emotion, kind.value, len(lex))
    return lex


def apply_threshold(lex: Lexicon, min_abs_score: float) -> Lexicon:
    """Keep only entries whose absolute score is strictly greater than ``min_abs_score``."""
    bound = max(abs(lex.score_range[0]), abs(lex.score_range[1]))
    if not 0 <= min_abs_score <= bound:
        raise LexiconError(f"threshold {min_abs_score} outside [0, {bound}]")
    kept = {t: s for t, s in lex.entries.items() if abs(s) > min_abs_score}
    if not kept:
        logger.warning("threshold %s leaves lexicon %s empty", min_abs_score, lex.name)
    return lex.replace_entries(kept, name=f"{lex.name}@>{min_abs_score:g}")


def binarize(lex: Lexicon, cutoffs: Sequence[float], labels: Sequence[float]) -> Lexicon:
    """Map continuous scores onto categorical labels.

    ``labels[0]`` covers scores below ``cutoffs[0]``, ``labels[i]`` covers
    ``cutoffs[i-1] <= score < cutoffs[i]`` and ``labels[-1]`` everything
    from ``cutoffs[-1]`` up.
    """
    if lex.kind is not Kind.CONTINUOUS:
        raise LexiconError("binarize needs a continuous lexicon")
    cutoffs = [float(c) for c in cutoffs]
    labels = [float(v) for v in labels]
    if len(labels) != len(cutoffs) + 1:
        raise LexiconError(f"need {len(cutoffs) + 1} labels for {len(cutoffs)} cutoffs, got {len(labels)}")
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise LexiconError(f"cutoffs must be strictly increasing: {cutoffs}")
    lo, hi = lex.score_range
    if any(not lo <= c <= hi for c in cutoffs):
        raise LexiconError(f"cutoffs {cutoffs} outside score range [{lo}, {hi}]")
    mapped = {t: labels[bisect.bisect_right(cutoffs, s)] for t, s in lex.entries.items()}
    return lex.replace_entries(
        mapped,
        name=f"{lex.name}:cat",
        kind=Kind.CATEGORICAL,
        score_range=(min(labels), max(labels)),
        labels=tuple(sorted(set(labels))),
    )


@dataclass(frozen=True)
class FallbackChain:
    """Ordered lexicons; the first one containing a term supplies its score."""

    lexicons: tuple[Lexicon, ...]
    _merged: Mapping[str, tuple[float, int]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        lexicons = tuple(self.lexicons)
        if not lexicons:
            raise LexiconError("fallback chain needs at least one lexicon")
        head = lexicons[0]
        for other in lexicons[1:]:
            if other.emotion != head.emotion:
                raise LexiconError(f"chain mixes emotions {head.emotion!r} and {other.emotion!r}")
            if other.kind is not head.kind:
                raise LexiconError(f"chain mixes {head.kind.value} and {other.kind.value} lexicons")
            (a_lo, a_hi), (b_lo, b_hi) = head.score_range, other.score_range
            if a_hi < b_lo or b_hi < a_lo:
                raise LexiconError(f"incompatible score ranges {head.score_range} and {other.score_range}")
        merged: dict[str, tuple[float, int]] = {}
        for idx in range(len(lexicons) - 1, -1, -1):
            merged.update((t, (s, idx)) for t, s in lexicons[idx].entries.items())
        object.__setattr__(self, "lexicons", lexicons)
        object.__setattr__(self, "_merged", MappingProxyType(merged))

    @classmethod
    def of(cls, *lexicons: Lexicon) -> "FallbackChain":
        return cls(tuple(lexicons))

    @property
    def emotion(self) -> str:
        return self.lexicons[0].emotion

    @property
    def kind(self) -> Kind:
        return self.lexicons[0].kind

    @property
    def table(self) -> Mapping[str, tuple[float, int]]:
        """Term -> (score, index of the supplying lexicon)."""
        return self._merged

    def lookup(self, term: str) -> tuple[float, int] | None:
        return self._merged.get(term)

    def __len__(self) -> int:
        return len(self.lexicons)


def lookup(chain: FallbackChain, term: str) -> tuple[float, int] | None:
    return chain.lookup(term)
