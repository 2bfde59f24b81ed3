"""Labeled streams, binning and emotion arcs.

Arcs are stored as two parallel numpy arrays: window start positions
and window values, with ``nan`` marking a window that had nothing to
average.  Rolling windows advance one instance at a time, tumbling
windows advance by the bin size and drop the incomplete tail.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .lexicon import FallbackChain
from .text import OOVPolicy, ScoredInstance, score_texts

__all__ = [
    "ArcError",
    "ZeroVarianceError",
    "DatasetError",
    "LabeledInstance",
    "BinMode",
    "BinSpec",
    "Pooling",
    "EmotionArc",
    "RESUM_INTERVAL",
    "window_sums",
    "window_means",
    "load_dataset",
    "write_dataset",
    "order_by_gold",
    "golds",
    "values_arc",
    "gold_arc",
    "arc_from_scores",
    "predicted_arc",
    "standardize",
    "write_arc",
    "read_arc",
]

# Longest run of incremental updates before a window sum is recomputed exactly.
RESUM_INTERVAL = 4096


class ArcError(ValueError):
    pass


class ZeroVarianceError(ArcError):
    pass


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledInstance:
    index: int
    text: str
    gold: float | None = None


class BinMode(str, enum.Enum):
    ROLLING = "rolling"
    TUMBLING = "tumbling"


@dataclass(frozen=True)
class BinSpec:
    size: int
    mode: BinMode = BinMode.ROLLING

    def __post_init__(self) -> None:
        if isinstance(self.size, bool) or int(self.size) != self.size:
            raise ArcError(f"bin size must be an integer, got {self.size!r}")
        if self.size < 1:
            raise ArcError(f"bin size must be >= 1, got {self.size}")
        object.__setattr__(self, "size", int(self.size))
        object.__setattr__(self, "mode", BinMode(self.mode))

    def n_windows(self, n: int) -> int:
        if self.mode is BinMode.ROLLING:
            return max(n - self.size + 1, 0)
        return n // self.size

    def positions(self, n: int) -> np.ndarray:
        step = 1 if self.mode is BinMode.ROLLING else self.size
        return np.arange(self.n_windows(n), dtype=np.int64) * step


class Pooling(str, enum.Enum):
    INSTANCE = "instance"  # mean of instance scores in the window
    WORD = "word"  # mean over all scored tokens in the window


@dataclass(frozen=True, eq=False)
class EmotionArc:
    positions: np.ndarray
    values: np.ndarray
    bin: BinSpec | None = None
    standardized: bool = False

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if pos.shape != val.shape or pos.ndim != 1:
            raise ArcError("positions and values must be 1-d arrays of equal length")
        if len(pos) > 1 and np.any(np.diff(pos) <= 0):
            raise ArcError("arc positions must be strictly increasing")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "values", val)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.values)

    @property
    def n_missing(self) -> int:
        return int(np.count_nonzero(np.isnan(self.values)))

    @property
    def points(self) -> list[tuple[int, float | None]]:
        return [(int(p), None if math.isnan(v) else float(v)) for p, v in zip(self.positions, self.values)]

    def equals(self, other: "EmotionArc") -> bool:
        return (
            np.array_equal(self.positions, other.positions)
            and np.array_equal(self.values, other.values, equal_nan=True)
            and self.standardized == other.standardized
        )


def window_sums(values: np.ndarray, bin: BinSpec) -> np.ndarray:
    """Sum of ``values`` inside every window of ``bin``.

    Rolling sums slide incrementally (add the entering value, subtract the
    leaving one) but restart from an exact ``math.fsum`` every
    ``RESUM_INTERVAL`` positions, so drift stays bounded and each position
    depends only on its own block, never on evaluation order.  Integer
    input is summed exactly.
    """
    x = np.asarray(values)
    n, b = len(x), bin.size
    if b > n:
        raise ArcError(f"bin size {b} exceeds stream length {n}")
    if bin.mode is BinMode.TUMBLING:
        m = n // b
        return x[: m * b].reshape(m, b).sum(axis=1)

    if np.issubdtype(x.dtype, np.integer):
        csum = np.concatenate(([0], np.cumsum(x, dtype=np.int64)))
        return csum[b:] - csum[:-b]

    x = x.astype(np.float64, copy=False)
    n_win = n - b + 1
    out = np.empty(n_win, dtype=np.float64)
    diff = x[b:] - x[:-b]
    for start in range(0, n_win, RESUM_INTERVAL):
        stop = min(start + RESUM_INTERVAL, n_win)
        base = math.fsum(x[start : start + b].tolist())
        out[start] = base
        if stop - start > 1:
            out[start + 1 : stop] = base + np.cumsum(diff[start : stop - 1])
    return out


def window_means(numerators: np.ndarray, denominators: np.ndarray, bin: BinSpec) -> np.ndarray:
    num = window_sums(numerators, bin)
    den = window_sums(denominators, bin)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den
    out[den == 0] = np.nan
    return out


# ---------------------------------------------------------------------------
# datasets

_LEADING_NUMBER = re.compile(r"^\s*([-+]?\d+(?:\.\d+)?)\s*:")


def _parse_label(text: str, label_map: Mapping[str, float] | None, where: str) -> float | None:
    s = text.strip()
    if not s:
        return None
    if label_map is not None:
        key = s.lower()
        if key in label_map:
            return float(label_map[key])
    try:
        value = float(s)
    except ValueError:
        m = _LEADING_NUMBER.match(s)
        if m is None:
            raise DatasetError(f"{where}: unparseable label {text!r}") from None
        value = float(m.group(1))
    if not math.isfinite(value):
        raise DatasetError(f"{where}: non-finite label {text!r}")
    return value


def _sniff_delimiter(path: Path) -> str:
    return "\t" if path.suffix.lower() in (".tsv", ".tab", ".txt") else ","


def _resolve_column(col: str | int, header: list[str] | None, path: Path) -> int:
    if isinstance(col, int):
        return col
    if header is None:
        if col.isdigit():
            return int(col)
        raise DatasetError(f"{path}: column {col!r} given by name but the file has no header")
    names = [h.strip() for h in header]
    if col in names:
        return names.index(col)
    lowered = [h.lower() for h in names]
    if col.lower() in lowered:
        return lowered.index(col.lower())
    raise DatasetError(f"{path}: missing column {col!r} (have {names})")


def load_dataset(
    path: str | Path,
    text_column: str | int = "text",
    label_column: str | int | None = "label",
    *,
    delimiter: str | None = None,
    header: bool = True,
    label_map: Mapping[str, float] | None = None,
) -> list[LabeledInstance]:
    """Read a labeled stream from CSV/TSV (or JSON lines) in file order.

    Labels may be plain numbers, SemEval-style ``"-3: very negative ..."``
    strings, or words translated through ``label_map``.  An empty label
    field gives an unlabeled instance.
    """
    path = Path(path)
    if label_map is not None:
        label_map = {k.strip().lower(): float(v) for k, v in label_map.items()}
    if path.suffix.lower() in (".jsonl", ".ndjson"):
        return _load_jsonl(path, text_column, label_column, label_map)
    delimiter = delimiter or _sniff_delimiter(path)
    with path.open(encoding="utf-8-sig", newline="") as fh:
        if delimiter == "\t":
            reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        else:
            reader = csv.reader(fh, delimiter=delimiter)
        rows = [(i, r) for i, r in enumerate(reader, 1) if r and any(c.strip() for c in r)]
    if not rows:
        raise DatasetError(f"{path}: empty file")
    head = rows[0][1] if header else None
    if header:
        rows = rows[1:]
    if not rows:
        raise DatasetError(f"{path}: no instances")
    t_idx = _resolve_column(text_column, head, path)
    l_idx = None if label_column is None else _resolve_column(label_column, head, path)
    need = max(t_idx, l_idx if l_idx is not None else -1)
    out = []
    for k, (lineno, row) in enumerate(rows):
        if len(row) <= need:
            raise DatasetError(f"{path}:{lineno}: missing column (row has {len(row)} field(s))")
        gold = None if l_idx is None else _parse_label(row[l_idx], label_map, f"{path}:{lineno}")
        out.append(LabeledInstance(k, row[t_idx], gold))
    return out


def _load_jsonl(path, text_column, label_column, label_map) -> list[LabeledInstance]:
    out = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if text_column not in rec or (label_column is not None and label_column not in rec):
                raise DatasetError(f"{path}:{lineno}: missing column")
            gold = None
            if label_column is not None and rec[label_column] is not None:
                gold = _parse_label(str(rec[label_column]), label_map, f"{path}:{lineno}")
            out.append(LabeledInstance(len(out), rec[text_column], gold))
    if not out:
        raise DatasetError(f"{path}: no instances")
    return out


def _fmt(v: float | None) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def write_dataset(
    path: str | Path | io.TextIOBase,
    instances: Sequence[LabeledInstance],
    extra: Mapping[str, Sequence[float | None]] | None = None,
    *,
    as_json: bool = False,
) -> None:
    """Write ``text,label[,extra...]`` rows that :func:`load_dataset` reads back."""
    extra = dict(extra or {})
    for name, col in extra.items():
        if len(col) != len(instances):
            raise DatasetError(f"extra column {name!r} has {len(col)} values for {len(instances)} instances")
    own = not hasattr(path, "write")
    fh = open(path, "w", encoding="utf-8", newline="") if own else path
    try:
        if as_json:
            for i, inst in enumerate(instances):
                rec = {"text": inst.text, "label": inst.gold}
                rec.update({k: (None if v[i] is None else float(v[i])) for k, v in extra.items()})
                fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=False) + "\n")
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["text", "label", *extra])
            for i, inst in enumerate(instances):
                w.writerow([inst.text, _fmt(inst.gold), *(_fmt(v[i]) for v in extra.values())])
    finally:
        if own:
            fh.close()


def order_by_gold(stream: Sequence[LabeledInstance]) -> list[LabeledInstance]:
    """Stable ascending sort by gold label, reindexed from 0."""
    missing = [inst.index for inst in stream if inst.gold is None]
    if missing:
        raise DatasetError(f"{len(missing)} instance(s) lack a gold label (first index {missing[0]})")
    ordered = sorted(stream, key=lambda inst: inst.gold)
    return [replace(inst, index=k) for k, inst in enumerate(ordered)]


def golds(stream: Sequence[LabeledInstance]) -> np.ndarray:
    values = [inst.gold for inst in stream]
    if any(v is None for v in values):
        raise DatasetError("every instance needs a gold label")
    return np.asarray(values, dtype=np.float64)


# ---------------------------------------------------------------------------
# arcs


def values_arc(values: np.ndarray, bin: BinSpec) -> EmotionArc:
    """Window means of per-instance values; nan instances are left out."""
    values = np.asarray(values, dtype=np.float64)
    present = ~np.isnan(values)
    means = window_means(np.where(present, values, 0.0), present.astype(np.int64), bin)
    return EmotionArc(bin.positions(len(values)), means, bin)


def gold_arc(stream: Sequence[LabeledInstance], bin: BinSpec) -> EmotionArc:
    g = golds(stream)
    if bin.size > len(g):
        raise ArcError(f"bin size {bin.size} exceeds stream length {len(g)}")
    return values_arc(g, bin)


def arc_from_scores(
    scored: Sequence[ScoredInstance],
    bin: BinSpec,
    pooling: Pooling | str = Pooling.INSTANCE,
    policy: OOVPolicy | str = OOVPolicy.SKIP,
) -> EmotionArc:
    pooling, policy = Pooling(pooling), OOVPolicy.parse(policy)
    if not scored:
        raise ArcError("empty stream")
    if bin.size > len(scored):
        raise ArcError(f"bin size {bin.size} exceeds stream length {len(scored)}")
    if pooling is Pooling.INSTANCE:
        values = np.array([np.nan if s.score is None else s.score for s in scored], dtype=np.float64)
        arc = values_arc(values, bin)
    else:
        sums = np.array([s.score_sum for s in scored], dtype=np.float64)
        dens = np.array([s.denominator(policy) for s in scored], dtype=np.int64)
        arc = EmotionArc(bin.positions(len(scored)), window_means(sums, dens, bin), bin)
    if not arc.present.any():
        raise ArcError("every arc point is missing (no scoreable tokens in any window)")
    return arc


def predicted_arc(
    stream: Sequence[LabeledInstance],
    chain: FallbackChain,
    policy: OOVPolicy | str,
    pooling: Pooling | str,
    bin: BinSpec,
    **preprocess_opts,
) -> EmotionArc:
    scored = score_texts((inst.text for inst in stream), chain, policy, **preprocess_opts)
    return arc_from_scores(scored, bin, pooling, policy)


def standardize(arc: EmotionArc) -> EmotionArc:
    """Z-score the present values (population std); missing points stay missing."""
    mask = arc.present
    v = arc.values[mask]
    if len(v) < 2:
        raise ArcError("standardize needs at least 2 present points")
    mean = v.mean()
    centered = v - mean
    std = math.sqrt(float(np.mean(centered * centered)))
    if std <= 1e-12 * max(1.0, float(np.max(np.abs(v)))):
        raise ZeroVarianceError("zero variance: cannot standardize a constant arc")
    out = np.full(len(arc), np.nan)
    out[mask] = centered / std
    return EmotionArc(arc.positions, out, arc.bin, standardized=True)


def write_arc(path: str | Path | io.TextIOBase, arc: EmotionArc, *, as_json: bool = False) -> None:
    own = not hasattr(path, "write")
    fh = open(path, "w", encoding="utf-8", newline="") if own else path
    try:
        if as_json:
            for pos, val in arc.points:
                fh.write(json.dumps({"position": pos, "value": val}) + "\n")
        else:
            fh.write("position,value\n")
            for pos, val in zip(arc.positions.tolist(), arc.values.tolist()):
                fh.write(f"{pos},{_fmt(val)}\n")
    finally:
        if own:
            fh.close()


def read_arc(path: str | Path, bin: BinSpec | None = None) -> EmotionArc:
    path = Path(path)
    positions, values = [], []
    with path.open(encoding="utf-8") as fh:
        first = fh.readline()
        if first.lstrip().startswith("{"):
            lines: Iterable[str] = [first, *fh]
            for line in lines:
                if line.strip():
                    rec = json.loads(line)
                    positions.append(int(rec["position"]))
                    values.append(np.nan if rec["value"] is None else float(rec["value"]))
        else:
            if first.strip().lower() != "position,value":
                raise ArcError(f"{path}: expected header 'position,value'")
            for lineno, line in enumerate(fh, 2):
                if not line.strip():
                    continue
                pos, _, val = line.rstrip("\r\n").partition(",")
                try:
                    positions.append(int(pos))
                    values.append(float(val) if val.strip() else np.nan)
                except ValueError:
                    raise ArcError(f"{path}:{lineno}: malformed arc row {line.strip()!r}") from None
    if not positions:
        raise ArcError(f"{path}: arc has no points")
    return EmotionArc(np.array(positions), np.array(values), bin)
