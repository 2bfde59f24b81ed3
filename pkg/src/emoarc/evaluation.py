"""Rank correlation between predicted and gold arcs."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

from .arcs import ArcError, EmotionArc

__all__ = [
    "TIE_METHOD",
    "CorrelationError",
    "average_ranks",
    "spearman",
    "RunParams",
    "EvalReport",
    "evaluate",
    "BootstrapResult",
    "bootstrap_compare",
]

TIE_METHOD = "average-rank pearson"


class CorrelationError(ValueError):
    pass


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of the positions they span."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    starts = np.flatnonzero(np.concatenate(([True], xs[1:] != xs[:-1])))
    ends = np.append(starts[1:], n)
    group_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks


def _aligned(a, b) -> tuple[np.ndarray, np.ndarray, int]:
    """Values present in both inputs, plus the number of alignable positions."""
    if isinstance(a, EmotionArc) and isinstance(b, EmotionArc):
        if np.array_equal(a.positions, b.positions):
            va, vb = a.values, b.values
        else:
            _, ia, ib = np.intersect1d(a.positions, b.positions, assume_unique=True, return_indices=True)
            va, vb = a.values[ia], b.values[ib]
    else:
        va = np.asarray(a.values if isinstance(a, EmotionArc) else a, dtype=np.float64)
        vb = np.asarray(b.values if isinstance(b, EmotionArc) else b, dtype=np.float64)
        if va.shape != vb.shape:
            raise CorrelationError(f"length mismatch: {len(va)} vs {len(vb)}")
    both = ~(np.isnan(va) | np.isnan(vb))
    return va[both], vb[both], len(va)


def _pearson(rx: np.ndarray, ry: np.ndarray) -> float:
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise CorrelationError("correlation undefined: one side is constant")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def spearman(a: EmotionArc | np.ndarray, b: EmotionArc | np.ndarray) -> float:
    """Spearman's rho over positions present in both arcs (average ranks for ties)."""
    va, vb, _ = _aligned(a, b)
    if len(va) < 2:
        raise CorrelationError(f"need at least 2 shared points, got {len(va)}")
    return _pearson(average_ranks(va), average_ranks(vb))


@dataclass(frozen=True)
class RunParams:
    dataset: str | None = None
    emotion: str | None = None
    lexicon: str | None = None
    kind: str | None = None
    oov: str | None = None
    pooling: str | None = None
    threshold: float | None = None
    bin_size: int | None = None
    bin_mode: str | None = None
    fallback: bool | None = None
    seed: int | None = None
    method: str = "lexicon"
    accuracy: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown parameter(s) {sorted(unknown)}")
        return cls(**data)

    def key(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class EvalReport:
    rho: float | None
    n_points: int
    n_excluded: int
    params: RunParams = field(default_factory=RunParams)
    tie_method: str = TIE_METHOD
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["params"] = self.params.to_dict()
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EvalReport":
        data = dict(data)
        data["params"] = RunParams.from_dict(data.get("params", {}))
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))


def evaluate(predicted: EmotionArc, gold: EmotionArc, params: RunParams | None = None) -> EvalReport:
    """Spearman rho of ``predicted`` against ``gold`` with missing-point accounting."""
    if predicted.bin is not None and gold.bin is not None and predicted.bin != gold.bin:
        raise ArcError(f"arcs use different bins: {predicted.bin} vs {gold.bin}")
    va, vb, alignable = _aligned(predicted, gold)
    rho = spearman(predicted, gold)
    return EvalReport(rho=rho, n_points=len(va), n_excluded=alignable - len(va), params=params or RunParams())


@dataclass(frozen=True)
class BootstrapResult:
    rho_a: float
    rho_b: float
    delta: float
    ci_low: float
    ci_high: float
    p_value: float
    n_resamples: int
    block_length: int


def bootstrap_compare(
    pred_a: EmotionArc,
    pred_b: EmotionArc,
    gold: EmotionArc,
    *,
    n_resamples: int = 1000,
    block_length: int | None = None,
    seed: int = 0,
    alpha: float = 0.05,
) -> BootstrapResult:
    """Paired moving-block bootstrap of rho(a, gold) - rho(b, gold).

    Rolling-window arcs are autocorrelated over about one bin, so blocks
    default to the gold arc's bin size.  The p-value is two-sided for
    "no difference".
    """
    if not (np.array_equal(pred_a.positions, gold.positions) and np.array_equal(pred_b.positions, gold.positions)):
        raise ArcError("bootstrap needs three arcs over the same positions")
    keep = pred_a.present & pred_b.present & gold.present
    a, b, g = pred_a.values[keep], pred_b.values[keep], gold.values[keep]
    n = len(g)
    if n < 3:
        raise CorrelationError("too few shared points to bootstrap")
    if block_length is None:
        block_length = gold.bin.size if gold.bin is not None else 1
    block_length = max(1, min(block_length, n))
    rho_a, rho_b = spearman(a, g), spearman(b, g)

    rng = np.random.default_rng(seed)
    n_blocks = math.ceil(n / block_length)
    offsets = np.arange(block_length)
    deltas = []
    for _ in range(n_resamples):
        starts = rng.integers(0, n - block_length + 1, size=n_blocks)
        idx = (starts[:, None] + offsets[None, :]).ravel()[:n]
        try:
            deltas.append(spearman(a[idx], g[idx]) - spearman(b[idx], g[idx]))
        except CorrelationError:
            continue
    if not deltas:
        raise CorrelationError("every bootstrap resample was degenerate")
    d = np.asarray(deltas)
    lo, hi = np.quantile(d, [alpha / 2, 1 - alpha / 2])
    p = min(1.0, 2.0 * min(np.mean(d <= 0.0), np.mean(d >= 0.0)))
    return BootstrapResult(rho_a, rho_b, rho_a - rho_b, float(lo), float(hi), float(p), len(d), block_length)
