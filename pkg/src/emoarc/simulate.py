"""Simulated instance-level classifiers and synthetic emotion streams.

The oracle emits the gold label with probability ``accuracy`` and a
uniformly chosen wrong label otherwise.  Its random numbers come from a
Philox counter-based generator keyed by the seed; instance ``i`` always
consumes the same two uniforms, so any slice of a stream can be labeled
independently and the results concatenate bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .arcs import (
    BinSpec,
    EmotionArc,
    LabeledInstance,
    gold_arc,
    golds,
    standardize,
)
from .lexicon import Kind, Lexicon

__all__ = [
    "OracleConfig",
    "WaveSpec",
    "DynamicResult",
    "SimulationError",
    "oracle_labels",
    "random_baseline",
    "parse_label_set",
    "target_trajectory",
    "count_extrema",
    "nearest_candidates",
    "synthesize_dynamic",
    "synthetic_labels",
    "SyntheticCorpus",
    "synthetic_corpus",
]

_U64 = (1 << 64) - 1


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    accuracy: float
    label_set: tuple[float, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        labels = tuple(float(v) for v in self.label_set)
        if len(labels) < 2:
            raise SimulationError("oracle needs at least two labels")
        if len(set(labels)) != len(labels):
            raise SimulationError(f"duplicate labels in {labels}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise SimulationError(f"accuracy must be in [0, 1], got {self.accuracy}")
        object.__setattr__(self, "label_set", labels)


def random_baseline(label_set: Sequence[float]) -> float:
    if len(label_set) < 2:
        raise SimulationError("random baseline needs at least two labels")
    return 1.0 / len(label_set)


def parse_label_set(text: str) -> tuple[float, ...]:
    """``"-3..3"`` -> (-3, ..., 3); ``"0,1,2"`` -> (0, 1, 2)."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        a, b = int(lo), int(hi)
        if b < a:
            raise SimulationError(f"empty label range {text!r}")
        return tuple(float(v) for v in range(a, b + 1))
    return tuple(float(v) for v in text.split(",") if v.strip())


def _instance_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    # Philox yields 4 doubles per counter step, i.e. two instances.
    bitgen = np.random.Philox(key=seed & _U64)
    bitgen.advance(start // 2)
    rng = np.random.Generator(bitgen)
    skip = start % 2
    u = rng.random(2 * (count + skip))
    return u[2 * skip :].reshape(count, 2)


def oracle_labels(
    stream: Sequence[LabeledInstance] | np.ndarray,
    cfg: OracleConfig,
    *,
    start: int = 0,
) -> np.ndarray:
    """Predicted labels for ``stream``; ``start`` is the index of its first instance."""
    if isinstance(stream, np.ndarray):
        gold = np.asarray(stream, dtype=np.float64)
    else:
        gold = golds(stream)
    labels = np.asarray(cfg.label_set)
    order = np.argsort(labels)
    pos = np.searchsorted(labels[order], gold)
    pos = np.minimum(pos, len(labels) - 1)
    idx = order[pos]
    bad = labels[idx] != gold
    if bad.any():
        raise SimulationError(f"gold label {gold[bad][0]!r} is not in label set {cfg.label_set}")

    u = _instance_uniforms(cfg.seed, start, len(gold))
    correct = u[:, 0] < cfg.accuracy
    k = len(labels)
    j = np.minimum((u[:, 1] * (k - 1)).astype(np.int64), k - 2)
    wrong = np.where(j >= idx, j + 1, j)
    return labels[np.where(correct, idx, wrong)]


def synthetic_labels(n: int, label_set: Sequence[float], seed: int, *, ordered: bool = True) -> np.ndarray:
    """Labels drawn uniformly from ``label_set``; sorted ascending when ``ordered``."""
    rng = np.random.default_rng(seed)
    out = rng.choice(np.asarray(label_set, dtype=np.float64), size=n)
    return np.sort(out, kind="stable") if ordered else out


# ---------------------------------------------------------------------------
# dynamic streams


@dataclass(frozen=True)
class WaveSpec:
    n_crests: int = 200
    n_troughs: int = 200
    amplitude_range: tuple[float, float] = (0.5, 3.0)
    width_range: tuple[int, int] = (20, 400)
    seed: int = 0
    k: int = 10

    def __post_init__(self) -> None:
        if self.n_crests < 1 or self.n_troughs < 1:
            raise SimulationError("need at least one crest and one trough")
        if abs(self.n_crests - self.n_troughs) > 1:
            raise SimulationError("crest and trough counts may differ by at most one (they alternate)")
        a_lo, a_hi = self.amplitude_range
        w_lo, w_hi = self.width_range
        if a_lo < 0 or a_hi < a_lo:
            raise SimulationError(f"bad amplitude range {self.amplitude_range}")
        if w_hi < w_lo:
            raise SimulationError(f"bad width range {self.width_range}")
        if w_lo < 3:
            raise SimulationError(f"width range {self.width_range} too small: every segment needs >= 3 steps")
        if self.k < 1:
            raise SimulationError("k must be >= 1")


def target_trajectory(spec: WaveSpec, rng: np.random.Generator | None = None) -> np.ndarray:
    """Piecewise-linear wave in standardized units, starting and ending at 0.

    Extrema alternate (crest first unless there are more troughs); the
    run-up to each extremum spans its half-width, and a final segment
    returns to the baseline.
    """
    rng = rng or np.random.default_rng(spec.seed)
    n_ext = spec.n_crests + spec.n_troughs
    sign = 1.0 if spec.n_crests >= spec.n_troughs else -1.0
    signs = sign * np.where(np.arange(n_ext) % 2 == 0, 1.0, -1.0)
    amps = rng.uniform(spec.amplitude_range[0], spec.amplitude_range[1], size=n_ext)
    widths = rng.integers(spec.width_range[0], spec.width_range[1] + 1, size=n_ext + 1)
    knot_x = np.concatenate(([0], np.cumsum(widths)))
    knot_y = np.concatenate(([0.0], signs * amps, [0.0]))
    return np.interp(np.arange(knot_x[-1] + 1), knot_x, knot_y)


def count_extrema(values: np.ndarray) -> tuple[int, int]:
    """(crests, troughs) as strict interior local maxima / minima.

    Runs of equal values are collapsed first, so a flat-topped peak counts once.
    """
    v = np.asarray(values, dtype=np.float64)
    v = v[~np.isnan(v)]
    if len(v):
        v = v[np.concatenate(([True], v[1:] != v[:-1]))]
    if len(v) < 3:
        return 0, 0
    mid, left, right = v[1:-1], v[:-2], v[2:]
    crests = int(np.count_nonzero((mid > left) & (mid > right)))
    troughs = int(np.count_nonzero((mid < left) & (mid < right)))
    return crests, troughs


def nearest_candidates(sorted_golds: np.ndarray, targets: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Half-open ranges [lo, hi) into ``sorted_golds`` holding the k nearest values per target.

    Every value within the k-th smallest distance is included, so ties
    at that distance widen the range on either side.
    """
    g = np.asarray(sorted_golds, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    n = len(g)
    k = min(k, n)
    p = np.searchsorted(g, t)
    starts = np.clip(p[:, None] - k + np.arange(k + 1)[None, :], 0, n - k)
    reach = np.maximum(t[:, None] - g[starts], g[starts + k - 1] - t[:, None])
    r = reach.min(axis=1)
    eps = 1e-12 * np.maximum(1.0, np.abs(t))
    lo = np.searchsorted(g, t - r - eps, side="left")
    hi = np.searchsorted(g, t + r + eps, side="right")
    return lo, hi


@dataclass(frozen=True)
class DynamicResult:
    stream: list[LabeledInstance]
    gold_arc: EmotionArc
    target: np.ndarray = field(repr=False)
    source_indices: np.ndarray = field(repr=False)
    crests: int
    troughs: int
    realized_crests: int
    realized_troughs: int
    seed: int

    def __iter__(self):
        # unpacks as (stream, gold_arc)
        return iter((self.stream, self.gold_arc))


def synthesize_dynamic(
    stream: Sequence[LabeledInstance],
    spec: WaveSpec = WaveSpec(),
    bin: BinSpec = BinSpec(100),
) -> DynamicResult:
    """Resample a labeled stream (with replacement) so its gold arc follows a crest/trough wave.

    Each step of the target trajectory, mapped back to label units via
    the stream's label mean and std, draws uniformly among the ``spec.k``
    instances whose gold label is nearest to it.
    """
    g = golds(stream)
    if len(np.unique(g)) < 2:
        raise SimulationError("source stream needs at least two distinct gold labels")
    rng = np.random.default_rng(spec.seed)
    target = target_trajectory(spec, rng)
    crests, troughs = count_extrema(target)

    raw_target = g.mean() + target * g.std()
    order = np.argsort(g, kind="stable")
    lo, hi = nearest_candidates(g[order], raw_target, spec.k)
    picks = order[rng.integers(lo, hi)]

    dynamic = [replace(stream[j], index=i) for i, j in enumerate(picks.tolist())]
    arc = standardize(gold_arc(dynamic, bin))
    r_crests, r_troughs = count_extrema(arc.values)
    return DynamicResult(
        stream=dynamic,
        gold_arc=arc,
        target=target,
        source_indices=picks,
        crests=crests,
        troughs=troughs,
        realized_crests=r_crests,
        realized_troughs=r_troughs,
        seed=spec.seed,
    )


# ---------------------------------------------------------------------------
# synthetic text + lexicons


@dataclass(frozen=True)
class SyntheticCorpus:
    stream: list[LabeledInstance]
    primary: Lexicon
    secondary: Lexicon


def _vocab(prefix: str, size: int, rng: np.random.Generator) -> tuple[list[str], np.ndarray]:
    scores = np.round(rng.uniform(-1.0, 1.0, size=size), 6)
    order = np.argsort(scores, kind="stable")
    return [f"{prefix}{i}" for i in range(size)], scores[order]


def synthetic_corpus(
    labels: np.ndarray,
    seed: int,
    *,
    vocab_size: int = 2000,
    tokens_per_instance: int = 13,
    signal: float = 0.3,
    oov_rate: float = 0.4,
    secondary_share: float = 0.0,
    window: float = 0.25,
) -> SyntheticCorpus:
    """Text whose lexicon scores track the gold labels, with controllable noise.

    Gold labels are rescaled to [-1, 1].  Each token is OOV with
    probability ``oov_rate``, a word known only to the secondary lexicon
    with probability ``secondary_share``, and a primary-lexicon word
    otherwise.  A lexicon word is drawn with probability ``signal`` among words scored
    within ``window`` of the instance's rescaled label, else uniformly.
    """
    if oov_rate < 0 or secondary_share < 0 or oov_rate + secondary_share > 1:
        raise SimulationError("oov_rate and secondary_share must be shares of one token budget")
    labels = np.asarray(labels, dtype=np.float64)
    rng = np.random.default_rng(seed)
    lo, hi = labels.min(), labels.max()
    z = np.zeros_like(labels) if hi == lo else 2.0 * (labels - lo) / (hi - lo) - 1.0

    vocabs = [_vocab("p", vocab_size, rng), _vocab("e", vocab_size, rng)]
    n, m = len(labels), tokens_per_instance
    source = rng.random((n, m))
    is_oov = source < oov_rate
    use_second = source < oov_rate + secondary_share
    informative = rng.random((n, m)) < signal
    u = rng.random((n, m))
    oov_ids = rng.integers(0, 10 * vocab_size, size=(n, m))

    texts = []
    for i in range(n):
        toks = []
        for j in range(m):
            if is_oov[i, j]:
                toks.append(f"x{oov_ids[i, j]}")
                continue
            words, scores = vocabs[int(use_second[i, j])]
            if informative[i, j]:
                a = np.searchsorted(scores, z[i] - window)
                b = np.searchsorted(scores, z[i] + window, side="right")
                if b <= a:
                    a, b = 0, len(words)
            else:
                a, b = 0, len(words)
            toks.append(words[a + int(u[i, j] * (b - a))])
        texts.append(" ".join(toks))

    stream = [LabeledInstance(i, t, float(y)) for i, (t, y) in enumerate(zip(texts, labels))]
    lexicons = [
        Lexicon(
            name=name,
            emotion="valence",
            kind=Kind.CONTINUOUS,
            score_range=(-1.0, 1.0),
            entries=dict(zip(words, scores.tolist())),
        )
        for name, (words, scores) in zip(("synthetic-primary", "synthetic-secondary"), vocabs)
    ]
    return SyntheticCorpus(stream, lexicons[0], lexicons[1])
