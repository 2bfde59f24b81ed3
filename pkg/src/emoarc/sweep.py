"""Parameter sweeps over datasets, lexicons and arc settings.

A sweep is described by a TOML file::

    [grid]
    bin_sizes = [1, 10, 50, 100, 200, 300]
    bin_mode = "rolling"            # or "tumbling"
    kinds = ["cont", "cat"]
    oov = ["skip", "zero"]
    pooling = ["instance"]          # and/or "word"
    thresholds = [0.0, 0.25, 0.5]   # omit for no filtering
    fallback = [false, true]
    seeds = [0]                     # oracle and dynamic cells only
    accuracies = [0.6, 0.9]         # adds oracle cells when present

    [[datasets]]
    id = "voc"
    path = "2018-Valence-oc-En-train.txt"
    text_column = "Tweet"
    label_column = "Intensity Class"
    emotion = "valence"
    lexicon = "vad"
    order_by_gold = true            # default
    # labels = [-3, -2, -1, 0, 1, 2, 3]       oracle label set (default: observed)
    # label_map = { positive = 1, neutral = 0, negative = -1 }
    # dynamic = { crests = 200, troughs = 200, amp = [0.5, 3.0], width = [20, 400], k = 10 }

    [[lexicons]]
    id = "vad"
    emotion = "valence"
    cont = { path = "vad.tsv", layout = "wide", range = [-1, 1] }
    cat = { from_cont = true, cutoffs = [-0.333, 0.333], labels = [-1, 0, 1] }
    fallback = "vad-en"             # lexicon id chained behind this one when fallback = true

Relative paths resolve against the config file's directory.  Every cell
is keyed by a hash of its parameters and appended to ``cells.jsonl`` as
soon as it finishes, so an interrupted sweep resumes where it stopped
(cells that failed are tried again).
``results.csv`` (long form) and ``summary.csv`` (bin sizes as columns)
are rewritten from the cell log at the end, always in grid order.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable

from .arcs import (
    BinMode,
    BinSpec,
    LabeledInstance,
    Pooling,
    arc_from_scores,
    gold_arc,
    golds,
    load_dataset,
    order_by_gold,
    standardize,
    values_arc,
)
from .evaluation import TIE_METHOD, EvalReport, RunParams, evaluate
from .lexicon import FallbackChain, Kind, Lexicon, apply_threshold, binarize, load_lexicon
from .simulate import OracleConfig, WaveSpec, oracle_labels, synthesize_dynamic
from .text import OOVPolicy, score_texts

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

__all__ = ["SweepConfig", "SweepError", "SweepResult", "load_config", "expand_grid", "run_sweep"]

CELL_LOG = "cells.jsonl"
RESULT_COLUMNS = [f.name for f in RunParams.__dataclass_fields__.values()] + [
    "rho",
    "n_points",
    "n_excluded",
    "error",
]


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetSpec:
    id: str
    path: Path
    emotion: str
    lexicon: str | None = None
    text_column: str | int = "text"
    label_column: str | int = "label"
    delimiter: str | None = None
    header: bool = True
    order_by_gold: bool = True
    labels: tuple[float, ...] | None = None
    label_map: dict[str, float] | None = None
    dynamic: dict[str, Any] | None = None


@dataclass(frozen=True)
class LexiconSpec:
    id: str
    emotion: str
    variants: dict[str, dict[str, Any]]
    fallback: str | None = None


@dataclass(frozen=True)
class Grid:
    bin_sizes: tuple[int, ...] = (1, 10, 50, 100, 200, 300)
    bin_mode: str = "rolling"
    kinds: tuple[str, ...] = ("cont",)
    oov: tuple[str, ...] = ("skip",)
    pooling: tuple[str, ...] = ("instance",)
    thresholds: tuple[float | None, ...] = (None,)
    fallback: tuple[bool, ...] = (False,)
    seeds: tuple[int, ...] = (0,)
    accuracies: tuple[float, ...] = ()


@dataclass(frozen=True)
class SweepConfig:
    grid: Grid
    datasets: tuple[DatasetSpec, ...]
    lexicons: dict[str, LexiconSpec] = field(default_factory=dict)
    source: Path | None = None


def _tuple(value, cast=lambda v: v) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(cast(v) for v in value)
    return (cast(value),)


def _parse_config(raw: dict[str, Any], base: Path) -> SweepConfig:
    unknown = set(raw) - {"grid", "datasets", "lexicons"}
    if unknown:
        raise SweepError(f"unknown config section(s) {sorted(unknown)}")
    g = dict(raw.get("grid", {}))
    grid_keys = set(Grid.__dataclass_fields__)
    if set(g) - grid_keys:
        raise SweepError(f"unknown grid key(s) {sorted(set(g) - grid_keys)}")
    conv = {
        "bin_sizes": int,
        "kinds": lambda v: Kind.parse(v).value,
        "oov": lambda v: OOVPolicy.parse(v).value,
        "pooling": lambda v: Pooling(v).value,
        "thresholds": float,
        "fallback": bool,
        "seeds": int,
        "accuracies": float,
    }
    for key, cast in conv.items():
        if key in g:
            g[key] = _tuple(g[key], cast)
    if "bin_mode" in g:
        g["bin_mode"] = BinMode(g["bin_mode"]).value
    for b in g.get("bin_sizes", ()):
        BinSpec(b)
    grid = Grid(**g)

    def resolve(p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else base / path

    datasets = []
    for d in raw.get("datasets", []):
        d = dict(d)
        try:
            ds_id, path, emotion = d.pop("id"), d.pop("path"), d.pop("emotion")
        except KeyError as exc:
            raise SweepError(f"dataset entry missing {exc.args[0]!r}") from None
        if "labels" in d:
            d["labels"] = tuple(float(v) for v in d["labels"])
        known = set(DatasetSpec.__dataclass_fields__)
        if set(d) - known:
            raise SweepError(f"dataset {ds_id!r}: unknown key(s) {sorted(set(d) - known)}")
        datasets.append(DatasetSpec(id=ds_id, path=resolve(path), emotion=emotion, **d))
    if not datasets:
        raise SweepError("config declares no datasets")
    if len({d.id for d in datasets}) != len(datasets):
        raise SweepError("dataset ids must be unique")

    lexicons = {}
    for lx in raw.get("lexicons", []):
        lx = dict(lx)
        variants = {}
        for kind in ("cont", "cat"):
            if kind in lx:
                v = dict(lx.pop(kind))
                if "path" in v:
                    v["path"] = resolve(v["path"])
                variants[kind] = v
        spec = LexiconSpec(id=lx.pop("id"), emotion=lx.pop("emotion"), variants=variants, fallback=lx.pop("fallback", None))
        if lx:
            raise SweepError(f"lexicon {spec.id!r}: unknown key(s) {sorted(lx)}")
        lexicons[spec.id] = spec
    for d in datasets:
        if d.lexicon is not None and d.lexicon not in lexicons:
            raise SweepError(f"dataset {d.id!r} refers to unknown lexicon {d.lexicon!r}")
    for spec in lexicons.values():
        if spec.fallback is not None and spec.fallback not in lexicons:
            raise SweepError(f"lexicon {spec.id!r} falls back to unknown lexicon {spec.fallback!r}")
    return SweepConfig(grid=grid, datasets=tuple(datasets), lexicons=lexicons)


def load_config(path: str | Path) -> SweepConfig:
    path = Path(path)
    with path.open("rb") as fh:
        raw = tomllib.load(fh)
    cfg = _parse_config(raw, path.parent)
    return replace(cfg, source=path)


def expand_grid(cfg: SweepConfig) -> list[RunParams]:
    """Every cell of the sweep, in a fixed order."""
    g = cfg.grid
    cells: list[RunParams] = []
    for ds in cfg.datasets:
        seeds: tuple[int | None, ...] = g.seeds if ds.dynamic is not None else (None,)
        if ds.lexicon is not None:
            for seed, kind, thr, fb, oov, pool, b in itertools.product(
                seeds, g.kinds, g.thresholds, g.fallback, g.oov, g.pooling, g.bin_sizes
            ):
                cells.append(
                    RunParams(
                        dataset=ds.id,
                        emotion=ds.emotion,
                        lexicon=ds.lexicon,
                        kind=kind,
                        oov=oov,
                        pooling=pool,
                        threshold=thr,
                        bin_size=b,
                        bin_mode=g.bin_mode,
                        fallback=fb,
                        seed=seed,
                    )
                )
        for seed, acc, b in itertools.product(g.seeds, g.accuracies, g.bin_sizes):
            cells.append(
                RunParams(
                    dataset=ds.id,
                    emotion=ds.emotion,
                    bin_size=b,
                    bin_mode=g.bin_mode,
                    seed=seed,
                    method="oracle",
                    accuracy=acc,
                )
            )
    return cells


# ---------------------------------------------------------------------------
# execution


def _load_lexicon_variant(spec: LexiconSpec, kind: str) -> Lexicon:
    if kind not in spec.variants:
        raise SweepError(f"lexicon {spec.id!r} has no {kind!r} variant")
    v = spec.variants[kind]
    if v.get("from_cont"):
        cont = _load_lexicon_variant(spec, "cont")
        return binarize(cont, v["cutoffs"], v["labels"])
    rng = v.get("range")
    return load_lexicon(
        v["path"],
        kind,
        spec.emotion,
        score_range=tuple(rng) if rng is not None else None,
        labels=v.get("labels"),
        name=f"{spec.id}:{kind}",
        layout=v.get("layout", "pair"),
    )


def _load_stream(ds: DatasetSpec) -> list[LabeledInstance]:
    stream = load_dataset(
        ds.path,
        ds.text_column,
        ds.label_column,
        delimiter=ds.delimiter,
        header=ds.header,
        label_map=ds.label_map,
    )
    return order_by_gold(stream) if ds.order_by_gold else stream


def _dynamic_stream(stream: list[LabeledInstance], ds: DatasetSpec, seed: int) -> list[LabeledInstance]:
    d = ds.dynamic or {}
    spec = WaveSpec(
        n_crests=int(d.get("crests", 200)),
        n_troughs=int(d.get("troughs", 200)),
        amplitude_range=tuple(d.get("amp", (0.5, 3.0))),
        width_range=tuple(int(w) for w in d.get("width", (20, 400))),
        seed=seed,
        k=int(d.get("k", 10)),
    )
    return synthesize_dynamic(stream, spec, BinSpec(1)).stream


@dataclass
class _Group:
    """Cells sharing one scored stream (or one oracle run)."""

    dataset: DatasetSpec
    lexicon: LexiconSpec | None
    fallback_spec: LexiconSpec | None
    cells: list[RunParams]


def _record(params: RunParams, report: EvalReport | None, error: str | None) -> dict[str, Any]:
    return {
        "key": params.key(),
        "params": params.to_dict(),
        "rho": None if report is None else report.rho,
        "n_points": None if report is None else report.n_points,
        "n_excluded": None if report is None else report.n_excluded,
        "error": error,
    }


def _run_group(group: _Group) -> list[dict[str, Any]]:
    out = []
    try:
        base_stream = _load_stream(group.dataset)
    except Exception as exc:  # recorded per cell
        return [_record(p, None, f"{type(exc).__name__}: {exc}") for p in group.cells]

    streams: dict[int | None, list[LabeledInstance]] = {}
    scored: dict[tuple, list] = {}
    gold_cache: dict[tuple, Any] = {}

    def stream_for(seed):
        if group.dataset.dynamic is None:
            return base_stream
        if seed not in streams:
            streams[seed] = _dynamic_stream(base_stream, group.dataset, seed)
        return streams[seed]

    for p in group.cells:
        try:
            stream = stream_for(p.seed if group.dataset.dynamic is not None else None)
            bin = BinSpec(p.bin_size, BinMode(p.bin_mode))
            gkey = (p.seed if group.dataset.dynamic is not None else None, p.bin_size)
            if gkey not in gold_cache:
                gold_cache[gkey] = standardize(gold_arc(stream, bin))
            gold = gold_cache[gkey]
            if p.method == "oracle":
                labels = group.dataset.labels or tuple(sorted(set(golds(stream).tolist())))
                skey = ("oracle", p.seed, p.accuracy)
                if skey not in scored:
                    scored[skey] = oracle_labels(stream, OracleConfig(p.accuracy, labels, p.seed))
                pred = standardize(values_arc(scored[skey], bin))
            else:
                skey = (p.seed, p.kind, p.threshold, p.fallback, p.oov)
                if skey not in scored:
                    lexicons = [_load_lexicon_variant(group.lexicon, p.kind)]
                    if p.fallback:
                        if group.fallback_spec is None:
                            raise SweepError(f"lexicon {group.lexicon.id!r} declares no fallback")
                        lexicons.append(_load_lexicon_variant(group.fallback_spec, p.kind))
                    if p.threshold is not None:
                        lexicons = [apply_threshold(lx, p.threshold) for lx in lexicons]
                    chain = FallbackChain(tuple(lexicons))
                    scored[skey] = score_texts((inst.text for inst in stream), chain, p.oov)
                pred = standardize(arc_from_scores(scored[skey], bin, p.pooling, p.oov))
            out.append(_record(p, evaluate(pred, gold, p), None))
        except Exception as exc:  # recorded per cell
            out.append(_record(p, None, f"{type(exc).__name__}: {exc}"))
    return out


def _groups(cfg: SweepConfig, cells: Iterable[RunParams]) -> list[_Group]:
    by_ds = {d.id: d for d in cfg.datasets}
    groups: dict[tuple, _Group] = {}
    for p in cells:
        ds = by_ds[p.dataset]
        key = (p.dataset, p.method, p.kind, p.threshold, p.fallback, p.oov, p.seed, p.accuracy)
        if key not in groups:
            lex = cfg.lexicons.get(p.lexicon) if p.lexicon else None
            fb = cfg.lexicons.get(lex.fallback) if lex is not None and lex.fallback else None
            groups[key] = _Group(ds, lex, fb, [])
        groups[key].cells.append(p)
    return list(groups.values())


def _read_log(path: Path) -> dict[str, dict[str, Any]]:
    done: dict[str, dict[str, Any]] = {}
    if not path.exists():
        return done
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                continue  # torn final line from an interrupted run
            done[rec["key"]] = rec
    return done


@dataclass(frozen=True)
class SweepResult:
    reports: list[EvalReport]
    computed: int
    reused: int
    errors: int
    out_dir: Path


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_tables(records: list[dict[str, Any]], out_dir: Path, bin_sizes: tuple[int, ...], as_json: bool) -> None:
    if as_json:
        with (out_dir / "results.jsonl").open("w", encoding="utf-8") as fh:
            for rec in records:
                row = {**rec["params"], "rho": rec["rho"], "n_points": rec["n_points"],
                       "n_excluded": rec["n_excluded"], "error": rec["error"], "tie_method": TIE_METHOD}
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    else:
        with (out_dir / "results.csv").open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RESULT_COLUMNS)
            for rec in records:
                row = {**rec["params"], **{k: rec[k] for k in ("rho", "n_points", "n_excluded", "error")}}
                w.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])

    id_cols = [c for c in RunParams.__dataclass_fields__ if c != "bin_size"]
    pivot: dict[tuple, dict[int, Any]] = {}
    for rec in records:
        p = rec["params"]
        pivot.setdefault(tuple(p[c] for c in id_cols), {})[p["bin_size"]] = rec["rho"]
    with (out_dir / "summary.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(id_cols + [f"B={b}" for b in bin_sizes])
        for ident, row in pivot.items():
            w.writerow([_fmt(v) for v in ident] + [_fmt(row.get(b)) for b in bin_sizes])


def run_sweep(cfg: SweepConfig, out_dir: str | Path, *, workers: int = 1, as_json: bool = False) -> SweepResult:
    """Evaluate every grid cell not already present in ``out_dir``'s cell log."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = expand_grid(cfg)
    log_path = out_dir / CELL_LOG
    done = _read_log(log_path)
    # failed cells are retried: their cause (a missing file, say) may be fixed by now
    todo = [p for p in cells if p.key() not in done or done[p.key()]["error"]]
    logger.info("sweep: %d cells, %d already done, %d to run", len(cells), len(cells) - len(todo), len(todo))

    groups = _groups(cfg, todo)
    if todo:
        with log_path.open("a", encoding="utf-8") as log:

            def sink(records):
                for rec in records:
                    done[rec["key"]] = rec
                    log.write(json.dumps(rec, sort_keys=True) + "\n")
                log.flush()

            if workers > 1 and len(groups) > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    for records in pool.map(_run_group, groups):
                        sink(records)
            else:
                for group in groups:
                    sink(_run_group(group))

    records = [done[p.key()] for p in cells]
    _write_tables(records, out_dir, cfg.grid.bin_sizes, as_json)
    reports = [
        EvalReport(
            rho=r["rho"],
            n_points=r["n_points"] or 0,
            n_excluded=r["n_excluded"] or 0,
            params=RunParams.from_dict(r["params"]),
            error=r["error"],
        )
        for r in records
    ]
    n_err = sum(1 for r in records if r["error"])
    if n_err:
        logger.warning("sweep: %d of %d cells failed", n_err, len(records))
    return SweepResult(reports, computed=len(todo), reused=len(cells) - len(todo), errors=n_err, out_dir=out_dir)
