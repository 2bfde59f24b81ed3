"""Command-line entry point: ``emoarc <subcommand> ...``.

Every command that writes a file also writes ``<file>.manifest.json``
recording the command line, parsed options, SHA-256 of inputs and
outputs, and library versions.  Nothing time-dependent goes into a
manifest, so identical runs produce identical bytes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .arcs import (
    BinSpec,
    LabeledInstance,
    gold_arc,
    arc_from_scores,
    load_dataset,
    order_by_gold,
    read_arc,
    standardize,
    write_arc,
    write_dataset,
)
from .evaluation import TIE_METHOD, RunParams, evaluate
from .lexicon import FallbackChain, Kind, apply_threshold, load_lexicon
from .plot import arc_svg
from .simulate import (
    OracleConfig,
    WaveSpec,
    oracle_labels,
    parse_label_set,
    random_baseline,
    synthesize_dynamic,
    synthetic_labels,
)
from .sweep import load_config, run_sweep
from .text import score_texts

logger = logging.getLogger("emoarc")

OUTPUT_DIR_ENV = "EMOARC_OUTPUT_DIR"
SUBCOMMANDS = ("lexicon", "score", "arc", "gold", "oracle", "dynamic", "eval", "sweep", "plot")
# flags whose values commonly start with '-' (e.g. "-3..3")
_NEGATIVE_VALUE_FLAGS = ("--range", "--labels", "--amp")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def write_manifest(
    target: Path,
    args: argparse.Namespace,
    argv: Sequence[str],
    inputs: Sequence[Path],
    outputs: Sequence[Path],
    extra: dict[str, Any] | None = None,
) -> Path:
    manifest = {
        "command": ["emoarc", *argv],
        "options": {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k != "handler"},
        "seed": getattr(args, "seed", None),
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": {str(p): _sha256(Path(p)) for p in outputs},
        "versions": {"emoarc": __version__, "numpy": np.__version__, "python": platform.python_version()},
    }
    if extra:
        manifest.update(extra)
    path = target if target.suffix == ".json" and target.name == "manifest.json" else Path(f"{target}.manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _range(text: str) -> tuple[float, float]:
    sep = ".." if ".." in text else ":"
    lo, _, hi = text.partition(sep)
    try:
        a, b = float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo{sep}hi, got {text!r}") from None
    if b < a:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return a, b


def _label_map(text: str) -> dict[str, float]:
    out = {}
    for item in text.split(","):
        key, sep, val = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected name=value pairs, got {item!r}")
        out[key.strip()] = float(val)
    return out


def _out_path(args: argparse.Namespace, default_name: str) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    base = Path(args.out_dir or os.environ.get(OUTPUT_DIR_ENV, "."))
    base.mkdir(parents=True, exist_ok=True)
    if args.json and default_name.endswith(".csv"):
        default_name = default_name[:-4] + ".jsonl"
    return base / default_name


# ---------------------------------------------------------------------------
# shared loaders


def _stream(args):
    stream = load_dataset(
        args.input,
        _column(args.text_col),
        _column(args.label_col) if args.label_col else None,
        delimiter=args.delimiter,
        header=not args.no_header,
        label_map=args.label_map,
    )
    if getattr(args, "order_by_gold", False):
        stream = order_by_gold(stream)
    return stream


def _column(value: str) -> str | int:
    return int(value) if value.isdigit() else value


def _chain(args) -> FallbackChain:
    lexicons = [
        load_lexicon(p, args.kind, args.emotion, score_range=args.range, layout=args.layout)
        for p in args.lexicon
    ]
    if args.threshold is not None:
        lexicons = [apply_threshold(lx, args.threshold) for lx in lexicons]
    return FallbackChain(tuple(lexicons))


def _bin(args) -> BinSpec:
    return BinSpec(args.bin, args.mode)


# ---------------------------------------------------------------------------
# handlers


def cmd_lexicon(args, argv) -> int:
    lex = load_lexicon(args.path, args.kind, args.emotion, score_range=args.range, layout=args.layout)
    scores = np.fromiter(lex.entries.values(), dtype=np.float64)
    print(f"lexicon: {lex.name}")
    print(f"emotion: {lex.emotion}")
    print(f"kind: {lex.kind.value}")
    print(f"range: {lex.score_range[0]:g}..{lex.score_range[1]:g}")
    print(f"entries: {len(lex)}")
    print(f"checksum: {lex.checksum()}")
    print("histogram:")
    if lex.kind is Kind.CATEGORICAL:
        for label in lex.labels:
            print(f"  {label:g}\t{int(np.count_nonzero(scores == label))}")
    else:
        lo, hi = lex.score_range
        counts, edges = np.histogram(scores, bins=10, range=(lo, hi) if hi > lo else None)
        for c, a, b in zip(counts, edges[:-1], edges[1:]):
            print(f"  [{a:.3g}, {b:.3g})\t{c}")
    print(f"duplicates: {len(lex.duplicates)}")
    for term in lex.duplicates:
        print(f"  {term}")
    return 0


def cmd_score(args, argv) -> int:
    stream = _stream(args)
    chain = _chain(args)
    scored = score_texts((inst.text for inst in stream), chain, args.oov)
    out = _out_path(args, "scores.csv")
    with out.open("w", encoding="utf-8", newline="") as fh:
        if args.json:
            for i, s in enumerate(scored):
                fh.write(json.dumps({"index": i, "score": s.score, "token_count": s.token_count,
                                     "in_vocab_count": s.in_vocab_count}) + "\n")
        else:
            fh.write("index,score,token_count,in_vocab_count\n")
            for i, s in enumerate(scored):
                score = "" if s.score is None else repr(s.score)
                fh.write(f"{i},{score},{s.token_count},{s.in_vocab_count}\n")
    write_manifest(out, args, argv, [Path(args.input), *map(Path, args.lexicon)], [out])
    covered = sum(1 for s in scored if s.score is not None)
    print(f"scored {len(scored)} instances ({covered} with a score) -> {out}")
    return 0


def cmd_arc(args, argv) -> int:
    stream = _stream(args)
    scored = score_texts((inst.text for inst in stream), _chain(args), args.oov)
    arc = arc_from_scores(scored, _bin(args), args.pooling, args.oov)
    if args.standardize:
        arc = standardize(arc)
    out = _out_path(args, "arc.csv")
    write_arc(out, arc, as_json=args.json)
    write_manifest(out, args, argv, [Path(args.input), *map(Path, args.lexicon)], [out],
                   {"points": len(arc), "missing": arc.n_missing})
    print(f"{len(arc)} points ({arc.n_missing} missing) -> {out}")
    return 0


def cmd_gold(args, argv) -> int:
    arc = gold_arc(_stream(args), _bin(args))
    if args.standardize:
        arc = standardize(arc)
    out = _out_path(args, "gold.csv")
    write_arc(out, arc, as_json=args.json)
    write_manifest(out, args, argv, [Path(args.input)], [out], {"points": len(arc)})
    print(f"{len(arc)} points -> {out}")
    return 0


def cmd_oracle(args, argv) -> int:
    labels = parse_label_set(args.labels)
    cfg = OracleConfig(args.accuracy, labels, args.seed)
    if args.input:
        stream = _stream(args)
        inputs = [Path(args.input)]
    else:
        g = synthetic_labels(args.n, labels, args.seed)
        stream = [LabeledInstance(i, "", float(v)) for i, v in enumerate(g)]
        inputs = []
    pred = oracle_labels(stream, cfg)
    gold = np.array([inst.gold for inst in stream])
    observed = float(np.mean(pred == gold))
    out = _out_path(args, "oracle.csv")
    write_dataset(out, stream, {"predicted": pred.tolist()}, as_json=args.json)
    write_manifest(out, args, argv, inputs, [out], {
        "observed_accuracy": observed,
        "random_baseline": random_baseline(labels),
    })
    print(f"{len(stream)} predictions, observed accuracy {observed:.4f} "
          f"(target {args.accuracy}, random baseline {random_baseline(labels):.4f}) -> {out}")
    return 0


def cmd_dynamic(args, argv) -> int:
    stream = _stream(args)
    spec = WaveSpec(
        n_crests=args.crests,
        n_troughs=args.troughs,
        amplitude_range=args.amp,
        width_range=(int(args.width[0]), int(args.width[1])),
        seed=args.seed,
        k=args.k,
    )
    result = synthesize_dynamic(stream, spec, _bin(args))
    out = _out_path(args, "dynamic.csv")
    write_dataset(out, result.stream, as_json=args.json)
    outputs = [out]
    if args.gold_out:
        write_arc(args.gold_out, result.gold_arc, as_json=args.json)
        outputs.append(Path(args.gold_out))
    write_manifest(out, args, argv, [Path(args.input)], outputs, {
        "target_crests": result.crests,
        "target_troughs": result.troughs,
        "realized_crests": result.realized_crests,
        "realized_troughs": result.realized_troughs,
        "length": len(result.stream),
    })
    print(f"{len(result.stream)} instances; target crests/troughs {result.crests}/{result.troughs}, "
          f"gold-arc crests/troughs {result.realized_crests}/{result.realized_troughs} -> {out}")
    return 0


def cmd_eval(args, argv) -> int:
    pred, gold = read_arc(args.pred), read_arc(args.gold)
    report = evaluate(pred, gold, RunParams(method="file"))
    text = report.to_json()
    if args.out:
        out = Path(args.out)
        out.write_text(text + "\n", encoding="utf-8")
        write_manifest(out, args, argv, [Path(args.pred), Path(args.gold)], [out])
    print(text)
    return 0


def cmd_sweep(args, argv) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out) if args.out else Path(args.out_dir or os.environ.get(OUTPUT_DIR_ENV, "results"))
    result = run_sweep(cfg, out_dir, workers=args.workers, as_json=args.json)
    inputs = [Path(args.config)] + [d.path for d in cfg.datasets if d.path.exists()]
    for spec in cfg.lexicons.values():
        inputs += [v["path"] for v in spec.variants.values() if "path" in v and Path(v["path"]).exists()]
    tables = [out_dir / ("results.jsonl" if args.json else "results.csv"), out_dir / "summary.csv"]
    write_manifest(out_dir / "manifest.json", args, argv, inputs, tables, {"tie_method": TIE_METHOD,
                                                                          "cells": len(result.reports),
                                                                          "errors": result.errors})
    print(f"{len(result.reports)} cells ({result.computed} computed, {result.reused} reused, "
          f"{result.errors} failed) -> {out_dir}")
    return 1 if result.errors else 0


def cmd_plot(args, argv) -> int:
    arcs = []
    for spec in args.arc:
        path, sep, label = spec.partition("=")
        arc = read_arc(path)
        if args.standardize:
            arc = standardize(arc)
        arcs.append((label if sep else Path(path).stem, arc))
    out = _out_path(args, "arcs.svg")
    out.write_text(arc_svg(arcs, title=args.title), encoding="utf-8")
    write_manifest(out, args, argv, [Path(s.partition("=")[0]) for s in args.arc], [out])
    print(f"{len(arcs)} arc(s) -> {out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")
    common.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--out-dir", help=f"default output directory (else ${OUTPUT_DIR_ENV} or cwd)")
    common.add_argument("--json", action="store_true", help="write tables as JSON lines instead of CSV")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", required=True, help="CSV/TSV/JSONL dataset")
    data.add_argument("--text-col", default="text")
    data.add_argument("--label-col", default="label")
    data.add_argument("--delimiter")
    data.add_argument("--no-header", action="store_true")
    data.add_argument("--label-map", type=_label_map, help="e.g. positive=1,neutral=0,negative=-1")
    data.add_argument("--order-by-gold", action="store_true", help="sort instances by gold label first")

    lex = argparse.ArgumentParser(add_help=False)
    lex.add_argument("--lexicon", nargs="+", required=True, help="lexicon files, in fallback order")
    lex.add_argument("--kind", choices=["cat", "cont"], default="cont")
    lex.add_argument("--emotion", default="valence")
    lex.add_argument("--range", type=_range, help="declared score range lo..hi")
    lex.add_argument("--layout", choices=["pair", "wide", "long"], default="pair")
    lex.add_argument("--threshold", type=float, help="keep entries with |score| above this")
    lex.add_argument("--oov", choices=["skip", "zero"], default="skip")

    binning = argparse.ArgumentParser(add_help=False)
    binning.add_argument("--bin", type=int, required=True, help="bin size (instances per window)")
    binning.add_argument("--mode", choices=["rolling", "tumbling"], default="rolling")
    binning.add_argument("--standardize", action="store_true")

    parser = argparse.ArgumentParser(prog="emoarc", description="Emotion arcs from lexicons, with evaluation.")
    parser.add_argument("--version", action="version", version=f"emoarc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")

    p = sub.add_parser("lexicon", parents=[common], help="inspect lexicon files")
    lsub = p.add_subparsers(dest="action", required=True)
    v = lsub.add_parser("validate", parents=[common], help="validate a lexicon and print statistics")
    v.add_argument("path")
    v.add_argument("--kind", choices=["cat", "cont"], required=True)
    v.add_argument("--range", type=_range)
    v.add_argument("--emotion", default="valence")
    v.add_argument("--layout", choices=["pair", "wide", "long"], default="pair")
    v.set_defaults(handler=cmd_lexicon)

    p = sub.add_parser("score", parents=[common, data, lex], help="per-instance lexicon scores")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_score)

    p = sub.add_parser("arc", parents=[common, data, lex, binning], help="predicted arc from a lexicon")
    p.add_argument("--pooling", choices=["instance", "word"], default="instance")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_arc)

    p = sub.add_parser("gold", parents=[common, data, binning], help="gold arc from instance labels")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_gold)

    p = sub.add_parser("oracle", parents=[common], help="simulate a classifier of given accuracy")
    p.add_argument("--accuracy", type=float, required=True)
    p.add_argument("--labels", required=True, help='label set, e.g. "-3..3" or "0,1,2,3"')
    p.add_argument("--input", help="labeled dataset (else a synthetic ordered stream of --n labels)")
    p.add_argument("--n", type=int, default=3000)
    p.add_argument("--text-col", default="text")
    p.add_argument("--label-col", default="label")
    p.add_argument("--delimiter")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--label-map", type=_label_map)
    p.add_argument("--order-by-gold", action="store_true")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser("dynamic", parents=[common, data], help="resample a dataset into a crest/trough wave")
    p.add_argument("--crests", type=int, default=200)
    p.add_argument("--troughs", type=int, default=200)
    p.add_argument("--amp", type=_range, default=(0.5, 3.0), help="amplitude range lo:hi (std units)")
    p.add_argument("--width", type=_range, default=(20, 400), help="half-width range lo:hi (instances)")
    p.add_argument("--k", type=int, default=10, help="nearest instances to sample from per step")
    p.add_argument("--bin", type=int, default=100, help="bin size of the reported gold arc")
    p.add_argument("--mode", choices=["rolling", "tumbling"], default="rolling")
    p.add_argument("--gold-out", help="also write the standardized dynamic gold arc here")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_dynamic)

    p = sub.add_parser("eval", parents=[common], help="Spearman correlation of two arc files")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="run a parameter grid from a TOML config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="results directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("plot", parents=[common], help="SVG line chart of arc files")
    p.add_argument("--arc", action="append", required=True, help="arc file, optionally path=label")
    p.add_argument("--title")
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--out")
    p.set_defaults(handler=cmd_plot)
    return parser


def _fix_negative_values(argv: list[str]) -> list[str]:
    out: list[str] = []
    it = iter(range(len(argv)))
    for i in it:
        tok = argv[i]
        if tok in _NEGATIVE_VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            next(it, None)
        else:
            out.append(tok)
    return out


def dispatch(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_fix_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args, argv)
    except Exception as exc:
        logger.debug("command failed", exc_info=True)
        print(f"emoarc {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
