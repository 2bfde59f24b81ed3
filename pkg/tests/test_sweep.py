import csv
import json

import pytest

from emoarc.arcs import write_dataset
from emoarc.simulate import synthetic_corpus, synthetic_labels
from emoarc.sweep import SweepError, expand_grid, load_config, run_sweep


def write_lexicon(path, lex):
    with open(path, "w", encoding="utf-8") as fh:
        for term in sorted(lex.terms):
            fh.write(f"{term}\t{lex.entries[term]!r}\n")


@pytest.fixture
def corpus_dir(tmp_path):
    labels = synthetic_labels(600, (-1, 0, 1), 0, ordered=False)
    corpus = synthetic_corpus(labels, 3, signal=0.3, oov_rate=0.2, secondary_share=0.3)
    write_dataset(tmp_path / "data.csv", corpus.stream)
    write_lexicon(tmp_path / "primary.tsv", corpus.primary)
    write_lexicon(tmp_path / "secondary.tsv", corpus.secondary)
    return tmp_path


def config(dirpath, grid, extra_dataset="", extra=""):
    text = f"""
[grid]
{grid}

[[datasets]]
id = "syn"
path = "data.csv"
emotion = "valence"
lexicon = "p"
{extra_dataset}

[[lexicons]]
id = "p"
emotion = "valence"
cont = {{ path = "primary.tsv", range = [-1, 1] }}
cat = {{ from_cont = true, cutoffs = [-0.333, 0.333], labels = [-1, 0, 1] }}
fallback = "e"

[[lexicons]]
id = "e"
emotion = "valence"
cont = {{ path = "secondary.tsv", range = [-1, 1] }}
cat = {{ from_cont = true, cutoffs = [-0.333, 0.333], labels = [-1, 0, 1] }}
{extra}
"""
    path = dirpath / "sweep.toml"
    path.write_text(text, encoding="utf-8")
    return load_config(path)


FIG_GRID = 'bin_sizes = [1, 10, 50, 100, 200, 300]\nkinds = ["cat", "cont"]\noov = ["skip", "zero"]'


def read_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def test_grid_cardinality_and_rows(corpus_dir):
    cfg = config(corpus_dir, FIG_GRID)
    assert len(expand_grid(cfg)) == 24
    res = run_sweep(cfg, corpus_dir / "out")
    assert res.errors == 0 and res.computed == 24
    rows = read_rows(corpus_dir / "out" / "results.csv")
    assert len(rows) == 24
    assert {(r["kind"], r["oov"]) for r in rows} == {("cat", "skip"), ("cat", "zero"), ("cont", "skip"), ("cont", "zero")}
    summary = read_rows(corpus_dir / "out" / "summary.csv")
    assert len(summary) == 4
    assert "B=300" in summary[0]
    assert all(-1 <= float(r["rho"]) <= 1 for r in rows)


def test_threshold_and_fallback_axes(corpus_dir):
    grid = "bin_sizes = [10, 100]\nthresholds = [0.0, 0.5]\nfallback = [false, true]"
    cfg = config(corpus_dir, grid)
    res = run_sweep(cfg, corpus_dir / "out")
    assert len(res.reports) == 8 and res.errors == 0
    by = {(r.params.threshold, r.params.fallback, r.params.bin_size): r for r in res.reports}
    # the secondary lexicon covers tokens the primary misses
    assert by[(0.0, True, 10)].rho > by[(0.0, False, 10)].rho


def test_oracle_cells(corpus_dir):
    cfg = config(corpus_dir, "bin_sizes = [10, 100]\naccuracies = [1.0, 0.5]\nseeds = [0, 1]\nkinds = []")
    res = run_sweep(cfg, corpus_dir / "out")
    assert len(res.reports) == 8
    perfect = [r for r in res.reports if r.params.accuracy == 1.0]
    assert all(r.rho == pytest.approx(1.0, abs=1e-12) for r in perfect)


def test_failed_cell_is_recorded_not_fatal(corpus_dir):
    cfg = config(corpus_dir, "bin_sizes = [10, 5000]")
    res = run_sweep(cfg, corpus_dir / "out")
    assert res.errors == 1
    bad = [r for r in res.reports if r.error]
    assert bad[0].params.bin_size == 5000 and "exceeds" in bad[0].error
    assert [r for r in res.reports if not r.error][0].rho is not None
    # failures are retried on resume, successes reused
    again = run_sweep(cfg, corpus_dir / "out")
    assert (again.computed, again.reused, again.errors) == (1, 1, 1)


def test_resume_recomputes_nothing_and_tables_are_identical(corpus_dir):
    cfg = config(corpus_dir, FIG_GRID)
    out = corpus_dir / "out"
    run_sweep(cfg, out)
    first = {n: (out / n).read_bytes() for n in ("results.csv", "summary.csv")}
    again = run_sweep(cfg, out)
    assert (again.computed, again.reused) == (0, 24)
    assert {n: (out / n).read_bytes() for n in first} == first


def test_interrupted_sweep_resumes(corpus_dir):
    cfg = config(corpus_dir, FIG_GRID)
    full = corpus_dir / "full"
    run_sweep(cfg, full)
    part = corpus_dir / "part"
    part.mkdir()
    lines = (full / "cells.jsonl").read_text(encoding="utf-8").splitlines()
    # keep 10 finished cells plus a torn line
    (part / "cells.jsonl").write_text("\n".join(lines[:10]) + "\n" + lines[10][:25], encoding="utf-8")
    res = run_sweep(cfg, part)
    assert (res.computed, res.reused) == (14, 10)
    assert (part / "results.csv").read_bytes() == (full / "results.csv").read_bytes()


def test_parallel_matches_serial(corpus_dir):
    cfg = config(corpus_dir, FIG_GRID)
    run_sweep(cfg, corpus_dir / "a")
    run_sweep(cfg, corpus_dir / "b", workers=2)
    assert (corpus_dir / "a" / "results.csv").read_bytes() == (corpus_dir / "b" / "results.csv").read_bytes()


def test_dynamic_dataset_uses_seeds(corpus_dir):
    cfg = config(
        corpus_dir,
        "bin_sizes = [100]\nseeds = [0, 1]",
        extra_dataset="dynamic = { crests = 5, troughs = 5, width = [20, 100] }",
    )
    res = run_sweep(cfg, corpus_dir / "out", as_json=True)
    assert [r.params.seed for r in res.reports] == [0, 1]
    assert res.errors == 0
    rows = [json.loads(x) for x in (corpus_dir / "out" / "results.jsonl").read_text().splitlines()]
    assert len(rows) == 2


def test_config_errors(corpus_dir):
    with pytest.raises(SweepError, match="unknown grid"):
        config(corpus_dir, "bins = [1]")
    with pytest.raises(ValueError, match=">= 1"):
        config(corpus_dir, "bin_sizes = [0]")
    with pytest.raises(SweepError, match="unknown key"):
        config(corpus_dir, "", extra='fallback_typo = 1\n')
