"""Emotion arcs from emotion lexicons, with gold arcs, oracle simulation and evaluation."""

__version__ = "0.1.0"

from .arcs import (
    BinMode,
    BinSpec,
    EmotionArc,
    LabeledInstance,
    Pooling,
    gold_arc,
    load_dataset,
    order_by_gold,
    predicted_arc,
    standardize,
)
from .evaluation import EvalReport, RunParams, evaluate, spearman
from .lexicon import FallbackChain, Kind, Lexicon, apply_threshold, binarize, load_lexicon, lookup
from .simulate import OracleConfig, WaveSpec, oracle_labels, random_baseline, synthesize_dynamic
from .text import OOVPolicy, ScoredInstance, preprocess, score_instance, tokenize

__all__ = [
    "BinMode",
    "BinSpec",
    "EmotionArc",
    "EvalReport",
    "FallbackChain",
    "Kind",
    "LabeledInstance",
    "Lexicon",
    "OOVPolicy",
    "OracleConfig",
    "Pooling",
    "RunParams",
    "ScoredInstance",
    "WaveSpec",
    "apply_threshold",
    "binarize",
    "evaluate",
    "gold_arc",
    "load_dataset",
    "load_lexicon",
    "lookup",
    "oracle_labels",
    "order_by_gold",
    "predicted_arc",
    "preprocess",
    "random_baseline",
    "score_instance",
    "spearman",
    "standardize",
    "synthesize_dynamic",
    "tokenize",
]
