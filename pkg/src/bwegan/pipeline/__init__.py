"""Corpus preparation, training, evaluation and reporting."""

from .corpus import (
    CorpusEntry,
    CorpusManifest,
    narrowband_for,
    parse_ratio,
    prepare_corpus,
    ratio_key,
    split_speakers,
)
from .errors import ConfigError, DataError, NumericalError, PipelineError
from .evaluation import (
    DEFAULT_GRID,
    EvalReport,
    RatioResult,
    UtteranceResult,
    baseline,
    evaluate,
    evaluate_system,
    generator_system,
    oracle_system,
    zero_shot_sweep,
)
from .report import emit_report, render_spectrogram, spectrogram_image
from .training import (
    PairSource,
    TrainRun,
    generator_fingerprint,
    load_generator,
    make_training_pair,
    parse_mode,
    sample_ratios,
    train,
)

__all__ = [
    "ConfigError",
    "CorpusEntry",
    "CorpusManifest",
    "DEFAULT_GRID",
    "DataError",
    "EvalReport",
    "NumericalError",
    "PairSource",
    "PipelineError",
    "RatioResult",
    "TrainRun",
    "UtteranceResult",
    "baseline",
    "emit_report",
    "evaluate",
    "evaluate_system",
    "generator_fingerprint",
    "generator_system",
    "load_generator",
    "make_training_pair",
    "narrowband_for",
    "oracle_system",
    "parse_mode",
    "parse_ratio",
    "prepare_corpus",
    "ratio_key",
    "render_spectrogram",
    "sample_ratios",
    "spectrogram_image",
    "split_speakers",
    "train",
    "zero_shot_sweep",
]
