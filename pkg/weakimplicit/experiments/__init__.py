"""Experiment runners, run configuration, outputs and desk checks."""

from weakimplicit.experiments.config import (
    RunConfig,
    SegmentationSettings,
    SyntheticSettings,
    default_methods,
    load_run_config,
)
from weakimplicit.experiments.synthetic import (
    SYNTHETIC_METHODS,
    SyntheticCell,
    register_method,
    run_synthetic,
)
from weakimplicit.experiments.segmentation import (
    ChainSnapshot,
    Segmenter,
    build_corpus,
    fit_crf,
    hamming_error,
    infer_directory,
    run_segmentation,
    train_segmenter,
)
from weakimplicit.experiments.outputs import CellSummary, emit_outputs, plot_results, summarize
from weakimplicit.experiments.verify import CheckResult, run_verify

__all__ = [
    'RunConfig',
    'SegmentationSettings',
    'SyntheticSettings',
    'default_methods',
    'load_run_config',
    'SYNTHETIC_METHODS',
    'SyntheticCell',
    'register_method',
    'run_synthetic',
    'ChainSnapshot',
    'Segmenter',
    'build_corpus',
    'fit_crf',
    'hamming_error',
    'infer_directory',
    'run_segmentation',
    'train_segmenter',
    'CellSummary',
    'emit_outputs',
    'plot_results',
    'summarize',
    'CheckResult',
    'run_verify',
]
