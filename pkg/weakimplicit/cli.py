"""
Command-line entry point.

Usage:
    weakimplicit verify [--full]
    weakimplicit synthetic [--misspecified] [--sizes 10,20,50] [--reps 50] [--seed 0]
    weakimplicit segment sweep [--sizes 5,10] [--reps 10] [--corpus DIR]
    weakimplicit segment train --model DIR [--method IM]
    weakimplicit segment infer --model DIR --input DIR --out DIR
    weakimplicit plot results/results.csv
    weakimplicit params show model/crf.params
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .core.constants import METHOD_IM
from .core.exceptions import ImplicitModelError
from .experiments.config import RunConfig, load_run_config
from .experiments.outputs import emit_outputs, plot_results, summarize
from .experiments.segmentation import (
    SEGMENTATION_METHODS,
    ChainSnapshot,
    Segmenter,
    infer_directory,
    run_segmentation,
    train_segmenter,
)
from .experiments.synthetic import run_synthetic
from .experiments.verify import run_verify
from .storage.params import parse_archive

logger = logging.getLogger(__name__)


def _overrides(args: argparse.Namespace, section: str) -> Dict[str, Dict[str, str]]:
    """CLI flags that were given, as INI overrides."""
    run: Dict[str, str] = {}
    settings: Dict[str, str] = {}
    for flag, key in (('seed', 'seed'), ('workers', 'workers'), ('out', 'output_dir')):
        value = getattr(args, flag, None)
        if value is not None:
            run[key] = str(value)
    if getattr(args, 'timing', False):
        run['record_timing'] = 'true'
    for flag, key in (('sizes', 'sizes'), ('reps', 'repetitions'), ('methods', 'methods'),
                      ('corpus', 'corpus_dir'), ('crf_train_size', 'crf_train_size')):
        value = getattr(args, flag, None)
        if value is not None:
            settings[key] = str(value)
    if getattr(args, 'misspecified', False):
        settings['misspecified'] = 'true'
    return {'run': run, section: settings}


def _config(args: argparse.Namespace, experiment: str) -> RunConfig:
    return load_run_config(args.config, experiment, _overrides(args, experiment))


def _print_summary(records) -> None:
    print(f"\n{'method':<16}{'T':>6}{'n':>5}{'test error':>14}{'|train-test|':>14}")
    for s in summarize(records):
        print(f"{s.method:<16}{s.train_size:>6}{s.count:>5}{s.test_mean:>14.4f}{s.gap_mean:>14.4f}")


def _finish(records, config: RunConfig, snapshots: List[ChainSnapshot] = ()) -> int:
    if not records:
        print("No cells to run (empty sweep); nothing written.")
        return 0
    paths = emit_outputs(records, config.output_dir, snapshots, config)
    _print_summary(records)
    print(f"\n✓ {len(records)} records, {len(paths)} files in {config.output_dir}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_verify(full=args.full, seed=args.seed or 0)
    for result in results:
        mark = '✓' if result.passed else '✗'
        print(f"  {mark} {result.name:<32} {result.detail}")
    failed = [r for r in results if not r.passed]
    print(f"\n{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_synthetic(args: argparse.Namespace) -> int:
    config = _config(args, 'synthetic')
    print(f"Synthetic study: sizes {list(config.synthetic.sizes)}, "
          f"{config.synthetic.repetitions} repetitions, misspecified={config.synthetic.misspecified}")
    return _finish(run_synthetic(config), config)


def cmd_segment_sweep(args: argparse.Namespace) -> int:
    config = _config(args, 'segmentation')
    print(f"Segmentation study: sizes {list(config.segmentation.sizes)}, "
          f"{config.segmentation.repetitions} repetitions")
    snapshots: List[ChainSnapshot] = []
    records = run_segmentation(config, sink=snapshots.append)
    return _finish(records, config, snapshots)


def cmd_segment_train(args: argparse.Namespace) -> int:
    config = _config(args, 'segmentation')
    segmenter = train_segmenter(config, args.method, args.train_size)
    segmenter.save(args.model)
    config.write_resolved(args.model)
    print(f"✓ Trained {args.method} segmenter saved to {args.model}")
    return 0


def cmd_segment_infer(args: argparse.Namespace) -> int:
    config = _config(args, 'segmentation')
    segmenter = Segmenter.load(args.model, scan=config.segmentation.scan)
    written = infer_directory(segmenter, args.input, args.out, config.segmentation, config.seed)
    print(f"✓ Wrote {len(written)} label maps to {args.out}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    paths = plot_results(args.results, args.out)
    for path in paths:
        print(f"  ✓ {path}")
    return 0


def cmd_params_show(args: argparse.Namespace) -> int:
    try:
        text = Path(args.path).read_text(encoding='utf-8')
    except OSError as e:
        raise ImplicitModelError(f"Failed to read {args.path}: {e}")
    kind, dims, blocks = parse_archive(text)
    print(f"kind: {kind}")
    for key, value in dims.items():
        print(f"  {key} = {value}")
    for name, values in blocks.items():
        if values.size:
            print(f"  [{name}] {values.size} values, min {np.min(values):.6g}, max {np.max(values):.6g}")
        else:
            print(f"  [{name}] empty")
    return 0


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', type=str, default=None, help='INI configuration file')
    parser.add_argument('--seed', type=int, default=None, help='Run seed')
    parser.add_argument('--workers', type=int, default=None, help='Parallel cells')
    parser.add_argument('--out', type=str, default=None, help='Output directory')
    parser.add_argument('--sizes', type=str, default=None, help='Comma-separated training sizes')
    parser.add_argument('--reps', type=int, default=None, help='Repetitions per training size')
    parser.add_argument('--methods', type=str, default=None, help='Comma-separated method names')
    parser.add_argument('--timing', action='store_true', help='Record wall-clock times in results')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='weakimplicit',
        description='Weak implicit models: learning, experiments and checks',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='More logging (-vv for debug)')
    commands = parser.add_subparsers(dest='command', required=True)

    verify = commands.add_parser('verify', help='Run the oracle-backed checks')
    verify.add_argument('--full', action='store_true', help='Full sample counts for the statistical checks')
    verify.add_argument('--seed', type=int, default=0)
    verify.set_defaults(func=cmd_verify)

    synthetic = commands.add_parser('synthetic', help='Run the synthetic study')
    _add_run_flags(synthetic)
    synthetic.add_argument('--misspecified', action='store_true',
                           help='Per-class generator variances, shared-variance likelihood')
    synthetic.set_defaults(func=cmd_synthetic)

    segment = commands.add_parser('segment', help='Segmentation study and models')
    segment_commands = segment.add_subparsers(dest='segment_command', required=True)

    sweep = segment_commands.add_parser('sweep', help='Run the segmentation study')
    _add_run_flags(sweep)
    sweep.add_argument('--corpus', type=str, default=None, help='Corpus directory (default: synthetic)')
    sweep.add_argument('--crf-train-size', type=int, default=None, help='Images per CRF fit; 0 disables CRFs')
    sweep.set_defaults(func=cmd_segment_sweep)

    train = segment_commands.add_parser('train', help='Train and save one segmenter')
    train.add_argument('--config', type=str, default=None)
    train.add_argument('--seed', type=int, default=None)
    train.add_argument('--corpus', type=str, default=None)
    train.add_argument('--model', type=str, required=True, help='Directory to save the model to')
    train.add_argument('--method', choices=SEGMENTATION_METHODS, default=METHOD_IM)
    train.add_argument('--train-size', type=int, default=None)
    train.set_defaults(func=cmd_segment_train)

    infer = segment_commands.add_parser('infer', help='Label a directory of images')
    infer.add_argument('--config', type=str, default=None)
    infer.add_argument('--seed', type=int, default=None)
    infer.add_argument('--model', type=str, required=True)
    infer.add_argument('--input', type=str, required=True)
    infer.add_argument('--out', type=str, required=True)
    infer.set_defaults(func=cmd_segment_infer)

    plot = commands.add_parser('plot', help='Re-draw the curves of a results file')
    plot.add_argument('results', type=str)
    plot.add_argument('--out', type=str, default=None)
    plot.set_defaults(func=cmd_plot)

    params = commands.add_parser('params', help='Parameter archives')
    params_commands = params.add_subparsers(dest='params_command', required=True)
    show = params_commands.add_parser('show', help='Describe an archive')
    show.add_argument('path', type=str)
    show.set_defaults(func=cmd_params_show)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except ImplicitModelError as e:
        print(f"✗ {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"✗ {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
