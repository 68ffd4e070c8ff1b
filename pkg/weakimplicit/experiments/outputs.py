"""Results CSV, summary table, SVG curves and chain strips of a run."""
import csv
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from ..core.constants import RESULTS_FILE
from ..core.exceptions import OutputError
from ..core.models import ExperimentRecord
from ..storage.images import write_strip
from ..storage.results import read_records, write_records
from .config import RunConfig
from .segmentation import ChainSnapshot

logger = logging.getLogger(__name__)

SUMMARY_FILE = 'summary.csv'
STRIPS_DIR = 'chains'

# Fixed ids and no timestamp, so identical runs give identical files
SVG_RC = {'svg.hashsalt': 'weakimplicit', 'svg.fonttype': 'none'}
SVG_METADATA = {'Date': None}


@dataclass(frozen=True)
class CellSummary:
    """Mean and standard error over the repetitions of one (method, T) cell."""
    experiment: str
    method: str
    train_size: int
    count: int
    diverged: int
    test_mean: float
    test_stderr: float
    gap_mean: float
    gap_stderr: float

    def to_dict(self) -> Dict:
        """Convert to dictionary."""
        return asdict(self)


def _mean_stderr(values: np.ndarray):
    finite = values[~np.isnan(values)]
    if finite.size == 0:
        return math.nan, math.nan
    if finite.size == 1:
        return float(finite[0]), 0.0
    return float(finite.mean()), float(finite.std(ddof=1) / math.sqrt(finite.size))


def summarize(records: Sequence[ExperimentRecord]) -> List[CellSummary]:
    """
    Aggregate records per (experiment, method, train size).

    Diverged rows (nan errors) are counted but left out of the means.
    Cells keep the order in which experiments and methods first appear;
    sizes ascend.
    """
    groups: Dict[tuple, List[ExperimentRecord]] = {}
    for record in records:
        groups.setdefault((record.experiment, record.method, record.train_size), []).append(record)
    order = {}
    for record in records:
        order.setdefault((record.experiment, record.method), len(order))

    summaries = []
    for (experiment, method, T), rows in sorted(groups.items(), key=lambda kv: (order[kv[0][:2]], kv[0][2])):
        test = np.array([r.test_error for r in rows], dtype=float)
        gap = np.array([r.risk_diff for r in rows], dtype=float)
        test_mean, test_stderr = _mean_stderr(test)
        gap_mean, gap_stderr = _mean_stderr(gap)
        summaries.append(CellSummary(
            experiment=experiment,
            method=method,
            train_size=T,
            count=len(rows),
            diverged=int(np.isnan(test).sum()),
            test_mean=test_mean,
            test_stderr=test_stderr,
            gap_mean=gap_mean,
            gap_stderr=gap_stderr,
        ))
    return summaries


def write_summary(path: Union[str, Path], summaries: Sequence[CellSummary]) -> None:
    fields = list(CellSummary.__dataclass_fields__)
    try:
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.DictWriter(f, fieldnames=fields, lineterminator='\n')
            writer.writeheader()
            for summary in summaries:
                writer.writerow(summary.to_dict())
    except OSError as e:
        raise OutputError(f"Failed to write summary to {path}: {e}")


def plot_experiment(summaries: Sequence[CellSummary], experiment: str, path: Union[str, Path]) -> None:
    """
    Two panels, test error and |train - test| against training size,
    one line with standard-error bars per method.
    """
    cells = [s for s in summaries if s.experiment == experiment]
    methods = list(dict.fromkeys(s.method for s in cells))
    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(10, 4), layout='constrained')
        axes = fig.subplots(1, 2)
        for method in methods:
            rows = [s for s in cells if s.method == method]
            sizes = [s.train_size for s in rows]
            axes[0].errorbar(sizes, [s.test_mean for s in rows], yerr=[s.test_stderr for s in rows],
                             marker='o', capsize=3, label=method)
            axes[1].errorbar(sizes, [s.gap_mean for s in rows], yerr=[s.gap_stderr for s in rows],
                             marker='o', capsize=3, label=method)
        for ax, title in zip(axes, ('test error', 'risk difference |train - test|')):
            ax.set_xscale('log')
            ax.set_xlabel('training size T')
            ax.set_title(title)
            ax.grid(True, alpha=0.3)
        axes[0].legend()
        fig.suptitle(experiment)
        try:
            fig.savefig(path, format='svg', metadata=SVG_METADATA)
        except OSError as e:
            raise OutputError(f"Failed to write plot {path}: {e}")


def write_strips(snapshots: Sequence[ChainSnapshot], directory: Union[str, Path]) -> List[Path]:
    """One PNG strip per snapshot: y^, x~, y~, x*, y*, decoded."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"Failed to create {directory}: {e}")
    paths = []
    for snapshot in snapshots:
        path = directory / f'{snapshot.name}.png'
        write_strip(path, snapshot.panels())
        paths.append(path)
    return paths


def _prepare(output_dir: Union[str, Path]) -> Path:
    output_dir = Path(output_dir)
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"Failed to create output directory {output_dir}: {e}")
    return output_dir


def plot_summaries(summaries: Sequence[CellSummary], output_dir: Union[str, Path]) -> List[Path]:
    """One SVG per experiment, named after it."""
    output_dir = _prepare(output_dir)
    paths = []
    for experiment in dict.fromkeys(s.experiment for s in summaries):
        path = output_dir / f'{experiment}.svg'
        plot_experiment(summaries, experiment, path)
        paths.append(path)
    return paths


def emit_outputs(
    records: Sequence[ExperimentRecord],
    output_dir: Union[str, Path],
    snapshots: Sequence[ChainSnapshot] = (),
    config: Optional[RunConfig] = None,
) -> List[Path]:
    """
    Write everything a run produces.

    ``results.csv``, ``summary.csv``, one SVG per experiment, the chain
    strips under ``chains/`` and, when given, the resolved ``config.ini``.

    Returns:
        Paths written

    Raises:
        ValueError: no records
        OutputError: directory or file not writable
    """
    if not records:
        raise ValueError("no records to emit")
    output_dir = _prepare(output_dir)
    results_path = output_dir / RESULTS_FILE
    write_records(results_path, records)
    summaries = summarize(records)
    summary_path = output_dir / SUMMARY_FILE
    write_summary(summary_path, summaries)
    paths = [results_path, summary_path]
    paths += plot_summaries(summaries, output_dir)
    if snapshots:
        paths += write_strips(snapshots, output_dir / STRIPS_DIR)
    if config is not None:
        paths.append(config.write_resolved(output_dir))
    logger.info("wrote %d files to %s", len(paths), output_dir)
    return paths


def plot_results(results_path: Union[str, Path], output_dir: Optional[Union[str, Path]] = None) -> List[Path]:
    """Re-draw the SVG curves of an existing results file."""
    results_path = Path(results_path)
    records = read_records(results_path)
    if not records:
        raise ValueError(f"{results_path} holds no records")
    return plot_summaries(summarize(records), output_dir or results_path.parent)
