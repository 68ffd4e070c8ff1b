"""Results CSV."""
import csv
from pathlib import Path
from typing import List, Sequence, Union

from ..core.constants import RESULTS_HEADER
from ..core.exceptions import ArchiveFormatError, OutputError
from ..core.models import ExperimentRecord

_INT_FIELDS = ('train_size', 'repetition', 'seed')
_FLOAT_FIELDS = ('train_error', 'test_error', 'risk_diff', 'wall_time')


def _cell(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def write_records(path: Union[str, Path], records: Sequence[ExperimentRecord]) -> None:
    """
    Write records with the fixed results header.

    Raises:
        OutputError: file cannot be written
    """
    try:
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(RESULTS_HEADER)
            for record in records:
                row = record.to_dict()
                writer.writerow([_cell(row[name]) for name in RESULTS_HEADER])
    except OSError as e:
        raise OutputError(f"Failed to write results to {path}: {e}")


def read_records(path: Union[str, Path]) -> List[ExperimentRecord]:
    """
    Read a results file back, recomputing every risk difference.

    Raises:
        ArchiveFormatError: wrong header, malformed row, or a risk_diff that
            is not |train_error - test_error|
    """
    try:
        with open(path, newline='', encoding='utf-8') as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise ArchiveFormatError(f"Failed to read results from {path}: {e}")
    if not rows or tuple(rows[0]) != RESULTS_HEADER:
        raise ArchiveFormatError(f"{path} does not start with the results header")

    records = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(RESULTS_HEADER):
            raise ArchiveFormatError(f"{path}:{line_no}: expected {len(RESULTS_HEADER)} fields")
        values = dict(zip(RESULTS_HEADER, row))
        try:
            for name in _INT_FIELDS:
                values[name] = int(values[name])
            for name in _FLOAT_FIELDS:
                values[name] = float(values[name])
            records.append(ExperimentRecord(**values))
        except ValueError as e:
            raise ArchiveFormatError(f"{path}:{line_no}: {e}")
    return records
