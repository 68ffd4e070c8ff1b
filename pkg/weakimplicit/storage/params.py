"""
Versioned text archive for parameter sets.

Layout::

    weakimplicit-params 1 kind=seg-crf labels=3 edge_types=4
    [q] 9
    <9 reals>
    [a.horizontal] 9
    <9 reals>
    ...

Reals are written with 17 significant digits, which round-trips every
double exactly.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from ..core.constants import ARCHIVE_MAGIC, ARCHIVE_VERSION
from ..core.exceptions import ArchiveFormatError, ImplicitModelError, OutputError
from ..models.segmentation.color import GenColorParams
from ..models.segmentation.crf import SegCrfParams
from ..models.synthetic import ClassGaussParams, QuadLogRegParams

logger = logging.getLogger(__name__)

VECTOR_KIND = 'vector'

ARCHIVE_KINDS: Dict[str, Any] = {
    cls.KIND: cls for cls in (QuadLogRegParams, ClassGaussParams, SegCrfParams, GenColorParams)
}


def register_kind(cls: Any) -> Any:
    """Make a parameter class with KIND/to_blocks/from_blocks archivable."""
    ARCHIVE_KINDS[cls.KIND] = cls
    return cls


def _describe(params: Any) -> Tuple[str, Dict[str, int], Dict[str, np.ndarray]]:
    if isinstance(params, np.ndarray) or isinstance(params, (list, tuple)):
        theta = np.asarray(params, dtype=float).ravel()
        return VECTOR_KIND, {'size': theta.size}, ({'theta': theta} if theta.size else {})
    kind = getattr(params, 'KIND', None)
    if kind not in ARCHIVE_KINDS:
        raise ArchiveFormatError(f"cannot archive parameters of type {type(params).__name__}")
    described = params.to_blocks()
    return kind, described['dims'], described['blocks']


def format_archive(params: Any) -> str:
    """Archive text of a parameter set."""
    kind, dims, blocks = _describe(params)
    header = [ARCHIVE_MAGIC, str(ARCHIVE_VERSION), f'kind={kind}']
    header += [f'{key}={int(value)}' for key, value in dims.items()]
    lines = [' '.join(header)]
    for name, values in blocks.items():
        values = np.asarray(values, dtype=float).ravel()
        lines.append(f'[{name}] {values.size}')
        lines.append(' '.join(format(float(v), '.17g') for v in values))
    return '\n'.join(lines) + '\n'


def save_params(path: Union[str, Path], params: Any) -> None:
    """
    Write a parameter set.

    Args:
        path: target file
        params: a raw vector or an archivable parameter object

    Raises:
        OutputError: file cannot be written
    """
    text = format_archive(params)
    try:
        Path(path).write_text(text, encoding='utf-8')
    except OSError as e:
        raise OutputError(f"Failed to write parameters to {path}: {e}")


def _parse_header(line: str) -> Tuple[str, Dict[str, int]]:
    tokens = line.split()
    if len(tokens) < 3 or tokens[0] != ARCHIVE_MAGIC:
        raise ArchiveFormatError("not a parameter archive")
    if tokens[1] != str(ARCHIVE_VERSION):
        raise ArchiveFormatError(f"unsupported archive version {tokens[1]} (expected {ARCHIVE_VERSION})")
    fields = dict(token.split('=', 1) for token in tokens[2:] if '=' in token)
    kind = fields.pop('kind', None)
    if kind is None:
        raise ArchiveFormatError("archive header lacks a kind")
    try:
        dims = {key: int(value) for key, value in fields.items()}
    except ValueError as e:
        raise ArchiveFormatError(f"bad dimension in header: {e}")
    return kind, dims


def parse_archive(text: str) -> Tuple[str, Dict[str, int], Dict[str, np.ndarray]]:
    """Split archive text into (kind, dims, blocks)."""
    lines: List[str] = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ArchiveFormatError("empty archive")
    kind, dims = _parse_header(lines[0])
    blocks: Dict[str, np.ndarray] = {}
    i = 1
    while i < len(lines):
        head = lines[i].split()
        if len(head) != 2 or not (head[0].startswith('[') and head[0].endswith(']')):
            raise ArchiveFormatError(f"expected a block header, got {lines[i]!r}")
        name = head[0][1:-1]
        try:
            size = int(head[1])
            values = np.array([float(v) for v in lines[i + 1].split()]) if size and i + 1 < len(lines) else np.array([])
        except ValueError as e:
            raise ArchiveFormatError(f"bad values in block {name}: {e}")
        if values.size != size:
            raise ArchiveFormatError(f"block {name} declares {size} values, found {values.size}")
        blocks[name] = values
        i += 2 if size else 1
    return kind, dims, blocks


def load_params(path: Union[str, Path]) -> Any:
    """
    Read a parameter set written by ``save_params``.

    Returns:
        The raw vector for kind 'vector', else the parameter object

    Raises:
        ArchiveFormatError: malformed file, version or dimension mismatch
    """
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ArchiveFormatError(f"Failed to read parameters from {path}: {e}")
    kind, dims, blocks = parse_archive(text)
    if kind == VECTOR_KIND:
        theta = blocks.get('theta', np.array([]))
        if theta.size != dims.get('size', 0):
            raise ArchiveFormatError(f"vector declares size {dims.get('size')}, found {theta.size}")
        return theta
    if kind not in ARCHIVE_KINDS:
        raise ArchiveFormatError(f"unknown parameter kind {kind!r}")
    try:
        return ARCHIVE_KINDS[kind].from_blocks(dims, blocks)
    except (KeyError, ValueError, ImplicitModelError) as e:
        raise ArchiveFormatError(f"archive of kind {kind!r} does not match its dimensions: {e}")
