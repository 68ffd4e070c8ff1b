"""External corpus directory helpers."""
import os
from pathlib import Path
from typing import List, NamedTuple, Optional, Union

# Environment variable naming a default corpus directory
CORPUS_ENV = 'WEAKIMPLICIT_CORPUS'

IMAGES_SUBDIR = 'images'
LABELS_SUBDIR = 'labels'
UNARY_SUBDIR = 'unary'


class CorpusEntry(NamedTuple):
    """Files of one annotated image."""
    name: str
    image_path: Path
    label_path: Path
    unary_path: Optional[Path]


def get_data_dir() -> Path:
    """Get the package data directory."""
    return Path(__file__).parent


def get_corpus_dir(path: Optional[Union[str, Path]] = None) -> Optional[Path]:
    """
    Resolve the corpus directory.

    Args:
        path: explicit directory; falls back to $WEAKIMPLICIT_CORPUS

    Returns:
        Directory path, or None when neither is set
    """
    if path is not None:
        return Path(path)
    env = os.environ.get(CORPUS_ENV)
    return Path(env) if env else None


def has_corpus(path: Optional[Union[str, Path]] = None) -> bool:
    """
    Check whether a directory holds an image corpus.

    Example:
        if has_corpus('data/backgrounds'):
            entries = list_corpus('data/backgrounds')
    """
    directory = get_corpus_dir(path)
    return directory is not None and (directory / IMAGES_SUBDIR).is_dir() and (directory / LABELS_SUBDIR).is_dir()


def list_corpus(path: Optional[Union[str, Path]] = None) -> List[CorpusEntry]:
    """
    List image/label-map pairs of a corpus directory.

    Layout: ``images/<name>.png`` with ``labels/<name>.png`` and, optionally,
    precomputed unary maps in ``unary/<name>.png``. Images without a label
    map are skipped.

    Returns:
        Entries sorted by name
    """
    directory = get_corpus_dir(path)
    if directory is None or not has_corpus(directory):
        return []

    entries = []
    for image_path in sorted((directory / IMAGES_SUBDIR).glob('*.png')):
        label_path = directory / LABELS_SUBDIR / image_path.name
        if not label_path.exists():
            continue
        unary_path = directory / UNARY_SUBDIR / image_path.name
        entries.append(CorpusEntry(image_path.stem, image_path, label_path, unary_path if unary_path.exists() else None))
    return entries
