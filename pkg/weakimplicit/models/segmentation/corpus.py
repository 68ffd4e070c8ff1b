"""
Segmentation corpora: a synthetic desk-scale generator and a loader for
external image/label-map directories.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from scipy.ndimage import gaussian_filter

from ...core.constants import SEG_IMAGE_SIZE, SEG_NUM_LABELS
from ...core.exceptions import CorpusError
from ...core.prob import RngStream
from ...data import list_corpus
from ...storage.images import read_image, read_label_map
from .observation import SegObservation

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SegExample:
    """One annotated image; ``unary`` holds a precomputed unary map when available."""
    name: str
    image: np.ndarray
    labels: np.ndarray
    unary: Optional[np.ndarray] = None


@dataclass(frozen=True)
class CorpusConfig:
    """Synthetic corpus settings."""
    image_size: int = SEG_IMAGE_SIZE
    num_labels: int = SEG_NUM_LABELS
    smoothness: float = 4.0          # std. dev. of the label-field blur, pixels
    colours_per_label: int = 2
    colour_spread: float = 0.25      # base colours drawn from 0.5 +- spread
    noise: float = 0.12              # additive per-pixel colour noise


def synthetic_corpus(n: int, config: CorpusConfig, rng: RngStream) -> List[SegExample]:
    """
    Draw n images with smooth label regions and noisy per-label colours.

    Labels come from the argmax of blurred Gaussian noise fields. Each
    label owns a few base colours (shared by the whole corpus); a second
    blurred field picks the base colour per pixel, and Gaussian noise is
    added before clamping to [0, 1].
    """
    L, K, size = config.num_labels, config.colours_per_label, config.image_size
    palette_rng = rng.child(0)
    base = 0.5 + config.colour_spread * (2.0 * palette_rng.uniform((L, K, 3)) - 1.0)

    examples = []
    for k in range(n):
        r = rng.child(1, k)
        fields = np.stack([
            gaussian_filter(r.normal(size=(size, size)), config.smoothness, mode='wrap') for _ in range(L)
        ])
        labels = np.argmax(fields, axis=0)
        choice_field = gaussian_filter(r.normal(size=(size, size)), config.smoothness, mode='wrap')
        ranks = np.argsort(np.argsort(choice_field.ravel())).reshape(size, size)
        choice = np.minimum(ranks * K // ranks.size, K - 1)
        image = base[labels, choice] + config.noise * r.normal(size=(size, size, 3))
        examples.append(SegExample(f'synthetic-{k:04d}', np.clip(image, 0.0, 1.0), labels))
    return examples


def load_corpus(directory: Union[str, Path], limit: Optional[int] = None) -> List[SegExample]:
    """
    Read an external corpus (``images/``, ``labels/``, optional ``unary/``).

    Raises:
        CorpusError: directory missing or empty, unreadable file, or an
            image whose label map has a different size
    """
    entries = list_corpus(directory)
    if not entries:
        raise CorpusError(f"no image/label-map pairs under {directory}")
    examples = []
    for entry in entries[:limit]:
        image = read_image(entry.image_path)
        labels = read_label_map(entry.label_path)
        unary = read_label_map(entry.unary_path) if entry.unary_path is not None else None
        if labels.shape != image.shape[:2] or (unary is not None and unary.shape != labels.shape):
            raise CorpusError(f"{entry.name}: image and label map sizes differ")
        examples.append(SegExample(entry.name, image, labels, unary))
    logger.info("loaded %d examples from %s", len(examples), directory)
    return examples


class SegDataset:
    """Observations (image plus unary map) and label maps of a training set."""

    def __init__(self, xs: Sequence[SegObservation], ys: Sequence[np.ndarray]):
        if len(xs) != len(ys):
            raise ValueError("observations and labelings differ in number")
        self.xs = list(xs)
        self.ys = list(ys)

    def __len__(self) -> int:
        return len(self.xs)

    @classmethod
    def from_examples(
        cls,
        examples: Sequence[SegExample],
        unary_fn: Callable[[np.ndarray], np.ndarray],
    ) -> 'SegDataset':
        """Observe every example through its precomputed unary map, or through ``unary_fn``."""
        xs = [
            SegObservation(ex.image, ex.unary if ex.unary is not None else unary_fn(ex.image))
            for ex in examples
        ]
        return cls(xs, [ex.labels for ex in examples])
