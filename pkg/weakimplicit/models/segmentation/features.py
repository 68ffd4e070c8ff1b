"""Statistic vectors of both segmentation models behind one entry point."""
from typing import Optional

import numpy as np

from ...core.constants import SEG_NUM_LABELS, SEG_PALETTE_SIZE
from .color import color_features
from .crf import crf_features
from .observation import SegObservation


def seg_features(
    which: str,
    x: SegObservation,
    y: np.ndarray,
    g: Optional[np.ndarray] = None,
    num_labels: int = SEG_NUM_LABELS,
    palette_size: int = SEG_PALETTE_SIZE,
) -> np.ndarray:
    """
    Statistics whose inner product with the parameter vector is the model energy.

    Args:
        which: 'posterior' (grid CRF) or 'likelihood' (colour model)
        x: observation; the CRF also reads its unary map
        y: (H, W) labeling
        g: (H, W) colour numbers, required for the likelihood
        num_labels: |L|
        palette_size: |G|

    Returns:
        Statistic vector in the layout of the matching parameter class
    """
    if which == 'posterior':
        return crf_features(x, y, num_labels)
    if which == 'likelihood':
        if g is None:
            raise ValueError("likelihood statistics need the colour numbers g")
        return color_features(x.image, y, g, num_labels, palette_size)
    raise ValueError(f"which must be 'posterior' or 'likelihood', got {which!r}")
