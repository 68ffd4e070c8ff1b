"""Observation type of the segmentation models."""
from dataclasses import dataclass

import numpy as np

from ...core.exceptions import DimensionMismatchError


@dataclass(frozen=True, eq=False)
class SegObservation:
    """
    An image together with its black-box unary label map z(x).

    image: (H, W, 3) floats in [0, 1]; unary: (H, W) label indices.
    """
    image: np.ndarray
    unary: np.ndarray

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise DimensionMismatchError(f"expected an (H, W, 3) image, got {self.image.shape}")
        if self.unary.shape != self.image.shape[:2]:
            raise DimensionMismatchError(
                f"unary map {self.unary.shape} does not match image {self.image.shape[:2]}"
            )

    @property
    def shape(self):
        return self.image.shape[:2]

    @property
    def pixels(self) -> np.ndarray:
        """Image as (H*W, 3)."""
        return self.image.reshape(-1, 3)
