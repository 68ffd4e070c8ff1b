"""PNG images, palette label maps and chain strips (Pillow)."""
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from PIL import Image

from ..core.exceptions import CorpusError, OutputError

# Label colours for palette PNGs (label index -> RGB)
LABEL_PALETTE = np.array([
    [230, 25, 75], [60, 180, 75], [0, 130, 200], [255, 225, 25],
    [145, 30, 180], [70, 240, 240], [245, 130, 48], [128, 128, 128],
], dtype=np.uint8)

PathLike = Union[str, Path]


def read_image(path: PathLike) -> np.ndarray:
    """RGB image as (H, W, 3) floats in [0, 1]."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert('RGB'), dtype=float) / 255.0
    except OSError as e:
        raise CorpusError(f"Failed to read image {path}: {e}")


def write_image(path: PathLike, image: np.ndarray) -> None:
    data = np.clip(np.round(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)
    try:
        Image.fromarray(data).save(path)
    except OSError as e:
        raise OutputError(f"Failed to write image {path}: {e}")


def read_label_map(path: PathLike) -> np.ndarray:
    """
    Label map from a single-channel PNG.

    Palette images yield their palette indices, grayscale images their
    values.
    """
    try:
        with Image.open(path) as im:
            if im.mode not in ('P', 'L'):
                raise CorpusError(f"label map {path} must be a palette or grayscale PNG, got mode {im.mode}")
            return np.asarray(im, dtype=np.int64)
    except OSError as e:
        raise CorpusError(f"Failed to read label map {path}: {e}")


def write_label_map(path: PathLike, labels: np.ndarray) -> None:
    """Write labels as a palette PNG whose indices are the labels."""
    im = Image.fromarray(np.asarray(labels, dtype=np.uint8))
    palette = np.zeros((256, 3), dtype=np.uint8)
    palette[:len(LABEL_PALETTE)] = LABEL_PALETTE
    im.putpalette(palette.ravel().tolist())
    try:
        im.save(path)
    except OSError as e:
        raise OutputError(f"Failed to write label map {path}: {e}")


def label_map_to_rgb(labels: np.ndarray) -> np.ndarray:
    """Colour a label map with the label palette, floats in [0, 1]."""
    return LABEL_PALETTE[np.asarray(labels) % len(LABEL_PALETTE)] / 255.0


def write_strip(path: PathLike, panels: Sequence[np.ndarray], scale: int = 4, gap: int = 2) -> None:
    """
    Lay RGB panels of equal size side by side and save as PNG.

    Panels are (H, W, 3) floats in [0, 1]; each is enlarged ``scale``
    times with nearest-neighbour sampling and separated by white gaps.
    """
    if not panels:
        raise ValueError("a strip needs at least one panel")
    h, w = panels[0].shape[:2]
    spacer = np.ones((h * scale, gap, 3))
    pieces = []
    for k, panel in enumerate(panels):
        if panel.shape[:2] != (h, w):
            raise ValueError("strip panels must share one size")
        if k:
            pieces.append(spacer)
        pieces.append(np.kron(panel, np.ones((scale, scale, 1))))
    write_image(path, np.concatenate(pieces, axis=1))
