"""Pixel-wise random forest used as the black-box unary predictor z(x)."""
import logging
from pathlib import Path
from typing import Sequence, Union

import joblib
import numpy as np
from scipy.ndimage import uniform_filter
from sklearn.ensemble import RandomForestClassifier

from ...core.constants import FOREST_DEPTH, FOREST_TREES, SEG_NUM_LABELS
from ...core.exceptions import DimensionMismatchError, OutputError

logger = logging.getLogger(__name__)

NUM_PIXEL_FEATURES = 9


def pixel_features(image: np.ndarray) -> np.ndarray:
    """
    Per-pixel features: RGB, 3x3 mean and 3x3 variance per channel.

    Returns:
        (H*W, 9) array
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 3 or image.shape[2] != 3:
        raise DimensionMismatchError(f"expected an (H, W, 3) image, got {image.shape}")
    mean = uniform_filter(image, size=(3, 3, 1), mode='reflect')
    second = uniform_filter(image ** 2, size=(3, 3, 1), mode='reflect')
    var = np.maximum(second - mean ** 2, 0.0)
    return np.concatenate([image, mean, var], axis=2).reshape(-1, NUM_PIXEL_FEATURES)


class UnaryPredictor:
    """
    Trained forest producing a label map per image.

    Prediction is the majority vote of the trees, ties to the smallest
    label; no randomness is involved.
    """

    def __init__(self, forest: RandomForestClassifier, num_labels: int = SEG_NUM_LABELS):
        self.forest = forest
        self.num_labels = num_labels

    def predict(self, image: np.ndarray) -> np.ndarray:
        features = pixel_features(image)
        votes = np.zeros((features.shape[0], self.num_labels))
        rows = np.arange(features.shape[0])
        classes = self.forest.classes_.astype(int)
        for tree in self.forest.estimators_:
            votes[rows, classes[tree.predict(features).astype(int)]] += 1
        return np.argmax(votes, axis=1).reshape(image.shape[:2])

    __call__ = predict

    def accuracy(self, images: Sequence[np.ndarray], labelings: Sequence[np.ndarray]) -> float:
        """Fraction of correctly predicted pixels over a set of images."""
        hits = sum(int((self.predict(x) == y).sum()) for x, y in zip(images, labelings))
        total = sum(int(np.size(y)) for y in labelings)
        return hits / total

    def save(self, path: Union[str, Path]) -> None:
        try:
            joblib.dump({'forest': self.forest, 'num_labels': self.num_labels}, path)
        except OSError as e:
            raise OutputError(f"Failed to write forest: {e}")

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'UnaryPredictor':
        payload = joblib.load(path)
        return cls(payload['forest'], payload['num_labels'])


def unary_train(
    images: Sequence[np.ndarray],
    labelings: Sequence[np.ndarray],
    num_labels: int = SEG_NUM_LABELS,
    n_trees: int = FOREST_TREES,
    max_depth: int = FOREST_DEPTH,
    seed: int = 0,
) -> UnaryPredictor:
    """
    Fit the pixel forest on training images and their label maps.

    Raises:
        ValueError: empty training set
        DimensionMismatchError: an image and its label map differ in shape
    """
    if len(images) == 0 or len(images) != len(labelings):
        raise ValueError("need a nonempty training set with one label map per image")
    features, targets = [], []
    for image, labels in zip(images, labelings):
        if np.shape(labels) != np.shape(image)[:2]:
            raise DimensionMismatchError(f"label map {np.shape(labels)} vs image {np.shape(image)}")
        features.append(pixel_features(image))
        targets.append(np.ravel(labels))
    forest = RandomForestClassifier(n_estimators=n_trees, max_depth=max_depth, random_state=seed, n_jobs=1)
    forest.fit(np.concatenate(features), np.concatenate(targets))
    logger.debug("trained forest on %d images", len(images))
    return UnaryPredictor(forest, num_labels)


def unary_predict(predictor: UnaryPredictor, image: np.ndarray) -> np.ndarray:
    """Label map z(x) of an image."""
    return predictor.predict(image)
