"""
Generative colour model with latent colour numbers.

p(x, g | y) ~ exp[ sum_i h(y_i, g_i) + c ||x_i||^2 + <d(g_i), x_i>
                   + e sum_{(i,j) in E, y_i = y_j} ||x_i - x_j||^2 ]

Colours live in [0, 1]^3. p(x|y) marginalizes g; samplers realize the
marginalization by drawing g alongside x.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from ...core.constants import GAUSS_EPS, SEG_NUM_LABELS, SEG_PALETTE_SIZE
from ...core.exceptions import DimensionMismatchError, ImproperDistributionError
from ...core.prob import ExpFamConditional, RngStream, sample_rows
from .grid import GridGraph, grid_for
from .observation import SegObservation

logger = logging.getLogger(__name__)

# Initial precision and coupling of a fresh colour model
INIT_C = -10.0
INIT_E = -1.0


@dataclass(frozen=True, eq=False)
class GenColorParams:
    """h[label, colour number], c, d[colour number] (3-vectors) and e."""
    h: np.ndarray
    c: float
    d: np.ndarray
    e: float

    KIND = 'gen-color'

    def __post_init__(self):
        if self.d.ndim != 2 or self.d.shape[1] != 3 or self.h.shape[1] != self.d.shape[0]:
            raise DimensionMismatchError(f"inconsistent colour tables h{self.h.shape} d{self.d.shape}")
        self.check_proper()

    def check_proper(self) -> None:
        """
        Raises:
            ImproperDistributionError: some pixel conditional is not a proper Gaussian
        """
        if not self.c < 0 or not self.e <= 0:
            raise ImproperDistributionError(f"improper distribution: need c < 0 and e <= 0, got c={self.c}, e={self.e}")

    @property
    def num_labels(self) -> int:
        return self.h.shape[0]

    @property
    def palette_size(self) -> int:
        return self.d.shape[0]

    @classmethod
    def initial(
        cls,
        rng: RngStream,
        num_labels: int = SEG_NUM_LABELS,
        palette_size: int = SEG_PALETTE_SIZE,
    ) -> 'GenColorParams':
        """Flat h, fixed c and e, colour means drawn uniformly from the unit cube."""
        means = rng.uniform((palette_size, 3))
        return cls(np.zeros((num_labels, palette_size)), INIT_C, -2.0 * INIT_C * means, INIT_E)

    @staticmethod
    def dimension(num_labels: int, palette_size: int) -> int:
        return num_labels * palette_size + 3 * palette_size + 2

    @classmethod
    def from_vector(
        cls,
        theta: Sequence[float],
        num_labels: int = SEG_NUM_LABELS,
        palette_size: int = SEG_PALETTE_SIZE,
    ) -> 'GenColorParams':
        theta = np.asarray(theta, dtype=float)
        L, G = num_labels, palette_size
        if theta.size != cls.dimension(L, G):
            raise DimensionMismatchError(f"expected {cls.dimension(L, G)} colour parameters, got {theta.size}")
        h = theta[:L * G].reshape(L, G).copy()
        c = float(theta[L * G])
        d = theta[L * G + 1:L * G + 1 + 3 * G].reshape(G, 3).copy()
        return cls(h, c, d, float(theta[-1]))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.h.ravel(), [self.c], self.d.ravel(), [self.e]])

    def to_blocks(self):
        return {
            'dims': {'labels': self.num_labels, 'palette': self.palette_size},
            'blocks': {'h': self.h.ravel(), 'c': np.array([self.c]), 'd': self.d.ravel(), 'e': np.array([self.e])},
        }

    @classmethod
    def from_blocks(cls, dims, blocks) -> 'GenColorParams':
        L, G = int(dims['labels']), int(dims['palette'])
        return cls(
            np.asarray(blocks['h']).reshape(L, G),
            float(blocks['c'][0]),
            np.asarray(blocks['d']).reshape(G, 3),
            float(blocks['e'][0]),
        )


def colour_responsibilities(params: GenColorParams, pixels: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """p(g_i | x_i, y_i) for every pixel, shape (n, |G|)."""
    return softmax(params.h[labels] + pixels @ params.d.T, axis=1)


def _same_label_neighbours(graph: GridGraph, labels: np.ndarray, sites: np.ndarray):
    nbr = graph.neighbor_index[sites]
    mask = nbr >= 0
    safe = np.where(mask, nbr, 0)
    same = mask & (labels[safe] == labels[sites][:, None])
    return safe, same


def color_gibbs_sweep(
    params: GenColorParams,
    labeling: np.ndarray,
    image: np.ndarray,
    colours: np.ndarray,
    rng: RngStream,
    sweeps: int = 1,
    scan: str = 'raster',
    graph: Optional[GridGraph] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Alternate per-pixel draws of the colour number g_i and the colour x_i.

    g_i ~ exp[h(y_i, g) + <d(g), x_i>]; x_i is Gaussian with precision
    -2 (c + e n_i) and mean (d(g_i) - 2 e S_i) / (-2 (c + e n_i)), where n_i
    and S_i count and sum the same-label neighbours; draws are clamped to
    [0, 1].

    Args:
        params: colour model parameters
        labeling: (H, W) labels
        image: (H, W, 3) starting image (not modified)
        colours: (H, W) starting colour numbers (not modified)
        rng: random stream
        sweeps: number of full sweeps
        scan: 'raster' or 'blocked', as for the CRF sampler
        graph: grid graph of the image shape

    Returns:
        (image, colours) after the sweeps

    Raises:
        ImproperDistributionError: parameters violate c < 0, e <= 0
    """
    params.check_proper()
    if image.shape[:2] != labeling.shape or colours.shape != labeling.shape:
        raise DimensionMismatchError(
            f"labeling {labeling.shape}, image {image.shape[:2]} and colours {colours.shape} differ"
        )
    graph = graph or grid_for(*labeling.shape)
    labels = np.asarray(labeling, dtype=np.int64).ravel()
    pixels = np.array(image, dtype=float).reshape(-1, 3)
    g = np.array(colours, dtype=np.int64).ravel()
    groups = graph.scan_order(scan)
    for _ in range(sweeps):
        for sites in groups:
            g[sites] = sample_rows(colour_responsibilities(params, pixels[sites], labels[sites]), rng)
            safe, same = _same_label_neighbours(graph, labels, sites)
            n = same.sum(axis=1)
            neighbour_sum = (pixels[safe] * same[:, :, None]).sum(axis=1)
            precision = -2.0 * (params.c + params.e * n)
            mean = (params.d[g[sites]] - 2.0 * params.e * neighbour_sum) / precision[:, None]
            draws = mean + rng.normal(size=mean.shape) / np.sqrt(precision)[:, None]
            pixels[sites] = np.clip(draws, 0.0, 1.0)
    return pixels.reshape(image.shape), g.reshape(labeling.shape)


def _pair_term(pixels: np.ndarray, labels: np.ndarray, graph: GridGraph) -> float:
    total = 0.0
    for src, dst in graph.edges.values():
        same = labels[src] == labels[dst]
        total += float(((pixels[src[same]] - pixels[dst[same]]) ** 2).sum())
    return total


def color_features(
    image: np.ndarray,
    labeling: np.ndarray,
    colours: np.ndarray,
    num_labels: int = SEG_NUM_LABELS,
    palette_size: int = SEG_PALETTE_SIZE,
    graph: Optional[GridGraph] = None,
) -> np.ndarray:
    """
    Sufficient statistics of the complete colour model, laid out like
    ``GenColorParams.to_vector``: (label, colour number) counts, sum of
    ||x_i||^2, per-colour-number sums of x_i, same-label squared differences.
    """
    L, G = num_labels, palette_size
    graph = graph or grid_for(*labeling.shape)
    labels = np.asarray(labeling, dtype=np.int64).ravel()
    g = np.asarray(colours, dtype=np.int64).ravel()
    pixels = np.asarray(image, dtype=float).reshape(-1, 3)
    h = np.bincount(labels * G + g, minlength=L * G).astype(float)
    d = np.zeros((G, 3))
    np.add.at(d, g, pixels)
    return np.concatenate([h, [float((pixels ** 2).sum())], d.ravel(), [_pair_term(pixels, labels, graph)]])


def expected_color_features(
    params: GenColorParams,
    image: np.ndarray,
    labeling: np.ndarray,
    graph: Optional[GridGraph] = None,
) -> np.ndarray:
    """Statistics with g summed out under p(g | x, y); the gradient of log p(x|y) up to the partition term."""
    L, G = params.num_labels, params.palette_size
    graph = graph or grid_for(*labeling.shape)
    labels = np.asarray(labeling, dtype=np.int64).ravel()
    pixels = np.asarray(image, dtype=float).reshape(-1, 3)
    r = colour_responsibilities(params, pixels, labels)
    h = np.zeros((L, G))
    np.add.at(h, labels, r)
    d = r.T @ pixels
    return np.concatenate([h.ravel(), [float((pixels ** 2).sum())], d.ravel(), [_pair_term(pixels, labels, graph)]])


class ColorLikelihood(ExpFamConditional):
    """
    The colour model as p(x|y) with g marginalized.

    ``stats`` returns the statistics averaged over p(g | x, y), so a
    difference of two ``stats`` values is an unbiased gradient estimate.
    Generated images are observed through ``unary_fn``.
    """

    given = 'y'

    def __init__(
        self,
        params,
        num_labels: int = SEG_NUM_LABELS,
        palette_size: int = SEG_PALETTE_SIZE,
        unary_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        scan: str = 'raster',
        init_sweeps: int = 10,
    ):
        self.num_labels = num_labels
        self.palette_size = palette_size
        self.unary_fn = unary_fn
        self.scan = scan
        self.init_sweeps = init_sweeps
        super().__init__(params)

    @property
    def feature_dim(self) -> int:
        return GenColorParams.dimension(self.num_labels, self.palette_size)

    @property
    def color_params(self) -> GenColorParams:
        return GenColorParams.from_vector(self.params, self.num_labels, self.palette_size)

    def stats(self, x: SegObservation, y: np.ndarray) -> np.ndarray:
        return expected_color_features(self.color_params, x.image, y)

    def log_partition(self, y: np.ndarray) -> float:
        raise NotImplementedError("the colour model partition function is intractable")

    def expected_stats(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError("the colour model partition function is intractable")

    def observe(self, image: np.ndarray) -> SegObservation:
        if self.unary_fn is None:
            raise ValueError("a unary predictor is needed to observe generated images")
        return SegObservation(image, self.unary_fn(image))

    def sweep(self, labeling, image, colours, rng: RngStream, sweeps: int = 1):
        return color_gibbs_sweep(self.color_params, labeling, image, colours, rng, sweeps, self.scan)

    def sample(self, y: np.ndarray, rng: RngStream) -> SegObservation:
        """Approximate draw: uniform image and colour numbers followed by ``init_sweeps`` sweeps."""
        image = rng.uniform((*y.shape, 3))
        colours = rng.integers(0, self.palette_size, size=y.shape)
        image, _ = self.sweep(y, image, colours, rng, self.init_sweeps)
        return self.observe(image)

    def project(self, params: np.ndarray) -> Tuple[np.ndarray, bool]:
        """Clamp c to at most -eps and e to at most 0."""
        theta = np.array(params, dtype=float)
        c_index = self.num_labels * self.palette_size
        changed = bool(theta[c_index] > -GAUSS_EPS or theta[-1] > 0)
        theta[c_index] = min(theta[c_index], -GAUSS_EPS)
        theta[-1] = min(theta[-1], 0.0)
        if changed:
            logger.debug("feasibility projection clamped c=%.4g e=%.4g", theta[c_index], theta[-1])
        return theta, changed

    def with_params(self, params) -> 'ColorLikelihood':
        return ColorLikelihood(params, self.num_labels, self.palette_size, self.unary_fn, self.scan, self.init_sweeps)


