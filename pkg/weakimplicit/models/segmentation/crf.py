"""
Grid CRF posterior over labelings.

p(y|x) ~ exp[ sum_i q(y_i, z_i(x))
              + sum_{(i,j) in E} a_t(y_i, y_j) + b_t(y_i, y_j) * ||x_i - x_j||^2 ]

with z(x) the black-box unary label map and t the type of edge (i, j).
Pairwise tables enter the energy through their symmetric part, each edge
counted once.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import softmax

from ...core.constants import SEG_EDGE_TYPES, SEG_NUM_LABELS
from ...core.exceptions import DimensionMismatchError
from ...core.prob import ExpFamConditional, RngStream, sample_rows
from .grid import GridGraph, grid_for
from .observation import SegObservation

logger = logging.getLogger(__name__)

NUM_EDGE_TYPES = len(SEG_EDGE_TYPES)


@dataclass(frozen=True, eq=False)
class SegCrfParams:
    """
    Unary reliability table q[label, unary label] and per-edge-type
    pairwise tables a[t], b[t], 9 |L|^2 values in total.
    """
    q: np.ndarray
    a: np.ndarray
    b: np.ndarray

    KIND = 'seg-crf'

    def __post_init__(self):
        L = self.q.shape[0]
        if self.q.shape != (L, L) or self.a.shape != (NUM_EDGE_TYPES, L, L) or self.b.shape != self.a.shape:
            raise DimensionMismatchError(
                f"inconsistent CRF tables q{self.q.shape} a{self.a.shape} b{self.b.shape}"
            )

    @property
    def num_labels(self) -> int:
        return self.q.shape[0]

    @classmethod
    def zeros(cls, num_labels: int = SEG_NUM_LABELS) -> 'SegCrfParams':
        L = num_labels
        return cls(np.zeros((L, L)), np.zeros((NUM_EDGE_TYPES, L, L)), np.zeros((NUM_EDGE_TYPES, L, L)))

    @classmethod
    def from_vector(cls, theta: Sequence[float], num_labels: int = SEG_NUM_LABELS) -> 'SegCrfParams':
        theta = np.asarray(theta, dtype=float)
        L = num_labels
        if theta.size != 9 * L * L:
            raise DimensionMismatchError(f"expected {9 * L * L} CRF parameters, got {theta.size}")
        q = theta[:L * L].reshape(L, L)
        a = theta[L * L:5 * L * L].reshape(NUM_EDGE_TYPES, L, L)
        b = theta[5 * L * L:].reshape(NUM_EDGE_TYPES, L, L)
        return cls(q.copy(), a.copy(), b.copy())

    @classmethod
    def from_confusion(
        cls,
        unaries: Sequence[np.ndarray],
        labelings: Sequence[np.ndarray],
        num_labels: int = SEG_NUM_LABELS,
        smoothing: float = 1.0,
    ) -> 'SegCrfParams':
        """q = log p(label | unary label) from smoothed confusion counts; pairwise tables zero."""
        L = num_labels
        counts = np.full((L, L), float(smoothing))
        for z, y in zip(unaries, labelings):
            counts += np.bincount(np.ravel(y) * L + np.ravel(z), minlength=L * L).reshape(L, L)
        params = cls.zeros(L)
        return cls(np.log(counts / counts.sum(axis=0, keepdims=True)), params.a, params.b)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.q.ravel(), self.a.ravel(), self.b.ravel()])

    def symmetric(self):
        """(a_sym, b_sym): the parts of the pairwise tables that enter the energy."""
        return (
            0.5 * (self.a + self.a.transpose(0, 2, 1)),
            0.5 * (self.b + self.b.transpose(0, 2, 1)),
        )

    def to_blocks(self):
        blocks = {'q': self.q.ravel()}
        for t_id, t in enumerate(SEG_EDGE_TYPES):
            blocks[f'a.{t}'] = self.a[t_id].ravel()
        for t_id, t in enumerate(SEG_EDGE_TYPES):
            blocks[f'b.{t}'] = self.b[t_id].ravel()
        return {'dims': {'labels': self.num_labels, 'edge_types': NUM_EDGE_TYPES}, 'blocks': blocks}

    @classmethod
    def from_blocks(cls, dims, blocks) -> 'SegCrfParams':
        L = int(dims['labels'])
        q = np.asarray(blocks['q']).reshape(L, L)
        a = np.stack([np.asarray(blocks[f'a.{t}']).reshape(L, L) for t in SEG_EDGE_TYPES])
        b = np.stack([np.asarray(blocks[f'b.{t}']).reshape(L, L) for t in SEG_EDGE_TYPES])
        return cls(q, a, b)


def _check_shapes(image: np.ndarray, unary: np.ndarray, labeling: np.ndarray) -> None:
    if image.shape[:2] != labeling.shape or unary.shape != labeling.shape:
        raise DimensionMismatchError(
            f"image {image.shape[:2]}, unary {unary.shape} and labeling {labeling.shape} differ"
        )


def local_scores(
    params: SegCrfParams,
    pixels: np.ndarray,
    unary: np.ndarray,
    labels: np.ndarray,
    graph: GridGraph,
    sites: np.ndarray,
) -> np.ndarray:
    """
    Unnormalized log conditional of every label at each site, shape (len(sites), L).

    ``pixels``, ``unary`` and ``labels`` are flattened row-major.
    """
    L = params.num_labels
    a_sym, b_sym = params.symmetric()
    nbr = graph.neighbor_index[sites]
    mask = nbr >= 0
    safe = np.where(mask, nbr, 0)
    types = np.where(mask, graph.neighbor_type[sites], 0)[:, :, None]
    neighbour_labels = labels[safe][:, :, None]
    dist = ((pixels[sites][:, None, :] - pixels[safe]) ** 2).sum(axis=-1)
    candidates = np.arange(L)[None, None, :]
    pair = a_sym[types, candidates, neighbour_labels] + b_sym[types, candidates, neighbour_labels] * dist[:, :, None]
    pair = (pair * mask[:, :, None]).sum(axis=1)
    return params.q[:, unary[sites]].T + pair


def crf_gibbs_sweep(
    params: SegCrfParams,
    image: np.ndarray,
    unary: np.ndarray,
    labeling: np.ndarray,
    rng: RngStream,
    sweeps: int = 1,
    scan: str = 'raster',
    graph: Optional[GridGraph] = None,
) -> np.ndarray:
    """
    Resample every pixel label from its local conditional.

    Args:
        params: CRF parameters
        image: (H, W, 3) image
        unary: (H, W) unary label map z(x)
        labeling: (H, W) starting labels (not modified)
        rng: random stream, one uniform per site visit
        sweeps: number of full sweeps
        scan: 'raster' (row-major single sites) or 'blocked' (four
            independent colour classes, each resampled at once)
        graph: grid graph of the image shape

    Returns:
        New (H, W) labeling
    """
    _check_shapes(image, unary, labeling)
    graph = graph or grid_for(*labeling.shape)
    pixels = image.reshape(-1, 3)
    z = unary.ravel()
    labels = np.array(labeling, dtype=np.int64).ravel()
    groups = graph.scan_order(scan)
    for _ in range(sweeps):
        for sites in groups:
            probs = softmax(local_scores(params, pixels, z, labels, graph, sites), axis=1)
            labels[sites] = sample_rows(probs, rng)
    return labels.reshape(labeling.shape)


def crf_features(
    observation: SegObservation,
    labeling: np.ndarray,
    num_labels: int = SEG_NUM_LABELS,
    graph: Optional[GridGraph] = None,
) -> np.ndarray:
    """
    Sufficient statistics of the CRF, laid out like ``SegCrfParams.to_vector``.

    q block: counts of (label, unary label); a block per edge type:
    symmetrized label-pair counts; b block per edge type: symmetrized sums
    of squared colour differences.
    """
    _check_shapes(observation.image, observation.unary, labeling)
    L = num_labels
    graph = graph or grid_for(*labeling.shape)
    y = np.asarray(labeling, dtype=np.int64).ravel()
    px = observation.pixels
    q = np.bincount(y * L + observation.unary.ravel(), minlength=L * L).astype(float)
    a_blocks, b_blocks = [], []
    for t in SEG_EDGE_TYPES:
        src, dst = graph.edges[t]
        pair = y[src] * L + y[dst]
        dist = ((px[src] - px[dst]) ** 2).sum(axis=1)
        counts = np.bincount(pair, minlength=L * L).reshape(L, L).astype(float)
        sums = np.bincount(pair, weights=dist, minlength=L * L).reshape(L, L)
        a_blocks.append((0.5 * (counts + counts.T)).ravel())
        b_blocks.append((0.5 * (sums + sums.T)).ravel())
    return np.concatenate([q, *a_blocks, *b_blocks])


def marginal_frequencies(
    params: SegCrfParams,
    image: np.ndarray,
    unary: np.ndarray,
    rng: RngStream,
    burn_in: int,
    samples: int,
    scan: str = 'raster',
    init: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Per-pixel label frequencies over ``samples`` sweeps after ``burn_in``, shape (H, W, L)."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    L = params.num_labels
    graph = grid_for(*unary.shape)
    labeling = init if init is not None else rng.integers(0, L, size=unary.shape)
    if burn_in > 0:
        labeling = crf_gibbs_sweep(params, image, unary, labeling, rng, burn_in, scan, graph)
    counts = np.zeros((graph.size, L))
    rows = np.arange(graph.size)
    for _ in range(samples):
        labeling = crf_gibbs_sweep(params, image, unary, labeling, rng, 1, scan, graph)
        counts[rows, labeling.ravel()] += 1
    return (counts / samples).reshape(*unary.shape, L)


def max_marginal_decode(
    params: SegCrfParams,
    image: np.ndarray,
    unary: np.ndarray,
    rng: RngStream,
    burn_in: int = 20,
    samples: int = 50,
    scan: str = 'raster',
) -> np.ndarray:
    """Per-pixel argmax of sampled marginals; ties go to the smallest label."""
    return np.argmax(marginal_frequencies(params, image, unary, rng, burn_in, samples, scan), axis=-1)


class CrfPosterior(ExpFamConditional):
    """
    The grid CRF as an exponential family over labelings of a SegObservation.

    The partition function is intractable: ``log_partition`` and
    ``expected_stats`` raise NotImplementedError and trainers fall back
    to sampled statistics.
    """

    given = 'x'

    def __init__(self, params, num_labels: int = SEG_NUM_LABELS, scan: str = 'raster', init_sweeps: int = 10):
        self.num_labels = num_labels
        self.scan = scan
        self.init_sweeps = init_sweeps
        super().__init__(params)

    @property
    def feature_dim(self) -> int:
        return 9 * self.num_labels ** 2

    @property
    def crf_params(self) -> SegCrfParams:
        return SegCrfParams.from_vector(self.params, self.num_labels)

    def stats(self, x: SegObservation, y: np.ndarray) -> np.ndarray:
        return crf_features(x, y, self.num_labels)

    def log_partition(self, x: SegObservation) -> float:
        raise NotImplementedError("the grid CRF partition function is intractable")

    def expected_stats(self, x: SegObservation) -> np.ndarray:
        raise NotImplementedError("the grid CRF partition function is intractable")

    def sample(self, x: SegObservation, rng: RngStream) -> np.ndarray:
        """Approximate draw: random labeling followed by ``init_sweeps`` sweeps."""
        start = rng.integers(0, self.num_labels, size=x.shape)
        return self.sweep(x, start, rng, self.init_sweeps)

    def sweep(self, x: SegObservation, labeling: np.ndarray, rng: RngStream, sweeps: int = 1) -> np.ndarray:
        return crf_gibbs_sweep(self.crf_params, x.image, x.unary, labeling, rng, sweeps, self.scan)

    def with_params(self, params) -> 'CrfPosterior':
        return CrfPosterior(params, self.num_labels, self.scan, self.init_sweeps)
