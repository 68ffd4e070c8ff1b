"""
Brute-force verifiers.

Exhaustive enumeration, dense eigensolves and quadrature used to check the
production code paths at desk scale. Apart from prob-core primitives
nothing here reuses the numeric kernels it checks.
"""
import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, linalg
from scipy.special import logsumexp, softmax
from scipy.stats import norm

from .core.constants import DEFAULT_TOLERANCES
from .core.exceptions import EnumerationBudgetError, LemmaPreconditionError
from .core.models import GradientPair
from .core.prob import ProbVector, RngStream, TableConditional
from .coupling import DiscreteConditionalPair
from .models.segmentation.crf import SegCrfParams, local_scores
from .models.segmentation.grid import grid_for
from .models.synthetic import GeneratorConfig

logger = logging.getLogger(__name__)

# Largest number of chain sequences / labelings enumerated
ENUMERATION_BUDGET = 200_000
GRID_BUDGET = 3 ** 4


@dataclass(frozen=True, eq=False)
class ToyDiscreteModel:
    """
    Two full-table conditionals on small finite spaces.

    theta1[x, y] scores p(y|x), theta2[x, y] scores p(x|y); one parameter
    per cell, so every conditional is strictly positive.
    """
    theta1: np.ndarray
    theta2: np.ndarray

    def __post_init__(self):
        if self.theta1.shape != self.theta2.shape or self.theta1.ndim != 2:
            raise ValueError("theta1 and theta2 must be (|X|, |Y|) tables of one shape")
        if max(self.theta1.shape) > 8:
            raise ValueError("toy models have |X|, |Y| <= 8")

    @property
    def n_x(self) -> int:
        return self.theta1.shape[0]

    @property
    def n_y(self) -> int:
        return self.theta1.shape[1]

    @classmethod
    def random(cls, n_x: int, n_y: int, rng: RngStream, scale: float = 1.0) -> 'ToyDiscreteModel':
        return cls(scale * rng.normal(size=(n_x, n_y)), scale * rng.normal(size=(n_x, n_y)))

    @classmethod
    def from_joint(cls, joint: np.ndarray) -> 'ToyDiscreteModel':
        """Both conditionals derived from a strictly positive joint[x, y]."""
        log_joint = np.log(np.asarray(joint, dtype=float))
        return cls(log_joint.copy(), log_joint.copy())

    @property
    def A(self) -> np.ndarray:
        """A[y, x] = p(y|x)."""
        return softmax(self.theta1, axis=1).T

    @property
    def B(self) -> np.ndarray:
        """B[x, y] = p(x|y)."""
        return softmax(self.theta2, axis=0)

    def pair(self) -> DiscreteConditionalPair:
        return DiscreteConditionalPair(self.A, self.B)

    def posterior(self) -> TableConditional:
        return TableConditional(self.n_x, self.n_y, 'x', self.theta1.ravel())

    def likelihood(self) -> TableConditional:
        return TableConditional(self.n_x, self.n_y, 'y', self.theta2.ravel())

    def with_params(self, theta1: np.ndarray, theta2: np.ndarray) -> 'ToyDiscreteModel':
        return ToyDiscreteModel(np.reshape(theta1, self.theta1.shape), np.reshape(theta2, self.theta2.shape))


def _one_hot(n_x: int, n_y: int, x: int, y: int) -> np.ndarray:
    e = np.zeros(n_x * n_y)
    e[x * n_y + y] = 1.0
    return e


def _chain_terms(model: ToyDiscreteModel):
    """Log tables and per-cell score gradients of both conditionals."""
    log_a = np.log(model.A.T)          # [x, y] -> log p(y|x)
    log_b = np.log(model.B)            # [x, y] -> log p(x|y)
    nx, ny = model.n_x, model.n_y
    grad_a = np.zeros((nx, ny, nx * ny))
    grad_b = np.zeros((nx, ny, nx * ny))
    A, B = model.A, model.B
    for x in range(nx):
        for y in range(ny):
            grad_a[x, y] = _one_hot(nx, ny, x, y) - sum(A[yy, x] * _one_hot(nx, ny, x, yy) for yy in range(ny))
            grad_b[x, y] = _one_hot(nx, ny, x, y) - sum(B[xx, y] * _one_hot(nx, ny, xx, y) for xx in range(nx))
    return log_a, log_b, grad_a, grad_b


def _sequences(model: ToyDiscreteModel, n: int, budget: int):
    count = (model.n_x * model.n_y) ** n
    if count > budget:
        raise EnumerationBudgetError(f"{count} chain sequences exceed the budget of {budget}")
    return itertools.product(itertools.product(range(model.n_x), range(model.n_y)), repeat=n)


def chain_log_marginal(
    model: ToyDiscreteModel,
    x_star: int,
    n: int,
    x0: Optional[Sequence[float]] = None,
    budget: int = ENUMERATION_BUDGET,
) -> float:
    """log sum_z p(z, x*) over all sequences (x0, y0, ..., x_{n-1}, y_{n-1}) ending at x*."""
    p0 = np.full(model.n_x, 1.0 / model.n_x) if x0 is None else np.asarray(x0, dtype=float)
    log_a, log_b, _, _ = _chain_terms(model)
    logs = []
    for seq in _sequences(model, n, budget):
        lp = np.log(p0[seq[0][0]])
        for i, (x, y) in enumerate(seq):
            lp += log_a[x, y]
            nxt = seq[i + 1][0] if i + 1 < n else x_star
            lp += log_b[nxt, y]
        logs.append(lp)
    return float(logsumexp(logs))


def exact_chain_gradient(
    model: ToyDiscreteModel,
    x_star: int,
    n: int,
    x0: Optional[Sequence[float]] = None,
    budget: int = ENUMERATION_BUDGET,
) -> GradientPair:
    """
    Exact gradient of log p(x*) under a chain of n transitions.

    p(z, x*) = p(x0) p(y0|x0) prod_{i=1}^{n-1} p(x_i|y_{i-1}) p(y_i|x_i) p(x*|y_{n-1})
    with p(x0) fixed (uniform by default); the result is
    sum_z p(z|x*) d/dtheta log p(z, x*).

    Raises:
        EnumerationBudgetError: more than ``budget`` sequences
    """
    g1, g2, _ = _exact_terms(model, x_star, n, x0, budget)
    return GradientPair(g1.sum(axis=0), g2.sum(axis=0))


def _exact_terms(model, x_star, n, x0, budget):
    """Per-position expected gradient terms, shape (n, d) for each model, plus log p(x*)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p0 = np.full(model.n_x, 1.0 / model.n_x) if x0 is None else np.asarray(x0, dtype=float)
    log_a, log_b, grad_a, grad_b = _chain_terms(model)
    d = model.n_x * model.n_y
    weights, terms1, terms2 = [], [], []
    for seq in _sequences(model, n, budget):
        lp = np.log(p0[seq[0][0]])
        t1 = np.zeros((n, d))
        t2 = np.zeros((n, d))
        for i, (x, y) in enumerate(seq):
            nxt = seq[i + 1][0] if i + 1 < n else x_star
            lp += log_a[x, y] + log_b[nxt, y]
            t1[i] = grad_a[x, y]
            t2[i] = grad_b[nxt, y]
        weights.append(lp)
        terms1.append(t1)
        terms2.append(t2)
    w = softmax(np.array(weights))
    g1 = np.tensordot(w, np.array(terms1), axes=1)
    g2 = np.tensordot(w, np.array(terms2), axes=1)
    return g1, g2, float(logsumexp(weights))


def position_contributions(
    model: ToyDiscreteModel,
    x_star: int,
    n: int,
    x0: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """
    Norm of each chain position's share of the exact gradient.

    Entry k belongs to the transition k + 1 steps before x*, so entry 0
    is the pair adjacent to the observation.
    """
    g1, g2, _ = _exact_terms(model, x_star, n, x0, ENUMERATION_BUDGET)
    norms = np.sqrt((g1 ** 2).sum(axis=1) + (g2 ** 2).sum(axis=1))
    return norms[::-1]


def exact_sgd_expectation(model: ToyDiscreteModel, x_star: int, y_star: int) -> GradientPair:
    """
    Expectation of the single-step stochastic gradient over all (y~, x~, y^).

    Weights p(y~|x*) p(x~|y~) p(y^|x~), both increments written with full
    one-hot tables.
    """
    A, B = model.A, model.B
    nx, ny = model.n_x, model.n_y
    g1 = np.zeros(nx * ny)
    g2 = np.zeros(nx * ny)
    for yt in range(ny):
        for xt in range(nx):
            for yh in range(ny):
                w = A[yt, x_star] * B[xt, yt] * A[yh, xt]
                g1 += w * (_one_hot(nx, ny, xt, yt) - _one_hot(nx, ny, xt, yh)
                           + _one_hot(nx, ny, x_star, y_star) - _one_hot(nx, ny, x_star, yt))
                g2 += w * (_one_hot(nx, ny, x_star, yt) - _one_hot(nx, ny, xt, yt))
    return GradientPair(g1, g2)


def dense_stationary(
    pair: DiscreteConditionalPair,
    tol: float = DEFAULT_TOLERANCES.eigenvalue,
) -> Tuple[ProbVector, ProbVector]:
    """
    Stationary marginals from a full eigendecomposition of C = B A.

    Raises:
        LemmaPreconditionError: no eigenvalue within tol of 1
    """
    if max(pair.n_x, pair.n_y) > 32:
        raise EnumerationBudgetError("dense_stationary is limited to |X|, |Y| <= 32")
    values, vectors = linalg.eig(pair.B @ pair.A)
    k = int(np.argmin(np.abs(values - 1.0)))
    if abs(values[k] - 1.0) > tol:
        raise LemmaPreconditionError(f"no eigenvalue within {tol} of 1 (closest {values[k]})")
    v = np.real(vectors[:, k])
    v = np.clip(v / v.sum(), 0.0, None)
    pX = v / v.sum()
    pY = pair.A @ pX
    return ProbVector(pX), ProbVector(pY / pY.sum())


def joint_kl(p: np.ndarray, q: np.ndarray) -> float:
    """KL(p || q) in nats for two strictly positive tables of one shape."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(np.sum(p * (np.log(p) - np.log(q))))


def _edge_type(di: int, dj: int) -> int:
    # Indices follow the horizontal, vertical, diagonal_down, diagonal_up order
    if di == 0:
        return 0
    if dj == 0:
        return 1
    return 2 if di == dj else 3


def grid_energy(params: SegCrfParams, image: np.ndarray, unary: np.ndarray, labeling: np.ndarray) -> float:
    """CRF energy by looping over every unordered pair of touching pixels."""
    H, W = labeling.shape
    energy = 0.0
    for i in range(H):
        for j in range(W):
            energy += params.q[labeling[i, j], unary[i, j]]
    cells = [(i, j) for i in range(H) for j in range(W)]
    for (i1, j1), (i2, j2) in itertools.combinations(cells, 2):
        di, dj = i2 - i1, j2 - j1
        if max(abs(di), abs(dj)) != 1:
            continue
        t = _edge_type(di, dj)
        l1, l2 = labeling[i1, j1], labeling[i2, j2]
        dist = float(np.sum((image[i1, j1] - image[i2, j2]) ** 2))
        energy += 0.5 * (params.a[t, l1, l2] + params.a[t, l2, l1])
        energy += 0.5 * (params.b[t, l1, l2] + params.b[t, l2, l1]) * dist
    return energy


@dataclass(frozen=True, eq=False)
class GridMarginals:
    """Exact per-pixel marginals and log partition of a small CRF."""
    marginals: np.ndarray
    log_partition: float
    labelings: np.ndarray
    log_probs: np.ndarray


def enumerate_grid(
    params: SegCrfParams,
    image: np.ndarray,
    unary: np.ndarray,
    budget: int = GRID_BUDGET,
) -> GridMarginals:
    """
    Sum over every labeling of a tiny grid.

    Raises:
        EnumerationBudgetError: more than ``budget`` labelings
    """
    H, W = unary.shape
    L = params.num_labels
    count = L ** (H * W)
    if count > budget:
        raise EnumerationBudgetError(f"{count} labelings exceed the budget of {budget}")
    labelings = np.array(list(itertools.product(range(L), repeat=H * W))).reshape(count, H, W)
    energies = np.array([grid_energy(params, image, unary, y) for y in labelings])
    log_z = float(logsumexp(energies))
    probs = np.exp(energies - log_z)
    marginals = np.zeros((H, W, L))
    for y, p in zip(labelings, probs):
        marginals[np.arange(H)[:, None], np.arange(W)[None, :], y] += p
    return GridMarginals(marginals, log_z, labelings, energies - log_z)


def single_site_kernel(params: SegCrfParams, image: np.ndarray, unary: np.ndarray, site: int) -> np.ndarray:
    """
    Transition matrix over all labelings for resampling one pixel.

    Rows and columns follow the order of ``enumerate_grid().labelings``;
    the site conditional is the one the Gibbs sampler uses.
    """
    H, W = unary.shape
    L = params.num_labels
    graph = grid_for(H, W)
    labelings = np.array(list(itertools.product(range(L), repeat=H * W)))
    index = {tuple(y): k for k, y in enumerate(labelings)}
    pixels = image.reshape(-1, 3)
    K = np.zeros((len(labelings), len(labelings)))
    for k, y in enumerate(labelings):
        scores = local_scores(params, pixels, unary.ravel(), y, graph, np.array([site]))[0]
        p = softmax(scores)
        for label in range(L):
            target = y.copy()
            target[site] = label
            K[k, index[tuple(target)]] += p[label]
    return K


def color_pair_marginals(
    c: float,
    d: np.ndarray,
    e: float,
    same_label: bool,
    bins: int = 32,
    refine: int = 8,
) -> np.ndarray:
    """
    Binned marginal of the first pixel's channels on a 1x2 grid with one colour number.

    Channel k has joint density exp[c (u^2 + v^2) + d_k (u + v) + e s (u - v)^2]
    on [0, 1]^2, s = 1 for equal labels; the second pixel is integrated
    out with the midpoint rule.

    Returns:
        (3, bins) probabilities per channel
    """
    n = bins * refine
    grid = (np.arange(n) + 0.5) / n
    u, v = np.meshgrid(grid, grid, indexing='ij')
    out = np.zeros((3, bins))
    for k in range(3):
        log_density = c * (u ** 2 + v ** 2) + d[k] * (u + v) + (e * (u - v) ** 2 if same_label else 0.0)
        density = np.exp(log_density - log_density.max()).sum(axis=1)
        out[k] = density.reshape(bins, refine).sum(axis=1)
        out[k] /= out[k].sum()
    return out


def bayes_error_numeric(generator: GeneratorConfig, epsabs: float = 1e-10) -> float:
    """
    1 - integral of max_y p(y) N(x; mu_y, sigma_y) by adaptive quadrature.

    The range is [min mu - 8 sigma, max mu + 8 sigma]; the means are
    passed as breakpoints.
    """
    means = np.asarray(generator.means, dtype=float)
    sigmas = generator.class_sigmas
    prior = 1.0 / means.size
    lo = means.min() - 8.0 * sigmas.max()
    hi = means.max() + 8.0 * sigmas.max()

    def best(x: float) -> float:
        return float(np.max(prior * norm.pdf(x, means, sigmas)))

    breaks = sorted(set(np.concatenate([means, (means[:-1] + means[1:]) / 2.0]).tolist()))
    value, _ = integrate.quad(best, lo, hi, points=breaks, epsabs=epsabs, limit=500)
    return float(1.0 - value)


def finite_difference_gradient(
    fn: Callable[[np.ndarray], float],
    theta: np.ndarray,
    step: float = 1e-5,
) -> np.ndarray:
    """Central differences of a scalar function."""
    theta = np.asarray(theta, dtype=float)
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        e = np.zeros_like(theta)
        e[k] = step
        grad[k] = (fn(theta + e) - fn(theta - e)) / (2.0 * step)
    return grad
