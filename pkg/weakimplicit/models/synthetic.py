"""
One-dimensional three-class study.

Classes are indexed 0, 1, 2 throughout (classes 1, 2, 3 of the study).
The posterior is quadratic logistic regression,
p(y|x) ~ exp[a_y x^2 + b_y x + c_y]; the likelihood is one Gaussian per
class in natural form, p(x|y) ~ exp[d_y x^2 + e_y x].
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from ..core.constants import GAUSS_EPS, SYNTH_MEANS, SYNTH_MISSPECIFIED_SIGMAS, SYNTH_SIGMA
from ..core.exceptions import DimensionMismatchError, ImproperDistributionError
from ..core.prob import ExpFamConditional, RngStream, normalize, sample_discrete, sample_rows

logger = logging.getLogger(__name__)

NUM_CLASSES = 3


@dataclass(frozen=True)
class GeneratorConfig:
    """Gaussian class-conditional generator with a uniform class prior."""
    means: Tuple[float, ...] = SYNTH_MEANS
    sigma: float = SYNTH_SIGMA
    sigmas: Optional[Tuple[float, ...]] = None  # per-class, misspecified world

    def __post_init__(self):
        if len(self.means) != NUM_CLASSES:
            raise ValueError(f"expected {NUM_CLASSES} means")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.sigmas is not None:
            if len(self.sigmas) != NUM_CLASSES or min(self.sigmas) <= 0:
                raise ValueError("per-class sigmas must be three positive values")

    @property
    def class_sigmas(self) -> np.ndarray:
        if self.sigmas is not None:
            return np.asarray(self.sigmas, dtype=float)
        return np.full(NUM_CLASSES, self.sigma)

    @classmethod
    def misspecified(cls) -> 'GeneratorConfig':
        return cls(sigmas=SYNTH_MISSPECIFIED_SIGMAS)


@dataclass(frozen=True)
class SyntheticDataset:
    """Observations and class labels."""
    xs: np.ndarray
    ys: np.ndarray

    def __len__(self) -> int:
        return self.xs.size

    def subset(self, index: np.ndarray) -> 'SyntheticDataset':
        return SyntheticDataset(self.xs[index], self.ys[index])


def sample_generator(config: GeneratorConfig, T: int, rng: RngStream) -> SyntheticDataset:
    """Draw T pairs: y uniform over the classes, x ~ Normal(mu_y, sigma_y^2)."""
    if T < 1:
        raise ValueError("T must be >= 1")
    ys = rng.integers(0, NUM_CLASSES, size=T)
    means = np.asarray(config.means, dtype=float)
    xs = rng.normal(means[ys], config.class_sigmas[ys])
    return SyntheticDataset(xs=np.asarray(xs, dtype=float), ys=np.asarray(ys, dtype=int))


@dataclass(frozen=True)
class QuadLogRegParams:
    """Per-class coefficients a_y, b_y, c_y."""
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    KIND = 'qlr'

    def __post_init__(self):
        for name in ('a', 'b', 'c'):
            if np.shape(getattr(self, name)) != (NUM_CLASSES,):
                raise DimensionMismatchError(f"{name} must hold {NUM_CLASSES} values")

    @classmethod
    def zeros(cls) -> 'QuadLogRegParams':
        return cls(np.zeros(NUM_CLASSES), np.zeros(NUM_CLASSES), np.zeros(NUM_CLASSES))

    @classmethod
    def from_vector(cls, theta: Sequence[float]) -> 'QuadLogRegParams':
        theta = np.asarray(theta, dtype=float)
        if theta.size != 3 * NUM_CLASSES:
            raise DimensionMismatchError(f"expected 9 parameters, got {theta.size}")
        blocks = theta.reshape(NUM_CLASSES, 3)
        return cls(blocks[:, 0].copy(), blocks[:, 1].copy(), blocks[:, 2].copy())

    @classmethod
    def true_posterior(cls, config: GeneratorConfig) -> 'QuadLogRegParams':
        """Posterior of the generator written in quadratic form."""
        mu = np.asarray(config.means, dtype=float)
        var = config.class_sigmas ** 2
        return cls(-0.5 / var, mu / var, -mu ** 2 / (2 * var) - 0.5 * np.log(var))

    def to_vector(self) -> np.ndarray:
        return np.stack([self.a, self.b, self.c], axis=1).ravel()

    def scores(self, xs) -> np.ndarray:
        """Class scores a_y x^2 + b_y x + c_y, shape (..., 3)."""
        xs = np.asarray(xs, dtype=float)[..., None]
        return self.a * xs ** 2 + self.b * xs + self.c

    def to_blocks(self):
        return {'dims': {'classes': NUM_CLASSES}, 'blocks': {'a': self.a, 'b': self.b, 'c': self.c}}

    @classmethod
    def from_blocks(cls, dims, blocks) -> 'QuadLogRegParams':
        return cls(blocks['a'], blocks['b'], blocks['c'])


@dataclass(frozen=True)
class ClassGaussParams:
    """Natural parameters d_y, e_y of the per-class Gaussians."""
    d: np.ndarray
    e: np.ndarray
    shared_d: bool = False

    KIND = 'class-gauss'

    def __post_init__(self):
        if np.shape(self.d) != (NUM_CLASSES,) or np.shape(self.e) != (NUM_CLASSES,):
            raise DimensionMismatchError(f"d and e must hold {NUM_CLASSES} values")
        if np.any(self.d > -GAUSS_EPS):
            raise ImproperDistributionError(f"improper distribution: d = {self.d} must be <= -{GAUSS_EPS}")
        if self.shared_d and not np.all(self.d == self.d[0]):
            raise ValueError("shared_d requires identical d_y")

    @classmethod
    def neutral(cls, shared_d: bool = False) -> 'ClassGaussParams':
        """Unit Gaussians at the origin for every class."""
        return cls(np.full(NUM_CLASSES, -0.5), np.zeros(NUM_CLASSES), shared_d)

    @classmethod
    def from_moments(cls, means, variances, shared_d: bool = False) -> 'ClassGaussParams':
        means = np.asarray(means, dtype=float)
        variances = np.asarray(variances, dtype=float)
        d = -0.5 / variances
        return cls(d, means / variances, shared_d)

    @classmethod
    def from_vector(cls, theta: Sequence[float], shared_d: bool = False) -> 'ClassGaussParams':
        theta = np.asarray(theta, dtype=float)
        if theta.size != 2 * NUM_CLASSES:
            raise DimensionMismatchError(f"expected 6 parameters, got {theta.size}")
        blocks = theta.reshape(NUM_CLASSES, 2)
        return cls(blocks[:, 0].copy(), blocks[:, 1].copy(), shared_d)

    def to_vector(self) -> np.ndarray:
        return np.stack([self.d, self.e], axis=1).ravel()

    def moments(self) -> Tuple[np.ndarray, np.ndarray]:
        """(mean, variance) per class."""
        return -self.e / (2 * self.d), -0.5 / self.d

    def to_blocks(self):
        return {
            'dims': {'classes': NUM_CLASSES, 'shared_d': int(self.shared_d)},
            'blocks': {'d': self.d, 'e': self.e},
        }

    @classmethod
    def from_blocks(cls, dims, blocks) -> 'ClassGaussParams':
        return cls(blocks['d'], blocks['e'], bool(int(dims.get('shared_d', 0))))


def qlr_features(x: float, y: int) -> np.ndarray:
    """Block one-hot statistic: the y-th block holds (x^2, x, 1)."""
    if not 0 <= y < NUM_CLASSES:
        raise ValueError(f"class index {y} out of range")
    eta = np.zeros(3 * NUM_CLASSES)
    eta[3 * y:3 * y + 3] = (x * x, x, 1.0)
    return eta


def gauss_conditional_sample(params: ClassGaussParams, y: int, rng: RngStream) -> float:
    """
    Draw x ~ Normal(-e_y / (2 d_y), -1 / (2 d_y)).

    Raises:
        ImproperDistributionError: d_y > -eps
    """
    d, e = params.d[y], params.e[y]
    if d > -GAUSS_EPS:
        raise ImproperDistributionError(f"improper distribution: d_{y} = {d}")
    return float(rng.normal(-e / (2 * d), np.sqrt(-0.5 / d)))


def map_decision(posterior: QuadLogRegParams, x: float) -> int:
    """Most probable class; ties go to the smallest index."""
    return int(np.argmax(posterior.scores(x)))


def map_decisions(posterior: QuadLogRegParams, xs: np.ndarray) -> np.ndarray:
    return np.argmax(posterior.scores(xs), axis=-1)


def error_rate(posterior: QuadLogRegParams, data: SyntheticDataset) -> float:
    """Fraction of MAP decisions that miss the label."""
    return float(np.mean(map_decisions(posterior, data.xs) != data.ys))


class QuadLogReg(ExpFamConditional):
    """Quadratic logistic regression p(y|x) as an exponential family."""

    given = 'x'

    @property
    def feature_dim(self) -> int:
        return 3 * NUM_CLASSES

    @property
    def coefficients(self) -> QuadLogRegParams:
        return QuadLogRegParams.from_vector(self.params)

    def stats(self, x: float, y: int) -> np.ndarray:
        return qlr_features(x, y)

    def log_partition(self, x: float) -> float:
        return float(logsumexp(self.coefficients.scores(x)))

    def sample(self, x: float, rng: RngStream) -> int:
        return sample_discrete(normalize(self.coefficients.scores(x)), rng)

    def probabilities(self, xs: np.ndarray) -> np.ndarray:
        """p(y|x) for a vector of observations, shape (n, 3)."""
        return softmax(self.coefficients.scores(xs), axis=-1)

    def expected_stats(self, x: float) -> np.ndarray:
        return self.expected_stats_many(np.array([x]))[0]

    def log_prob_many(self, xs, ys) -> np.ndarray:
        scores = self.coefficients.scores(np.asarray(xs, dtype=float))
        ys = np.asarray(ys, dtype=int)
        return scores[np.arange(ys.size), ys] - logsumexp(scores, axis=-1)

    def expected_stats_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        p = self.probabilities(xs)
        base = np.stack([xs ** 2, xs, np.ones_like(xs)], axis=1)
        return (p[:, :, None] * base[:, None, :]).reshape(xs.size, -1)

    def sample_many(self, xs, rng: RngStream) -> np.ndarray:
        return sample_rows(self.probabilities(np.asarray(xs, dtype=float)), rng)

    def stats_many(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=int)
        eta = np.zeros((xs.size, 3 * NUM_CLASSES))
        rows = np.arange(xs.size)
        eta[rows, 3 * ys] = xs ** 2
        eta[rows, 3 * ys + 1] = xs
        eta[rows, 3 * ys + 2] = 1.0
        return eta

    def with_params(self, params) -> 'QuadLogReg':
        return QuadLogReg(params)

    def target_support(self):
        return range(NUM_CLASSES)


class ClassGaussian(ExpFamConditional):
    """One Gaussian per class, p(x|y) ~ exp[d_y x^2 + e_y x]."""

    given = 'y'

    def __init__(self, params, shared_d: bool = False):
        self.shared_d = shared_d
        super().__init__(params)

    @property
    def feature_dim(self) -> int:
        return 2 * NUM_CLASSES

    @property
    def natural(self) -> Tuple[np.ndarray, np.ndarray]:
        blocks = self.params.reshape(NUM_CLASSES, 2)
        return blocks[:, 0], blocks[:, 1]

    def gauss_params(self) -> ClassGaussParams:
        d, e = self.natural
        return ClassGaussParams(d.copy(), e.copy(), self.shared_d)

    def stats(self, x: float, y: int) -> np.ndarray:
        eta = np.zeros(2 * NUM_CLASSES)
        eta[2 * y:2 * y + 2] = (x * x, x)
        return eta

    def log_partition(self, y: int) -> float:
        d, e = self.natural
        if d[y] >= 0:
            raise ImproperDistributionError(f"improper distribution: d_{y} = {d[y]} is not negative")
        return float(0.5 * np.log(np.pi / -d[y]) - e[y] ** 2 / (4 * d[y]))

    def sample(self, y: int, rng: RngStream) -> float:
        return gauss_conditional_sample(self.gauss_params(), y, rng)

    def expected_stats(self, y: int) -> np.ndarray:
        return self.expected_stats_many(np.array([y]))[0]

    def expected_stats_many(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=int)
        d, e = self.natural
        mean = -e[ys] / (2 * d[ys])
        var = -0.5 / d[ys]
        eta = np.zeros((ys.size, 2 * NUM_CLASSES))
        rows = np.arange(ys.size)
        eta[rows, 2 * ys] = var + mean ** 2
        eta[rows, 2 * ys + 1] = mean
        return eta

    def sample_many(self, ys, rng: RngStream) -> np.ndarray:
        ys = np.asarray(ys, dtype=int)
        d, e = self.natural
        if np.any(d[ys] > -GAUSS_EPS):
            raise ImproperDistributionError(f"improper distribution: d = {d}")
        return rng.normal(-e[ys] / (2 * d[ys]), np.sqrt(-0.5 / d[ys]))

    def stats_many(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=int)
        eta = np.zeros((xs.size, 2 * NUM_CLASSES))
        rows = np.arange(xs.size)
        eta[rows, 2 * ys] = xs ** 2
        eta[rows, 2 * ys + 1] = xs
        return eta

    def project(self, params: np.ndarray) -> Tuple[np.ndarray, bool]:
        """Clamp d_y to -eps and, for a shared variance, average the d_y."""
        blocks = np.array(params, dtype=float).reshape(NUM_CLASSES, 2)
        tied = self.shared_d and not np.all(blocks[:, 0] == blocks[0, 0])
        if tied:
            blocks[:, 0] = blocks[:, 0].mean()
        clamped = bool(np.any(blocks[:, 0] > -GAUSS_EPS))
        blocks[:, 0] = np.minimum(blocks[:, 0], -GAUSS_EPS)
        if clamped:
            logger.debug("feasibility projection clamped d to %s", blocks[:, 0])
        return blocks.ravel(), tied or clamped

    def with_params(self, params) -> 'ClassGaussian':
        return ClassGaussian(params, self.shared_d)
