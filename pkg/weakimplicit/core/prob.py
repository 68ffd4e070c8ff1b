"""Probability primitives: distributions, seeded streams, exponential families."""
from abc import ABC, abstractmethod
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from .constants import DEFAULT_TOLERANCES
from .exceptions import DegenerateDistributionError, DimensionMismatchError


class ProbVector:
    """
    Finite discrete probability distribution.

    Entries are nonnegative and sum to one within ``tol``. The underlying
    array is read-only.
    """

    def __init__(self, values: Sequence[float], tol: float = DEFAULT_TOLERANCES.normalization):
        arr = np.array(values, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("a distribution needs a nonempty support")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("probabilities must be finite and nonnegative")
        total = arr.sum()
        if abs(total - 1.0) > tol:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        arr.setflags(write=False)
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def support_size(self) -> int:
        return self._values.size

    def __len__(self) -> int:
        return self._values.size

    def __getitem__(self, index):
        return self._values[index]

    def __array__(self, dtype=None, copy=None):
        return self._values if dtype is None else self._values.astype(dtype)

    def __repr__(self) -> str:
        return f"ProbVector({np.array2string(self._values, precision=6)})"

    @classmethod
    def uniform(cls, size: int) -> 'ProbVector':
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> 'ProbVector':
        """Normalize nonnegative weights (not log-weights)."""
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not total > 0:
            raise DegenerateDistributionError("degenerate distribution")
        return cls(w / total)


def normalize(log_weights: Sequence[float]) -> ProbVector:
    """
    Turn log-weights into a distribution with a max-shifted softmax.

    Raises:
        DegenerateDistributionError: no entry is finite
    """
    v = np.asarray(log_weights, dtype=float).ravel()
    if v.size == 0 or not np.any(np.isfinite(v)):
        raise DegenerateDistributionError("degenerate distribution")
    if np.any(np.isnan(v)) or np.any(v == np.inf):
        raise DegenerateDistributionError("degenerate distribution: nan or +inf log-weight")
    return ProbVector(softmax(v))


class RngStream:
    """
    Seeded, splittable random stream over a Philox counter-based generator.

    Children derived with ``child(*keys)`` are independent of the parent and
    of each other, and depend only on the seed and the keys.
    """

    def __init__(self, seed: int, _seed_seq: Optional[np.random.SeedSequence] = None):
        self.seed = int(seed)
        self._seq = _seed_seq if _seed_seq is not None else np.random.SeedSequence(self.seed)
        self.generator = np.random.Generator(np.random.Philox(self._seq))

    def child(self, *keys: int) -> 'RngStream':
        seq = np.random.SeedSequence(
            entropy=self._seq.entropy,
            spawn_key=tuple(self._seq.spawn_key) + tuple(int(k) for k in keys),
        )
        return RngStream(self.seed, _seed_seq=seq)

    def spawn(self, n: int) -> List['RngStream']:
        return [self.child(i) for i in range(n)]

    @property
    def key(self) -> Tuple[int, ...]:
        return tuple(self._seq.spawn_key)

    def uniform(self, size=None):
        return self.generator.random(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, key={self.key})"


def sample_discrete(p: ProbVector, rng: RngStream) -> int:
    """Draw an index with probability p[i]; consumes exactly one uniform."""
    values = np.asarray(p)
    cdf = np.cumsum(values)
    u = rng.uniform() * cdf[-1]
    index = int(np.searchsorted(cdf, u, side='right'))
    if index >= values.size:
        index = int(np.flatnonzero(values)[-1])
    return index


def sample_rows(probs: np.ndarray, rng: RngStream) -> np.ndarray:
    """Draw one index per row of a (n, k) probability array; one uniform per row."""
    cdf = np.cumsum(probs, axis=1)
    u = rng.uniform(cdf.shape[0]) * cdf[:, -1]
    return np.minimum((cdf <= u[:, None]).sum(axis=1), probs.shape[1] - 1)


class ExpFamConditional(ABC):
    """
    Conditional distribution in exponential-family form.

    Statistics are always indexed as ``stats(x, y)`` (observation first).
    ``given`` names the conditioning variable: ``'x'`` for a posterior
    p(y|x), ``'y'`` for a likelihood p(x|y).
    """

    given: str = 'x'

    def __init__(self, params: Sequence[float]):
        arr = np.array(params, dtype=float).ravel()
        if arr.size != self.feature_dim:
            raise DimensionMismatchError(
                f"{type(self).__name__} expects {self.feature_dim} parameters, got {arr.size}"
            )
        arr.setflags(write=False)
        self.params = arr

    @property
    @abstractmethod
    def feature_dim(self) -> int:
        """Length of the statistic vector."""

    @abstractmethod
    def stats(self, x: Any, y: Any) -> np.ndarray:
        """Sufficient statistics eta(x, y)."""

    @abstractmethod
    def log_partition(self, given_value: Any) -> float:
        """log Z for the conditioning value under the current parameters."""

    @abstractmethod
    def sample(self, given_value: Any, rng: RngStream) -> Any:
        """Draw the target variable given the conditioning value."""

    @abstractmethod
    def expected_stats(self, given_value: Any) -> np.ndarray:
        """E[eta] over the target for the conditioning value."""

    @abstractmethod
    def with_params(self, params: Sequence[float]) -> 'ExpFamConditional':
        """Copy of the model with new parameters."""

    def log_prob(self, x: Any, y: Any) -> float:
        given_value = x if self.given == 'x' else y
        return float(self.stats(x, y) @ self.params - self.log_partition(given_value))

    def conditional_grad(self, x: Any, y: Any) -> np.ndarray:
        """Exact gradient of log p(target | given) wrt. the parameters."""
        given_value = x if self.given == 'x' else y
        return self.stats(x, y) - self.expected_stats(given_value)

    def project(self, params: np.ndarray) -> Tuple[np.ndarray, bool]:
        """Map parameters onto the feasible set; returns (params, changed)."""
        return params, False

    def sample_many(self, given_values: Sequence[Any], rng: RngStream) -> List[Any]:
        return [self.sample(v, rng) for v in given_values]

    def stats_many(self, xs: Sequence[Any], ys: Sequence[Any]) -> np.ndarray:
        return np.stack([self.stats(x, y) for x, y in zip(xs, ys)])

    def expected_stats_many(self, given_values: Sequence[Any]) -> np.ndarray:
        return np.stack([self.expected_stats(v) for v in given_values])

    def log_prob_many(self, xs: Sequence[Any], ys: Sequence[Any]) -> np.ndarray:
        return np.array([self.log_prob(x, y) for x, y in zip(xs, ys)])

    def target_support(self) -> Optional[Sequence[Any]]:
        """Enumerable target values, or None for continuous targets."""
        return None


def exp_fam_log_prob(model: ExpFamConditional, x: Any, y: Any) -> float:
    """<eta(x, y), theta> - log Z(given, theta)."""
    return model.log_prob(x, y)


class TableConditional(ExpFamConditional):
    """
    Discrete conditional over finite X and Y with an explicit feature tensor.

    ``features`` has shape (|X|, |Y|, d); the default is the full one-hot
    table, one parameter per (x, y) cell.
    """

    def __init__(
        self,
        n_x: int,
        n_y: int,
        given: str = 'x',
        params: Optional[Sequence[float]] = None,
        features: Optional[np.ndarray] = None,
    ):
        if given not in ('x', 'y'):
            raise ValueError("given must be 'x' or 'y'")
        self.n_x = n_x
        self.n_y = n_y
        self.given = given
        if features is None:
            features = np.eye(n_x * n_y).reshape(n_x, n_y, n_x * n_y)
        features = np.asarray(features, dtype=float)
        if features.shape[:2] != (n_x, n_y):
            raise DimensionMismatchError(f"feature tensor shape {features.shape} vs ({n_x}, {n_y}, d)")
        features.setflags(write=False)
        self.features = features
        if params is None:
            params = np.zeros(features.shape[2])
        super().__init__(params)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[2]

    def scores(self, given_value: int) -> np.ndarray:
        """Unnormalized log-probabilities over the target."""
        if self.given == 'x':
            return self.features[given_value] @ self.params
        return self.features[:, given_value] @ self.params

    def stats(self, x: int, y: int) -> np.ndarray:
        return self.features[x, y]

    def log_partition(self, given_value: int) -> float:
        return float(logsumexp(self.scores(given_value)))

    def distribution(self, given_value: int) -> ProbVector:
        return normalize(self.scores(given_value))

    def sample(self, given_value: int, rng: RngStream) -> int:
        return sample_discrete(self.distribution(given_value), rng)

    def expected_stats(self, given_value: int) -> np.ndarray:
        p = np.asarray(self.distribution(given_value))
        block = self.features[given_value] if self.given == 'x' else self.features[:, given_value]
        return p @ block

    def with_params(self, params: Sequence[float]) -> 'TableConditional':
        return TableConditional(self.n_x, self.n_y, self.given, params, self.features)

    def target_support(self) -> Sequence[int]:
        return range(self.n_y) if self.given == 'x' else range(self.n_x)

    def matrix(self) -> np.ndarray:
        """
        Column-stochastic matrix of the conditional.

        Returns:
            A (|Y| x |X|) for a posterior, B (|X| x |Y|) for a likelihood
        """
        n_given = self.n_x if self.given == 'x' else self.n_y
        return np.stack([np.asarray(self.distribution(v)) for v in range(n_given)], axis=1)
