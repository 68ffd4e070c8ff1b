"""
Coupling of two conditionals into (weak) implicit joint models.

Stationary marginals of the alternating chain, the pointwise consistency
check of strong implicit models, and reverse chain generation.
"""
import logging
from dataclasses import dataclass
from typing import Any, Optional, Tuple

import numpy as np
from scipy.special import softmax

from .core.constants import DEFAULT_TOLERANCES, STATIONARY_MAX_ITER
from .core.exceptions import ConvergenceError, DimensionMismatchError, LemmaPreconditionError
from .core.models import Chain, ChainDirection
from .core.prob import ExpFamConditional, ProbVector, RngStream, TableConditional

logger = logging.getLogger(__name__)


class DiscreteConditionalPair:
    """
    p(y|x) and p(x|y) on finite spaces as column-stochastic matrices.

    A has shape (|Y|, |X|) with A[y, x] = p(y|x); B has shape (|X|, |Y|)
    with B[x, y] = p(x|y).
    """

    def __init__(self, A: np.ndarray, B: np.ndarray, tol: float = DEFAULT_TOLERANCES.normalization):
        A = np.array(A, dtype=float)
        B = np.array(B, dtype=float)
        if A.ndim != 2 or B.ndim != 2 or A.shape != B.shape[::-1]:
            raise DimensionMismatchError(f"incompatible shapes A{A.shape}, B{B.shape}")
        for name, M in (('A', A), ('B', B)):
            if np.any(M < 0):
                raise ValueError(f"{name} has negative entries")
            worst = np.max(np.abs(M.sum(axis=0) - 1.0))
            if worst > tol:
                raise ValueError(f"columns of {name} do not sum to 1 (max deviation {worst:.2e})")
        A.setflags(write=False)
        B.setflags(write=False)
        self.A = A
        self.B = B

    @property
    def n_x(self) -> int:
        return self.A.shape[1]

    @property
    def n_y(self) -> int:
        return self.A.shape[0]

    @property
    def C(self) -> np.ndarray:
        """Transition matrix of the x-chain, B @ A."""
        return self.B @ self.A

    @property
    def D(self) -> np.ndarray:
        """Transition matrix of the y-chain, A @ B."""
        return self.A @ self.B

    @classmethod
    def from_models(cls, posterior: TableConditional, likelihood: TableConditional) -> 'DiscreteConditionalPair':
        if posterior.given != 'x' or likelihood.given != 'y':
            raise ValueError("expected a posterior p(y|x) and a likelihood p(x|y)")
        return cls(posterior.matrix(), likelihood.matrix())


def pair_from_joint(joint: np.ndarray) -> DiscreteConditionalPair:
    """Conditionals of a strictly positive joint table joint[x, y]."""
    joint = np.asarray(joint, dtype=float)
    A = (joint / joint.sum(axis=1, keepdims=True)).T
    B = joint / joint.sum(axis=0, keepdims=True)
    return DiscreteConditionalPair(A, B)


def weakened_conditional(energy_xy: np.ndarray, energy_x: np.ndarray, alpha: float) -> np.ndarray:
    """
    Likelihood matrix B with p(x|y) proportional to exp(alpha * E(x, y) + E(x)).

    alpha = 0 makes p(x|y) independent of y; a large alpha approaches a
    deterministic mapping.
    """
    energy_xy = np.asarray(energy_xy, dtype=float)
    energy_x = np.asarray(energy_x, dtype=float)
    return softmax(alpha * energy_xy + energy_x[:, None], axis=0)


def stationary_marginals(
    pair: DiscreteConditionalPair,
    tol: float = DEFAULT_TOLERANCES.stationary,
    max_iter: int = STATIONARY_MAX_ITER,
    strict: bool = True,
) -> Tuple[ProbVector, ProbVector]:
    """
    Marginals p(X), p(Y) satisfying p(Y) = A p(X) and p(X) = B p(Y).

    Power iteration on C = B @ A from the uniform vector.

    Args:
        pair: the two conditionals
        tol: infinity-norm tolerance on ``C pX - pX``
        max_iter: iteration budget
        strict: require C to be strictly positive; otherwise accept any C
            for which the iteration converges

    Returns:
        (pX, pY)

    Raises:
        LemmaPreconditionError: strict mode and C has a zero entry
        ConvergenceError: residual above tol after max_iter iterations
    """
    C = pair.C
    if strict and not np.all(C > 0):
        raise LemmaPreconditionError("lemma preconditions violated: C = B A has non-positive entries")

    v = np.full(pair.n_x, 1.0 / pair.n_x)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        w = C @ v
        w /= w.sum()
        residual = float(np.max(np.abs(C @ w - w)))
        v = w
        if residual <= tol:
            break
    else:
        raise ConvergenceError("power iteration did not converge", residual, max_iter)

    if not strict:
        logger.debug("relaxed stationary solve converged in %d iterations, residual %.3e", iteration, residual)
    v = np.clip(v, 0.0, None)
    pX = ProbVector(v / v.sum())
    w = pair.A @ np.asarray(pX)
    pY = ProbVector(w / w.sum())
    return pX, pY


@dataclass(frozen=True)
class StrongCheck:
    """Outcome of the pointwise consistency check."""
    holds: bool
    max_residual: float


def induced_joints(
    pair: DiscreteConditionalPair, pX: ProbVector, pY: ProbVector
) -> Tuple[np.ndarray, np.ndarray]:
    """The joints p(x) p(y|x) and p(y) p(x|y), both indexed [x, y]."""
    joint_x = np.asarray(pX)[:, None] * pair.A.T
    joint_y = pair.B * np.asarray(pY)[None, :]
    return joint_x, joint_y


def check_strong_implicit(
    pair: DiscreteConditionalPair,
    pX: ProbVector,
    pY: ProbVector,
    tol: float = DEFAULT_TOLERANCES.normalization,
) -> StrongCheck:
    """Does p(x) p(y|x) = p(y) p(x|y) hold for every (x, y) within tol?"""
    joint_x, joint_y = induced_joints(pair, pX, pY)
    residual = float(np.max(np.abs(joint_x - joint_y)))
    return StrongCheck(holds=residual <= tol, max_residual=residual)


def sample_reverse_chain(
    posterior: ExpFamConditional,
    likelihood: ExpFamConditional,
    x_star: Any,
    steps: int,
    rng: RngStream,
) -> Chain:
    """
    Generate (x*, y~, x~, y^, ...) backwards from a training observation.

    Each element is drawn from the current conditional given its
    predecessor; ``steps`` counts the sampled elements after x*.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    items = [x_star]
    for position in range(1, steps + 1):
        previous = items[-1]
        if position % 2 == 1:
            items.append(posterior.sample(previous, rng))
        else:
            items.append(likelihood.sample(previous, rng))
    return Chain(items=tuple(items), direction=ChainDirection.REVERSE, start_anchor=x_star)


def _inverse_cdf(columns_cdf: np.ndarray, states: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = columns_cdf[:, states]
    drawn = (cdf <= u[None, :] * cdf[-1][None, :]).sum(axis=0)
    return np.minimum(drawn, columns_cdf.shape[0] - 1)


def simulate_forward_chains(
    pair: DiscreteConditionalPair,
    x0: np.ndarray,
    steps: int,
    rng: RngStream,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Run many alternating chains forward in lockstep.

    y^i ~ p(Y | x^i), x^{i+1} ~ p(X | y^i) for ``steps`` rounds.

    Returns:
        (x^n, y^n) arrays, one entry per chain
    """
    x = np.asarray(x0, dtype=int).copy()
    cdf_a = np.cumsum(pair.A, axis=0)
    cdf_b = np.cumsum(pair.B, axis=0)
    y: Optional[np.ndarray] = None
    for _ in range(steps):
        y = _inverse_cdf(cdf_a, x, rng.uniform(x.size))
        x = _inverse_cdf(cdf_b, y, rng.uniform(x.size))
    y = _inverse_cdf(cdf_a, x, rng.uniform(x.size))
    return x, y
