"""Stochastic gradients of the implicit objective and of the conditional likelihood."""
import logging
from typing import Any, Optional, Tuple

import numpy as np

from ..core.models import GradientPair
from ..core.prob import ExpFamConditional, RngStream
from ..coupling import sample_reverse_chain
from .samplers import ChainDraw

logger = logging.getLogger(__name__)


def chain_gradient(
    posterior: ExpFamConditional,
    likelihood: ExpFamConditional,
    ys_star: Any,
    draw: ChainDraw,
    debug: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-example gradient rows for a batch of reverse chains.

    With chain (x*, y~, x~, y^) the rows are
        g1 = eta1(x~, y~) - eta1(x~, y^) + eta1(x*, y*) - eta1(x*, y~)
        g2 = eta2(x*, y~) - eta2(x~, y~)
    Longer chains add the same two differences for every further
    transition.

    Returns:
        (G1, G2) with one row per example
    """
    xs_star = draw.observations[0]
    conditional_part = posterior.stats_many(xs_star, ys_star) - posterior.stats_many(xs_star, draw.labels[0])
    generated_part = np.zeros_like(conditional_part)
    g2 = np.zeros((conditional_part.shape[0], likelihood.feature_dim))
    for i in range(1, draw.length + 1):
        x_i, y_prev, y_i = draw.observations[i], draw.labels[i - 1], draw.labels[i]
        generated_part += posterior.stats_many(x_i, y_prev) - posterior.stats_many(x_i, y_i)
        g2 += likelihood.stats_many(draw.observations[i - 1], y_prev) - likelihood.stats_many(x_i, y_prev)
    g1 = conditional_part + generated_part
    if debug:
        _check_decomposition(posterior, ys_star, draw, g1)
    return g1, g2


def expected_chain_gradient(
    posterior: ExpFamConditional,
    likelihood: ExpFamConditional,
    ys_star: Any,
    draw: ChainDraw,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    ``chain_gradient`` with the statistics of y~, y^ and x~ averaged out.

    Each statistic of a variable that was drawn last is replaced by its
    expectation given the value it was drawn from:
        g1 = eta1(x~, y~) - E_{p(Y|x~)}[eta1(x~, .)] + eta1(x*, y*) - E_{p(Y|x*)}[eta1(x*, .)]
        g2 = eta2(x*, y~) - E_{p(X|y~)}[eta2(., y~)]
    The expectation over chains is unchanged. Needs an enumerable label
    space for the posterior expectations.
    """
    xs_star = draw.observations[0]
    g1 = posterior.stats_many(xs_star, ys_star) - posterior.expected_stats_many(xs_star)
    g2 = np.zeros((g1.shape[0], likelihood.feature_dim))
    for i in range(1, draw.length + 1):
        x_i, y_prev = draw.observations[i], draw.labels[i - 1]
        g1 += posterior.stats_many(x_i, y_prev) - posterior.expected_stats_many(x_i)
        g2 += likelihood.stats_many(draw.observations[i - 1], y_prev) - likelihood.expected_stats_many(y_prev)
    return g1, g2


def _check_decomposition(posterior: ExpFamConditional, ys_star: Any, draw: ChainDraw, g1: np.ndarray) -> None:
    """Recompute every g1 row from single-example statistics."""
    for n in range(g1.shape[0]):
        x_star = draw.observations[0][n]
        expected = posterior.stats(x_star, ys_star[n]) - posterior.stats(x_star, draw.labels[0][n])
        for i in range(1, draw.length + 1):
            x_i = draw.observations[i][n]
            expected = expected + posterior.stats(x_i, draw.labels[i - 1][n]) \
                - posterior.stats(x_i, draw.labels[i][n])
        assert np.allclose(g1[n], expected, rtol=1e-9, atol=1e-9), f"gradient decomposition broken at row {n}"


def implicit_sgd_step(
    posterior: ExpFamConditional,
    likelihood: ExpFamConditional,
    example: Tuple[Any, Any],
    rng: RngStream,
    chain_length: int = 1,
    debug: bool = False,
) -> GradientPair:
    """
    One stochastic gradient of the joint log-likelihood for (x*, y*).

    Samples y~ ~ p(Y|x*), x~ ~ p(X|y~), y^ ~ p(Y|x~) and returns the
    statistic differences of ``chain_gradient``.
    """
    x_star, y_star = example
    chain = sample_reverse_chain(posterior, likelihood, x_star, 2 * chain_length + 1, rng)
    observations = [[x] for x in chain.observations]
    labels = [[y] for y in chain.labels]
    g1, g2 = chain_gradient(posterior, likelihood, [y_star], ChainDraw(observations, labels), debug)
    pair = GradientPair(g1[0], g2[0])
    if debug:
        pair.check_dims(posterior.feature_dim, likelihood.feature_dim)
    return pair


def cl_gradient(
    posterior: ExpFamConditional,
    example: Tuple[Any, Any],
    rng: Optional[RngStream] = None,
) -> np.ndarray:
    """
    Gradient of log p(y|x) wrt. the posterior parameters.

    eta1(x, y) - E_{p(Y|x)}[eta1(x, .)], exact for enumerable label
    spaces. Otherwise a sampled surrogate is used, which needs ``rng``.
    """
    x, y = example
    if posterior.target_support() is not None:
        return posterior.conditional_grad(x, y)
    if rng is None:
        raise ValueError("a random stream is required for the sampled surrogate gradient")
    logger.debug("cl_gradient: sampled surrogate for a non-enumerable label space")
    return posterior.stats(x, y) - posterior.stats(x, posterior.sample(x, rng))


def clip_gradient(g: np.ndarray, max_norm: Optional[float]) -> Tuple[np.ndarray, bool]:
    """Rescale g so its infinity norm is at most max_norm."""
    if max_norm is None:
        return g, False
    peak = float(np.max(np.abs(g))) if g.size else 0.0
    if peak <= max_norm:
        return g, False
    return g * (max_norm / peak), True
