"""Trainers: conditional likelihood baseline and implicit-model SGD."""
import logging
import math
from typing import Any, Optional, Sequence

import numpy as np

from ..core.exceptions import ConfigError, FeasibilityError, ImplicitModelError, TrainingDivergenceError
from ..core.models import TraceRow, TrainConfig, TrainResult
from ..core.prob import ExpFamConditional, RngStream, TableConditional
from ..coupling import DiscreteConditionalPair, check_strong_implicit, stationary_marginals
from .gradients import chain_gradient, clip_gradient, expected_chain_gradient
from .samplers import ChainSampler, take

logger = logging.getLogger(__name__)


def _batches(n: int, batch_size: int, rng: RngStream):
    order = rng.permutation(n)
    for b, start in enumerate(range(0, n, batch_size)):
        yield b, order[start:start + batch_size]


def _mean_log_likelihood(model: ExpFamConditional, dataset: Any) -> float:
    """Mean log p(y|x); nan when the partition function is intractable."""
    try:
        return float(np.mean(model.log_prob_many(dataset.xs, dataset.ys)))
    except NotImplementedError:
        return math.nan


class _TailAverage:
    """Running mean of parameter vectors after every update from ``start`` on."""

    def __init__(self, start: int):
        self.start = start
        self.count = 0
        self.sums: Optional[list] = None

    def add(self, epoch: int, *params: np.ndarray) -> None:
        if epoch < self.start:
            return
        if self.sums is None:
            self.sums = [np.zeros_like(p) for p in params]
        for total, p in zip(self.sums, params):
            total += p
        self.count += 1

    def means(self, *fallback: np.ndarray) -> Sequence[np.ndarray]:
        if not self.count:
            return fallback
        return [total / self.count for total in self.sums]


def _plan(config: TrainConfig, T: int):
    epochs = config.epochs_for(T)
    if epochs > config.epochs:
        logger.debug("running %d epochs for %d updates on %d examples", epochs, config.min_updates, T)
    return epochs, _TailAverage(config.averaging_start(epochs))


def train_conditional_likelihood(
    dataset: Any,
    posterior: ExpFamConditional,
    config: TrainConfig,
    sampler: Optional[ChainSampler] = None,
) -> TrainResult:
    """
    Gradient ascent on the conditional log-likelihood.

    Maximizes (1/T) sum_t log p(y_t|x_t; theta) - l2_weight * ||theta||^2,
    i.e. the summed objective with a T-scaled quadratic penalty. Batches
    of ``config.batch_size`` examples use exact expectations when the
    label space is enumerable, else the sampler's surrogate.

    Args:
        dataset: object with ``xs`` and ``ys`` of equal length
        posterior: initial model p(Y|X)
        config: training configuration
        sampler: provides negative statistics (default: fresh sampling)

    Returns:
        TrainResult with the learned posterior parameters (tail-averaged
        when ``config.average_tail`` > 0) and the per-epoch objective

    Raises:
        TrainingDivergenceError: objective or parameters became non-finite
    """
    T = len(dataset)
    if T == 0:
        raise ValueError("dataset is empty")
    sampler = sampler or ChainSampler()
    rng = RngStream(config.seed)
    model = posterior
    theta = model.params.copy()
    result = TrainResult(posterior_params=theta)
    epochs, average = _plan(config, T)

    for epoch in range(epochs):
        step = config.step_at(epoch)
        for b, index in _batches(T, config.batch_size, rng.child(epoch)):
            xs = take(dataset.xs, index)
            ys = take(dataset.ys, index)
            positive = model.stats_many(xs, ys)
            negative = sampler.negative_stats(model, xs, index, rng.child(epoch, b))
            grad = (positive - negative).mean(axis=0) - 2.0 * config.l2_weight * theta
            grad, clipped = clip_gradient(grad, config.clip_norm)
            if clipped:
                logger.debug("epoch %d batch %d: gradient clipped", epoch, b)
            updated = theta + step * grad
            if not np.all(np.isfinite(updated)):
                raise TrainingDivergenceError(f"parameters diverged in epoch {epoch}", last_state=theta)
            theta = updated
            model = model.with_params(theta)
            average.add(epoch, theta)

        objective = _mean_log_likelihood(model, dataset) - config.l2_weight * float(theta @ theta)
        if math.isinf(objective) or (math.isnan(objective) and not np.all(np.isfinite(theta))):
            raise TrainingDivergenceError(f"objective diverged in epoch {epoch}", last_state=theta)
        result.trace.append(TraceRow(epoch=epoch, objective=objective, step_size=step))

    (result.posterior_params,) = average.means(theta)
    return result


def _discrete_pair(posterior: ExpFamConditional, likelihood: ExpFamConditional) -> Optional[DiscreteConditionalPair]:
    if isinstance(posterior, TableConditional) and isinstance(likelihood, TableConditional):
        return DiscreteConditionalPair.from_models(posterior, likelihood)
    return None


def _implicit_objective(posterior, likelihood, dataset) -> tuple:
    """Mean joint log-likelihood (exact for discrete models) and the pointwise consistency residual."""
    objective = _mean_log_likelihood(posterior, dataset)
    pair = _discrete_pair(posterior, likelihood)
    if pair is None:
        return objective, None
    try:
        pX, pY = stationary_marginals(pair, strict=False)
    except ImplicitModelError as e:
        logger.debug("stationary marginals unavailable: %s", e)
        return objective, None
    xs = np.asarray(dataset.xs, dtype=int)
    objective += float(np.mean(np.log(np.asarray(pX)[xs])))
    residual = check_strong_implicit(pair, pX, pY).max_residual
    logger.debug("pointwise consistency residual %.3e", residual)
    return objective, residual


def train_implicit(
    dataset: Any,
    posterior: ExpFamConditional,
    likelihood: ExpFamConditional,
    config: TrainConfig,
    sampler: Optional[ChainSampler] = None,
) -> TrainResult:
    """
    Stochastic gradient ascent on the joint log-likelihood of the implicit model.

    Every example of a batch contributes one reverse chain; the per-example
    gradient pairs are averaged, clipped, scaled by the step size and
    applied; the likelihood is then projected onto its feasible set.
    With ``config.exact_expectations`` the chains are scored by
    ``expected_chain_gradient`` instead of ``chain_gradient``.

    Args:
        dataset: object with ``xs`` and ``ys`` of equal length
        posterior: initial p(Y|X; theta_1)
        likelihood: initial p(X|Y; theta_2)
        config: training configuration
        sampler: chain source (default: fresh chains; segmentation models
            pass their warm-start sampler)

    Returns:
        TrainResult with both parameter vectors (tail-averaged when
        ``config.average_tail`` > 0) and the per-epoch trace

    Raises:
        ConfigError: exact expectations requested for a non-enumerable label space
        FeasibilityError: projection could not restore a proper likelihood
        TrainingDivergenceError: parameters became non-finite
    """
    T = len(dataset)
    if T == 0:
        raise ValueError("dataset is empty")
    if config.exact_expectations and posterior.target_support() is None:
        raise ConfigError("exact_expectations needs a posterior with an enumerable label space")
    sampler = sampler or ChainSampler()
    rng = RngStream(config.seed)

    theta2, changed = likelihood.project(likelihood.params.copy())
    projections = int(changed)
    likelihood = likelihood.with_params(theta2)
    theta1 = posterior.params.copy()
    result = TrainResult(posterior_params=theta1, likelihood_params=theta2)
    epochs, average = _plan(config, T)

    for epoch in range(epochs):
        step = config.step_at(epoch)
        for b, index in _batches(T, config.batch_size, rng.child(epoch)):
            xs = take(dataset.xs, index)
            ys = take(dataset.ys, index)
            draw = sampler.draw(posterior, likelihood, xs, index, rng.child(epoch, b), config.chain_length)
            if config.exact_expectations:
                G1, G2 = expected_chain_gradient(posterior, likelihood, ys, draw)
            else:
                G1, G2 = chain_gradient(posterior, likelihood, ys, draw, debug=config.debug_checks)
            g1, clipped1 = clip_gradient(G1.mean(axis=0), config.clip_norm)
            g2, clipped2 = clip_gradient(G2.mean(axis=0), config.clip_norm)
            if clipped1 or clipped2:
                logger.debug("epoch %d batch %d: gradient clipped", epoch, b)

            new1 = theta1 + step * g1
            if not np.all(np.isfinite(new1)):
                raise TrainingDivergenceError(f"posterior diverged in epoch {epoch}", last_state=theta1)
            new2, changed = likelihood.project(theta2 + step * g2)
            if not np.all(np.isfinite(new2)):
                raise FeasibilityError(f"likelihood projection failed in epoch {epoch}")
            projections += int(changed)
            theta1, theta2 = new1, new2
            posterior = posterior.with_params(theta1)
            likelihood = likelihood.with_params(theta2)
            average.add(epoch, theta1, theta2)

        objective, residual = _implicit_objective(posterior, likelihood, dataset)
        result.trace.append(TraceRow(epoch=epoch, objective=objective, step_size=step, residual=residual))

    theta1, theta2 = average.means(theta1, theta2)
    theta2, _ = likelihood.project(theta2)
    result.posterior_params, result.likelihood_params = theta1, theta2
    result.projections = projections
    if projections:
        logger.debug("likelihood projection triggered %d times", projections)
    return result
