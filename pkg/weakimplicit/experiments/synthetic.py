"""
The one-dimensional three-class study.

Every (training size, repetition) cell draws a training sample and a
fresh test sample from the Gaussian generator, fits each configured
method and records the MAP error rates on both.
"""
import logging
import math
import time
from dataclasses import dataclass
from functools import partial
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..core.constants import (
    METHOD_BAYES,
    METHOD_CL,
    METHOD_CL_STRONG,
    METHOD_CL_WEAK,
    METHOD_IM,
)
from ..core.exceptions import (
    ConfigError,
    FeasibilityError,
    ImproperDistributionError,
    TrainingDivergenceError,
)
from ..core.models import ExperimentRecord, TrainConfig
from ..core.prob import RngStream
from ..learning.trainers import train_conditional_likelihood, train_implicit
from ..models.synthetic import (
    ClassGaussian,
    ClassGaussParams,
    GeneratorConfig,
    QuadLogReg,
    QuadLogRegParams,
    SyntheticDataset,
    map_decisions,
    sample_generator,
)
from .cells import cell_seed, flatten, map_cells
from .config import RunConfig

logger = logging.getLogger(__name__)

EXPERIMENT = 'synthetic'
EXPERIMENT_MISSPECIFIED = 'synthetic-misspecified'

Decision = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SyntheticCell:
    """What a method sees of one cell."""
    train_size: int
    repetition: int
    seed: int
    train: SyntheticDataset
    generator: GeneratorConfig
    shared_d: bool


# A method turns a cell (and its TrainConfig, None for untrained methods)
# into a decision function over observations.
SyntheticMethod = Callable[[SyntheticCell, Optional[TrainConfig]], Decision]


def _decisions(params: QuadLogRegParams) -> Decision:
    return partial(map_decisions, params)


def fit_conditional_likelihood(cell: SyntheticCell, config: TrainConfig) -> Decision:
    """Quadratic logistic regression by (regularized) conditional likelihood."""
    posterior = QuadLogReg(QuadLogRegParams.zeros().to_vector())
    result = train_conditional_likelihood(cell.train, posterior, config.replace(seed=cell.seed))
    return _decisions(QuadLogRegParams.from_vector(result.posterior_params))


def fit_implicit(cell: SyntheticCell, config: TrainConfig) -> Decision:
    """Posterior and per-class Gaussians trained jointly as an implicit model."""
    posterior = QuadLogReg(QuadLogRegParams.zeros().to_vector())
    likelihood = ClassGaussian(ClassGaussParams.neutral(cell.shared_d).to_vector(), cell.shared_d)
    result = train_implicit(cell.train, posterior, likelihood, config.replace(seed=cell.seed))
    return _decisions(QuadLogRegParams.from_vector(result.posterior_params))


def fit_bayes(cell: SyntheticCell, config: Optional[TrainConfig] = None) -> Decision:
    """The generator's own posterior; ignores the training sample."""
    return _decisions(QuadLogRegParams.true_posterior(cell.generator))


SYNTHETIC_METHODS: Dict[str, SyntheticMethod] = {
    METHOD_CL: fit_conditional_likelihood,
    METHOD_CL_WEAK: fit_conditional_likelihood,
    METHOD_CL_STRONG: fit_conditional_likelihood,
    METHOD_IM: fit_implicit,
    METHOD_BAYES: fit_bayes,
}


def register_method(name: str, method: SyntheticMethod) -> None:
    """
    Make ``name`` usable in ``[synthetic] methods``.

    Registered methods must be module-level functions when the run uses
    more than one worker.
    """
    SYNTHETIC_METHODS[name] = method


def experiment_name(config: RunConfig) -> str:
    return EXPERIMENT_MISSPECIFIED if config.synthetic.misspecified else EXPERIMENT


def _error(decide: Decision, data: SyntheticDataset) -> float:
    return float(np.mean(decide(data.xs) != data.ys))


def _run_cell(task: Tuple[RunConfig, int, int, Mapping[str, SyntheticMethod]]) -> List[ExperimentRecord]:
    config, T, rep, registry = task
    settings = config.synthetic
    generator = settings.generator()
    stream = RngStream(config.seed).child(T, rep)
    seed = cell_seed(config.seed, T, rep, 2)
    cell = SyntheticCell(
        train_size=T,
        repetition=rep,
        seed=seed,
        train=sample_generator(generator, T, stream.child(0)),
        generator=generator,
        shared_d=settings.misspecified,
    )
    test = sample_generator(generator, settings.test_size, stream.child(1))
    name = experiment_name(config)

    records = []
    for method in settings.methods:
        started = time.perf_counter()
        try:
            decide = registry[method](cell, config.methods.get(method))
            train_error, test_error = _error(decide, cell.train), _error(decide, test)
        except (TrainingDivergenceError, FeasibilityError, ImproperDistributionError) as e:
            logger.warning("%s T=%d rep=%d diverged: %s", method, T, rep, e)
            train_error = test_error = math.nan
        elapsed = time.perf_counter() - started
        logger.debug("%s T=%d rep=%d: %.2fs", method, T, rep, elapsed)
        records.append(ExperimentRecord.create(
            experiment=name,
            method=method,
            train_size=T,
            repetition=rep,
            train_error=train_error,
            test_error=test_error,
            seed=seed,
            wall_time=elapsed if config.record_timing else 0.0,
        ))
    logger.info("synthetic cell T=%d rep=%d done", T, rep)
    return records


def run_synthetic(
    config: RunConfig,
    methods: Optional[Mapping[str, SyntheticMethod]] = None,
) -> List[ExperimentRecord]:
    """
    Run the synthetic sweep.

    Args:
        config: run configuration; ``config.synthetic`` selects sizes,
            repetitions, methods and the (mis)specified generator
        methods: extra methods by name, on top of the registry

    Returns:
        Records ordered by training size, repetition, then method in
        configuration order. Diverged fits are kept as rows with nan
        error rates.

    Raises:
        ConfigError: a configured method is unknown
    """
    registry = {**SYNTHETIC_METHODS, **(methods or {})}
    unknown = [m for m in config.synthetic.methods if m not in registry]
    if unknown:
        raise ConfigError(f"unknown synthetic methods: {', '.join(unknown)}")
    # Only ship the methods this run uses to the workers
    registry = {m: registry[m] for m in config.synthetic.methods}

    settings = config.synthetic
    tasks = [(config, T, rep, registry) for T in settings.sizes for rep in range(settings.repetitions)]
    logger.info(
        "synthetic sweep: sizes=%s repetitions=%d methods=%s misspecified=%s",
        settings.sizes, settings.repetitions, ','.join(settings.methods), settings.misspecified,
    )
    return flatten(map_cells(_run_cell, tasks, config.workers))
