"""Chain samplers feeding the trainers."""
import logging
from dataclasses import dataclass
from typing import Any, List, Sequence

import numpy as np

from ..core.prob import ExpFamConditional, RngStream

logger = logging.getLogger(__name__)


def take(values: Any, index: Sequence[int]) -> Any:
    """Index an array or a plain sequence with a list of positions."""
    if isinstance(values, np.ndarray):
        return values[np.asarray(index, dtype=int)]
    return [values[i] for i in index]


@dataclass
class ChainDraw:
    """
    Reverse chains for a batch, stored position-major.

    ``observations[0]`` is the batch of x*, ``labels[0]`` the y~ batch,
    ``observations[1]`` the x~ batch, ``labels[1]`` the y^ batch, and so on.
    """
    observations: List[Any]
    labels: List[Any]

    @property
    def length(self) -> int:
        """Number of generated (x, y) transitions after y~."""
        return len(self.observations) - 1


class ChainSampler:
    """
    Draws fresh reverse chains from the current conditionals.

    Subclasses keep per-example state between updates (warm start).
    """

    def draw(
        self,
        posterior: ExpFamConditional,
        likelihood: ExpFamConditional,
        xs: Any,
        index: Sequence[int],
        rng: RngStream,
        chain_length: int = 1,
    ) -> ChainDraw:
        observations = [xs]
        labels = [posterior.sample_many(xs, rng)]
        for _ in range(chain_length):
            observations.append(likelihood.sample_many(labels[-1], rng))
            labels.append(posterior.sample_many(observations[-1], rng))
        return ChainDraw(observations, labels)

    def negative_stats(
        self,
        posterior: ExpFamConditional,
        xs: Any,
        index: Sequence[int],
        rng: RngStream,
    ) -> np.ndarray:
        """
        E[eta_1(x, .)] under p(Y|x) for each x of the batch.

        Exact when the label space is enumerable, otherwise a one-sample
        surrogate eta_1(x, y~) with y~ ~ p(Y|x).
        """
        if posterior.target_support() is not None:
            return posterior.expected_stats_many(xs)
        logger.debug("label space not enumerable, using a sampled surrogate expectation")
        return posterior.stats_many(xs, posterior.sample_many(xs, rng))
