"""Persistent per-example Gibbs chains for the segmentation trainers."""
import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from ...core.constants import SEG_NUM_LABELS, SEG_PALETTE_SIZE
from ...core.exceptions import ConfigError
from ...core.prob import RngStream
from ...learning.samplers import ChainDraw, ChainSampler
from .color import ColorLikelihood
from .crf import CrfPosterior
from .observation import SegObservation

logger = logging.getLogger(__name__)


@dataclass
class ChainState:
    """Chain of one training example: y~, then (x~, g~, y^) per generated position."""
    y_tilde: np.ndarray
    x_tilde: List[np.ndarray]
    g_tilde: List[np.ndarray]
    y_hat: List[np.ndarray]
    sweeps: int = 0
    observed: List[SegObservation] = field(default_factory=list)


class WarmStartBuffer:
    """
    Chain states of all training examples.

    Fresh states hold random labelings for y~ and y^, random colour
    numbers, and x~ equal to the training image.
    """

    def __init__(
        self,
        observations: Sequence[SegObservation],
        rng: RngStream,
        num_labels: int = SEG_NUM_LABELS,
        palette_size: int = SEG_PALETTE_SIZE,
        chain_length: int = 1,
    ):
        self.num_labels = num_labels
        self.palette_size = palette_size
        self.chain_length = chain_length
        self.states = [self.fresh(x, rng.child(t)) for t, x in enumerate(observations)]

    def fresh(self, x: SegObservation, rng: RngStream) -> ChainState:
        n = self.chain_length
        return ChainState(
            y_tilde=rng.integers(0, self.num_labels, size=x.shape),
            x_tilde=[x.image.copy() for _ in range(n)],
            g_tilde=[rng.integers(0, self.palette_size, size=x.shape) for _ in range(n)],
            y_hat=[rng.integers(0, self.num_labels, size=x.shape) for _ in range(n)],
        )

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, t: int) -> ChainState:
        return self.states[t]

    def sweep_counts(self) -> List[int]:
        return [state.sweeps for state in self.states]


class WarmStartSampler(ChainSampler):
    """
    Advances each example's stored chain by ``sweeps_per_update`` Gibbs
    sweeps per position whenever the example is drawn.

    With ``warm_start`` off every draw restarts from a fresh state.
    """

    def __init__(self, buffer: WarmStartBuffer, sweeps_per_update: int = 1, warm_start: bool = True):
        self.buffer = buffer
        self.sweeps_per_update = sweeps_per_update
        self.warm_start = warm_start

    def _state(self, t: int, x: SegObservation, rng: RngStream) -> ChainState:
        state = self.buffer[t]
        if not self.warm_start:
            sweeps = state.sweeps
            state = self.buffer.fresh(x, rng)
            state.sweeps = sweeps
            self.buffer.states[t] = state
        return state

    def draw(
        self,
        posterior: CrfPosterior,
        likelihood: ColorLikelihood,
        xs: Sequence[SegObservation],
        index: Sequence[int],
        rng: RngStream,
        chain_length: int = 1,
    ) -> ChainDraw:
        if chain_length != self.buffer.chain_length:
            raise ConfigError(f"buffer holds chains of length {self.buffer.chain_length}, asked for {chain_length}")
        k = self.sweeps_per_update
        first_labels = []
        generated_x: List[List[SegObservation]] = [[] for _ in range(chain_length)]
        generated_y: List[List[np.ndarray]] = [[] for _ in range(chain_length)]
        for x_star, t in zip(xs, index):
            state = self._state(int(t), x_star, rng)
            state.y_tilde = posterior.sweep(x_star, state.y_tilde, rng, k)
            first_labels.append(state.y_tilde)
            previous = state.y_tilde
            state.observed = []
            for i in range(chain_length):
                state.x_tilde[i], state.g_tilde[i] = likelihood.sweep(previous, state.x_tilde[i], state.g_tilde[i], rng, k)
                observation = likelihood.observe(state.x_tilde[i])
                state.y_hat[i] = posterior.sweep(observation, state.y_hat[i], rng, k)
                state.observed.append(observation)
                generated_x[i].append(observation)
                generated_y[i].append(state.y_hat[i])
                previous = state.y_hat[i]
            state.sweeps += k
        return ChainDraw([list(xs)] + generated_x, [first_labels] + generated_y)

    def negative_stats(
        self,
        posterior: CrfPosterior,
        xs: Sequence[SegObservation],
        index: Sequence[int],
        rng: RngStream,
    ) -> np.ndarray:
        """Statistics at the persistent y~ chains, each advanced first."""
        k = self.sweeps_per_update
        labels = []
        for x, t in zip(xs, index):
            state = self._state(int(t), x, rng)
            state.y_tilde = posterior.sweep(x, state.y_tilde, rng, k)
            state.sweeps += k
            labels.append(state.y_tilde)
        return posterior.stats_many(xs, labels)
