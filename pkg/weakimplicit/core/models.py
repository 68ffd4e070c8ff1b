"""Core data models."""
import math
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .constants import DEFAULT_CLIP_NORM, L2_PRESETS, METHOD_CL_STRONG, METHOD_CL_WEAK
from .exceptions import ConfigError, DimensionMismatchError


class StepSchedule(Enum):
    """Step-size schedules."""
    CONSTANT = "constant"
    INVERSE = "inverse"            # lambda / (1 + epoch), floored
    INVERSE_SQRT = "inverse_sqrt"  # lambda / sqrt(1 + epoch), floored


class ChainDirection(Enum):
    """Direction in which a chain was generated."""
    FORWARD = "forward"
    REVERSE = "reverse"


@dataclass(frozen=True)
class TrainConfig:
    """Training hyper-parameters shared by all trainers."""
    step_size: float = 0.05
    schedule: StepSchedule = StepSchedule.CONSTANT
    step_floor: float = 0.0
    epochs: int = 100
    batch_size: int = 10
    l2_weight: float = 0.0
    seed: int = 0
    gibbs_sweeps_per_update: int = 1
    warm_start: bool = True
    chain_length: int = 1
    clip_norm: Optional[float] = DEFAULT_CLIP_NORM
    debug_checks: bool = False
    min_updates: int = 0               # train on until this many batch updates were made
    average_tail: float = 0.0          # fraction of final epochs whose iterates are averaged
    exact_expectations: bool = False   # implicit trainer, enumerable labels only

    def __post_init__(self):
        if not self.step_size >= 0:
            raise ConfigError(f"step_size must be nonnegative, got {self.step_size}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.l2_weight < 0:
            raise ConfigError(f"l2_weight must be nonnegative, got {self.l2_weight}")
        if self.chain_length < 1:
            raise ConfigError(f"chain_length must be >= 1, got {self.chain_length}")
        if self.gibbs_sweeps_per_update < 1:
            raise ConfigError("gibbs_sweeps_per_update must be >= 1")
        if self.min_updates < 0:
            raise ConfigError(f"min_updates must be >= 0, got {self.min_updates}")
        if not 0.0 <= self.average_tail <= 1.0:
            raise ConfigError(f"average_tail must lie in [0, 1], got {self.average_tail}")

    def step_at(self, epoch: int) -> float:
        """Step size for a (0-based) epoch under the configured schedule."""
        if self.schedule is StepSchedule.CONSTANT:
            return self.step_size
        power = 1.0 if self.schedule is StepSchedule.INVERSE else 0.5
        return max(self.step_size / (1.0 + epoch) ** power, self.step_floor)

    def epochs_for(self, num_examples: int) -> int:
        """Epochs to run on a dataset of this size: at least ``epochs``, more if ``min_updates`` asks."""
        batches = math.ceil(num_examples / self.batch_size)
        return max(self.epochs, math.ceil(self.min_updates / batches))

    def averaging_start(self, epochs: int) -> int:
        """First epoch whose iterates enter the tail average; ``epochs`` when averaging is off."""
        return epochs - math.ceil(self.average_tail * epochs)

    def replace(self, **changes: Any) -> 'TrainConfig':
        """Copy with some fields changed."""
        values = asdict(self)
        values.update(changes)
        return TrainConfig(**values)

    @classmethod
    def weak_reg(cls, **kwargs: Any) -> 'TrainConfig':
        """Baseline preset with weak quadratic regularization."""
        return cls(l2_weight=L2_PRESETS[METHOD_CL_WEAK], **kwargs)

    @classmethod
    def strong_reg(cls, **kwargs: Any) -> 'TrainConfig':
        """Baseline preset with strong quadratic regularization."""
        return cls(l2_weight=L2_PRESETS[METHOD_CL_STRONG], **kwargs)

    def to_dict(self) -> Dict:
        """Convert to dictionary."""
        values = asdict(self)
        values['schedule'] = self.schedule.value
        return values


@dataclass(frozen=True)
class GradientPair:
    """Gradient increments for the posterior (g1) and likelihood (g2)."""
    g1: np.ndarray
    g2: np.ndarray

    def __add__(self, other: 'GradientPair') -> 'GradientPair':
        return GradientPair(self.g1 + other.g1, self.g2 + other.g2)

    def scaled(self, factor: float) -> 'GradientPair':
        return GradientPair(self.g1 * factor, self.g2 * factor)

    def check_dims(self, dim1: int, dim2: int) -> None:
        """Raise unless the vectors match the models' parameter lengths."""
        if self.g1.shape != (dim1,) or self.g2.shape != (dim2,):
            raise DimensionMismatchError(
                f"gradient shapes {self.g1.shape}/{self.g2.shape} do not match ({dim1},)/({dim2},)"
            )

    @staticmethod
    def mean(pairs: Sequence['GradientPair']) -> 'GradientPair':
        """Coordinate-wise mean of several gradient pairs."""
        if not pairs:
            raise ValueError("cannot average an empty batch")
        g1 = np.mean([p.g1 for p in pairs], axis=0)
        g2 = np.mean([p.g2 for p in pairs], axis=0)
        return GradientPair(g1, g2)


def _same(a: Any, b: Any) -> bool:
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.array_equal(np.asarray(a), np.asarray(b))
    return a == b


@dataclass(frozen=True)
class Chain:
    """
    Alternating observation/label sequence.

    Even positions hold observations, odd positions labels. A reverse chain
    starts at the training observation: (x*, y~, x~, y^, ...).
    """
    items: Tuple[Any, ...]
    direction: ChainDirection
    start_anchor: Any

    def __post_init__(self):
        if len(self.items) < 2:
            raise ValueError("a chain holds at least one observation and one label")
        if self.direction is ChainDirection.REVERSE and not _same(self.items[0], self.start_anchor):
            raise ValueError("reverse chains must begin at the anchor observation")

    @property
    def observations(self) -> Tuple[Any, ...]:
        return self.items[0::2]

    @property
    def labels(self) -> Tuple[Any, ...]:
        return self.items[1::2]

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class TraceRow:
    """One epoch of a training trace."""
    epoch: int
    objective: float
    step_size: float
    residual: Optional[float] = None

    def to_dict(self) -> Dict:
        """Convert to dictionary."""
        return asdict(self)


@dataclass
class TrainResult:
    """Learned parameters plus the per-epoch trace."""
    posterior_params: np.ndarray
    likelihood_params: Optional[np.ndarray] = None
    trace: List[TraceRow] = field(default_factory=list)
    projections: int = 0

    @property
    def final_objective(self) -> float:
        return self.trace[-1].objective if self.trace else math.nan


@dataclass(frozen=True)
class ExperimentRecord:
    """One (method, training size, repetition) result row."""
    experiment: str
    method: str
    train_size: int
    repetition: int
    train_error: float
    test_error: float
    risk_diff: float
    seed: int
    wall_time: float = 0.0

    def __post_init__(self):
        expected = abs(self.train_error - self.test_error)
        if math.isnan(expected):
            if not math.isnan(self.risk_diff):
                raise ValueError("risk_diff must be nan when an error rate is nan")
        elif self.risk_diff != expected:
            raise ValueError(f"risk_diff {self.risk_diff} != |{self.train_error} - {self.test_error}|")

    @classmethod
    def create(
        cls,
        experiment: str,
        method: str,
        train_size: int,
        repetition: int,
        train_error: float,
        test_error: float,
        seed: int,
        wall_time: float = 0.0,
    ) -> 'ExperimentRecord':
        """Build a record, deriving risk_diff from the two error rates."""
        return cls(
            experiment=experiment,
            method=method,
            train_size=train_size,
            repetition=repetition,
            train_error=float(train_error),
            test_error=float(test_error),
            risk_diff=abs(float(train_error) - float(test_error)),
            seed=seed,
            wall_time=wall_time,
        )

    def to_dict(self) -> Dict:
        """Convert to dictionary."""
        return asdict(self)
