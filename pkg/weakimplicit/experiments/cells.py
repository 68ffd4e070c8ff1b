"""Seeding and fan-out of (train size, repetition) cells."""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar

from ..core.prob import RngStream

logger = logging.getLogger(__name__)

Task = TypeVar('Task')
Result = TypeVar('Result')

SEED_RANGE = 2 ** 31 - 1


def cell_seed(run_seed: int, *key: int) -> int:
    """Integer seed of one cell, a pure function of the run seed and the key."""
    return int(RngStream(run_seed).child(*key).integers(0, SEED_RANGE))


def map_cells(fn: Callable[[Task], Result], tasks: Sequence[Task], workers: int = 1) -> List[Result]:
    """
    Evaluate ``fn`` on every task, in task order.

    With more than one worker the tasks run in a process pool; ``fn``
    and the tasks must then be picklable (module-level functions).
    """
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    logger.info("running %d cells on %d workers", len(tasks), workers)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, tasks))


def flatten(groups: Iterable[Sequence[Result]]) -> List[Result]:
    return [item for group in groups for item in group]
