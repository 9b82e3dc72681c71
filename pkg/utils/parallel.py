import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from config import get_default_workers

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def run_tasks(fn: Callable[[T], R], tasks: Sequence[T], workers: Optional[int] = 1) -> List[R]:
    """
    Applies fn to every task and returns the results in task order.

    Runs in-process for workers <= 1, otherwise on a process pool. workers=None
    takes SNIS_WORKERS or the CPU count. fn and the tasks must be picklable.
    Exceptions raised by a task propagate.
    """
    tasks = list(tasks)
    if workers is None:
        workers = get_default_workers()
    workers = min(int(workers), len(tasks))
    if workers <= 1:
        return [fn(task) for task in tasks]

    chunksize = max(1, len(tasks) // (4 * workers))
    logger.debug("dispatching %d tasks to %d workers (chunksize %d)", len(tasks), workers, chunksize)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, tasks, chunksize=chunksize))
