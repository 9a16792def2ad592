"""
Bounded worker pools for the embarrassingly parallel parts: ensemble
members, sweep cells, data-curve fractions.

Results always come back in input order, whatever order the workers
finish in. With jobs == 1 everything runs inline, which is what tests
and debuggers want.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence, TypeVar

from logzero import logger

T = TypeVar("T")
R = TypeVar("R")


def run_jobs(fn: Callable[[T], R], items: Sequence[T], jobs: int = 1) -> List[R]:
    """
    Map `fn` over `items` on up to `jobs` processes.

    `fn` must be a module-level function (it gets pickled).
    """
    items = list(items)
    workers = max(1, min(jobs, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    logger.info(f"Running {len(items)} jobs on {workers} worker processes")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
