"""Order-preserving process-pool map shared by the sweep and GW restarts."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[[T], R], items: Sequence[T], workers: int) -> List[R]:
    """``[func(item) for item in items]``, fanned out when ``workers > 1``.

    ``func`` must be a module-level function and ``items`` picklable.
    """

    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as executor:
        return list(executor.map(func, items, chunksize=chunksize))
