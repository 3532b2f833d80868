# core/session.py

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Iterable, Iterator, List, Optional

import numpy as np

from core.logger import get_logger

logger = get_logger(__name__)


def resolve_workers(requested: Optional[int] = None) -> int:
    """Worker count: request (or CPU count), capped by SPLITRX_THREADS."""
    workers = requested or os.cpu_count() or 1
    cap = os.getenv("SPLITRX_THREADS")
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            logger.warning("ignoring non-integer SPLITRX_THREADS=%r", cap)
    return max(1, workers)


def spawn_seeds(seed: int, n: int) -> List[int]:
    """n independent 63-bit seeds derived from one root seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)) for c in children]


def chunk_sizes(total: int, chunk: int) -> List[int]:
    """Split `total` into fixed-size chunks (last one shorter); never depends on worker count."""
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


class WorkerPool:
    """
    Ordered task dispatcher. Runs in-process when one worker is requested,
    otherwise fans out over a process pool. `map` always yields results in
    submission order, so reductions over them are worker-count independent.
    """

    def __init__(self, workers: Optional[int] = None):
        self.workers = resolve_workers(workers)
        self._executor: Optional[ProcessPoolExecutor] = None

    def __enter__(self) -> "WorkerPool":
        if self.workers > 1:
            logger.debug("starting process pool with %d workers", self.workers)
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
        return self

    def __exit__(self, *exc: Any) -> None:
        self.shutdown()

    def map(self, fn: Callable[..., Any], *iterables: Iterable[Any]) -> Iterator[Any]:
        if self._executor is None:
            return map(fn, *iterables)
        return self._executor.map(fn, *iterables)

    def shutdown(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None
