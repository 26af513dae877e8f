"""
Thread-pool helpers for grid evaluation and Monte-Carlo chunks.
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from ..common.errors import ParameterDomainError

logger = logging.getLogger(__name__)

THREADS_ENV = "HESTON_ESCAPE_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count(default: int = 1) -> int:
    """Number of worker threads from HESTON_ESCAPE_THREADS."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        count = int(raw)
    except ValueError:
        raise ParameterDomainError(THREADS_ENV, raw, "must be a positive integer")
    if count < 1:
        raise ParameterDomainError(THREADS_ENV, raw, "must be a positive integer")
    return count


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: Optional[int] = None) -> List[R]:
    """Apply ``fn`` to every item; results come back in input order."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug(f"Dispatching {len(items)} tasks to {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(fn, item) for item in items]
        return [future.result() for future in futures]
