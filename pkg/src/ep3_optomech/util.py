"""Small shared helpers."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_WORKERS_ENV = "EP3_OPTOMECH_WORKERS"


def worker_count() -> int:
    """Worker count for sweep evaluation, overridable via the environment."""
    raw = os.environ.get(_WORKERS_ENV, "")
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ValueError(f"{_WORKERS_ENV} must be an integer, got {raw!r}") from exc
        if n < 1:
            raise ValueError(f"{_WORKERS_ENV} must be >= 1, got {n}")
        return n
    return min(8, os.cpu_count() or 1)


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Order-preserving map over independent work items.

    Results are identical to serial evaluation; only wall time changes.
    Exceptions from any item propagate to the caller.
    """
    seq: Sequence[T] = list(items)
    n = worker_count()
    if n <= 1 or len(seq) <= 1:
        return [fn(x) for x in seq]
    with ThreadPoolExecutor(max_workers=min(n, len(seq))) as pool:
        return list(pool.map(fn, seq))
