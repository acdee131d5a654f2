"""Worker-count policy and an order-preserving parallel map."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
U = TypeVar("U")

ENV_VAR = "DIRAC3T_THREADS"


def thread_count(requested: int | None = None) -> int:
    """Explicit request, else ``DIRAC3T_THREADS``, else the CPU count."""
    if requested is None:
        env = os.environ.get(ENV_VAR, "").strip()
        if env:
            try:
                requested = int(env)
            except ValueError:
                raise ValueError(f"{ENV_VAR} must be an integer, got {env!r}") from None
    if requested is None:
        requested = os.cpu_count() or 1
    return max(1, int(requested))


def pmap(fn: Callable[[T], U], items: Iterable[T], threads: int | None = None) -> list[U]:
    """``[fn(x) for x in items]`` evaluated on up to ``threads`` workers."""
    items = list(items)
    workers = min(thread_count(threads), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
