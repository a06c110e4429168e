"""Ordered map helper capped by the W_EXPANDER_THREADS environment variable."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "W_EXPANDER_THREADS"


def max_workers() -> int:
    raw = os.environ.get(ENV_VAR, "1")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


def map_ordered(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Apply ``fn`` to every item, returning results in input order."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
