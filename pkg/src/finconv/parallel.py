"""Deterministic fan-out over independent pure tasks."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor


def parallel_map(fn, items, threads: int = 1) -> list:
    """Map fn over items, optionally on a thread pool.

    Tasks must be pure and independent; results come back in input order,
    so the outcome is identical for every thread count.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
