"""Seed derivation and an order-preserving worker pool."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

WORKERS_ENV = "SPINVQE_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def sample_seeds(master_seed: int, count: int) -> list:
    """Per-sample seed sequences ``SeedSequence(master, spawn_key=(i,))``.

    Sample ``i`` gets the same stream whatever ``count`` is and whichever
    worker runs it.
    """
    return [np.random.SeedSequence(int(master_seed), spawn_key=(i,)) for i in range(count)]


def seed_lineage(master_seed: int, count: int) -> list:
    return [{"sample": i, "entropy": int(master_seed), "spawn_key": [i]} for i in range(count)]


def map_ordered(fn, items, workers: int | None = None, stop=None) -> list:
    """``[fn(x) for x in items]``, possibly in parallel, results in input order.

    If ``stop(result)`` is true the list is cut after that result, so the
    output does not depend on the number of workers.
    """
    items = list(items)
    workers = default_workers() if workers is None else workers
    out = []
    if workers <= 1 or len(items) <= 1:
        for x in items:
            r = fn(x)
            out.append(r)
            if stop is not None and stop(r):
                break
        return out
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for r in pool.map(fn, items):
            out.append(r)
            if stop is not None and stop(r):
                break
    return out
