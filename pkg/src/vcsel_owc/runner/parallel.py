"""Deterministic fan-out of independent work items.

Every work item gets its own generator derived from ``(seed, experiment
key, item index)``, so its random numbers do not depend on which process
runs it or in what order.  Items are returned in submission order and sums
go through :func:`math.fsum`; the output is therefore identical for any
worker count.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

ENV_THREADS = "OWC_SIM_THREADS"


def item_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for one work item, keyed by small non-negative integers."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def worker_count(requested: int | None = None) -> int:
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get(ENV_THREADS)
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise ValueError(f"{ENV_THREADS} must be an integer, got {cap!r}") from None
    return max(1, n)


def pmap(fn, items, workers: int | None = None) -> list:
    """``[fn(*item) for item in items]``, spread over processes when allowed."""
    items = list(items)
    n = min(worker_count(workers), len(items))
    if n <= 1:
        return [fn(*item) for item in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, *zip(*items)))


def fsum_mean(parts) -> float:
    """Mean of ``(sum, count)`` partial results, independent of grouping."""
    parts = list(parts)
    total = math.fsum(p[0] for p in parts)
    count = sum(int(p[1]) for p in parts)
    return total / count if count else float("nan")
