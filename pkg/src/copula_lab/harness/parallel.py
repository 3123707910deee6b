"""Deterministic replicate scheduling.

Every replicate draws from its own ``SeedSequence`` keyed by the study seed
and the replicate coordinates, so results never depend on scheduling order
or thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import ConfigError

THREADS_ENV = "COPULA_LAB_THREADS"


def worker_count(threads: int | None = None) -> int:
    """Thread count: explicit argument, else ``COPULA_LAB_THREADS``, else the CPU count."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if raw:
            try:
                threads = int(raw)
            except ValueError:
                raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from None
        else:
            threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigError("thread count must be at least 1")
    return threads


def replicate_seed(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), *(int(k) for k in key)])


def replicate_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(replicate_seed(seed, *key))


def run_tasks(fn: Callable, tasks: Sequence | Iterable, threads: int | None = None) -> list:
    """``[fn(t) for t in tasks]``, possibly concurrent; output order follows ``tasks``."""
    tasks = list(tasks)
    n = worker_count(threads)
    if n == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, tasks))
