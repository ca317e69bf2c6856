"""Derived random streams and order-preserving parallel map.

Every stochastic task draws from a stream keyed by (master seed, task key),
so results do not depend on how tasks are scheduled across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

SEED_MAX = 2**64 - 1


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def derived_seed(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in key))


def derived_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(derived_seed(seed, *key))


def pmap(fn, items, workers: int = 1) -> list:
    """``[fn(item) for item in items]``, optionally on a thread pool; order kept."""
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
