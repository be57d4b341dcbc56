"""Order-preserving thread map; the worker count is capped by ``EPL_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("EPL_THREADS", "").strip()
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def pmap(fn, items, threads: int | None = None) -> list:
    items = list(items)
    n = min(thread_count(threads), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def substream(seed: int, *keys: int):
    """Independent generator for task ``keys`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def child_seed(seed: int, *keys: int) -> int:
    """Deterministic 63-bit seed for a sub-task."""
    state = np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])
