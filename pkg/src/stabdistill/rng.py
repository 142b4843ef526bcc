"""Counter-based random streams.

Every stream is a Philox generator keyed by ``(seed, index)`` with a tag in
the counter, so a trial or chunk draws the same numbers no matter which
worker runs it or in which order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, TypeVar

import numpy as np

CHUNK = 8192
_M64 = (1 << 64) - 1

TAG_CHUNK = 0
TAG_TRIAL = 1

T = TypeVar("T")


def stream(seed: int, index: int, tag: int = TAG_CHUNK) -> np.random.Generator:
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    key = np.array([int(seed) & _M64, int(index) & _M64], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(tag) & _M64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def trial_stream(seed: int, trial: int) -> np.random.Generator:
    return stream(seed, trial, TAG_TRIAL)


def chunk_sizes(trials: int, chunk: int = CHUNK) -> list[tuple[int, int]]:
    """(chunk index, size) pairs covering ``trials``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    out = []
    idx = 0
    left = trials
    while left > 0:
        size = min(chunk, left)
        out.append((idx, size))
        idx += 1
        left -= size
    return out


def run_chunks(fn: Callable[[int, int], T], trials: int, workers: int = 1,
               chunk: int = CHUNK) -> list[T]:
    """Evaluate ``fn(chunk_index, size)`` over all chunks, in chunk order.

    ``fn`` must be picklable when ``workers > 1``.  The chunk layout does
    not depend on ``workers``, which keeps results worker-count invariant.
    """
    jobs = chunk_sizes(trials, chunk)
    if workers <= 1 or len(jobs) == 1:
        return [fn(i, s) for i, s in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(fn, i, s) for i, s in jobs]
        return [f.result() for f in futs]
