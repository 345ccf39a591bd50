"""Chunked execution of independent replicates.

Replicates are split into fixed-size chunks, each with its own stream
spawned from one master seed, so results do not depend on the number of
worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

T = TypeVar("T")
CHUNK = 256


def chunk_sizes(reps: int, chunk: int = CHUNK) -> list[int]:
    if reps < 1:
        raise ValueError("reps must be at least 1")
    full, rest = divmod(reps, chunk)
    return [chunk] * full + ([rest] if rest else [])


def run_chunked(task: Callable[[int, np.random.Generator], T], reps: int, seed: int,
                threads: int = 1, chunk: int = CHUNK) -> list[T]:
    """Results of ``task(size, rng)`` per chunk, in chunk order."""
    sizes = chunk_sizes(reps, chunk)
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(m, np.random.default_rng(s)) for m, s in zip(sizes, streams)]
    if threads <= 1 or len(jobs) == 1:
        return [task(m, g) for m, g in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda j: task(*j), jobs))
