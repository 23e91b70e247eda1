"""Small shared helpers: worker counts and deterministic chunk mapping."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

__all__ = ["worker_count", "map_chunks", "chunk_sizes"]


def worker_count() -> int:
    """Worker-thread cap: COCOCAT_THREADS if set, else machine parallelism."""
    env = os.environ.get("COCOCAT_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ValueError(f"COCOCAT_THREADS must be an integer, got {env!r}") from exc
        return max(1, n)
    return max(1, os.cpu_count() or 1)


def chunk_sizes(n_items: int, n_chunks: int) -> list[int]:
    """Split ``n_items`` into ``n_chunks`` near-equal deterministic pieces."""
    if n_chunks < 1:
        raise ValueError("n_chunks must be >= 1")
    base, rem = divmod(n_items, n_chunks)
    return [base + (1 if k < rem else 0) for k in range(n_chunks)]


def map_chunks(fn: Callable, args: Sequence) -> list:
    """Apply ``fn`` to each element, in parallel when workers allow.

    Results are returned in argument order, so the combination step is
    deterministic regardless of scheduling.
    """
    workers = min(worker_count(), len(args)) if args else 1
    if workers <= 1:
        return [fn(a) for a in args]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args))
