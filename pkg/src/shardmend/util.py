"""Shared helpers: thread-capped parallel mapping and seed derivation."""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def worker_count() -> int:
    """Internal parallelism cap: SHARDMEND_THREADS, default min(cpu, 8), >= 1."""
    raw = os.environ.get("SHARDMEND_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ValueError(f"SHARDMEND_THREADS must be an integer, got {raw!r}") from exc
        return max(1, n)
    return max(1, min(os.cpu_count() or 1, 8))


def parallel_map(fn, items):
    """Map with a bounded thread pool; results keep item order."""
    items = list(items)
    workers = worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def derived_seed(base_seed: int, label: str) -> np.random.SeedSequence:
    """Deterministic per-object seed sequence from (base seed, string label).

    Order-independent: the label is hashed, so results do not depend on the
    position of the object in any listing.
    """
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    tag = int.from_bytes(digest[:8], "little")
    return np.random.SeedSequence([base_seed & (2**64 - 1), tag])


def seed_to_int(seq: np.random.SeedSequence) -> int:
    """Collapse a seed sequence to a stable 64-bit integer seed."""
    return int(seq.generate_state(1, np.uint64)[0])
