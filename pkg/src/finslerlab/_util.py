"""Small helpers shared by the batched evaluators."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 4096


def chunked(fn, *arrays, size: int = CHUNK):
    """Apply ``fn`` to row blocks of ``arrays`` and concatenate the results.

    ``fn`` returns an array or a tuple of arrays with the batch axis first.
    Blocks are processed in order, so the result does not depend on ``size``
    beyond floating point associativity inside ``fn`` (there is none across
    rows).
    """
    n = arrays[0].shape[0]
    if n <= size:
        return fn(*arrays)
    parts = [fn(*(a[s:s + size] for a in arrays)) for s in range(0, n, size)]
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[k] for p in parts]) for k in range(len(parts[0])))
    return np.concatenate(parts)


def thread_cap() -> int:
    """Worker count allowed by FSL_THREADS (default 1)."""
    raw = os.environ.get("FSL_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def ordered_map(fn, items):
    """``list(map(fn, items))`` on up to FSL_THREADS workers, results in input order."""
    items = list(items)
    workers = min(thread_cap(), len(items)) or 1
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
