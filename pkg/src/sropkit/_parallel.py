"""Thread-pool helper honoring the SROPKIT_THREADS cap."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_ENV_VAR = "SROPKIT_THREADS"


def thread_count() -> int:
    raw = os.environ.get(_ENV_VAR)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, min(os.cpu_count() or 1, 8))


def map_ordered(fn, items):
    """Apply ``fn`` across ``items``, preserving input order in the result.

    Work items must be independent pure computations; results are identical
    to a serial map regardless of the worker count.
    """
    items = list(items)
    workers = thread_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
