"""Worker-pool helper shared by sweeps and spectra.

The BELTGAP_THREADS environment variable caps the worker count; 0 (or an
unset variable) means automatic.  Results always come back in input order,
so parallel and sequential runs are byte-identical downstream.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    raw = os.environ.get("BELTGAP_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        warnings.warn(f"BELTGAP_THREADS = {raw!r} is not an integer; using auto")
        n = 0
    if n < 0:
        warnings.warn(f"BELTGAP_THREADS = {n} is negative; using auto")
        n = 0
    if n == 0:
        n = min(8, os.cpu_count() or 1)
    return n


def thread_map(fn, items: list) -> list:
    """map() preserving input order, threaded when it can pay off."""
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
