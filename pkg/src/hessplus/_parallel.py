import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 65536


def max_workers():
    env = os.environ.get("HESSPLUS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def chunked(func, points, chunk=CHUNK):
    """Apply ``func`` to row chunks of ``points`` and concatenate, in order."""
    points = np.asarray(points)
    if len(points) <= chunk:
        return func(points)
    pieces = [points[i : i + chunk] for i in range(0, len(points), chunk)]
    workers = min(max_workers(), len(pieces))
    if workers == 1:
        return np.concatenate([func(p) for p in pieces])
    with ThreadPoolExecutor(workers) as pool:
        return np.concatenate(list(pool.map(func, pieces)))
