"""Compiled path-tracing loop used by the library-wide scans."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def _trace_range(tables, sizes, data, counts, accepted, lo, hi):
    L = data.shape[0]
    k = tables.shape[2]
    for m in range(lo, hi):
        n = sizes[m]
        cur = np.arange(n)
        alive = np.ones(n, dtype=np.bool_)
        n_alive = n
        t = 0
        # Lockstep over all starts until they reject or coincide; unifilar
        # paths that meet never separate again.
        while t < L and n_alive > 1:
            x = data[t]
            for s0 in range(n):
                if alive[s0]:
                    s = cur[s0]
                    nxt = tables[m, s, x]
                    if nxt < 0:
                        alive[s0] = False
                        n_alive -= 1
                    else:
                        counts[m, s0, s, x] += 1
                        cur[s0] = nxt
            t += 1
            if n_alive > 1:
                first = -1
                synced = True
                for s0 in range(n):
                    if alive[s0]:
                        if first < 0:
                            first = cur[s0]
                        elif cur[s0] != first:
                            synced = False
                            break
                if synced:
                    break
        if n_alive > 0:
            rep = 0
            while not alive[rep]:
                rep += 1
            s = cur[rep]
            tail = np.zeros((n, k), dtype=np.int64)
            ok = True
            for tt in range(t, L):
                x = data[tt]
                nxt = tables[m, s, x]
                if nxt < 0:
                    ok = False
                    break
                tail[s, x] += 1
                s = nxt
            for s0 in range(n):
                if alive[s0] and ok:
                    accepted[m, s0] = True
                    for a in range(n):
                        for b in range(k):
                            counts[m, s0, a, b] += tail[a, b]
        for s0 in range(n):
            if not accepted[m, s0]:
                for a in range(n):
                    for b in range(k):
                        counts[m, s0, a, b] = 0


def trace_library(tables: np.ndarray, sizes: np.ndarray, data: np.ndarray,
                  threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Trace ``data`` through every machine from every start state.

    Returns
    -------
    counts : (M, n_max, n_max, k) int64
        ``counts[m, s0, s, x]``; zero for rejecting starts and padding.
    accepted : (M, n_max) bool
    """
    M, n_max, k = tables.shape
    data = np.ascontiguousarray(data, dtype=np.uint8)
    counts = np.zeros((M, n_max, n_max, k), dtype=np.int64)
    accepted = np.zeros((M, n_max), dtype=np.bool_)
    if M == 0:
        return counts, accepted
    threads = max(1, int(threads))
    if threads == 1:
        _trace_range(tables, sizes, data, counts, accepted, 0, M)
    else:
        # Each chunk writes a disjoint slice, so results do not depend on scheduling.
        bounds = np.linspace(0, M, threads * 4 + 1).astype(np.int64)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_trace_range, tables, sizes, data, counts, accepted,
                                   int(lo), int(hi))
                       for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]
            for f in futures:
                f.result()
    return counts, accepted
