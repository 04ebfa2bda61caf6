"""Compiled scan of the empty-start FCFM/LCFM chain used by the perfect sampler."""

from __future__ import annotations

import numpy as np
from numba import njit

CODE_SHIFT = 16  # codes are (base-n word value) * 16 + length


def word_code(word, n: int) -> int:
    code = 0
    for a in word:
        code = code * n + int(a)
    return code * CODE_SHIFT + len(word)


def library_codes(words, n: int) -> tuple[np.ndarray, np.ndarray]:
    codes = np.array(sorted(word_code(w, n) for w in words), dtype=np.int64)
    lengths = np.array(sorted({len(w) for w in words}), dtype=np.int64)
    return codes, lengths


@njit(cache=True)
def scan_window(classes, adj, lifo, n, codes, lengths, need):
    """Run the chain from the empty buffer over ``classes``.

    Counts non-overlapping library words that start at an even offset while
    the buffer is empty. Returns ``(count, end_of_need_th, size, buffer)``
    where ``end_of_need_th`` is the offset right after the ``need``-th
    occurrence (-1 if fewer were found).
    """
    N = classes.shape[0]
    buf = np.empty(N + 1, dtype=np.int64)
    size = 0
    count = 0
    free_from = 0
    end_need = -1
    ncodes = codes.shape[0]
    for t in range(N):
        if size == 0 and t % 2 == 0 and t >= free_from and ncodes > 0:
            for li in range(lengths.shape[0]):
                L = lengths[li]
                if t + L > N:
                    break
                code = 0
                for s in range(L):
                    code = code * n + classes[t + s]
                code = code * 16 + L
                idx = np.searchsorted(codes, code)
                if idx < ncodes and codes[idx] == code:
                    count += 1
                    free_from = t + L
                    if count == need:
                        end_need = t + L
                    break
        v = classes[t]
        hit = -1
        if lifo:
            for k in range(size - 1, -1, -1):
                if adj[v, buf[k]]:
                    hit = k
                    break
        else:
            for k in range(size):
                if adj[v, buf[k]]:
                    hit = k
                    break
        if hit < 0:
            buf[size] = v
            size += 1
        else:
            for k in range(hit, size - 1):
                buf[k] = buf[k + 1]
            size -= 1
    return count, end_need, size, buf[:size].copy()


@njit(cache=True)
def run_states(classes, adj, lifo, start, out_sizes):
    """Buffer sizes after each arrival, from ``start``; returns the final buffer."""
    N = classes.shape[0]
    buf = np.empty(N + start.shape[0] + 1, dtype=np.int64)
    size = start.shape[0]
    for k in range(size):
        buf[k] = start[k]
    for t in range(N):
        v = classes[t]
        hit = -1
        if lifo:
            for k in range(size - 1, -1, -1):
                if adj[v, buf[k]]:
                    hit = k
                    break
        else:
            for k in range(size):
                if adj[v, buf[k]]:
                    hit = k
                    break
        if hit < 0:
            buf[size] = v
            size += 1
        else:
            for k in range(hit, size - 1):
                buf[k] = buf[k + 1]
            size -= 1
        out_sizes[t] = size
    return buf[:size].copy()
