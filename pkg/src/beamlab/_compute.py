"""Compensated summation of long modal sums, split across threads over time."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

ENV_THREADS = "BEAMLAB_THREADS"

_K_BLOCK = 4096
_TAU_CHUNK = 256


def thread_count() -> int:
    """Worker threads allowed by ``BEAMLAB_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get(ENV_THREADS, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_THREADS} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError(f"{ENV_THREADS} must be >= 0")
    return n or (os.cpu_count() or 1)


def _sum_chunk(term: Callable, k: np.ndarray, tau: np.ndarray) -> np.ndarray:
    # k arrives in descending order; block sums are pairwise (numpy), blocks are Kahan-accumulated
    total = np.zeros(tau.size)
    comp = np.zeros(tau.size)
    t = tau[:, None]
    for start in range(0, k.size, _K_BLOCK):
        block = term(k[start:start + _K_BLOCK], t).sum(axis=1)
        y = block - comp
        s = total + y
        comp = (s - total) - y
        total = s
    return total


def descending_sum(term: Callable, k: np.ndarray, tau) -> np.ndarray:
    """Sum ``term(k, tau)`` over the index array ``k`` for every ``tau``.

    ``term`` receives a 1-D block of indices and a column of times and must
    return the ``(len(tau), len(block))`` array of terms. Indices are
    visited largest first. The reduction order for a given ``tau`` does not
    depend on how the grid is split between threads, so results are
    bitwise reproducible for any thread count.
    """
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    k = np.sort(np.asarray(k))[::-1]
    out = np.empty(tau.size)
    chunks = [slice(i, min(i + _TAU_CHUNK, tau.size)) for i in range(0, tau.size, _TAU_CHUNK)]
    workers = min(thread_count(), len(chunks))
    if workers <= 1:
        for sl in chunks:
            out[sl] = _sum_chunk(term, k, tau[sl])
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for sl, res in zip(chunks, pool.map(lambda s: _sum_chunk(term, k, tau[s]), chunks)):
            out[sl] = res
    return out
