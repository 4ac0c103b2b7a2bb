"""Baseline sketches: CountMin with conservative update, and CountSketch.

Both expose the same surface as ``TowerSketch`` (``insert_keys``,
``query_keys``, ``insert``, ``query``) so the pipeline can swap them.
"""

from __future__ import annotations

from typing import Sequence

import numba
import numpy as np

from .hashing import DEFAULT_SEEDS, FlowId, as_keys, derive_seeds, flows_to_keys, murmur3_key13
from .tower import Estimate

PAPER_ROWS = 12
PAPER_WIDTH = 1 << 15


def _check_dims(d: int, w: int) -> None:
    if d < 1:
        raise ValueError("need at least one row")
    if w < 2 or w & (w - 1):
        raise ValueError(f"row width {w} must be a power of two >= 2")


@numba.njit(cache=True)
def _cmcu_kernel(keys, counters, seeds, out, update):
    d = counters.shape[0]
    mask = np.uint64(counters.shape[1] - 1)
    idx = np.empty(d, np.int64)
    for p in range(keys.shape[0]):
        key = keys[p]
        minval = np.int64(0x7FFFFFFFFFFFFFFF)
        for r in range(d):
            idx[r] = np.int64(murmur3_key13(key, seeds[r]) & mask)
            v = np.int64(counters[r, idx[r]])
            if v < minval:
                minval = v
        if update:
            for r in range(d):
                if counters[r, idx[r]] == minval:
                    counters[r, idx[r]] = minval + 1
            minval += 1
        out[p] = minval


class CountMinCU:
    """CountMin with conservative update over 32-bit counters (no saturation)."""

    def __init__(self, d: int = PAPER_ROWS, w: int = PAPER_WIDTH, seeds: Sequence[int] | None = None):
        _check_dims(d, w)
        if seeds is None:
            seeds = derive_seeds(DEFAULT_SEEDS["baseline"], d)
        if len(seeds) != d:
            raise ValueError(f"{d} rows but {len(seeds)} seeds")
        self.seeds = np.array([s & 0xFFFFFFFF for s in seeds], dtype=np.uint64)
        self.counters = np.zeros((d, w), dtype=np.uint32)

    @property
    def d(self) -> int:
        return self.counters.shape[0]

    @property
    def w(self) -> int:
        return self.counters.shape[1]

    @property
    def memory_bits(self) -> int:
        return 8 * self.counters.nbytes

    def _run(self, keys, update: bool) -> np.ndarray:
        keys = as_keys(keys)
        out = np.empty(keys.shape[0], dtype=np.uint32)
        _cmcu_kernel(keys, self.counters, self.seeds, out, update)
        return out

    def insert_keys(self, keys) -> np.ndarray:
        return self._run(keys, True)

    def query_keys(self, keys) -> np.ndarray:
        return self._run(keys, False)

    def insert(self, flow: FlowId) -> Estimate:
        return Estimate.of(self.insert_keys(flows_to_keys([flow]))[0])

    def query(self, flow: FlowId) -> Estimate:
        return Estimate.of(self.query_keys(flows_to_keys([flow]))[0])

    def clear(self) -> None:
        self.counters.fill(0)


@numba.njit(cache=True)
def _median_toward_zero(vals):
    s = np.sort(vals)
    n = s.shape[0]
    if n % 2 == 1:
        return s[n // 2]
    t = s[n // 2 - 1] + s[n // 2]
    if t >= 0:
        return t // 2
    return -((-t) // 2)


@numba.njit(cache=True)
def _cs_kernel(keys, counters, idx_seeds, sign_seeds, out, update):
    d = counters.shape[0]
    mask = np.uint64(counters.shape[1] - 1)
    vals = np.empty(d, np.int64)
    for p in range(keys.shape[0]):
        key = keys[p]
        for r in range(d):
            i = np.int64(murmur3_key13(key, idx_seeds[r]) & mask)
            sign = np.int64(-1) if (murmur3_key13(key, sign_seeds[r]) >> np.uint64(31)) else np.int64(1)
            if update:
                counters[r, i] += sign
            vals[r] = sign * np.int64(counters[r, i])
        est = _median_toward_zero(vals)
        out[p] = est if est > 0 else 0


class CountSketch:
    """CountSketch with signed 32-bit counters.

    The estimate is the median of the signed row readings, with the even-d
    median taken as the mean of the two middle values truncated toward
    zero, and clamped below at 0.
    """

    def __init__(self, d: int = PAPER_ROWS, w: int = PAPER_WIDTH,
                 index_seeds: Sequence[int] | None = None, sign_seeds: Sequence[int] | None = None):
        _check_dims(d, w)
        if index_seeds is None or sign_seeds is None:
            derived = derive_seeds(DEFAULT_SEEDS["baseline"], 2 * d)
            index_seeds = derived[:d] if index_seeds is None else index_seeds
            sign_seeds = derived[d:] if sign_seeds is None else sign_seeds
        if len(index_seeds) != d or len(sign_seeds) != d:
            raise ValueError(f"{d} rows need {d} index seeds and {d} sign seeds")
        self.index_seeds = np.array([s & 0xFFFFFFFF for s in index_seeds], dtype=np.uint64)
        self.sign_seeds = np.array([s & 0xFFFFFFFF for s in sign_seeds], dtype=np.uint64)
        self.counters = np.zeros((d, w), dtype=np.int32)

    @property
    def d(self) -> int:
        return self.counters.shape[0]

    @property
    def w(self) -> int:
        return self.counters.shape[1]

    @property
    def memory_bits(self) -> int:
        return 8 * self.counters.nbytes

    def _run(self, keys, update: bool) -> np.ndarray:
        keys = as_keys(keys)
        out = np.empty(keys.shape[0], dtype=np.uint32)
        _cs_kernel(keys, self.counters, self.index_seeds, self.sign_seeds, out, update)
        return out

    def insert_keys(self, keys) -> np.ndarray:
        return self._run(keys, True)

    def query_keys(self, keys) -> np.ndarray:
        return self._run(keys, False)

    def insert(self, flow: FlowId) -> Estimate:
        return Estimate.of(self.insert_keys(flows_to_keys([flow]))[0])

    def query(self, flow: FlowId) -> Estimate:
        return Estimate.of(self.query_keys(flows_to_keys([flow]))[0])

    def clear(self) -> None:
        self.counters.fill(0)
