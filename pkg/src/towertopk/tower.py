"""TowerSketch with conservative updates and saturating counters.

Every row spends the same bit budget ``m`` but on counters of a different
width, so narrow rows have many counters and wide rows few. A counter
holding ``2**delta - 1`` has overflowed: it is frozen and reads as +inf
when taking minima.

Rows with equal counter width share one 2-D numpy array of the matching
unsigned dtype (uint8/uint16/uint32), so storage is exactly ``d * m``
bits. Min and conservative increment are order independent, so grouping
rows by width does not change any result.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numba
import numpy as np

from .hashing import DEFAULT_SEEDS, FlowId, as_keys, flows_to_keys, murmur3_key13

SENTINEL = 0xFFFFFFFF
WIDTHS = (8, 16, 32)
_DTYPES = {8: np.uint8, 16: np.uint16, 32: np.uint32}

# (delta, number of rows) in declaration order
TOWER6_LAYOUT = ((8, 3), (16, 2), (32, 1))
TOWER3_LAYOUT = ((8, 1), (16, 1), (32, 1))
TOWER6_M = 1 << 21
TOWER3_M = 1 << 22


class Estimate(NamedTuple):
    value: int
    saturated: bool = False

    @classmethod
    def of(cls, value: int) -> Estimate:
        value = int(value)
        return cls(value, value == SENTINEL)


@dataclass(frozen=True)
class RowSpec:
    delta: int
    width: int
    seed: int

    @property
    def ceiling(self) -> int:
        """Saturation value of this row's counters."""
        return (1 << self.delta) - 1


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@numba.njit(cache=True)
def _tower_kernel(keys, c8, s8, c16, s16, c32, s32, out, update):
    n8 = c8.shape[0]
    n16 = c16.shape[0]
    n32 = c32.shape[0]
    m8 = np.uint64(c8.shape[1] - 1)
    m16 = np.uint64(c16.shape[1] - 1)
    m32 = np.uint64(c32.shape[1] - 1)
    sat8 = np.int64(0xFF)
    sat16 = np.int64(0xFFFF)
    sat32 = np.int64(0xFFFFFFFF)
    i8 = np.empty(n8, np.int64)
    i16 = np.empty(n16, np.int64)
    i32 = np.empty(n32, np.int64)
    v8 = np.empty(n8, np.int64)
    v16 = np.empty(n16, np.int64)
    v32 = np.empty(n32, np.int64)
    for p in range(keys.shape[0]):
        key = keys[p]
        minval = sat32
        for r in range(n8):
            i8[r] = np.int64(murmur3_key13(key, s8[r]) & m8)
            v = np.int64(c8[r, i8[r]])
            v8[r] = v
            if v < minval and v != sat8:
                minval = v
        for r in range(n16):
            i16[r] = np.int64(murmur3_key13(key, s16[r]) & m16)
            v = np.int64(c16[r, i16[r]])
            v16[r] = v
            if v < minval and v != sat16:
                minval = v
        for r in range(n32):
            i32[r] = np.int64(murmur3_key13(key, s32[r]) & m32)
            v = np.int64(c32[r, i32[r]])
            v32[r] = v
            if v < minval and v != sat32:
                minval = v
        if not update:
            out[p] = minval
            continue
        minval2 = sat32
        for r in range(n8):
            v = v8[r]
            if v == minval and v != sat8:
                v += 1
                c8[r, i8[r]] = v
            if v < minval2 and v != sat8:
                minval2 = v
        for r in range(n16):
            v = v16[r]
            if v == minval and v != sat16:
                v += 1
                c16[r, i16[r]] = v
            if v < minval2 and v != sat16:
                minval2 = v
        for r in range(n32):
            v = v32[r]
            if v == minval and v != sat32:
                v += 1
                c32[r, i32[r]] = v
            if v < minval2 and v != sat32:
                minval2 = v
        out[p] = minval2


class TowerSketch:
    """Width-heterogeneous CU sketch.

    ``layout`` is a sequence of ``(delta, n_rows)`` pairs; ``seeds`` gives
    one seed per resulting row, in the same order.
    """

    def __init__(self, m: int = TOWER6_M, layout: Sequence[tuple[int, int]] = TOWER6_LAYOUT,
                 seeds: Sequence[int] | None = None):
        deltas = [int(delta) for delta, count in layout for _ in range(int(count))]
        if not deltas:
            raise ValueError("layout has no rows")
        if seeds is None:
            seeds = [DEFAULT_SEEDS[f"row{i}"] for i in range(len(deltas))] if len(deltas) <= 6 else None
            if seeds is None:
                raise ValueError("explicit seeds required for more than 6 rows")
        seeds = [int(s) & 0xFFFFFFFF for s in seeds]
        if len(seeds) != len(deltas):
            raise ValueError(f"{len(deltas)} rows but {len(seeds)} seeds")
        self.m = int(m)
        rows = []
        for delta, seed in zip(deltas, seeds):
            if delta not in WIDTHS:
                raise ValueError(f"counter width {delta} not in {WIDTHS}")
            if self.m % delta:
                raise ValueError(f"m={self.m} is not a multiple of {delta}")
            w = self.m // delta
            if w < 2 or not _is_pow2(w):
                raise ValueError(f"row width m/delta = {w} must be a power of two >= 2")
            rows.append(RowSpec(delta, w, seed))
        self.rows: tuple[RowSpec, ...] = tuple(rows)

        self._slot: list[tuple[int, int]] = []  # declared row -> (width, index in group)
        group_seeds: dict[int, list[int]] = {d: [] for d in WIDTHS}
        for row in self.rows:
            self._slot.append((row.delta, len(group_seeds[row.delta])))
            group_seeds[row.delta].append(row.seed)
        self._counters: dict[int, np.ndarray] = {}
        self._seeds: dict[int, np.ndarray] = {}
        for d in WIDTHS:
            n = len(group_seeds[d])
            w = self.m // d if n else 1
            self._counters[d] = np.zeros((n, w), dtype=_DTYPES[d])
            self._seeds[d] = np.array(group_seeds[d], dtype=np.uint64)

    @property
    def d(self) -> int:
        return len(self.rows)

    @property
    def memory_bits(self) -> int:
        return sum(8 * self._counters[d].nbytes for d in WIDTHS if self._counters[d].shape[0])

    def row_counters(self, i: int) -> np.ndarray:
        """Live view of the counters of declared row ``i``."""
        delta, j = self._slot[i]
        return self._counters[delta][j]

    def _run(self, keys: np.ndarray, update: bool) -> np.ndarray:
        keys = as_keys(keys)
        out = np.empty(keys.shape[0], dtype=np.uint32)
        c, s = self._counters, self._seeds
        _tower_kernel(keys, c[8], s[8], c[16], s[16], c[32], s[32], out, update)
        return out

    def insert_keys(self, keys: np.ndarray) -> np.ndarray:
        """Insert every key in order; returns the per-packet estimates."""
        return self._run(keys, True)

    def query_keys(self, keys: np.ndarray) -> np.ndarray:
        return self._run(keys, False)

    def insert(self, flow: FlowId) -> Estimate:
        return Estimate.of(self.insert_keys(flows_to_keys([flow]))[0])

    def query(self, flow: FlowId) -> Estimate:
        return Estimate.of(self.query_keys(flows_to_keys([flow]))[0])

    def clear(self) -> None:
        for arr in self._counters.values():
            arr.fill(0)

    def to_bytes(self) -> bytes:
        """Debug snapshot: header, then each row's counters little-endian."""
        parts = [b"TWR1", struct.pack("<II", self.m, self.d)]
        parts += [struct.pack("<BI", r.delta, r.seed) for r in self.rows]
        for i in range(self.d):
            row = self.row_counters(i)
            parts.append(row.astype(row.dtype.newbyteorder("<"), copy=False).tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> TowerSketch:
        if data[:4] != b"TWR1":
            raise ValueError("not a tower snapshot")
        m, d = struct.unpack_from("<II", data, 4)
        off = 12
        deltas, seeds = [], []
        for _ in range(d):
            delta, seed = struct.unpack_from("<BI", data, off)
            deltas.append(delta)
            seeds.append(seed)
            off += 5
        sketch = cls(m, [(delta, 1) for delta in deltas], seeds)
        for i, delta in enumerate(deltas):
            n = m // 8
            dt = np.dtype(_DTYPES[delta]).newbyteorder("<")
            sketch.row_counters(i)[:] = np.frombuffer(data, dtype=dt, count=m // delta, offset=off)
            off += n
        return sketch


def tower6(seeds: Sequence[int] | None = None, m: int = TOWER6_M) -> TowerSketch:
    """Six-row layout: three 8-bit, two 16-bit and one 32-bit row."""
    return TowerSketch(m, TOWER6_LAYOUT, seeds)


def tower3(seeds: Sequence[int] | None = None, m: int = TOWER3_M) -> TowerSketch:
    """Original three-row 8/16/32-bit tower at the same total memory."""
    return TowerSketch(m, TOWER3_LAYOUT, seeds)
