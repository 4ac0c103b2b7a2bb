"""Top-K trackers: the priority queue array (PQA) and an exact priority queue.

The PQA splits a 32-bit flow hash into a queue index (low ``log2 R`` bits)
and a tag (the remaining high bits). Each of the R queues holds S
``(tag, count)`` slots sorted by count, highest first, and an insertion
touches only its own queue. Slots carry a validity flag because tag 0
and count 0 are both legal values.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable

import numba
import numpy as np
from numba import types
from numba.typed import Dict

from .hashing import DEFAULT_SEEDS, FlowId, hash_keys, hash32


@dataclass
class TopKReport:
    """Flows sorted by count, highest first; ties by smaller hash."""

    entries: list[tuple[int, int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def hashes(self) -> list[int]:
        return [h for h, _ in self.entries]

    @property
    def counts(self) -> list[int]:
        return [c for _, c in self.entries]

    def to_records(self) -> list[dict]:
        return [{"hash": f"{h:08x}", "count": int(c)} for h, c in self.entries]

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> TopKReport:
        return cls([(int(r["hash"], 16), int(r["count"])) for r in records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["hash", "count"])
        for h, c in self.entries:
            writer.writerow([f"{h:08x}", c])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> TopKReport:
        rows = list(csv.reader(io.StringIO(text)))
        if rows and rows[0] == ["hash", "count"]:
            rows = rows[1:]
        return cls([(int(h, 16), int(c)) for h, c in rows if h])


def sorted_report(hashes: np.ndarray, counts: np.ndarray, k: int) -> TopKReport:
    hashes = np.asarray(hashes, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    order = np.lexsort((hashes, -counts))[:k]
    return TopKReport([(int(hashes[i]), int(counts[i])) for i in order])


@numba.njit(cache=True)
def _pqa_kernel(hashes, ests, tags, counts, valid, log2r):
    s = tags.shape[1]
    rmask = np.uint64((1 << log2r) - 1)
    for p in range(hashes.shape[0]):
        h = np.uint64(hashes[p])
        q = np.int64(h & rmask)
        tag = h >> np.uint64(log2r)
        est = np.int64(ests[p])
        pos = -1
        for i in range(s):
            if valid[q, i] and np.uint64(tags[q, i]) == tag:
                pos = i
                break
        if pos >= 0:
            # found: raise the count if larger, then restore order
            if np.int64(counts[q, pos]) >= est:
                continue
            counts[q, pos] = est
        else:
            last = s - 1
            if valid[q, last] and est <= np.int64(counts[q, last]):
                continue
            tags[q, last] = tag
            counts[q, last] = est
            valid[q, last] = True
            pos = last
        while pos > 0 and (not valid[q, pos - 1] or counts[q, pos - 1] < counts[q, pos]):
            t, c = tags[q, pos - 1], counts[q, pos - 1]
            vv = valid[q, pos - 1]
            tags[q, pos - 1] = tags[q, pos]
            counts[q, pos - 1] = counts[q, pos]
            valid[q, pos - 1] = valid[q, pos]
            tags[q, pos] = t
            counts[q, pos] = c
            valid[q, pos] = vv
            pos -= 1


class PriorityQueueArray:
    """R hash-indexed queues of S sorted ``(tag, count)`` slots."""

    def __init__(self, R: int, S: int, seed: int = DEFAULT_SEEDS["queue"]):
        if R < 1 or R & (R - 1):
            raise ValueError(f"queue count R={R} must be a power of two")
        if S < 1:
            raise ValueError(f"slot count S={S} must be positive")
        self.R = int(R)
        self.S = int(S)
        self.seed = int(seed) & 0xFFFFFFFF
        self.log2r = self.R.bit_length() - 1
        self.tags = np.zeros((self.R, self.S), dtype=np.uint32)
        self.counts = np.zeros((self.R, self.S), dtype=np.uint32)
        self.valid = np.zeros((self.R, self.S), dtype=np.bool_)

    @classmethod
    def preset(cls, k: int, slots: int = 6, seed: int = DEFAULT_SEEDS["queue"]) -> PriorityQueueArray:
        """R = K/4 queues of ``slots`` entries (6 for PQA6, 4 for PQA4)."""
        if k < 4 or k % 4:
            raise ValueError(f"K={k} must be a positive multiple of 4")
        return cls(k // 4, slots, seed)

    @property
    def capacity(self) -> int:
        return self.R * self.S

    @property
    def occupancy(self) -> int:
        return int(self.valid.sum())

    def split(self, h: int) -> tuple[int, int]:
        """(queue index, tag) of a 32-bit hash."""
        return h & (self.R - 1), h >> self.log2r

    def insert_hashed(self, hashes: np.ndarray, ests: np.ndarray) -> None:
        hashes = np.ascontiguousarray(hashes, dtype=np.uint32)
        ests = np.ascontiguousarray(ests, dtype=np.uint32)
        if hashes.shape != ests.shape:
            raise ValueError("hashes and estimates differ in length")
        _pqa_kernel(hashes, ests, self.tags, self.counts, self.valid, self.log2r)

    def insert_keys(self, keys: np.ndarray, ests: np.ndarray) -> None:
        self.insert_hashed(hash_keys(keys, self.seed), ests)

    def insert(self, flow: FlowId, est: int) -> None:
        self.insert_hashed(np.array([hash32(flow, self.seed)]), np.array([int(est)]))

    def queue(self, i: int) -> list[tuple[int, int]]:
        """Occupied ``(tag, count)`` slots of queue ``i`` in slot order."""
        return [(int(t), int(c)) for t, c, v in zip(self.tags[i], self.counts[i], self.valid[i]) if v]

    def extract_topk(self, k: int) -> TopKReport:
        q, s = np.nonzero(self.valid)
        hashes = (self.tags[q, s].astype(np.int64) << self.log2r) | q
        return sorted_report(hashes, self.counts[q, s], k)

    def reset(self) -> None:
        self.tags.fill(0)
        self.counts.fill(0)
        self.valid.fill(False)


@numba.njit(inline="always")
def _before(c1, s1, c2, s2):
    # heap order: smaller count first; among equal counts the entry that
    # reached its count last is evicted first, as in a PQA queue
    return c1 < c2 or (c1 == c2 and s1 > s2)


@numba.njit(cache=True)
def _swap(hh, hc, hs, pos, i, j):
    hh[i], hh[j] = hh[j], hh[i]
    hc[i], hc[j] = hc[j], hc[i]
    hs[i], hs[j] = hs[j], hs[i]
    pos[hh[i]] = i
    pos[hh[j]] = j


@numba.njit(cache=True)
def _sift_down(hh, hc, hs, pos, i, n):
    while True:
        l = 2 * i + 1
        if l >= n:
            return
        c = l
        r = l + 1
        if r < n and _before(hc[r], hs[r], hc[l], hs[l]):
            c = r
        if _before(hc[c], hs[c], hc[i], hs[i]):
            _swap(hh, hc, hs, pos, i, c)
            i = c
        else:
            return


@numba.njit(cache=True)
def _sift_up(hh, hc, hs, pos, i):
    while i > 0:
        parent = (i - 1) // 2
        if _before(hc[i], hs[i], hc[parent], hs[parent]):
            _swap(hh, hc, hs, pos, i, parent)
            i = parent
        else:
            return


@numba.njit(cache=True)
def _ppq_kernel(hashes, ests, hh, hc, hs, size, seq):
    k = hh.shape[0]
    pos = Dict.empty(key_type=types.int64, value_type=types.int64)
    for i in range(size):
        pos[hh[i]] = i
    for p in range(hashes.shape[0]):
        h = np.int64(hashes[p])
        est = np.int64(ests[p])
        if h in pos:
            i = pos[h]
            if est > hc[i]:
                seq += 1
                hc[i] = est
                hs[i] = seq
                _sift_down(hh, hc, hs, pos, i, size)
        elif size < k:
            seq += 1
            hh[size] = h
            hc[size] = est
            hs[size] = seq
            pos[h] = size
            size += 1
            _sift_up(hh, hc, hs, pos, size - 1)
        elif est > hc[0]:
            seq += 1
            del pos[hh[0]]
            hh[0] = h
            hc[0] = est
            hs[0] = seq
            pos[h] = 0
            _sift_down(hh, hc, hs, pos, 0, size)
    return size, seq


class PerfectPriorityQueue:
    """Exact tracker of the K distinct hashes with the highest estimates.

    Evaluation baseline only; insertion is O(log K).
    """

    def __init__(self, k: int, seed: int = DEFAULT_SEEDS["queue"]):
        if k < 1:
            raise ValueError("K must be positive")
        self.k = int(k)
        self.seed = int(seed) & 0xFFFFFFFF
        self._hashes = np.zeros(self.k, dtype=np.int64)
        self._counts = np.zeros(self.k, dtype=np.int64)
        self._seqs = np.zeros(self.k, dtype=np.int64)
        self._size = 0
        self._seq = 0

    @property
    def capacity(self) -> int:
        return self.k

    @property
    def occupancy(self) -> int:
        return self._size

    def insert_hashed(self, hashes: np.ndarray, ests: np.ndarray) -> None:
        hashes = np.ascontiguousarray(hashes, dtype=np.uint32)
        ests = np.ascontiguousarray(ests, dtype=np.uint32)
        if hashes.shape != ests.shape:
            raise ValueError("hashes and estimates differ in length")
        self._size, self._seq = _ppq_kernel(hashes, ests, self._hashes, self._counts, self._seqs,
                                            self._size, self._seq)

    def insert_keys(self, keys: np.ndarray, ests: np.ndarray) -> None:
        self.insert_hashed(hash_keys(keys, self.seed), ests)

    def insert(self, flow: FlowId, est: int) -> None:
        self.insert_hashed(np.array([hash32(flow, self.seed)]), np.array([int(est)]))

    def contents(self) -> dict[int, int]:
        return {int(h): int(c) for h, c in zip(self._hashes[: self._size], self._counts[: self._size])}

    def extract_topk(self, k: int | None = None) -> TopKReport:
        n = self._size
        return sorted_report(self._hashes[:n], self._counts[:n], self.k if k is None else k)

    def reset(self) -> None:
        self._size = 0
        self._seq = 0

