"""Flow identifiers and seeded 32-bit MurmurHash3.

A flow is the IPv4 5-tuple. Its canonical form is 13 bytes, big-endian,
in the order src_ip, dst_ip, src_port, dst_port, protocol. Bulk code
works on ``(N, 13)`` uint8 arrays of those bytes ("key arrays") so the
hot loops can run under numba.
"""

from __future__ import annotations

import ipaddress
import struct
from typing import Iterable, NamedTuple

import numba
import numpy as np

KEY_BYTES = 13
_FLOW_STRUCT = struct.Struct(">IIHHB")

_C1 = 0xCC9E2D51
_C2 = 0x1B873593
_MASK32 = 0xFFFFFFFF

# Fixed seed table: six sketch rows, the queue hash, and a base constant
# from which baseline sketch seeds are derived.
DEFAULT_SEEDS: dict[str, int] = {
    "row0": 0x9747B28C,
    "row1": 0x5BD1E995,
    "row2": 0x1B873593,
    "row3": 0xCC9E2D51,
    "row4": 0x85EBCA6B,
    "row5": 0xC2B2AE35,
    "queue": 0x27D4EB2F,
    "baseline": 0x165667B1,
}


class FlowId(NamedTuple):
    """IPv4 5-tuple. Addresses are stored as unsigned 32-bit integers."""

    src_ip: int
    dst_ip: int
    src_port: int
    dst_port: int
    protocol: int

    @classmethod
    def parse(cls, src_ip: str, dst_ip: str, src_port, dst_port, protocol) -> FlowId:
        return cls(
            int(ipaddress.IPv4Address(src_ip)),
            int(ipaddress.IPv4Address(dst_ip)),
            int(src_port),
            int(dst_port),
            int(protocol),
        )

    def to_bytes(self) -> bytes:
        return _FLOW_STRUCT.pack(*self)

    @classmethod
    def from_bytes(cls, data: bytes) -> FlowId:
        if len(data) != KEY_BYTES:
            raise ValueError(f"flow id must be {KEY_BYTES} bytes, got {len(data)}")
        return cls(*_FLOW_STRUCT.unpack(data))

    def __str__(self) -> str:
        return "{},{},{},{},{}".format(
            ipaddress.IPv4Address(self.src_ip),
            ipaddress.IPv4Address(self.dst_ip),
            self.src_port,
            self.dst_port,
            self.protocol,
        )


def flows_to_keys(flows: Iterable[FlowId]) -> np.ndarray:
    """Pack FlowIds into an ``(N, 13)`` uint8 key array."""
    buf = b"".join(_FLOW_STRUCT.pack(*f) for f in flows)
    return np.frombuffer(buf, dtype=np.uint8).reshape(-1, KEY_BYTES).copy()


def keys_to_flows(keys: np.ndarray) -> list[FlowId]:
    keys = np.ascontiguousarray(keys, dtype=np.uint8)
    return [FlowId(*t) for t in _FLOW_STRUCT.iter_unpack(keys.tobytes())]


def _rotl32(x: int, r: int) -> int:
    return ((x << r) | (x >> (32 - r))) & _MASK32


def _fmix32(h: int) -> int:
    h ^= h >> 16
    h = (h * 0x85EBCA6B) & _MASK32
    h ^= h >> 13
    h = (h * 0xC2B2AE35) & _MASK32
    h ^= h >> 16
    return h


def murmur3_32(data: bytes, seed: int = 0) -> int:
    """MurmurHash3_x86_32 of arbitrary bytes, returned unsigned."""
    n = len(data)
    h = seed & _MASK32
    nblocks = n // 4
    for (k,) in struct.iter_unpack("<I", data[: nblocks * 4]):
        k = (k * _C1) & _MASK32
        k = _rotl32(k, 15)
        k = (k * _C2) & _MASK32
        h ^= k
        h = _rotl32(h, 13)
        h = (h * 5 + 0xE6546B64) & _MASK32

    tail = data[nblocks * 4:]
    k = 0
    if len(tail) >= 3:
        k ^= tail[2] << 16
    if len(tail) >= 2:
        k ^= tail[1] << 8
    if len(tail) >= 1:
        k ^= tail[0]
        k = (k * _C1) & _MASK32
        k = _rotl32(k, 15)
        k = (k * _C2) & _MASK32
        h ^= k
    return _fmix32(h ^ n)


def hash32(flow: FlowId, seed: int) -> int:
    return murmur3_32(flow.to_bytes(), seed)


# numba versions, specialised to 13-byte keys. All arithmetic is done in
# uint64 and masked, which is exact for 32x32-bit products.

@numba.njit(inline="always")
def _nb_mix_block(h, k):
    k = (k * np.uint64(_C1)) & np.uint64(_MASK32)
    k = ((k << np.uint64(15)) | (k >> np.uint64(17))) & np.uint64(_MASK32)
    k = (k * np.uint64(_C2)) & np.uint64(_MASK32)
    h ^= k
    h = ((h << np.uint64(13)) | (h >> np.uint64(19))) & np.uint64(_MASK32)
    return (h * np.uint64(5) + np.uint64(0xE6546B64)) & np.uint64(_MASK32)


@numba.njit(cache=True)
def murmur3_key13(key, seed):
    """MurmurHash3_x86_32 of one 13-byte key row (uint8 array)."""
    h = np.uint64(seed) & np.uint64(_MASK32)
    for b in range(3):
        o = 4 * b
        k = (np.uint64(key[o])
             | (np.uint64(key[o + 1]) << np.uint64(8))
             | (np.uint64(key[o + 2]) << np.uint64(16))
             | (np.uint64(key[o + 3]) << np.uint64(24)))
        h = _nb_mix_block(h, k)
    k = np.uint64(key[12])
    k = (k * np.uint64(_C1)) & np.uint64(_MASK32)
    k = ((k << np.uint64(15)) | (k >> np.uint64(17))) & np.uint64(_MASK32)
    k = (k * np.uint64(_C2)) & np.uint64(_MASK32)
    h ^= k
    h ^= np.uint64(KEY_BYTES)
    h ^= h >> np.uint64(16)
    h = (h * np.uint64(0x85EBCA6B)) & np.uint64(_MASK32)
    h ^= h >> np.uint64(13)
    h = (h * np.uint64(0xC2B2AE35)) & np.uint64(_MASK32)
    h ^= h >> np.uint64(16)
    return h


@numba.njit(cache=True)
def _hash_keys(keys, seed, out):
    for i in range(keys.shape[0]):
        out[i] = murmur3_key13(keys[i], seed)


def hash_keys(keys: np.ndarray, seed: int) -> np.ndarray:
    """Hash every row of a key array; returns uint32 digests."""
    keys = as_keys(keys)
    out = np.empty(keys.shape[0], dtype=np.uint32)
    _hash_keys(keys, seed & _MASK32, out)
    return out


def as_keys(keys) -> np.ndarray:
    """Coerce to a C-contiguous ``(N, 13)`` uint8 array."""
    arr = np.ascontiguousarray(keys, dtype=np.uint8)
    if arr.ndim != 2 or arr.shape[1] != KEY_BYTES:
        if arr.size == 0:
            return np.zeros((0, KEY_BYTES), dtype=np.uint8)
        raise ValueError(f"expected (N, {KEY_BYTES}) key array, got shape {arr.shape}")
    return arr


def derive_seeds(base: int, n: int) -> list[int]:
    """Deterministic list of ``n`` distinct 32-bit seeds derived from ``base``."""
    seeds: list[int] = []
    i = 0
    while len(seeds) < n:
        s = murmur3_32(struct.pack("<I", i), base)
        if s not in seeds:
            seeds.append(s)
        i += 1
    return seeds
