import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import flow_ids, random_flow
from towertopk.hashing import (
    DEFAULT_SEEDS,
    FlowId,
    derive_seeds,
    flows_to_keys,
    hash32,
    hash_keys,
    keys_to_flows,
    murmur3_32,
)

# Published MurmurHash3_x86_32 vectors (also cross-checked against mmh3).
VECTORS = [
    (b"", 0, 0x00000000),
    (b"", 1, 0x514E28B7),
    (b"", 0xFFFFFFFF, 0x81F16F39),
    (b"\xff\xff\xff\xff", 0, 0x76293B50),
    (b"\x21\x43\x65\x87", 0, 0xF55B516B),
    (b"\x21\x43\x65\x87", 0x5082EDEE, 0x2362F9DE),
    (b"\x21\x43\x65", 0, 0x7E4A8634),
    (b"\x21\x43", 0, 0xA0F7B07A),
    (b"\x21", 0, 0x72661CF4),
    (b"\x00\x00\x00\x00", 0, 0x2362F9DE),
    (b"\x00\x00\x00", 0, 0x85F0B427),
    (b"\x00\x00", 0, 0x30F4C306),
    (b"\x00", 0, 0x514E28B7),
    (b"aaaa", 0x9747B28C, 0x5A97808A),
    (b"Hello, world!", 0x9747B28C, 0x24884CBA),
    (b"The quick brown fox jumps over the lazy dog", 0x9747B28C, 0x2FA826CD),
]


@pytest.mark.parametrize("data,seed,expected", VECTORS)
def test_published_vectors(data, seed, expected):
    assert murmur3_32(data, seed) == expected


def test_canonical_serialization():
    f = FlowId.parse("10.0.0.1", "10.0.0.2", 80, 443, 6)
    assert f.to_bytes() == bytes.fromhex("0A0000010A000002005001BB06")
    assert FlowId.from_bytes(f.to_bytes()) == f
    assert str(f) == "10.0.0.1,10.0.0.2,80,443,6"


@given(flow_ids)
def test_serialization_round_trip(f):
    data = f.to_bytes()
    assert len(data) == 13
    assert FlowId.from_bytes(data) == f
    assert keys_to_flows(flows_to_keys([f])) == [f]


@given(flow_ids, st.integers(0, 2**32 - 1))
def test_deterministic(f, seed):
    assert hash32(f, seed) == hash32(f, seed)


@given(st.lists(flow_ids, min_size=1, max_size=40), st.integers(0, 2**32 - 1))
def test_numba_kernel_matches_pure_python(flows, seed):
    got = hash_keys(flows_to_keys(flows), seed)
    assert [int(x) for x in got] == [hash32(f, seed) for f in flows]


def test_matches_mmh3():
    mmh3 = pytest.importorskip("mmh3")
    rng = random.Random(7)
    for _ in range(500):
        f = random_flow(rng)
        seed = rng.getrandbits(32)
        assert hash32(f, seed) == mmh3.hash(f.to_bytes(), seed, signed=False)


def test_protocol_byte_changes_digest():
    rng = random.Random(11)
    differ = 0
    for _ in range(1000):
        f = random_flow(rng)
        g = f._replace(protocol=(f.protocol + 1 + rng.randrange(255)) % 256)
        differ += hash32(f, DEFAULT_SEEDS["queue"]) != hash32(g, DEFAULT_SEEDS["queue"])
    assert differ >= 999


def test_seed_sensitivity():
    rng = random.Random(12)
    flows = [random_flow(rng) for _ in range(1000)]
    a = hash_keys(flows_to_keys(flows), DEFAULT_SEEDS["row0"])
    b = hash_keys(flows_to_keys(flows), DEFAULT_SEEDS["row1"])
    assert np.count_nonzero(a != b) >= 999


def test_default_seeds_distinct():
    assert len(set(DEFAULT_SEEDS.values())) == len(DEFAULT_SEEDS) == 8


def test_derive_seeds_distinct_and_stable():
    s = derive_seeds(123, 24)
    assert len(set(s)) == 24
    assert s == derive_seeds(123, 24)


def test_empty_key_array():
    assert hash_keys(np.zeros((0, 13), np.uint8), 1).shape == (0,)
