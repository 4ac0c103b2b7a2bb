import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import flow_ids
from pcapgen import arp, ether, fixture_set, ip, ipv4, pcap, udp
from towertopk.hashing import FlowId, flows_to_keys
from towertopk.metrics import exact_count
from towertopk.traces import (
    FlowLogError,
    PcapError,
    ZipfSpec,
    gen_zipf,
    load_keys,
    read_flowlog,
    read_pcap,
    write_flowlog,
)

DATA = Path(__file__).parent / "data"


def test_single_udp_packet(tmp_path):
    frame = ether(ipv4(ip("10.0.0.1"), ip("10.0.0.2"), 17, udp(53, 9999)))
    path = tmp_path / "one.pcap"
    path.write_bytes(pcap([frame]))
    raw = path.read_bytes()
    # global header, record header, then the frame verbatim
    assert raw[:4] == b"\xd4\xc3\xb2\xa1"
    assert raw[40:] == frame
    assert frame[26:34] == bytes([10, 0, 0, 1, 10, 0, 0, 2])
    assert frame[34:38] == struct.pack(">HH", 53, 9999)
    assert list(read_pcap(path)) == [FlowId.parse("10.0.0.1", "10.0.0.2", 53, 9999, 17)]


def test_arp_is_skipped(tmp_path):
    path = tmp_path / "arp.pcap"
    path.write_bytes(pcap([arp()]))
    reader = read_pcap(path)
    assert list(reader) == []
    assert reader.skipped == {"non_ipv4": 1}


def test_header_only_pcap(tmp_path):
    path = tmp_path / "empty.pcap"
    path.write_bytes(pcap([]))
    assert list(read_pcap(path)) == []


@pytest.mark.parametrize("endian", ["<", ">"])
def test_fixture_set_both_endiannesses(tmp_path, endian):
    frames, expected = fixture_set()
    path = tmp_path / "f.pcap"
    path.write_bytes(pcap(frames, endian))
    reader = read_pcap(path)
    assert list(reader) == expected
    assert reader.packets == 20
    assert reader.skipped == {"non_ipv4": 2, "fragment": 1, "other_protocol": 1}


def test_bundled_fixture_is_current():
    frames, _ = fixture_set()
    assert (DATA / "fixture.pcap").read_bytes() == pcap(frames)


def test_agrees_with_reference_decoder():
    dpkt = pytest.importorskip("dpkt")
    ref = []
    with open(DATA / "fixture.pcap", "rb") as fh:
        for _, buf in dpkt.pcap.Reader(fh):
            eth = dpkt.ethernet.Ethernet(buf)
            pkt = eth.data
            if not isinstance(pkt, dpkt.ip.IP) or pkt.offset != 0:
                continue
            if isinstance(pkt.data, (dpkt.tcp.TCP, dpkt.udp.UDP)):
                src, dst = struct.unpack(">II", pkt.src + pkt.dst)
                ref.append(FlowId(src, dst, pkt.data.sport, pkt.data.dport, pkt.p))
    assert list(read_pcap(DATA / "fixture.pcap")) == ref


def test_keep_other_protocols(tmp_path):
    frame = ether(ipv4(ip("1.2.3.4"), ip("5.6.7.8"), 1, bytes(8)))
    path = tmp_path / "icmp.pcap"
    path.write_bytes(pcap([frame]))
    assert list(read_pcap(path)) == []
    assert list(read_pcap(path, keep_other=True)) == [FlowId(ip("1.2.3.4"), ip("5.6.7.8"), 0, 0, 1)]


def test_pcap_errors(tmp_path):
    bad = tmp_path / "bad.pcap"
    bad.write_bytes(b"\x00" * 24)
    with pytest.raises(PcapError, match="magic"):
        list(read_pcap(bad))
    bad.write_bytes(pcap([], linktype=101))
    with pytest.raises(PcapError, match="link type"):
        list(read_pcap(bad))
    frame = ether(ipv4(ip("10.0.0.1"), ip("10.0.0.2"), 17, udp(1, 2)))
    bad.write_bytes(pcap([frame])[:-5])
    with pytest.raises(PcapError, match="truncated"):
        list(read_pcap(bad))
    bad.write_bytes(b"\xd4\xc3\xb2\xa1")
    with pytest.raises(PcapError):
        list(read_pcap(bad))


def test_flowlog_parse(tmp_path):
    path = tmp_path / "a.flowlog"
    path.write_text("# comment\n10.0.0.1,10.0.0.2,80,443,6\n\n")
    assert list(read_flowlog(path)) == [FlowId.parse("10.0.0.1", "10.0.0.2", 80, 443, 6)]


def test_flowlog_blank(tmp_path):
    path = tmp_path / "b.flowlog"
    path.write_text("\n\n   \n")
    assert list(read_flowlog(path)) == []


@pytest.mark.parametrize("line", ["10.0.0.1,10.0.0.2,80,443", "10.0.0.1,10.0.0.2,80,443,6,1",
                                  "10.0.0.300,10.0.0.2,80,443,6", "10.0.0.1,10.0.0.2,70000,443,6"])
def test_flowlog_errors(tmp_path, line):
    path = tmp_path / "c.flowlog"
    path.write_text(f"{line}\n")
    with pytest.raises(FlowLogError) as err:
        list(read_flowlog(path))
    assert err.value.line == 1


@given(st.lists(flow_ids, max_size=30))
def test_flowlog_round_trip(flows):
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "rt.flowlog"
        write_flowlog(path, flows)
        assert list(read_flowlog(path)) == flows
        write_flowlog(path, flows_to_keys(flows))
        assert list(read_flowlog(path)) == flows


def test_load_keys_autodetects(tmp_path):
    frames, expected = fixture_set()
    (tmp_path / "x.pcap").write_bytes(pcap(frames))
    keys, info = load_keys(tmp_path / "x.pcap")
    assert info["format"] == "pcap"
    assert np.array_equal(keys, flows_to_keys(expected))
    write_flowlog(tmp_path / "x.txt", expected)
    keys2, info2 = load_keys(tmp_path / "x.txt")
    assert info2["format"] == "flowlog"
    assert np.array_equal(keys, keys2)


def test_zipf_single_flow():
    tr = gen_zipf(ZipfSpec(1, 500, 1.2, 0))
    assert np.all(tr.keys == tr.keys[0])
    assert tr.emitted.tolist() == [500]


def test_zipf_deterministic():
    spec = ZipfSpec(1000, 20_000, 1.1, 42)
    assert gen_zipf(spec).keys.tobytes() == gen_zipf(spec).keys.tobytes()
    assert gen_zipf(ZipfSpec(1000, 20_000, 1.1, 43)).keys.tobytes() != gen_zipf(spec).keys.tobytes()


def test_zipf_conservation_and_distinct_flows():
    tr = gen_zipf(ZipfSpec(20_000, 50_000, 0.9, 1))
    assert tr.emitted.sum() == 50_000
    assert np.unique(tr.flows, axis=0).shape[0] == 20_000
    assert exact_count(tr.keys).cardinality == np.count_nonzero(tr.emitted)


def test_zipf_rejects_bad_alpha():
    with pytest.raises(ValueError):
        gen_zipf(ZipfSpec(10, 10, 0.0, 0))


def test_zipf_skew():
    tr = gen_zipf(ZipfSpec(100_000, 1_000_000, 1.1, 0))
    top = np.sort(tr.emitted)[::-1][:1000]
    assert top.sum() >= 0.5 * 1_000_000
