"""Hand-built Ethernet/IPv4 frames and classic pcap files for parser tests."""

from __future__ import annotations

import struct

from towertopk.hashing import FlowId

MAC_A = bytes.fromhex("020000000001")
MAC_B = bytes.fromhex("020000000002")


def ipv4(src: int, dst: int, proto: int, payload: bytes, options: bytes = b"", frag: int = 0, mf: bool = False) -> bytes:
    ihl = 5 + len(options) // 4
    flags_frag = (0x2000 if mf else 0) | frag
    hdr = struct.pack(">BBHHHBBHII", 0x40 | ihl, 0, 4 * ihl + len(payload), 1, flags_frag, 64, proto, 0, src, dst)
    return hdr + options + payload


def udp(sport: int, dport: int, body: bytes = b"x") -> bytes:
    return struct.pack(">HHHH", sport, dport, 8 + len(body), 0) + body


def tcp(sport: int, dport: int) -> bytes:
    return struct.pack(">HHIIBBHHH", sport, dport, 1, 0, 0x50, 0x02, 1024, 0, 0)


def ether(payload: bytes, ethertype: int = 0x0800) -> bytes:
    return MAC_B + MAC_A + struct.pack(">H", ethertype) + payload


def arp() -> bytes:
    body = struct.pack(">HHBBH", 1, 0x0800, 6, 4, 1) + MAC_A + bytes(4) + bytes(6) + bytes(4)
    return ether(body, 0x0806)


def pcap(frames: list[bytes], endian: str = "<", linktype: int = 1, snaplen: int = 65535) -> bytes:
    out = [struct.pack(endian + "IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, snaplen, linktype)]
    for i, frame in enumerate(frames):
        out.append(struct.pack(endian + "IIII", 1_700_000_000 + i, 0, len(frame), len(frame)))
        out.append(frame)
    return b"".join(out)


def ip(s: str) -> int:
    a, b, c, d = map(int, s.split("."))
    return a << 24 | b << 16 | c << 8 | d


def fixture_set() -> tuple[list[bytes], list[FlowId]]:
    """Twenty frames and the FlowIds a correct decoder must yield from them."""
    frames, expected = [], []

    def add(frame, flow=None):
        frames.append(frame)
        if flow is not None:
            expected.append(flow)

    add(ether(ipv4(ip("10.0.0.1"), ip("10.0.0.2"), 17, udp(53, 9999))), FlowId(ip("10.0.0.1"), ip("10.0.0.2"), 53, 9999, 17))
    add(ether(ipv4(ip("10.0.0.3"), ip("10.0.0.4"), 6, tcp(40000, 443))), FlowId(ip("10.0.0.3"), ip("10.0.0.4"), 40000, 443, 6))
    add(arp())
    # IPv4 with 8 bytes of options
    opts = bytes([0x01] * 8)
    add(ether(ipv4(ip("172.16.0.9"), ip("172.16.0.10"), 6, tcp(22, 51000), options=opts)),
        FlowId(ip("172.16.0.9"), ip("172.16.0.10"), 22, 51000, 6))
    # first fragment carries ports, later fragment does not
    add(ether(ipv4(ip("192.0.2.1"), ip("192.0.2.2"), 17, udp(5000, 6000, b"y" * 40), mf=True)),
        FlowId(ip("192.0.2.1"), ip("192.0.2.2"), 5000, 6000, 17))
    add(ether(ipv4(ip("192.0.2.1"), ip("192.0.2.2"), 17, b"z" * 24, frag=6)))
    # ICMP echo
    add(ether(ipv4(ip("198.51.100.1"), ip("198.51.100.2"), 1, bytes([8, 0, 0, 0, 0, 1, 0, 1]))))
    # IPv6 ethertype
    add(ether(bytes(40), 0x86DD))
    for i in range(12):
        src, dst = ip(f"10.1.{i}.1"), ip(f"10.2.{i}.2")
        if i % 2:
            add(ether(ipv4(src, dst, 6, tcp(1024 + i, 80))), FlowId(src, dst, 1024 + i, 80, 6))
        else:
            add(ether(ipv4(src, dst, 17, udp(2048 + i, 123))), FlowId(src, dst, 2048 + i, 123, 17))
    return frames, expected
