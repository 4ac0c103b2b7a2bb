"""Packet-stream sources: classic pcap, flowlog text, and a Zipf generator."""

from __future__ import annotations

import ipaddress
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import InputError
from .hashing import KEY_BYTES, FlowId, flows_to_keys, keys_to_flows

PCAP_MAGICS = {
    b"\xd4\xc3\xb2\xa1": "<",  # microsecond, little-endian
    b"\xa1\xb2\xc3\xd4": ">",
    b"\x4d\x3c\xb2\xa1": "<",  # nanosecond variants
    b"\xa1\xb2\x3c\x4d": ">",
}
LINKTYPE_ETHERNET = 1
ETH_IPV4 = 0x0800
ETH_VLAN = (0x8100, 0x88A8)
TCP, UDP = 6, 17


class PcapError(InputError):
    pass


class FlowLogError(InputError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class PcapReader:
    """Iterate FlowIds out of a classic pcap file with Ethernet framing.

    Non-IPv4 frames, non-first fragments and non-TCP/UDP packets are
    skipped and tallied in ``skipped`` by reason. With ``keep_other`` set,
    other IPv4 protocols yield a FlowId with both ports 0.
    """

    def __init__(self, path: str | Path, keep_other: bool = False):
        self.path = Path(path)
        self.keep_other = keep_other
        self.skipped: Counter[str] = Counter()
        self.packets = 0

    def __iter__(self) -> Iterator[FlowId]:
        with open(self.path, "rb") as fh:
            head = fh.read(24)
            if len(head) < 24:
                raise PcapError(f"{self.path}: truncated global header")
            endian = PCAP_MAGICS.get(head[:4])
            if endian is None:
                raise PcapError(f"{self.path}: bad magic {head[:4].hex()}")
            linktype = struct.unpack(endian + "I", head[20:24])[0] & 0x0FFFFFFF
            if linktype != LINKTYPE_ETHERNET:
                raise PcapError(f"{self.path}: unsupported link type {linktype}")
            rec = struct.Struct(endian + "IIII")
            while True:
                hdr = fh.read(16)
                if not hdr:
                    return
                if len(hdr) < 16:
                    raise PcapError(f"{self.path}: truncated record header at packet {self.packets}")
                _, _, incl_len, _ = rec.unpack(hdr)
                data = fh.read(incl_len)
                if len(data) < incl_len:
                    raise PcapError(f"{self.path}: truncated packet data at packet {self.packets}")
                self.packets += 1
                flow = self._decode(data)
                if flow is not None:
                    yield flow

    def _decode(self, frame: bytes) -> FlowId | None:
        if len(frame) < 14:
            self.skipped["short_frame"] += 1
            return None
        off = 12
        ethertype = int.from_bytes(frame[off:off + 2], "big")
        while ethertype in ETH_VLAN and len(frame) >= off + 6:
            off += 4
            ethertype = int.from_bytes(frame[off:off + 2], "big")
        off += 2
        if ethertype != ETH_IPV4:
            self.skipped["non_ipv4"] += 1
            return None
        ip = frame[off:]
        if len(ip) < 20 or ip[0] >> 4 != 4:
            self.skipped["bad_ipv4"] += 1
            return None
        ihl = (ip[0] & 0x0F) * 4
        if ihl < 20 or len(ip) < ihl:
            self.skipped["bad_ipv4"] += 1
            return None
        frag_offset = int.from_bytes(ip[6:8], "big") & 0x1FFF
        proto = ip[9]
        src, dst = struct.unpack(">II", ip[12:20])
        if proto in (TCP, UDP):
            if frag_offset:
                self.skipped["fragment"] += 1
                return None
            l4 = ip[ihl:ihl + 4]
            if len(l4) < 4:
                self.skipped["truncated_l4"] += 1
                return None
            sport, dport = struct.unpack(">HH", l4)
            return FlowId(src, dst, sport, dport, proto)
        if self.keep_other:
            return FlowId(src, dst, 0, 0, proto)
        self.skipped["other_protocol"] += 1
        return None


def read_pcap(path: str | Path, keep_other: bool = False) -> PcapReader:
    return PcapReader(path, keep_other)


def parse_flowlog_line(line: str, lineno: int) -> FlowId:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) != 5:
        raise FlowLogError(lineno, f"expected 5 fields, got {len(parts)}")
    try:
        flow = FlowId(
            int(ipaddress.IPv4Address(parts[0])),
            int(ipaddress.IPv4Address(parts[1])),
            int(parts[2]),
            int(parts[3]),
            int(parts[4]),
        )
    except ValueError as exc:
        raise FlowLogError(lineno, str(exc)) from None
    if not (0 <= flow.src_port < 1 << 16 and 0 <= flow.dst_port < 1 << 16 and 0 <= flow.protocol < 256):
        raise FlowLogError(lineno, "port or protocol out of range")
    return flow


def read_flowlog(path: str | Path) -> Iterator[FlowId]:
    """Yield one FlowId per record line; blank and '#' lines are skipped."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield parse_flowlog_line(line, lineno)


def write_flowlog(path: str | Path, flows: Iterable[FlowId] | np.ndarray) -> int:
    if isinstance(flows, np.ndarray):
        flows = keys_to_flows(flows)
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for f in flows:
            fh.write(f"{f}\n")
            n += 1
    return n


def detect_format(path: str | Path) -> str:
    with open(path, "rb") as fh:
        magic = fh.read(4)
    return "pcap" if magic in PCAP_MAGICS else "flowlog"


def load_keys(path: str | Path, fmt: str = "auto", keep_other: bool = False) -> tuple[np.ndarray, dict]:
    """Read a whole trace into a key array. Returns ``(keys, stats)``."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"{path}: no such file")
    if fmt == "auto":
        fmt = detect_format(path)
    if fmt == "pcap":
        reader = PcapReader(path, keep_other)
        keys = flows_to_keys(reader)
        return keys, {"format": "pcap", "records": reader.packets, "skipped": dict(reader.skipped)}
    if fmt == "flowlog":
        keys = flows_to_keys(read_flowlog(path))
        return keys, {"format": "flowlog", "records": int(keys.shape[0]), "skipped": {}}
    raise InputError(f"unknown input format {fmt!r}")


@dataclass(frozen=True)
class ZipfSpec:
    n_flows: int
    n_packets: int
    alpha: float = 1.1
    rng_seed: int = 0


@dataclass
class ZipfTrace:
    spec: ZipfSpec
    keys: np.ndarray  # (n_packets, 13) packet stream
    flows: np.ndarray  # (n_flows, 13), rank order
    emitted: np.ndarray = field(repr=False)  # per-flow emission counts, aligned with flows


def _distinct_flows(rng: np.random.Generator, n: int) -> np.ndarray:
    flows = np.zeros((0, KEY_BYTES), dtype=np.uint8)
    while flows.shape[0] < n:
        batch = rng.integers(0, 256, size=(n - flows.shape[0], KEY_BYTES), dtype=np.uint8)
        batch[:, 12] = np.where(rng.random(batch.shape[0]) < 0.8, TCP, UDP)
        merged = np.concatenate([flows, batch])
        _, first = np.unique(merged, axis=0, return_index=True)
        flows = merged[np.sort(first)]
    return flows


def gen_zipf(spec: ZipfSpec) -> ZipfTrace:
    """i.i.d. packets over ``n_flows`` distinct flows with P(rank r) ~ r**-alpha."""
    if spec.alpha <= 0:
        raise ValueError("alpha must be positive")
    if spec.n_flows < 1:
        raise ValueError("need at least one flow")
    rng = np.random.default_rng(spec.rng_seed)
    flows = _distinct_flows(rng, spec.n_flows)
    weights = np.arange(1, spec.n_flows + 1, dtype=np.float64) ** -spec.alpha
    ranks = rng.choice(spec.n_flows, size=spec.n_packets, p=weights / weights.sum())
    emitted = np.bincount(ranks, minlength=spec.n_flows).astype(np.int64)
    return ZipfTrace(spec, flows[ranks], flows, emitted)
