"""Regenerate tests/data/fixture.pcap from the hand-built frames in tests/pcapgen.py."""

import sys
from pathlib import Path

root = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(root / "tests"))

from pcapgen import fixture_set, pcap  # noqa: E402

frames, _ = fixture_set()
out = root / "tests" / "data" / "fixture.pcap"
out.write_bytes(pcap(frames))
print(f"wrote {len(frames)} frames to {out}")
