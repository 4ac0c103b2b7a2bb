"""Sketch -> queue wiring: one estimate per packet, then a sorted top-K readout."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import islice
from typing import Iterable, Iterator

import numpy as np

from .baselines import CountMinCU, CountSketch
from .config import RunConfig
from .errors import ConfigError
from .hashing import FlowId, as_keys, derive_seeds, flows_to_keys, hash_keys
from .pqa import PerfectPriorityQueue, PriorityQueueArray, TopKReport
from .tower import TOWER3_LAYOUT, TOWER3_M, TOWER6_LAYOUT, TOWER6_M, TowerSketch

CHUNK = 1 << 16


def build_sketch(cfg: RunConfig):
    seeds = cfg.seeds
    try:
        if cfg.sketch in ("tower6", "tower3", "tower"):
            if cfg.sketch == "tower6":
                layout, m = TOWER6_LAYOUT, cfg.m or TOWER6_M
            elif cfg.sketch == "tower3":
                layout, m = TOWER3_LAYOUT, cfg.m or TOWER3_M
            else:
                if not cfg.layout or not cfg.m:
                    raise ConfigError("sketch 'tower' needs explicit m and layout")
                layout, m = [tuple(x) for x in cfg.layout], cfg.m
            d = sum(n for _, n in layout)
            row_seeds = [seeds[f"row{i}"] for i in range(min(d, 6))]
            if d > 6:
                row_seeds += derive_seeds(seeds["baseline"] ^ 0x5A5A5A5A, d - 6)
            return TowerSketch(m, layout, row_seeds)
        if cfg.sketch == "cmcu":
            return CountMinCU(cfg.rows, cfg.width, derive_seeds(seeds["baseline"], cfg.rows))
        derived = derive_seeds(seeds["baseline"], 2 * cfg.rows)
        return CountSketch(cfg.rows, cfg.width, derived[: cfg.rows], derived[cfg.rows:])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def first_row_seed(sketch) -> int:
    if isinstance(sketch, TowerSketch):
        return sketch.rows[0].seed
    if isinstance(sketch, CountSketch):
        return int(sketch.index_seeds[0])
    return int(sketch.seeds[0])


def queue_seed(cfg: RunConfig, sketch) -> int:
    """Seed of the flow hash the queue (and hence the ground truth) uses."""
    return first_row_seed(sketch) if cfg.reuse_row0_hash else cfg.seeds["queue"]


def build_queue(cfg: RunConfig, seed: int):
    if cfg.queue == "ppq":
        return PerfectPriorityQueue(cfg.k, seed)
    try:
        return PriorityQueueArray(cfg.n_queues, cfg.slots, seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


class TopKPipeline:
    """Per packet: estimate = sketch.insert(f); queue.insert(f, estimate)."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg.validate()
        self.sketch = build_sketch(cfg)
        self.hash_seed = queue_seed(cfg, self.sketch)
        self.queue = build_queue(cfg, self.hash_seed)
        self.packets = 0

    def process(self, keys: np.ndarray) -> np.ndarray:
        """Feed a chunk of packets; returns the sketch estimates."""
        keys = as_keys(keys)
        ests = self.sketch.insert_keys(keys)
        self.queue.insert_hashed(hash_keys(keys, self.hash_seed), ests)
        self.packets += keys.shape[0]
        return ests

    def process_flows(self, flows: Iterable[FlowId]) -> None:
        for chunk in chunked(flows, CHUNK):
            self.process(chunk)

    def report(self) -> TopKReport:
        return self.queue.extract_topk(self.cfg.k)

    def reset(self) -> None:
        self.sketch.clear()
        self.queue.reset()
        self.packets = 0


def chunked(flows: Iterable[FlowId], size: int) -> Iterator[np.ndarray]:
    it = iter(flows)
    while True:
        block = list(islice(it, size))
        if not block:
            return
        yield flows_to_keys(block)


@dataclass
class WindowReport:
    index: int
    packets: int
    report: TopKReport


def run_windows(cfg: RunConfig, flows: Iterable[FlowId] | np.ndarray) -> list[WindowReport]:
    """Single pass over ``flows``; one report per window of ``cfg.window`` packets.

    Without a window the whole input is one observation window.
    """
    pipe = TopKPipeline(cfg)
    size = cfg.window
    if isinstance(flows, np.ndarray):
        keys = as_keys(flows)
        chunks: Iterable[np.ndarray] = (keys[i:i + CHUNK] for i in range(0, keys.shape[0], CHUNK))
    else:
        chunks = chunked(flows, CHUNK)
    out: list[WindowReport] = []
    for chunk in chunks:
        while chunk.shape[0]:
            take = chunk.shape[0] if size is None else min(chunk.shape[0], size - pipe.packets)
            pipe.process(chunk[:take])
            chunk = chunk[take:]
            if size is not None and pipe.packets == size:
                out.append(WindowReport(len(out), pipe.packets, pipe.report()))
                pipe.reset()
    if pipe.packets or not out:
        out.append(WindowReport(len(out), pipe.packets, pipe.report()))
    return out


def split_windows(keys: np.ndarray, window: int | None) -> list[np.ndarray]:
    keys = as_keys(keys)
    if window is None or keys.shape[0] == 0:
        return [keys]
    return [keys[i:i + window] for i in range(0, keys.shape[0], window)]
