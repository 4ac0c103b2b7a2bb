"""Exact ground truth and the two accuracy metrics: ARE and precision."""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .hashing import KEY_BYTES, FlowId, flows_to_keys, hash_keys, keys_to_flows
from .pqa import TopKReport
from .tower import SENTINEL

# saturated estimates are scored as the widest counter's ceiling
SATURATED_SCORE = SENTINEL - 1


@dataclass
class ExactCounts:
    """Exact per-flow packet counts. ``flows`` is a key array aligned with ``counts``."""

    flows: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def cardinality(self) -> int:
        return int(self.counts.shape[0])

    def as_dict(self) -> dict[FlowId, int]:
        return dict(zip(keys_to_flows(self.flows), (int(c) for c in self.counts)))


def exact_count(stream) -> ExactCounts:
    """Count a stream given as a key array or an iterable of FlowIds."""
    if isinstance(stream, np.ndarray):
        keys = np.ascontiguousarray(stream, dtype=np.uint8).reshape(-1, KEY_BYTES)
        if keys.shape[0] == 0:
            return ExactCounts(np.zeros((0, KEY_BYTES), np.uint8), np.zeros(0, np.int64))
        flows, counts = np.unique(keys, axis=0, return_counts=True)
        return ExactCounts(flows, counts.astype(np.int64))
    tally = Counter(stream)
    if not tally:
        return ExactCounts(np.zeros((0, KEY_BYTES), np.uint8), np.zeros(0, np.int64))
    return ExactCounts(flows_to_keys(tally.keys()), np.fromiter(tally.values(), np.int64, len(tally)))


@dataclass(frozen=True)
class GroundTruthTopK:
    member_hashes: frozenset
    sorted_counts: tuple
    k: int
    seed: int


def ground_truth_topk(exact: ExactCounts, k: int, seed: int) -> GroundTruthTopK:
    """True top-K, keeping every flow tied with the K-th largest count.

    Members are identified by their 32-bit hash under ``seed``, which must
    be the seed the report under evaluation was hashed with.
    """
    counts = exact.counts
    order = np.sort(counts)[::-1]
    if exact.cardinality < k:
        warnings.warn(f"K={k} exceeds flow cardinality {exact.cardinality}; truth holds every flow")
        threshold = order[-1] if len(order) else 0
    else:
        threshold = order[k - 1]
    members = exact.flows[counts >= threshold] if len(order) else exact.flows
    hashes = hash_keys(members, seed)
    return GroundTruthTopK(frozenset(int(h) for h in hashes), tuple(int(c) for c in order[:k]), k, seed)


def score_counts(counts: Iterable[int]) -> tuple[list[int], bool]:
    """Replace saturated sentinels; returns the scored list and whether any occurred."""
    out, saturated = [], False
    for c in counts:
        c = int(c)
        if c >= SENTINEL:
            c, saturated = SATURATED_SCORE, True
        out.append(c)
    return out, saturated


def compute_are(estimated: Sequence[int], truth: Sequence[int]) -> float:
    """Mean relative error between two count lists sorted high to low.

    Positions run over the whole truth list; a short estimate list is
    padded with zeros and extra estimates are ignored.
    """
    truth = np.asarray(truth, dtype=np.float64)
    if truth.size == 0:
        return 0.0
    if np.any(truth <= 0):
        raise ValueError("true counts must be positive")
    est = np.zeros_like(truth)
    head = np.asarray(list(estimated)[: truth.size], dtype=np.float64)
    est[: head.size] = head
    return float(np.mean(np.abs(est - truth) / truth))


def compute_are_by_identity(report: TopKReport, exact: ExactCounts, k: int, seed: int) -> float:
    """ARE matching flows by hash instead of by rank; missing flows count as 0."""
    order = np.argsort(-exact.counts, kind="stable")[:k]
    hashes = hash_keys(exact.flows[order], seed)
    reported = dict(report.entries)
    est = [reported.get(int(h), 0) for h in hashes]
    est, _ = score_counts(est)
    truth = exact.counts[order]
    if truth.size == 0:
        return 0.0
    return float(np.mean(np.abs(np.asarray(est, np.float64) - truth) / truth))


@dataclass
class EvalResult:
    k: int
    are_mean: float
    precision: float
    tp: int
    fp: int
    saturated: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def compute_precision(report: TopKReport, truth: GroundTruthTopK) -> tuple[float, int, int]:
    """(precision, TP, FP) of reported hashes against tie-inclusive truth."""
    tp = sum(1 for h in report.hashes if h in truth.member_hashes)
    fp = len(report) - tp
    precision = tp / (tp + fp) if tp + fp else 0.0
    return precision, tp, fp


def evaluate(report: TopKReport, exact: ExactCounts, k: int, seed: int, by_identity: bool = False) -> EvalResult:
    truth = ground_truth_topk(exact, k, seed)
    precision, tp, fp = compute_precision(report, truth)
    est, saturated = score_counts(report.counts[:k])
    if by_identity:
        are = compute_are_by_identity(report, exact, k, seed)
    else:
        are = compute_are(est, truth.sorted_counts)
    return EvalResult(k=k, are_mean=are, precision=precision, tp=tp, fp=fp, saturated=saturated)
