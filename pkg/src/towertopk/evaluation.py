"""Run-and-score helpers shared by the CLI and the experiment scripts."""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import RunConfig
from .metrics import EvalResult, evaluate, exact_count
from .pipeline import TopKPipeline, split_windows


def run_and_evaluate(cfg: RunConfig, keys: np.ndarray, by_identity: bool = False) -> list[EvalResult]:
    """Run the pipeline on each window of ``keys`` and score it against exact counts."""
    results = []
    for window in split_windows(keys, cfg.window):
        pipe = TopKPipeline(cfg)
        pipe.process(window)
        results.append(evaluate(pipe.report(), exact_count(window), cfg.k, pipe.hash_seed, by_identity))
    return results


@dataclass
class Summary:
    label: str
    k: int
    are: list[float]
    precision: list[float]

    @staticmethod
    def _ms(xs: Sequence[float]) -> tuple[float, float]:
        if not xs:
            return float("nan"), float("nan")
        return statistics.fmean(xs), (statistics.pstdev(xs) if len(xs) > 1 else 0.0)

    @property
    def are_stats(self) -> tuple[float, float]:
        return self._ms(self.are)

    @property
    def precision_stats(self) -> tuple[float, float]:
        return self._ms(self.precision)

    def to_dict(self) -> dict:
        am, asd = self.are_stats
        pm, psd = self.precision_stats
        return {
            "label": self.label,
            "k": self.k,
            "n": len(self.are),
            "are_mean": {"mean": am, "std": asd},
            "precision": {"mean": pm, "std": psd},
        }


def format_table(summaries: Sequence[Summary], metric: str) -> str:
    """Rows are K, columns are configurations; cells are mean and std over traces.

    ``metric`` is ``"are"`` (printed in percent) or ``"precision"``.
    """
    labels = list(dict.fromkeys(s.label for s in summaries))
    ks = sorted({s.k for s in summaries})
    cell = {(s.label, s.k): s for s in summaries}
    head = "K".rjust(7) + "".join(f" | {lab:>21}" for lab in labels)
    sub = " " * 7 + "".join(" | " + ("mu(%)   sd(%)" if metric == "are" else "mu      sd").rjust(21) for _ in labels)
    lines = [head, sub, "-" * len(head)]
    for k in ks:
        row = f"{_klabel(k):>7}"
        for lab in labels:
            s = cell.get((lab, k))
            if s is None:
                row += " | " + "-".rjust(21)
                continue
            if metric == "are":
                m, sd = s.are_stats
                row += f" | {m * 100:10.3f} {sd * 100:10.3f}"
            else:
                m, sd = s.precision_stats
                row += f" | {m:10.3f} {sd:10.3f}"
        lines.append(row)
    return "\n".join(lines)


def _klabel(k: int) -> str:
    return f"{k // 1024}K" if k >= 1024 and k % 1024 == 0 else str(k)
