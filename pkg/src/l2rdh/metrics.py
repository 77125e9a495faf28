"""Agreement between predicted and measured histograms and miss rates."""
from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .histogram import Histogram


class MetricError(ValueError):
    pass


def histogram_error(model: Histogram, ground_truth: Histogram) -> float:
    """Sum of absolute bin differences over the ground-truth total.

    The cold count is compared as one more bin. The numerator is symmetric
    but the normalisation is not: swapping the arguments changes the value
    whenever the totals differ.
    """
    if model.cutoff != ground_truth.cutoff:
        raise MetricError(f"cutoffs differ ({model.cutoff} vs {ground_truth.cutoff})")
    gt = ground_truth.with_cold_bin()
    denom = gt.sum()
    if denom <= 0:
        raise MetricError("ground-truth histogram is empty")
    return float(np.abs(model.with_cold_bin() - gt).sum() / denom)


@dataclass
class ComparisonReport:
    he: float | None = None
    model_miss_rate: float | None = None
    # solver applied to the ground-truth RDH, and the simulator's own count
    oracle_miss_rate: float | None = None
    simulated_miss_rate: float | None = None
    error_per_config: dict[str, float] = field(default_factory=dict)
    error_total: float | None = None

    @property
    def abs_miss_rate_error(self) -> float | None:
        if self.model_miss_rate is None or self.oracle_miss_rate is None:
            return None
        return abs(self.model_miss_rate - self.oracle_miss_rate)

    @property
    def abs_simulated_error(self) -> float | None:
        if self.model_miss_rate is None or self.simulated_miss_rate is None:
            return None
        return abs(self.model_miss_rate - self.simulated_miss_rate)

    def to_json(self) -> dict:
        return {
            "version": 1,
            "kind": "comparison",
            "he": self.he,
            "model_miss_rate": self.model_miss_rate,
            "oracle_miss_rate": self.oracle_miss_rate,
            "abs_miss_rate_error": self.abs_miss_rate_error,
            "simulated_miss_rate": self.simulated_miss_rate,
            "abs_simulated_error": self.abs_simulated_error,
            "error_per_config": dict(sorted(self.error_per_config.items())),
            "error_total": self.error_total,
        }


def compare(pred, truth) -> ComparisonReport:
    """Compare a prediction with a simulation (or with another prediction).

    The oracle miss rate runs the model's own solver over the ground-truth
    L2 RDH, so the difference measures the histogram model rather than the
    StatCache/StatStack approximation. Against a simulation the simulator's
    counted miss rate is reported too.
    """
    from .model import PredictionResult, l2_miss_rate

    if isinstance(truth, PredictionResult):
        gt, simulated = truth.real_l2_rdh, None
    else:
        gt, simulated = truth.measured_l2_rdh, truth.l2_miss_rate
    if pred.cutoff != gt.cutoff:
        raise MetricError(f"cutoffs differ (prediction {pred.cutoff}, ground truth {gt.cutoff})")
    # an empty ground truth (nothing leaked past L1) leaves HE undefined
    rep = ComparisonReport(he=histogram_error(pred.real_l2_rdh, gt) if gt.total > 0 else None)
    if pred.miss_rate is not None and gt.total > 0:
        rep.model_miss_rate = pred.miss_rate.miss_rate
        rep.oracle_miss_rate = l2_miss_rate(gt, pred.l2_config).miss_rate
        rep.simulated_miss_rate = simulated
    return rep


def miss_rate_errors(pairs: dict[str, Iterable[tuple[float, float]]]) -> ComparisonReport:
    """Mean absolute miss-rate error per config, then the mean over configs.

    ``pairs`` maps a config name to its (model, oracle) rate pairs, one per
    benchmark.
    """
    per = {}
    for name, group in pairs.items():
        group = list(group)
        if not group:
            raise MetricError(f"config {name!r} has no benchmarks")
        per[name] = float(np.mean([abs(m - o) for m, o in group]))
    if not per:
        raise MetricError("no configurations to average")
    return ComparisonReport(error_per_config=per, error_total=float(np.mean(list(per.values()))))


def group_pairs(rows: Iterable[tuple[str, float, float]]) -> dict[str, list[tuple[float, float]]]:
    out: dict[str, list] = defaultdict(list)
    for name, m, o in rows:
        out[name].append((m, o))
    return dict(out)


def write_histogram_csv(path, model: Histogram, truth: Histogram) -> None:
    """One ``bin,model,truth`` row per distance, plus a final ``cold`` row."""
    if model.cutoff != truth.cutoff:
        raise MetricError(f"cutoffs differ ({model.cutoff} vs {truth.cutoff})")
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bin", "model", "truth"])
        for i, (m, t) in enumerate(zip(model.bins.tolist(), truth.bins.tolist())):
            w.writerow([i, m, t])
        w.writerow(["cold", model.cold, truth.cold])
