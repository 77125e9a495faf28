"""Profile once, predict many L2 configurations, optionally check each one.

A plan file is JSON::

    {
      "trace": "run.bin", "format": "binary_u64_le",
      "l1": {"capacity": 16384, "associativity": 2, "line_size": 64},
      "l2": [{"name": "config1", "capacity": 65536, "associativity": 8,
              "policy": "random"}, ...],
      "seed": 0, "with_oracle": true, "warmup_refs": 0, "cutoff": 1024
    }

Relative trace paths resolve against the plan file's directory.
"""
from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import CacheConfig, ConfigError
from .histogram import DEFAULT_CUTOFF
from .metrics import ComparisonReport, compare, miss_rate_errors
from .model import PredictionResult, predict
from .profiler import LocalityProfile, profile, save_profile
from .simulator import SimResult, simulate
from .trace import TraceFormat, read_trace

log = logging.getLogger(__name__)


@dataclass
class SweepPlan:
    l1_config: CacheConfig
    l2_configs: dict[str, CacheConfig]
    trace: str | None = None
    trace_format: TraceFormat = TraceFormat.BINARY
    seed: int = 0
    with_oracle: bool = True
    warmup_refs: int = 0
    cutoff: int = DEFAULT_CUTOFF

    def validate(self, trace_len: int | None = None) -> None:
        if not self.l2_configs:
            raise ConfigError("a sweep needs at least one L2 configuration")
        for name, c in self.l2_configs.items():
            if c.line_size != self.l1_config.line_size:
                raise ConfigError(f"{name}: line size {c.line_size} differs from the L1's "
                                  f"{self.l1_config.line_size}")
        if trace_len is not None and self.warmup_refs and self.warmup_refs >= trace_len:
            raise ConfigError(f"warm-up of {self.warmup_refs} references leaves nothing of "
                              f"a {trace_len}-reference trace")

    @classmethod
    def from_json(cls, d: dict, base_dir: str = ".") -> "SweepPlan":
        l1 = d["l1"]
        line = int(l1.get("line_size", 64))
        l1_cfg = CacheConfig(int(l1["capacity"]), line, int(l1["associativity"]), "lru")
        l2s = {}
        for i, c in enumerate(d["l2"], 1):
            name = c.get("name", f"config{i}")
            if name in l2s:
                raise ConfigError(f"duplicate L2 configuration name {name!r}")
            l2s[name] = CacheConfig(int(c["capacity"]), int(c.get("line_size", line)),
                                    int(c["associativity"]), c.get("policy", "lru"))
        trace = d.get("trace")
        if trace is not None and not os.path.isabs(trace):
            trace = os.path.join(base_dir, trace)
        return cls(
            l1_config=l1_cfg, l2_configs=l2s, trace=trace,
            trace_format=TraceFormat.parse(d.get("format", "binary_u64_le")),
            seed=int(d.get("seed", 0)), with_oracle=bool(d.get("with_oracle", True)),
            warmup_refs=int(d.get("warmup_refs", 0)), cutoff=int(d.get("cutoff", DEFAULT_CUTOFF)),
        )

    @classmethod
    def load(cls, path) -> "SweepPlan":
        with open(path) as f:
            return cls.from_json(json.load(f), os.path.dirname(os.path.abspath(path)))


@dataclass
class ConfigOutcome:
    name: str
    prediction: PredictionResult
    simulation: SimResult | None = None
    comparison: ComparisonReport | None = None

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "prediction": self.prediction.to_json(),
            "simulation": None if self.simulation is None else self.simulation.to_json(),
            "comparison": None if self.comparison is None else self.comparison.to_json(),
        }


@dataclass
class SweepReport:
    profile: LocalityProfile
    outcomes: dict[str, ConfigOutcome]
    # (phase, config name or "", seconds), in execution order
    phases: list[tuple[str, str, float]] = field(default_factory=list)
    error_total: float | None = None

    def phase_count(self, phase: str) -> int:
        return sum(1 for p, _, _ in self.phases if p == phase)

    def phase_time(self, phase: str) -> float:
        return sum(t for p, _, t in self.phases if p == phase)


def run_sweep(plan: SweepPlan, trace: np.ndarray | None = None, jobs: int = 1,
              out_dir: str | None = None) -> SweepReport:
    phases: list[tuple[str, str, float]] = []

    def timed(phase, name, fn, *args, **kw):
        t0 = time.perf_counter()
        out = fn(*args, **kw)
        dt = time.perf_counter() - t0
        phases.append((phase, name, dt))
        log.info("%s %s %.4fs", phase, name, dt)
        return out

    if trace is None:
        if plan.trace is None:
            raise ConfigError("the plan names no trace and none was passed in")
        trace = timed("read", "", read_trace, plan.trace, plan.trace_format)
    trace = np.asarray(trace, dtype=np.uint64)
    plan.validate(trace.size)

    prof = timed("profiling", "", profile, trace, plan.l1_config, plan.cutoff, plan.warmup_refs)

    names = list(plan.l2_configs)
    preds = {n: timed("prediction", n, predict, prof, plan.l2_configs[n]) for n in names}

    sims: dict[str, SimResult] = {}
    if plan.with_oracle:
        def run(n):
            return n, timed("simulation", n, simulate, trace, plan.l1_config,
                            plan.l2_configs[n], plan.seed, plan.cutoff, plan.warmup_refs)
        if jobs > 1:
            with ThreadPoolExecutor(jobs) as ex:
                sims = dict(ex.map(run, names))
        else:
            sims = dict(map(run, names))

    outcomes = {}
    for n in names:
        cmp_ = compare(preds[n], sims[n]) if n in sims else None
        outcomes[n] = ConfigOutcome(n, preds[n], sims.get(n), cmp_)

    report = SweepReport(prof, outcomes, phases)
    scored = {n: [(o.comparison.model_miss_rate, o.comparison.oracle_miss_rate)]
              for n, o in outcomes.items()
              if o.comparison is not None and o.comparison.model_miss_rate is not None}
    if scored:
        report.error_total = miss_rate_errors(scored).error_total
    if out_dir is not None:
        write_sweep(report, out_dir)
    return report


def write_sweep(report: SweepReport, out_dir: str) -> None:
    """Per-config JSON, ``summary.csv`` and ``profile.json`` (all deterministic),
    plus ``timings.csv`` with the wall-clock phase log."""
    os.makedirs(out_dir, exist_ok=True)
    save_profile(report.profile, os.path.join(out_dir, "profile.json"))
    for n, o in report.outcomes.items():
        with open(os.path.join(out_dir, f"{n}.json"), "w") as f:
            json.dump(o.to_json(), f, indent=1)
            f.write("\n")
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["config", "l2", "p_same", "predicted_l2_accesses", "model_miss_rate",
                    "simulated_l2_accesses", "oracle_miss_rate", "simulated_miss_rate", "he"])
        for n, o in report.outcomes.items():
            c, p, s = o.comparison, o.prediction, o.simulation
            w.writerow([
                n, str(p.l2_config), p.p_same, p.predicted_l2_accesses,
                "" if p.miss_rate is None else p.miss_rate.miss_rate,
                "" if s is None else s.l2_accesses,
                "" if c is None or c.oracle_miss_rate is None else c.oracle_miss_rate,
                "" if c is None or c.simulated_miss_rate is None else c.simulated_miss_rate,
                "" if c is None else c.he,
            ])
    with open(os.path.join(out_dir, "timings.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["phase", "config", "seconds"])
        w.writerows(report.phases)
