"""Functional two-level cache simulator used as ground truth for the model.

The L1 is LRU; the L2 is LRU or Random. Every L1 miss looks up the L2 and
fills both levels (non-inclusive, non-exclusive: evictions at one level
never touch the other). Timing, write-backs and prefetching are not
modelled.

Random victims come from numpy's PCG64 (``np.random.default_rng(seed)``):
one way index in ``[0, assoc)`` is drawn per reference up front and the
draw belonging to the missing reference is used, so a result depends only
on (trace, configs, seed).

Distances are computed here independently of :mod:`l2rdh.profiler`: stack
distances use a Fenwick tree per set rather than an LRU list, and L1 hits
come from the cache contents rather than from stack distances.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .config import CacheConfig, ConfigError, Policy
from .histogram import DEFAULT_CUTOFF, Histogram
from .trace import line_address

SIM_SCHEMA_VERSION = 1


@numba.njit(cache=True, nogil=True, inline="always")
def _lookup(tags, stamps, base, assoc, tag, now, lru, draw):
    """Access one set; returns True on hit. Fills on miss."""
    for w in range(assoc):
        if tags[base + w] == tag:
            stamps[base + w] = now
            return True
    victim = -1
    for w in range(assoc):
        if tags[base + w] < 0:
            victim = w
            break
    if victim < 0:
        if lru:
            victim = 0
            oldest = stamps[base]
            for w in range(1, assoc):
                if stamps[base + w] < oldest:
                    oldest = stamps[base + w]
                    victim = w
        else:
            victim = draw
    tags[base + victim] = tag
    stamps[base + victim] = now
    return False


@numba.njit(cache=True, nogil=True)
def _lru_hits(ids, sets, n_sets, assoc):
    n = ids.size
    tags = np.full(n_sets * assoc, -1, np.int64)
    stamps = np.zeros(tags.size, np.int64)
    hits = np.zeros(n, np.bool_)
    for r in range(n):
        hits[r] = _lookup(tags, stamps, sets[r] * assoc, assoc, ids[r], r, True, 0)
    return hits


@numba.njit(cache=True, nogil=True)
def _fenwick_add(tree, off, size, i, v):
    i += 1
    while i <= size:
        tree[off + i - 1] += v
        i += i & (-i)


@numba.njit(cache=True, nogil=True)
def _fenwick_prefix(tree, off, i):
    # sum of positions [0, i)
    s = 0
    while i > 0:
        s += tree[off + i - 1]
        i -= i & (-i)
    return s


@numba.njit(cache=True, nogil=True)
def _simulate_kernel(ids, n_ids, s1, s2, n_s1, n_s2, a1, a2, l2_lru, draws,
                     cutoff, warmup):
    n = ids.size
    k = cutoff + 1
    l1_tags = np.full(n_s1 * a1, -1, np.int64)
    l1_stamps = np.zeros(n_s1 * a1, np.int64)
    l2_tags = np.full(n_s2 * a2, -1, np.int64)
    l2_stamps = np.zeros(n_s2 * a2, np.int64)

    # per-L1-set Fenwick trees laid out back to back
    per_set = np.zeros(n_s1, np.int64)
    for r in range(n):
        per_set[s1[r]] += 1
    offs = np.zeros(n_s1, np.int64)
    acc = 0
    for s in range(n_s1):
        offs[s] = acc
        acc += per_set[s]
    tree = np.zeros(max(acc, 1), np.int32)

    t1 = np.zeros(n_s1, np.int64)
    t2 = np.zeros(n_s2, np.int64)
    last1 = np.full(n_ids, -1, np.int64)
    last2 = np.full(n_ids, -1, np.int64)

    rdh1 = np.zeros(k, np.int64)
    sdh1 = np.zeros(k, np.int64)
    rdh2 = np.zeros(k, np.int64)
    cold1 = 0
    cold2 = 0
    l1_acc = 0
    l1_miss = 0
    l2_miss = 0
    hits = np.zeros(n, np.bool_)

    for r in range(n):
        x = ids[r]
        a = s1[r]
        counted = r >= warmup

        # L1 locality, per L1 set
        now = t1[a]
        prev = last1[x]
        if prev >= 0:
            sd = _fenwick_prefix(tree, offs[a], now) - _fenwick_prefix(tree, offs[a], prev + 1)
            rd = now - prev - 1
            _fenwick_add(tree, offs[a], per_set[a], prev, -1)
            if counted:
                rdh1[min(rd, cutoff)] += 1
                sdh1[min(sd, cutoff)] += 1
        elif counted:
            cold1 += 1
        _fenwick_add(tree, offs[a], per_set[a], now, 1)
        last1[x] = now
        t1[a] = now + 1

        hit = _lookup(l1_tags, l1_stamps, a * a1, a1, x, r, True, 0)
        hits[r] = hit
        if counted:
            l1_acc += 1
        if hit:
            continue
        if counted:
            l1_miss += 1

        # L1-miss stream seen by the L2, per L2 set
        b = s2[r]
        now2 = t2[b]
        prev2 = last2[x]
        if counted:
            if prev2 >= 0:
                rdh2[min(now2 - prev2 - 1, cutoff)] += 1
            else:
                cold2 += 1
        last2[x] = now2
        t2[b] = now2 + 1

        if not _lookup(l2_tags, l2_stamps, b * a2, a2, x, r, l2_lru, draws[r]):
            if counted:
                l2_miss += 1

    return (hits, rdh1, sdh1, cold1, rdh2, cold2, l1_acc, l1_miss, l2_miss)


@dataclass(eq=False)
class SimResult:
    l1_config: CacheConfig
    l2_config: CacheConfig
    cutoff: int
    warmup: int
    seed: int
    l1_accesses: int
    l1_misses: int
    l2_accesses: int
    l2_misses: int
    measured_l2_rdh: Histogram
    measured_l1_rdh: Histogram
    measured_l1_sdh: Histogram

    @property
    def l1_miss_rate(self) -> float:
        return self.l1_misses / self.l1_accesses if self.l1_accesses else 0.0

    @property
    def l2_miss_rate(self) -> float:
        return self.l2_misses / self.l2_accesses if self.l2_accesses else 0.0

    def to_json(self) -> dict:
        return {
            "version": SIM_SCHEMA_VERSION,
            "kind": "sim_result",
            "l1_config": self.l1_config.to_dict(),
            "l2_config": self.l2_config.to_dict(),
            "cutoff": self.cutoff,
            "warmup": self.warmup,
            "seed": self.seed,
            "l1_accesses": self.l1_accesses,
            "l2_accesses": self.l2_accesses,
            "l1_misses": self.l1_misses,
            "l2_misses": self.l2_misses,
            "l1_miss_rate": self.l1_miss_rate,
            "l2_miss_rate": self.l2_miss_rate,
            "measured_l2_rdh": self.measured_l2_rdh.to_json(),
            "measured_l1_rdh": self.measured_l1_rdh.to_json(),
            "measured_l1_sdh": self.measured_l1_sdh.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "SimResult":
        if d.get("version") != SIM_SCHEMA_VERSION:
            raise ValueError(f"simulation result schema version {d.get('version')!r} is not "
                             f"supported (this build reads version {SIM_SCHEMA_VERSION})")
        return cls(
            l1_config=CacheConfig.from_dict(d["l1_config"]),
            l2_config=CacheConfig.from_dict(d["l2_config"]),
            cutoff=int(d["cutoff"]), warmup=int(d["warmup"]), seed=int(d["seed"]),
            l1_accesses=int(d["l1_accesses"]), l1_misses=int(d["l1_misses"]),
            l2_accesses=int(d["l2_accesses"]), l2_misses=int(d["l2_misses"]),
            measured_l2_rdh=Histogram.from_json(d["measured_l2_rdh"]),
            measured_l1_rdh=Histogram.from_json(d["measured_l1_rdh"]),
            measured_l1_sdh=Histogram.from_json(d["measured_l1_sdh"]),
        )


def _check_pair(l1: CacheConfig, l2: CacheConfig):
    if l1.policy is not Policy.LRU:
        raise ConfigError("the L1 cache must use LRU replacement")
    if l1.line_size != l2.line_size:
        raise ConfigError(f"L1 and L2 line sizes differ ({l1.line_size} vs {l2.line_size})")


def simulate(trace, l1_config: CacheConfig, l2_config: CacheConfig, seed: int = 0,
             cutoff: int = DEFAULT_CUTOFF, warmup: int = 0,
             return_hits: bool = False):
    """Run the trace through L1 then L2.

    Statistics and histograms cover references from index ``warmup`` on;
    the skipped prefix still warms the caches and the distance state.
    """
    _check_pair(l1_config, l2_config)
    trace = np.asarray(trace, dtype=np.uint64)
    if warmup < 0 or (warmup and warmup >= trace.size):
        raise ConfigError(f"warm-up of {warmup} references leaves nothing of a "
                          f"{trace.size}-reference trace")
    lines = line_address(trace, l1_config.line_size)
    uniq, ids = np.unique(lines, return_inverse=True)
    ids = ids.astype(np.int64).ravel()
    s1 = (lines & np.uint64(l1_config.sets - 1)).astype(np.int64)
    s2 = (lines & np.uint64(l2_config.sets - 1)).astype(np.int64)
    if l2_config.policy is Policy.RANDOM:
        draws = np.random.default_rng(seed).integers(
            0, l2_config.associativity, size=trace.size, dtype=np.int64)
    else:
        draws = np.zeros(trace.size, dtype=np.int64)
    (hits, rdh1, sdh1, cold1, rdh2, cold2,
     l1_acc, l1_miss, l2_miss) = _simulate_kernel(
        ids, uniq.size, s1, s2, l1_config.sets, l2_config.sets,
        l1_config.associativity, l2_config.associativity,
        l2_config.policy is Policy.LRU, draws, cutoff, warmup)
    res = SimResult(
        l1_config=l1_config, l2_config=l2_config, cutoff=cutoff, warmup=int(warmup),
        seed=int(seed),
        l1_accesses=int(l1_acc), l1_misses=int(l1_miss),
        l2_accesses=int(l1_miss), l2_misses=int(l2_miss),
        measured_l2_rdh=Histogram(rdh2, int(cold2)),
        measured_l1_rdh=Histogram(rdh1, int(cold1)),
        measured_l1_sdh=Histogram(sdh1, int(cold1)),
    )
    return (res, hits) if return_hits else res


def l1_hit_flags(trace, l1_config: CacheConfig) -> np.ndarray:
    """Per-reference L1 hit flags from a direct LRU cache simulation."""
    if l1_config.policy is not Policy.LRU:
        raise ConfigError("the L1 cache must use LRU replacement")
    lines = line_address(np.asarray(trace, dtype=np.uint64), l1_config.line_size)
    if lines.size == 0:
        return np.zeros(0, dtype=np.bool_)
    _, ids = np.unique(lines, return_inverse=True)
    sets = (lines & np.uint64(l1_config.sets - 1)).astype(np.int64)
    return _lru_hits(ids.astype(np.int64).ravel(), sets, l1_config.sets,
                     l1_config.associativity)


def l1_miss_stream(trace, l1_config: CacheConfig) -> np.ndarray:
    """The order-preserving subsequence of ``trace`` that misses the L1."""
    trace = np.asarray(trace, dtype=np.uint64)
    return trace[~l1_hit_flags(trace, l1_config)]
