"""Predict the L2 reuse distance histogram from an L1 locality profile.

The pipeline has four stages:

1. Row-normalise the RST table and the Hit-RDH table.
2. Filter: ``MissRDH(i) = RDH(i) * (1 - sum_{j < L1 assoc} Prs[i][j])``.
3. Shift: an epoch of L1 reuse distance ``rd`` with ``n`` L1 hits inside
   reaches the L2 with distance ``rd - n``, weighted by ``P_Nhit[rd][n]``.
4. Thin: with ``p = S_L1 / S_L2``, each of the ``rd1`` intervening L2
   references lands in the same L2 set with probability ``p``, so a bin
   at ``rd1`` spreads over ``rd2 = 0..rd1`` as Binomial(rd1, p).

Cold references always miss the L1 and pass through every stage unchanged.
The overflow bin (``cutoff``) is an aggregate of unknown distances, so the
shift stage keeps it at ``cutoff``; thinning still applies to it.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .config import CacheConfig, ConfigError, Policy
from .histogram import Histogram
from .profiler import LocalityProfile

PREDICTION_SCHEMA_VERSION = 1


class ModelConsistencyError(ValueError):
    pass


@dataclass(frozen=True)
class RowProbabilities:
    """Row-normalised count matrix. Rows with no mass are all-zero and flagged."""

    values: np.ndarray
    empty: np.ndarray


def normalize_rows(table: np.ndarray) -> RowProbabilities:
    table = np.asarray(table)
    sums = table.sum(axis=1)
    empty = sums == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        values = table / np.where(empty, 1, sums)[:, None]
    return RowProbabilities(values, empty)


def compute_miss_rdh(rdh: Histogram, prs: RowProbabilities, l1_assoc: int) -> Histogram:
    if l1_assoc < 1:
        raise ConfigError("associativity must be at least 1")
    bad = prs.empty & (rdh.bins != 0)
    if bad.any():
        raise ModelConsistencyError(
            f"RST rows are empty where the RDH has mass, e.g. distance {int(np.argmax(bad))}")
    hit_frac = prs.values[:, :l1_assoc].sum(axis=1)
    survive = np.clip(1.0 - hit_frac, 0.0, 1.0)
    return Histogram(rdh.bins * survive, float(rdh.cold))


@njit(cache=True, nogil=True)
def _shift_kernel(bins, probs, strict):
    k = bins.size
    cut = k - 1
    out = np.zeros(k)
    for rd in range(cut):
        b = bins[rd]
        if b == 0.0:
            continue
        for n in range(1 if strict else 0, rd + 1):
            out[rd - n] += b * probs[rd, n]
    out[cut] += bins[cut]
    return out


def compute_l2_rdh(miss_rdh: Histogram, p_nhit: RowProbabilities,
                   strict: bool = False) -> Histogram:
    """Move each epoch down by its number of L1 hits.

    ``strict`` starts the sum at ``rd = i + 1`` and therefore drops epochs
    with no hits at all; the default includes them so the stage conserves
    mass.
    """
    bins = np.ascontiguousarray(miss_rdh.bins, dtype=np.float64)
    probs = np.ascontiguousarray(p_nhit.values, dtype=np.float64)
    return Histogram(_shift_kernel(bins, probs, bool(strict)), float(miss_rdh.cold))


def p_same(l1_sets: int, l2_sets: int) -> float:
    if l1_sets <= 0 or l2_sets <= 0:
        raise ConfigError("set counts must be positive")
    if l1_sets > l2_sets:
        raise ConfigError(
            f"L1 has more sets than L2 ({l1_sets} > {l2_sets}); the model does not cover this")
    return l1_sets / l2_sets


@njit(cache=True, nogil=True)
def _pascal_rows(k, p):
    # B[r+1, j] = (1-p) B[r, j] + p B[r, j-1]: every step is a convex
    # combination of non-negative terms, so nothing overflows and tiny
    # terms underflow quietly to zero
    q = 1.0 - p
    b = np.zeros((k, k))
    b[0, 0] = 1.0
    for r in range(1, k):
        b[r, 0] = q * b[r - 1, 0]
        for j in range(1, r + 1):
            b[r, j] = q * b[r - 1, j] + p * b[r - 1, j - 1]
        s = 0.0
        for j in range(r + 1):
            s += b[r, j]
        for j in range(r + 1):
            b[r, j] /= s
    return b


@lru_cache(maxsize=16)
def binomial_matrix(k: int, p: float) -> np.ndarray:
    """``B[rd1, rd2] = C(rd1, rd2) p^rd2 (1-p)^(rd1-rd2)`` for ``0 <= rd2 <= rd1 < k``.

    Built row by row from the Pascal recurrence, which never forms the huge
    coefficients or tiny powers separately; each row is rescaled to sum to 1.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    b = _pascal_rows(int(k), float(p))
    b.flags.writeable = False
    return b


def thin_by_sets(l2_rdh: Histogram, p: float) -> Histogram:
    if not 0.0 < p <= 1.0:
        raise ConfigError(f"p_same must lie in (0, 1], got {p}")
    if p == 1.0:
        return l2_rdh.copy()
    b = binomial_matrix(l2_rdh.bins.size, float(p))
    return Histogram(np.asarray(l2_rdh.bins, dtype=np.float64) @ b, float(l2_rdh.cold))


@dataclass(eq=False)
class PredictionResult:
    l2_config: CacheConfig
    l1_config: CacheConfig
    p_same: float
    miss_rdh: Histogram
    l2_rdh: Histogram
    real_l2_rdh: Histogram
    miss_rate: "MissRateReport | None" = None

    @property
    def cutoff(self) -> int:
        return self.real_l2_rdh.cutoff

    @property
    def predicted_l2_accesses(self) -> float:
        return self.real_l2_rdh.total

    def to_json(self) -> dict:
        return {
            "version": PREDICTION_SCHEMA_VERSION,
            "kind": "prediction",
            "l1_config": self.l1_config.to_dict(),
            "l2_config": self.l2_config.to_dict(),
            "cutoff": self.cutoff,
            "p_same": self.p_same,
            "predicted_l2_accesses": self.predicted_l2_accesses,
            "miss_rate": None if self.miss_rate is None else self.miss_rate.to_json(),
            "miss_rdh": self.miss_rdh.to_json(),
            "l2_rdh": self.l2_rdh.to_json(),
            "real_l2_rdh": self.real_l2_rdh.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "PredictionResult":
        from .solvers import MissRateReport

        if d.get("version") != PREDICTION_SCHEMA_VERSION:
            raise ValueError(f"prediction schema version {d.get('version')!r} is not "
                             f"supported (this build reads version {PREDICTION_SCHEMA_VERSION})")
        mr = d.get("miss_rate")
        return cls(
            l2_config=CacheConfig.from_dict(d["l2_config"]),
            l1_config=CacheConfig.from_dict(d["l1_config"]),
            p_same=float(d["p_same"]),
            miss_rdh=Histogram.from_json(d["miss_rdh"]),
            l2_rdh=Histogram.from_json(d["l2_rdh"]),
            real_l2_rdh=Histogram.from_json(d["real_l2_rdh"]),
            miss_rate=None if mr is None else MissRateReport.from_json(mr),
        )


def _normalized(profile: LocalityProfile):
    # the tables depend only on the profile, so every L2 config shares them
    cache = profile._cache
    if "prs" not in cache:
        cache["prs"] = normalize_rows(profile.rst)
        cache["p_nhit"] = normalize_rows(profile.hit_rdh)
    return cache["prs"], cache["p_nhit"]


def predict(profile: LocalityProfile, l2_config: CacheConfig, strict: bool = False,
            with_miss_rate: bool = True) -> PredictionResult:
    """Predict the L2 RDH (and, by default, the L2 miss rate) for ``l2_config``.

    The miss rate uses StatCache for a Random L2 and the StatStack expected
    stack distances for an LRU L2.
    """
    l1 = profile.l1_config
    if l1.line_size != l2_config.line_size:
        raise ConfigError(f"L1 and L2 line sizes differ ({l1.line_size} vs {l2_config.line_size})")
    ps = p_same(l1.sets, l2_config.sets)
    prs, p_nhit = _normalized(profile)
    miss = compute_miss_rdh(profile.rdh, prs, l1.associativity)
    l2 = compute_l2_rdh(miss, p_nhit, strict=strict)
    real = thin_by_sets(l2, ps)
    res = PredictionResult(l2_config=l2_config, l1_config=l1, p_same=ps,
                           miss_rdh=miss, l2_rdh=l2, real_l2_rdh=real)
    if with_miss_rate and real.total > 0:
        res.miss_rate = l2_miss_rate(real, l2_config)
    return res


def l2_miss_rate(rdh: Histogram, l2_config: CacheConfig):
    from .solvers import lru_miss_rate_from_sdh, statcache_miss_rate, statstack_expected_sdh

    if l2_config.policy is Policy.RANDOM:
        return statcache_miss_rate(rdh, l2_config.associativity)
    return lru_miss_rate_from_sdh(statstack_expected_sdh(rdh), l2_config.associativity,
                                  method="statstack")
