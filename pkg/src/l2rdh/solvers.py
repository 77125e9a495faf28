"""Miss rates from reuse distance histograms.

``statcache_miss_rate`` handles Random replacement by solving the StatCache
fixed point; ``statstack_expected_sdh`` turns an RDH into expected stack
distances for LRU. Histograms are the set-accumulated kind, so the
associativity plays the role of the cache size in both.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .histogram import Histogram

BISECT_TOL = 1e-9
BISECT_MAX_ITER = 200


class UndefinedRateError(ValueError):
    pass


@dataclass(frozen=True)
class MissRateReport:
    miss_rate: float
    misses: float
    accesses: float
    method: str
    solver_iterations: int | None = None

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "miss_rate": self.miss_rate,
            "misses": self.misses,
            "accesses": self.accesses,
            "solver_iterations": self.solver_iterations,
        }

    @classmethod
    def from_json(cls, d: dict) -> "MissRateReport":
        return cls(float(d["miss_rate"]), float(d["misses"]), float(d["accesses"]),
                   str(d["method"]), d.get("solver_iterations"))


def statcache_miss_rate(rdh: Histogram, associativity: int) -> MissRateReport:
    """Solve ``R*N = cold + sum_x h(x) * (1 - (1 - 1/assoc)^(x*R))`` for R.

    The right-hand side divided by N is concave and increasing in R, and
    ``g(0) >= 0``, so ``{R : g(R) >= R}`` is an interval starting at 0.
    Bisection keeping ``g(lo) >= lo`` therefore converges to its upper end,
    the largest fixed point.
    """
    if associativity < 1:
        raise ValueError("associativity must be at least 1")
    n = float(rdh.total)
    if n <= 0:
        raise UndefinedRateError("cannot solve for a miss rate over zero references")
    h = np.asarray(rdh.bins, dtype=np.float64)
    x = np.arange(h.size, dtype=np.float64)
    keep = 1.0 - 1.0 / associativity
    cold = float(rdh.cold)

    def excess(r: float) -> float:
        return (cold + h @ (1.0 - keep ** (x * r))) / n - r

    lo, hi = 0.0, 1.0
    if excess(hi) >= 0:
        rate, it = 1.0, 0
    else:
        assert excess(lo) >= 0
        it = 0
        while hi - lo > BISECT_TOL and it < BISECT_MAX_ITER:
            mid = 0.5 * (lo + hi)
            if excess(mid) >= 0:
                lo = mid
            else:
                hi = mid
            it += 1
        rate = 0.5 * (lo + hi)
    rate = min(max(rate, cold / n), 1.0)
    return MissRateReport(rate, rate * n, n, "statcache", it)


def statstack_expected_sdh(rdh: Histogram) -> Histogram:
    """Expected stack distance histogram.

    With ``F(j)`` the fraction of references whose reuse distance is at
    least ``j`` (cold references count as infinitely far), a reference of
    reuse distance ``r`` gets ``ES(r) = F(1) + ... + F(r)``, floored into an
    integer bin.
    """
    h = np.asarray(rdh.bins, dtype=np.float64)
    total = float(rdh.total)
    if total <= 0:
        raise UndefinedRateError("empty histogram")
    # F[j] for j = 0..cutoff; F[0] == 1
    tail = np.cumsum(h[::-1])[::-1] + float(rdh.cold)
    f = tail / total
    es = np.concatenate(([0.0], np.cumsum(f[1:])))
    dest = np.minimum(np.floor(es + 1e-9).astype(np.int64), h.size - 1)
    out = np.bincount(dest, weights=h, minlength=h.size)
    return Histogram(out, rdh.cold)


def lru_miss_rate_from_sdh(sdh: Histogram, associativity: int,
                           method: str = "direct_sdh") -> MissRateReport:
    if associativity < 1:
        raise ValueError("associativity must be at least 1")
    total = float(sdh.total)
    if total <= 0:
        raise UndefinedRateError("cannot compute a miss rate over zero references")
    misses = float(sdh.cold) + float(np.sum(sdh.bins[associativity:], dtype=np.float64))
    return MissRateReport(misses / total, misses, total, method)
