"""
From a reuse distance histogram to a miss rate
==============================================

StatCache (Random replacement) and StatStack (LRU) both start from reuse
distances. Loops make the difference between the two policies obvious.
"""
import numpy as np

from l2rdh import CacheConfig, Histogram, profile, simulate
from l2rdh.solvers import lru_miss_rate_from_sdh, statcache_miss_rate, statstack_expected_sdh

# every reference has distance 8 in an 8-way cache
r = statcache_miss_rate(Histogram.from_dict({8: 1000}), 8)
print(f"h(8)=N, 8 ways: R={r.miss_rate:.6f} after {r.solver_iterations} bisection steps")

# a loop over k lines in one 8-way set
ways = 8
print()
print(" k   LRU(model) LRU(sim)  Random(model) Random(sim)")
for k in (4, 8, 9, 12, 16):
    trace = np.tile(np.arange(k, dtype=np.uint64) * 64, 2000)
    rdh = profile(trace, CacheConfig.from_geometry(1, 1), warmup=k).rdh
    lru = lru_miss_rate_from_sdh(statstack_expected_sdh(rdh), ways).miss_rate
    rnd = statcache_miss_rate(rdh, ways).miss_rate
    # one-level runs: a 1-line L1 only catches immediate repeats, which a loop has none of
    sims = [simulate(trace, CacheConfig.from_geometry(1, 1),
                     CacheConfig.from_geometry(1, ways, policy=pol), seed=3, warmup=k)
            for pol in ("lru", "random")]
    lru_sim, rnd_sim = (s.l2_misses / s.l1_accesses for s in sims)
    print(f"{k:2d}   {lru:9.3f} {lru_sim:8.3f}   {rnd:12.3f} {rnd_sim:11.3f}")
