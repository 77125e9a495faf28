"""
Profiling an L1 once and predicting what the L2 sees
=====================================================

Starts from a seven-reference trace small enough to check by hand, then
repeats the same steps on a million-reference random trace and compares the
prediction with the two-level simulator.
"""
import numpy as np

from l2rdh import CacheConfig, compare, predict, profile, simulate
from l2rdh.trace import SyntheticSpec, gen_synthetic

# A B C B D C A, one line each, through a single-set 2-way LRU L1
trace = np.array([0, 1, 2, 1, 3, 2, 0], dtype=np.uint64) * 64
l1 = CacheConfig.from_geometry(1, 2)
prof = profile(trace, l1)

print("reuse distances seen:", {int(d): int(c) for d, c in enumerate(prof.rdh.bins) if c})
print("cold references:", prof.cold)
# the closing A: 5 references in between, 3 of them distinct, 1 of them an L1 hit
print("RST[5][3] =", prof.rst[5, 3], " Hit-RDH[5][1] =", prof.hit_rdh[5, 1])

pred = predict(prof, CacheConfig.from_geometry(1, 8))
print("predicted L2 RDH:", {int(d): float(c) for d, c in enumerate(pred.real_l2_rdh.bins) if c})

# now something bigger: 1e6 uniformly random references over 96KB
trace = gen_synthetic(SyntheticSpec("uniform_random", 1_000_000, seed=1, working_set=96 * 1024))
l1 = CacheConfig(16 * 1024, 64, 2)
l2 = CacheConfig(64 * 1024, 64, 8, "random")

prof = profile(trace, l1)
pred = predict(prof, l2)
sim = simulate(trace, l1, l2, seed=7)
rep = compare(pred, sim)

print()
print(f"L1 {l1}, L2 {l2}")
print(f"  predicted L2 accesses  {pred.predicted_l2_accesses:12.0f}")
print(f"  simulated L2 accesses  {sim.l2_accesses:12d}")
print(f"  histogram error        {rep.he:12.4f}")
print(f"  model miss rate        {rep.model_miss_rate:12.4f}")
print(f"  simulated miss rate    {rep.simulated_miss_rate:12.4f}")
