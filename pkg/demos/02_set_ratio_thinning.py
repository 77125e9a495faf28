"""
When the L2 has more sets than the L1
=====================================

Two references that share an L1 set only share an L2 set with probability
S_L1 / S_L2, so each predicted L2 distance spreads out binomially. This
script shows the spreading on one bin and then checks the whole thing
against simulation for a few set ratios.
"""
import numpy as np

from l2rdh import CacheConfig, Histogram, compare, predict, profile, simulate
from l2rdh.model import thin_by_sets
from l2rdh.trace import SyntheticSpec, gen_synthetic, interleave

one_bin = Histogram.from_dict({4: 1.0}, cutoff=8)
for p in (1.0, 0.5, 0.25):
    spread = thin_by_sets(one_bin, p).bins[:5]
    print(f"p_same={p:<5} distance 4 spreads to", np.round(spread, 4))

# a loop over 40KB interleaved with random traffic over 128KB
n = 1_000_000
loop = gen_synthetic(SyntheticSpec("loop", n // 2, working_set=40 * 1024))
noise = gen_synthetic(SyntheticSpec("uniform_random", n // 2, seed=5, working_set=128 * 1024,
                                    base=1 << 30))
trace = interleave([loop, noise], seed=5)

l1 = CacheConfig(16 * 1024, 64, 2)
prof = profile(trace, l1)

print()
print("L2 config                 ratio     HE   model  simulated")
for size, ways in [(64, 8), (128, 8), (256, 8), (512, 16)]:
    l2 = CacheConfig(size * 1024, 64, ways, "random")
    rep = compare(predict(prof, l2), simulate(trace, l1, l2, seed=1))
    print(f"{str(l2):<24s} 1:{l2.sets // l1.sets:<5d}{rep.he:6.3f}  {rep.model_miss_rate:.4f}"
          f"  {rep.simulated_miss_rate:.4f}")
