"""
One profile, many L2 candidates
===============================

The profile depends only on the trace and the L1, so a sweep pays for it
once and then each L2 candidate costs a few matrix operations. The phase
log makes that visible.
"""
from l2rdh import CacheConfig
from l2rdh.sweep import SweepPlan, run_sweep
from l2rdh.trace import SyntheticSpec, gen_synthetic, interleave

n = 4_000_000
trace = interleave([
    gen_synthetic(SyntheticSpec("loop", n // 2, working_set=40 * 1024)),
    gen_synthetic(SyntheticSpec("pointer_chase", n // 2, nodes=3000, seed=2, base=1 << 32)),
], seed=3)

l1 = CacheConfig(16 * 1024, 64, 2)
candidates = {
    "64K-8w-rand": CacheConfig(64 * 1024, 64, 8, "random"),
    "64K-8w-lru": CacheConfig(64 * 1024, 64, 8, "lru"),
    "128K-8w-rand": CacheConfig(128 * 1024, 64, 8, "random"),
    "512K-16w-rand": CacheConfig(512 * 1024, 64, 16, "random"),
}

report = run_sweep(SweepPlan(l1, candidates, seed=1, with_oracle=True), trace)

for phase in ("profiling", "prediction", "simulation"):
    print(f"{phase:<11s} x{report.phase_count(phase)}  {report.phase_time(phase):7.3f}s")

print()
for name, out in report.outcomes.items():
    c = out.comparison
    print(f"{name:<14s} model {c.model_miss_rate:.4f}  simulated {c.simulated_miss_rate:.4f}"
          f"  HE {c.he:.3f}")
print(f"mean miss-rate error against the solver oracle: {report.error_total:.4f}")
