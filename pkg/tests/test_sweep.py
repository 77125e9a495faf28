import json
import os

import numpy as np
import pytest

from l2rdh.config import CacheConfig, ConfigError
from l2rdh.histogram import Histogram
from l2rdh.model import predict
from l2rdh.profiler import profile
from l2rdh.sweep import SweepPlan, run_sweep
from l2rdh.trace import SyntheticSpec, gen_synthetic, interleave, write_trace

L1 = CacheConfig(16384, 64, 2)
L2S = {
    "r64": CacheConfig(65536, 64, 8, "random"),
    "l64": CacheConfig(65536, 64, 8, "lru"),
    "r128": CacheConfig(131072, 64, 8, "random"),
    "l256": CacheConfig(262144, 64, 16, "lru"),
}


@pytest.fixture(scope="module")
def trace():
    a = gen_synthetic(SyntheticSpec("loop", 30_000, working_set=40 * 1024))
    b = gen_synthetic(SyntheticSpec("uniform_random", 30_000, seed=3, working_set=1 << 17,
                                    base=1 << 30))
    return interleave([a, b], seed=2)


def test_profiles_once_predicts_each(trace):
    rep = run_sweep(SweepPlan(L1, L2S, with_oracle=False), trace)
    assert rep.phase_count("profiling") == 1
    assert rep.phase_count("prediction") == 4
    assert rep.phase_count("simulation") == 0
    assert all(o.simulation is None for o in rep.outcomes.values())
    assert rep.error_total is None


def test_sweep_equals_separate_runs(trace):
    rep = run_sweep(SweepPlan(L1, L2S, with_oracle=False, warmup_refs=500), trace)
    prof = profile(trace, L1, warmup=500)
    assert rep.profile == prof
    for name, cfg in L2S.items():
        alone = predict(prof, cfg)
        assert rep.outcomes[name].prediction.to_json() == alone.to_json()


def test_order_independent(trace):
    rev = dict(reversed(list(L2S.items())))
    a = run_sweep(SweepPlan(L1, L2S, seed=9), trace)
    b = run_sweep(SweepPlan(L1, rev, seed=9), trace, jobs=3)
    for name in L2S:
        assert a.outcomes[name].to_json() == b.outcomes[name].to_json()
    assert a.error_total == pytest.approx(b.error_total, abs=1e-15)
    assert a.phase_count("simulation") == 4


def test_warmup_on_hand_built_trace():
    # A B A B ... : after 10 references both lines are cached and every later
    # reference is an L1 hit with reuse distance 1
    t = np.tile(np.array([0, 64], dtype=np.uint64), 10)
    one = CacheConfig.from_geometry(1, 2)
    rep = run_sweep(SweepPlan(one, {"x": CacheConfig.from_geometry(1, 4)}, warmup_refs=10), t)
    p = rep.profile
    assert p.total_refs == 10 and p.cold == 0
    assert p.rdh == Histogram.from_dict({1: 10})
    sim = rep.outcomes["x"].simulation
    assert sim.l1_accesses == 10 and sim.l1_misses == 0
    assert rep.outcomes["x"].prediction.predicted_l2_accesses == 0


def test_warmup_longer_than_trace():
    t = np.arange(20, dtype=np.uint64) * 64
    with pytest.raises(ConfigError):
        run_sweep(SweepPlan(L1, L2S, warmup_refs=20), t)


def test_plan_file_and_outputs(tmp_path, trace):
    write_trace(tmp_path / "t.bin", trace)
    plan = {
        "trace": "t.bin", "format": "binary_u64_le",
        "l1": {"capacity": 16384, "associativity": 2},
        "l2": [{"name": "a", "capacity": 65536, "associativity": 8, "policy": "random"},
               {"capacity": 131072, "associativity": 8}],
        "seed": 1,
    }
    (tmp_path / "plan.json").write_text(json.dumps(plan))
    p = SweepPlan.load(tmp_path / "plan.json")
    assert list(p.l2_configs) == ["a", "config2"]
    out = tmp_path / "out"
    rep = run_sweep(p, out_dir=str(out))
    assert rep.phase_count("read") == 1
    assert sorted(os.listdir(out)) == ["a.json", "config2.json", "profile.json",
                                       "summary.csv", "timings.csv"]
    first = (out / "a.json").read_bytes()
    run_sweep(p, out_dir=str(out))
    assert (out / "a.json").read_bytes() == first


def test_plan_rejects_duplicates_and_line_mismatch():
    base = {"l1": {"capacity": 16384, "associativity": 2}}
    with pytest.raises(ConfigError):
        SweepPlan.from_json({**base, "l2": [{"name": "a", "capacity": 65536, "associativity": 8}] * 2})
    plan = SweepPlan.from_json({**base, "l2": [{"capacity": 65536, "associativity": 8,
                                                "line_size": 128}]})
    with pytest.raises(ConfigError):
        plan.validate()
