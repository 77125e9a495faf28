"""Analytical L2 reuse distance histograms from one-pass L1 locality profiles."""
from .config import CacheConfig, ConfigError, Policy
from .histogram import DEFAULT_CUTOFF, Histogram
from .metrics import ComparisonReport, compare, histogram_error, miss_rate_errors
from .model import (PredictionResult, compute_l2_rdh, compute_miss_rdh, normalize_rows,
                    p_same, predict, thin_by_sets)
from .profiler import LocalityProfile, load_profile, profile, save_profile
from .simulator import SimResult, l1_miss_stream, simulate
from .solvers import (MissRateReport, lru_miss_rate_from_sdh, statcache_miss_rate,
                      statstack_expected_sdh)
from .sweep import SweepPlan, run_sweep
from .trace import (Pattern, SyntheticSpec, TraceFormat, gen_synthetic, interleave,
                    line_address, read_trace, write_trace)

__version__ = "0.1.0"
