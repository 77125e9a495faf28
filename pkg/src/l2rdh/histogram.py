"""Distance histograms with a separate cold (first-touch) counter."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_CUTOFF = 1024


@dataclass(eq=False)
class Histogram:
    """Counts per distance ``0..cutoff`` plus a cold-reference counter.

    ``bins[cutoff]`` holds every finite distance >= cutoff. Cold references
    never land in a bin. Bins are integer counts out of the profiler and
    the simulator, and real-valued expected counts once the model has
    touched them.
    """

    bins: np.ndarray
    cold: float = 0

    def __post_init__(self):
        self.bins = np.asarray(self.bins)
        if self.bins.ndim != 1 or self.bins.size < 1:
            raise ValueError("histogram bins must be a non-empty 1-d array")

    @classmethod
    def zeros(cls, cutoff: int = DEFAULT_CUTOFF, dtype=np.int64) -> "Histogram":
        return cls(np.zeros(cutoff + 1, dtype=dtype), dtype(0).item())

    @classmethod
    def from_dict(cls, counts: dict, cutoff: int = DEFAULT_CUTOFF, cold=0) -> "Histogram":
        """Build from ``{distance: count}``; distances above cutoff are clamped."""
        floaty = any(isinstance(v, float) for v in counts.values()) or isinstance(cold, float)
        h = cls.zeros(cutoff, np.float64 if floaty else np.int64)
        for d, c in counts.items():
            h.bins[min(int(d), cutoff)] += c
        h.cold = cold
        return h

    @property
    def cutoff(self) -> int:
        return self.bins.size - 1

    @property
    def finite(self):
        return self.bins.sum().item()

    @property
    def total(self):
        return self.finite + self.cold

    def copy(self) -> "Histogram":
        return Histogram(self.bins.copy(), self.cold)

    def astype(self, dtype) -> "Histogram":
        return Histogram(self.bins.astype(dtype), np.dtype(dtype).type(self.cold).item())

    def with_cold_bin(self) -> np.ndarray:
        """Bins with the cold count appended as one extra trailing bin."""
        return np.append(self.bins.astype(np.float64), float(self.cold))

    def __eq__(self, other):
        if not isinstance(other, Histogram):
            return NotImplemented
        return (self.bins.shape == other.bins.shape
                and bool(np.array_equal(self.bins, other.bins))
                and self.cold == other.cold)

    def __repr__(self):
        nz = np.flatnonzero(self.bins)
        head = ", ".join(f"{i}: {self.bins[i]:g}" for i in nz[:6])
        more = ", ..." if nz.size > 6 else ""
        return f"Histogram(cutoff={self.cutoff}, cold={self.cold:g}, {{{head}{more}}})"

    def to_json(self) -> dict:
        if np.issubdtype(self.bins.dtype, np.integer):
            bins = [int(x) for x in self.bins]
            cold = int(self.cold)
        else:
            bins = [float(x) for x in self.bins]
            cold = float(self.cold)
        return {"cold": cold, "bins": bins}

    @classmethod
    def from_json(cls, d: dict) -> "Histogram":
        bins = d["bins"]
        if all(isinstance(x, int) for x in bins) and isinstance(d["cold"], int):
            return cls(np.asarray(bins, dtype=np.int64), int(d["cold"]))
        return cls(np.asarray(bins, dtype=np.float64), float(d["cold"]))
