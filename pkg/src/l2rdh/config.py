"""Cache geometry shared by the profiler, the model and the simulator."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class ConfigError(ValueError):
    """Invalid cache geometry or an unsupported combination of levels."""


class Policy(str, Enum):
    LRU = "lru"
    RANDOM = "random"

    @classmethod
    def parse(cls, value: "Policy | str") -> "Policy":
        if isinstance(value, Policy):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigError(f"unknown replacement policy {value!r}") from None


def is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CacheConfig:
    """One cache level.

    ``sets`` is derived: ``capacity / (line_size * associativity)``. The
    constructor rejects geometries where that division is not exact or where
    the set count or line size is not a power of two.
    """

    capacity: int
    line_size: int = 64
    associativity: int = 1
    policy: Policy = Policy.LRU

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy.parse(self.policy))
        for name in ("capacity", "line_size", "associativity"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not is_pow2(self.line_size):
            raise ConfigError(f"line size {self.line_size} is not a power of two")
        way_bytes = self.line_size * self.associativity
        if self.capacity % way_bytes:
            raise ConfigError(
                f"capacity {self.capacity} is not a multiple of "
                f"line_size*associativity = {way_bytes}"
            )
        if not is_pow2(self.capacity // way_bytes):
            raise ConfigError(f"set count {self.capacity // way_bytes} is not a power of two")

    @property
    def sets(self) -> int:
        return self.capacity // (self.line_size * self.associativity)

    @classmethod
    def from_geometry(cls, sets: int, associativity: int, line_size: int = 64,
                      policy: Policy | str = Policy.LRU) -> "CacheConfig":
        return cls(sets * associativity * line_size, line_size, associativity, policy)

    def to_dict(self) -> dict:
        return {
            "capacity": self.capacity,
            "line_size": self.line_size,
            "associativity": self.associativity,
            "sets": self.sets,
            "policy": self.policy.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CacheConfig":
        cfg = cls(int(d["capacity"]), int(d["line_size"]), int(d["associativity"]),
                  d.get("policy", "lru"))
        if "sets" in d and int(d["sets"]) != cfg.sets:
            raise ConfigError(f"stored set count {d['sets']} disagrees with geometry ({cfg.sets})")
        return cfg

    def __str__(self):
        kb = self.capacity / 1024
        return f"{kb:g}KB/{self.associativity}-way/{self.line_size}B/{self.policy.value}"
