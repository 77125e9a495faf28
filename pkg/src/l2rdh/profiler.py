"""One-pass L1 locality profiling: RDH, SDH, RST table and Hit-RDH.

Distances are measured per L1 set: a reference only sees the references
that index the same set. Each set keeps a reference counter (reuse
distance = counter delta - 1) and a bounded LRU stack of line ids (stack
distance = position of the line in that stack). A reference is an L1 hit
exactly when it is not cold and its stack distance is below the L1
associativity, which is the LRU inclusion property; each set also keeps a
running hit counter so that the hits inside a closing reuse epoch are a
single subtraction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numba
import numpy as np

from .config import CacheConfig, ConfigError, Policy
from .histogram import DEFAULT_CUTOFF, Histogram
from .trace import line_address

PROFILE_SCHEMA_VERSION = 1


class ProfileIntegrityError(ValueError):
    """A profile violates one of its cross-structure invariants."""


class SchemaVersionError(ValueError):
    pass


@numba.njit(cache=True, nogil=True)
def _profile_kernel(ids, set_of_id, n_ids, n_sets, assoc, cutoff, warmup, hits_out):
    n = ids.size
    k = cutoff + 1
    rdh = np.zeros(k, np.int64)
    sdh = np.zeros(k, np.int64)
    rst = np.zeros((k, k), np.int64)
    hit_rdh = np.zeros((k, k), np.int64)
    cold = 0

    set_time = np.zeros(n_sets, np.int64)
    set_hits = np.zeros(n_sets, np.int64)
    last_time = np.full(n_ids, -1, np.int64)
    hits_at = np.zeros(n_ids, np.int64)
    stack = np.empty((n_sets, cutoff), np.int32)
    depth = np.zeros(n_sets, np.int64)

    for r in range(n):
        x = ids[r]
        s = set_of_id[x]
        now = set_time[s]
        prev = last_time[x]

        st = stack[s]
        d = depth[s]
        pos = -1
        for p in range(d):
            if st[p] == x:
                pos = p
                break
        # move-to-front; a miss past the cap drops the deepest entry
        if pos < 0:
            top = d if d < cutoff else cutoff - 1
            if d < cutoff:
                depth[s] = d + 1
        else:
            top = pos
        for p in range(top, 0, -1):
            st[p] = st[p - 1]
        st[0] = x

        is_cold = prev < 0
        if is_cold:
            hit = False
        else:
            rd = now - prev - 1
            sd = pos if pos >= 0 else cutoff
            hit = sd < assoc
            nh = set_hits[s] - hits_at[x]
            if r >= warmup:
                if rd > cutoff:
                    rd = cutoff
                if nh > rd:
                    nh = rd
                rdh[rd] += 1
                sdh[sd] += 1
                rst[rd, sd] += 1
                hit_rdh[rd, nh] += 1
        if is_cold and r >= warmup:
            cold += 1
        if hit:
            set_hits[s] += 1
        hits_at[x] = set_hits[s]
        last_time[x] = now
        set_time[s] = now + 1
        hits_out[r] = hit
    return rdh, sdh, rst, hit_rdh, cold


def dense_line_ids(trace: np.ndarray, line_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Map a byte-address trace to dense line ids; returns (ids, unique line addresses)."""
    lines = line_address(np.asarray(trace, dtype=np.uint64), line_size)
    uniq, inv = np.unique(lines, return_inverse=True)
    return inv.astype(np.int64).ravel(), uniq


@dataclass(eq=False)
class LocalityProfile:
    """Everything the L2 model needs from one profiling pass over a trace."""

    l1_config: CacheConfig
    cutoff: int
    rdh: Histogram
    sdh: Histogram
    rst: np.ndarray
    hit_rdh: np.ndarray
    total_refs: int
    warmup: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def cold(self) -> int:
        return int(self.rdh.cold)

    def __eq__(self, other):
        if not isinstance(other, LocalityProfile):
            return NotImplemented
        return (self.l1_config == other.l1_config and self.cutoff == other.cutoff
                and self.total_refs == other.total_refs and self.warmup == other.warmup
                and self.rdh == other.rdh and self.sdh == other.sdh
                and np.array_equal(self.rst, other.rst)
                and np.array_equal(self.hit_rdh, other.hit_rdh))

    def check(self) -> None:
        """Raise :class:`ProfileIntegrityError` on any broken invariant."""
        validate_profile(self)


def profile(trace, l1_config: CacheConfig, cutoff: int = DEFAULT_CUTOFF,
            warmup: int = 0, return_hits: bool = False):
    """Profile ``trace`` (byte addresses) against an LRU L1.

    References before index ``warmup`` update the per-set state but are not
    counted. With ``return_hits`` the per-reference L1 hit flags (for every
    reference, warm-up included) are returned alongside the profile.
    """
    if l1_config.policy is not Policy.LRU:
        raise ConfigError("the L1 cache must use LRU replacement")
    if cutoff < 1:
        raise ConfigError(f"cutoff must be positive, got {cutoff}")
    trace = np.asarray(trace, dtype=np.uint64)
    if warmup < 0 or (warmup and warmup >= trace.size):
        raise ConfigError(f"warm-up of {warmup} references leaves nothing of a "
                          f"{trace.size}-reference trace")
    ids, uniq = dense_line_ids(trace, l1_config.line_size)
    set_of_id = (uniq & np.uint64(l1_config.sets - 1)).astype(np.int64)
    hits = np.zeros(trace.size, dtype=np.bool_)
    rdh, sdh, rst, hit_rdh, cold = _profile_kernel(
        ids, set_of_id, uniq.size, l1_config.sets, l1_config.associativity,
        cutoff, warmup, hits)
    prof = LocalityProfile(
        l1_config=l1_config,
        cutoff=cutoff,
        rdh=Histogram(rdh, int(cold)),
        sdh=Histogram(sdh, int(cold)),
        rst=rst,
        hit_rdh=hit_rdh,
        total_refs=int(trace.size - warmup),
        warmup=int(warmup),
    )
    return (prof, hits) if return_hits else prof


def validate_profile(p: LocalityProfile) -> None:
    k = p.cutoff + 1
    problems = []
    for name in ("rdh", "sdh"):
        h = getattr(p, name)
        if h.bins.shape != (k,):
            problems.append(f"{name} has {h.bins.size} bins, expected {k}")
    for name in ("rst", "hit_rdh"):
        if getattr(p, name).shape != (k, k):
            problems.append(f"{name} has shape {getattr(p, name).shape}, expected {(k, k)}")
    if problems:
        raise ProfileIntegrityError("; ".join(problems))
    for name, arr in (("rdh", p.rdh.bins), ("sdh", p.sdh.bins), ("rst", p.rst),
                      ("hit_rdh", p.hit_rdh)):
        if (arr < 0).any():
            problems.append(f"{name} has negative counts")
    if p.rdh.cold != p.sdh.cold or p.rdh.cold < 0:
        problems.append(f"cold counts differ (rdh {p.rdh.cold}, sdh {p.sdh.cold})")
    if np.triu(p.rst, 1).any():
        problems.append("rst has entries with stack distance > reuse distance")
    if np.triu(p.hit_rdh, 1).any():
        problems.append("hit_rdh has entries with more hits than the reuse distance")
    bad = np.flatnonzero(p.rst.sum(axis=1) != p.rdh.bins)
    if bad.size:
        problems.append(f"rst row sums differ from rdh at reuse distance(s) {bad[:5].tolist()}")
    bad = np.flatnonzero(p.hit_rdh.sum(axis=1) != p.rdh.bins)
    if bad.size:
        problems.append(f"hit_rdh row sums differ from rdh at reuse distance(s) {bad[:5].tolist()}")
    if not np.array_equal(p.rst.sum(axis=0), p.sdh.bins):
        problems.append("rst column sums differ from sdh")
    if p.rdh.total != p.total_refs:
        problems.append(f"total_refs {p.total_refs} != rdh total {p.rdh.total}")
    if problems:
        raise ProfileIntegrityError("; ".join(problems))


def _triplets(m: np.ndarray) -> list[list[int]]:
    i, j = np.nonzero(m)  # row-major, so already lexicographic
    return np.stack([i, j, m[i, j]], axis=1).tolist()


def _from_triplets(rows, k: int, name: str) -> np.ndarray:
    m = np.zeros((k, k), dtype=np.int64)
    if not rows:
        return m
    t = np.asarray(rows, dtype=np.int64)
    if t.ndim != 2 or t.shape[1] != 3:
        raise ProfileIntegrityError(f"{name} must be a list of [row, col, count] triplets")
    if (t[:, :2] < 0).any() or (t[:, :2] >= k).any():
        raise ProfileIntegrityError(f"{name} has an index outside 0..{k - 1}")
    np.add.at(m, (t[:, 0], t[:, 1]), t[:, 2])
    return m


def profile_to_json(p: LocalityProfile) -> dict:
    return {
        "version": PROFILE_SCHEMA_VERSION,
        "kind": "locality_profile",
        "l1_config": p.l1_config.to_dict(),
        "cutoff": p.cutoff,
        "warmup": p.warmup,
        "total_refs": p.total_refs,
        "cold": int(p.rdh.cold),
        "rdh": [int(x) for x in p.rdh.bins],
        "sdh": [int(x) for x in p.sdh.bins],
        "rst": _triplets(p.rst),
        "hit_rdh": _triplets(p.hit_rdh),
    }


def profile_from_json(d: dict) -> LocalityProfile:
    version = d.get("version")
    if version != PROFILE_SCHEMA_VERSION:
        raise SchemaVersionError(
            f"profile schema version {version!r} is not supported "
            f"(this build reads version {PROFILE_SCHEMA_VERSION})")
    try:
        cutoff = int(d["cutoff"])
        k = cutoff + 1
        cold = int(d["cold"])
        p = LocalityProfile(
            l1_config=CacheConfig.from_dict(d["l1_config"]),
            cutoff=cutoff,
            rdh=Histogram(np.asarray(d["rdh"], dtype=np.int64), cold),
            sdh=Histogram(np.asarray(d["sdh"], dtype=np.int64), cold),
            rst=_from_triplets(d["rst"], k, "rst"),
            hit_rdh=_from_triplets(d["hit_rdh"], k, "hit_rdh"),
            total_refs=int(d["total_refs"]),
            warmup=int(d.get("warmup", 0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ProfileIntegrityError):
            raise
        raise ProfileIntegrityError(f"malformed profile document: {e}") from e
    validate_profile(p)
    return p


def save_profile(p: LocalityProfile, path) -> None:
    with open(path, "w") as f:
        json.dump(profile_to_json(p), f, separators=(",", ":"))
        f.write("\n")


def load_profile(path) -> LocalityProfile:
    with open(path) as f:
        return profile_from_json(json.load(f))
