"""Memory-access trace files and synthetic trace generation.

A trace is a sequence of raw byte addresses. In memory it is a ``uint64``
numpy array; on disk it is either packed little-endian u64 words with no
header (``binary_u64_le``) or one hexadecimal address per line
(``hex_text``).
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

import numpy as np

from .config import ConfigError, is_pow2

CHUNK = 1 << 20
_U64LE = np.dtype("<u8")


class TraceFormatError(ValueError):
    """A trace file could not be decoded."""


class TraceFormat(str, Enum):
    BINARY = "binary_u64_le"
    HEX = "hex_text"

    @classmethod
    def parse(cls, value: "TraceFormat | str") -> "TraceFormat":
        if isinstance(value, TraceFormat):
            return value
        aliases = {"bin": cls.BINARY, "binary": cls.BINARY, "hex": cls.HEX, "text": cls.HEX}
        v = str(value).lower()
        if v in aliases:
            return aliases[v]
        try:
            return cls(v)
        except ValueError:
            raise TraceFormatError(f"unknown trace format {value!r}") from None


def guess_format(path) -> TraceFormat:
    ext = os.path.splitext(str(path))[1].lower()
    return TraceFormat.HEX if ext in (".txt", ".hex", ".trace") else TraceFormat.BINARY


def iter_trace(path, fmt: TraceFormat | str = TraceFormat.BINARY,
               chunk_size: int = CHUNK) -> Iterator[np.ndarray]:
    """Yield the trace in file order as ``uint64`` chunks of at most ``chunk_size``."""
    fmt = TraceFormat.parse(fmt)
    if fmt is TraceFormat.BINARY:
        with open(path, "rb") as f:
            offset = 0
            while True:
                buf = f.read(8 * chunk_size)
                if not buf:
                    return
                if len(buf) % 8:
                    raise TraceFormatError(
                        f"{path}: truncated binary trace, {len(buf) % 8} trailing "
                        f"byte(s) after offset {offset + len(buf) - len(buf) % 8}")
                offset += len(buf)
                yield np.frombuffer(buf, dtype=_U64LE).astype(np.uint64)
    else:
        with open(path, "r") as f:
            out: list[int] = []
            for lineno, line in enumerate(f, 1):
                s = line.strip()
                if not s or s.startswith("#"):
                    continue
                try:
                    v = int(s, 16)
                except ValueError:
                    raise TraceFormatError(f"{path}:{lineno}: malformed hex address {s!r}") from None
                if not 0 <= v < 1 << 64:
                    raise TraceFormatError(f"{path}:{lineno}: address {s} does not fit in 64 bits")
                out.append(v)
                if len(out) == chunk_size:
                    yield np.array(out, dtype=np.uint64)
                    out = []
            if out:
                yield np.array(out, dtype=np.uint64)


def read_trace(path, fmt: TraceFormat | str = TraceFormat.BINARY) -> np.ndarray:
    chunks = list(iter_trace(path, fmt))
    if not chunks:
        return np.zeros(0, dtype=np.uint64)
    return np.concatenate(chunks)


def write_trace(path, addresses: Iterable[int] | np.ndarray,
                fmt: TraceFormat | str = TraceFormat.BINARY) -> int:
    """Write addresses to ``path``; returns the record count."""
    fmt = TraceFormat.parse(fmt)
    arr = np.asarray(addresses, dtype=np.uint64)
    if fmt is TraceFormat.BINARY:
        with open(path, "wb") as f:
            f.write(arr.astype(_U64LE).tobytes())
    else:
        with open(path, "w") as f:
            for i in range(0, arr.size, CHUNK):
                f.write("".join(f"{int(a):#x}\n" for a in arr[i:i + CHUNK]))
    return int(arr.size)


def line_address(address, line_size: int):
    """Drop the offset bits of a byte address (scalar or array)."""
    if not is_pow2(line_size):
        raise ConfigError(f"line size {line_size} is not a power of two")
    shift = line_size.bit_length() - 1
    if isinstance(address, np.ndarray):
        return address.astype(np.uint64) >> np.uint64(shift)
    return int(address) >> shift


class Pattern(str, Enum):
    SEQUENTIAL = "sequential"
    STRIDED = "strided"
    LOOP = "loop"
    UNIFORM_RANDOM = "uniform_random"
    POINTER_CHASE = "pointer_chase"


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a synthetic trace.

    ``working_set`` is in bytes and bounds the addresses of ``loop``,
    ``uniform_random`` and (optionally) ``strided`` traces; ``nodes`` is the
    pointer-chase node count, one line per node. For ``loop``, ``iterations``
    may stand in for ``length``.
    """

    pattern: Pattern
    length: int | None = None
    seed: int = 0
    line_size: int = 64
    base: int = 0
    stride: int | None = None
    working_set: int | None = None
    iterations: int | None = None
    nodes: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "pattern", Pattern(self.pattern))


def _loop_lines(spec: SyntheticSpec) -> int:
    if not spec.working_set or spec.working_set < spec.line_size:
        raise ConfigError(f"{spec.pattern.value} needs a working set of at least one line")
    return spec.working_set // spec.line_size


def gen_synthetic(spec: SyntheticSpec) -> np.ndarray:
    """Deterministic byte-address trace for ``spec``; a pure function of it."""
    if not is_pow2(spec.line_size):
        raise ConfigError(f"line size {spec.line_size} is not a power of two")
    p = spec.pattern
    n = spec.length
    if n is None and p is Pattern.LOOP and spec.iterations is not None:
        n = spec.iterations * _loop_lines(spec)
    if n is None or n < 0:
        raise ConfigError("trace length must be a non-negative integer")
    rng = np.random.default_rng(spec.seed)
    i = np.arange(n, dtype=np.uint64)
    line = np.uint64(spec.line_size)

    if p is Pattern.SEQUENTIAL:
        offs = i * line
    elif p is Pattern.STRIDED:
        if not spec.stride or spec.stride <= 0:
            raise ConfigError("strided pattern needs a positive stride")
        offs = i * np.uint64(spec.stride)
        if spec.working_set:
            offs %= np.uint64(spec.working_set)
    elif p is Pattern.LOOP:
        offs = (i % np.uint64(_loop_lines(spec))) * line
    elif p is Pattern.UNIFORM_RANDOM:
        if not spec.working_set or spec.working_set <= 0:
            raise ConfigError("uniform_random needs a non-zero working set")
        # word-aligned so the line offset bits are exercised downstream
        offs = rng.integers(0, spec.working_set, size=n, dtype=np.uint64) & ~np.uint64(7)
    elif p is Pattern.POINTER_CHASE:
        nodes = spec.nodes or (spec.working_set or 0) // spec.line_size
        if nodes <= 0:
            raise ConfigError("pointer_chase needs a positive node count")
        order = rng.permutation(nodes).astype(np.uint64)
        offs = order[(i % np.uint64(nodes)).astype(np.intp)] * line
    else:  # pragma: no cover
        raise ConfigError(f"unknown pattern {p}")
    return (np.uint64(spec.base) + offs).astype(np.uint64)


def interleave(traces: list[np.ndarray], seed: int = 0,
               weights: list[float] | None = None) -> np.ndarray:
    """Randomly interleave whole traces, keeping each one's internal order.

    Every reference of every input appears exactly once. ``weights`` only
    changes which source is drawn early; by construction the output length
    is the sum of the input lengths.
    """
    lens = np.array([t.size for t in traces], dtype=np.int64)
    src = np.repeat(np.arange(len(traces)), lens)
    rng = np.random.default_rng(seed)
    if weights is None:
        rng.shuffle(src)
    else:
        w = np.asarray(weights, dtype=np.float64)[src]
        keys = rng.random(src.size) ** (1.0 / w)
        src = src[np.argsort(-keys, kind="stable")]
    out = np.empty(int(lens.sum()), dtype=np.uint64)
    for k, t in enumerate(traces):
        out[src == k] = t
    return out
