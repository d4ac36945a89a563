"""Synthetic traffic patterns and THR% throttling.

Three patterns are provided:

* ``READ_MISS``: loads only, swept over the footprint at full speed.
* ``MEMSET``: stores only.
* ``MEMCPY``: the footprint is split into a source half and a destination
  half; reads from the source alternate strictly with writes to the
  destination.

A pattern sweeps its footprint one cache line at a time.  In the default
sequential mode lines are visited in ascending order; in pointer-chase mode
they are visited in a fixed pseudo-random cyclic order so that hardware
prefetchers cannot follow the stream.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

DEFAULT_LINE_BYTES = 64
DEFAULT_EPOCH_LEN = 1024


class TrafficPattern(str, enum.Enum):
    READ_MISS = "READ_MISS"
    MEMSET = "MEMSET"
    MEMCPY = "MEMCPY"


class Role(str, enum.Enum):
    TASK_UNDER_TEST = "TASK_UNDER_TEST"
    INTERFERENCE = "INTERFERENCE"


class AccessKind(str, enum.Enum):
    READ = "READ"
    WRITE = "WRITE"


class MemAccess(NamedTuple):
    initiator_id: int
    address: int
    kind: AccessKind


@dataclass(frozen=True)
class WorkloadConfig:
    """One initiator's traffic.

    ``throttle_pct`` is THR%, the share of issue opportunities in which the
    initiator actually issues an access.  ``total_accesses`` defaults to a
    single sweep of the footprint.
    """

    pattern: TrafficPattern
    footprint_bytes: int
    line_bytes: int = DEFAULT_LINE_BYTES
    throttle_pct: int = 100
    total_accesses: int | None = None
    role: Role = Role.INTERFERENCE
    chase: bool = False

    def __post_init__(self):
        object.__setattr__(self, "pattern", TrafficPattern(self.pattern))
        object.__setattr__(self, "role", Role(self.role))
        if self.line_bytes <= 0:
            raise ValueError(f"line_bytes must be positive, got {self.line_bytes}")
        if self.footprint_bytes <= 0 or self.footprint_bytes % self.line_bytes:
            raise ValueError(
                f"footprint_bytes must be a positive multiple of line_bytes "
                f"({self.line_bytes}), got {self.footprint_bytes}"
            )
        if self.pattern is TrafficPattern.MEMCPY and self.lines % 2:
            raise ValueError("MEMCPY footprint must hold an even number of lines")
        if not 0 <= self.throttle_pct <= 100:
            raise ValueError(f"throttle_pct must lie in [0, 100], got {self.throttle_pct}")
        if self.role is Role.TASK_UNDER_TEST and self.throttle_pct != 100:
            raise ValueError("the task under test always runs unthrottled (throttle_pct=100)")
        if self.total_accesses is None:
            object.__setattr__(self, "total_accesses", self.lines)
        elif self.total_accesses < self.lines:
            raise ValueError(
                f"total_accesses ({self.total_accesses}) must cover at least one "
                f"sweep of {self.lines} lines"
            )

    @property
    def lines(self) -> int:
        return self.footprint_bytes // self.line_bytes

    @property
    def sweeps(self) -> float:
        return self.total_accesses / self.lines

    def with_throttle(self, throttle_pct: int) -> "WorkloadConfig":
        return WorkloadConfig(
            self.pattern, self.footprint_bytes, self.line_bytes, throttle_pct,
            self.total_accesses, self.role, self.chase,
        )


def chase_permutation(n: int, seed) -> np.ndarray:
    """Fixed pseudo-random visiting order of ``n`` lines, starting at line 0."""
    rng = np.random.default_rng(seed)
    order = np.empty(n, dtype=np.int64)
    order[0] = 0
    order[1:] = rng.permutation(np.arange(1, n, dtype=np.int64))
    return order


def chase_links(order: np.ndarray) -> np.ndarray:
    """Successor table for a pointer chase that follows ``order`` as one cycle."""
    nxt = np.empty_like(order)
    nxt[order] = np.roll(order, -1)
    return nxt


def sweep_order(config: WorkloadConfig, seed=0) -> tuple[list[int], list[bool]]:
    """Line indices and write flags for one complete sweep of ``config``.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts; it only
    matters in pointer-chase mode.
    """
    n = config.lines
    if config.pattern is TrafficPattern.MEMCPY:
        half = n // 2
        src = chase_permutation(half, seed).tolist() if config.chase else list(range(half))
        lines = []
        for s in src:
            lines.append(s)
            lines.append(s + half)
        return lines, [False, True] * half
    lines = chase_permutation(n, seed).tolist() if config.chase else list(range(n))
    return lines, [config.pattern is TrafficPattern.MEMSET] * n


@dataclass
class AccessGenerator:
    """Cyclic access stream for one initiator.

    The stream is total: it wraps around the footprint forever.
    """

    config: WorkloadConfig
    initiator_id: int = 0
    seed: object = 0
    position: int = 0
    _lines: list[int] = field(init=False, repr=False)
    _writes: list[bool] = field(init=False, repr=False)

    def __post_init__(self):
        self._lines, self._writes = sweep_order(self.config, self.seed)

    def next_access(self) -> MemAccess:
        i = self.position % len(self._lines)
        self.position += 1
        kind = AccessKind.WRITE if self._writes[i] else AccessKind.READ
        return MemAccess(self.initiator_id, self._lines[i] * self.config.line_bytes, kind)

    def __iter__(self) -> Iterator[MemAccess]:
        while True:
            yield self.next_access()


def next_access(state: AccessGenerator) -> MemAccess:
    return state.next_access()


def throttle_schedule(throttle_pct: int, epoch_len: int = DEFAULT_EPOCH_LEN) -> tuple[int, int]:
    """Split an epoch of issue slots into (active, idle) for a given THR%.

    Active slots come first in every epoch and are issued back to back.
    """
    if not 0 <= throttle_pct <= 100:
        raise ValueError(f"throttle_pct must lie in [0, 100], got {throttle_pct}")
    if epoch_len < 100:
        raise ValueError(f"epoch_len must be at least 100, got {epoch_len}")
    active = (throttle_pct * epoch_len + 50) // 100
    return active, epoch_len - active


def aligned_buffer(nbytes: int, align: int = 4096) -> np.ndarray:
    """Zeroed uint8 buffer whose first byte sits on an ``align`` boundary."""
    raw = np.zeros(nbytes + align, dtype=np.uint8)
    skip = (-raw.ctypes.data) % align
    return raw[skip:skip + nbytes]


@dataclass
class NativeLoop:
    """A pattern bound to a real buffer, ready for the hardware runner.

    ``run(n)`` performs ``n`` line accesses, continuing where the previous
    call stopped.  Reads either accumulate into a returned checksum or, in
    pointer-chase mode, follow links stored in the buffer itself, so no load
    can be optimised away.
    """

    config: WorkloadConfig
    buffer: np.ndarray
    seed: object = 0
    _words: np.ndarray = field(init=False, repr=False)
    _order: np.ndarray = field(init=False, repr=False)
    _pos: int = field(init=False, default=0, repr=False)
    _word: int = field(init=False, default=0, repr=False)

    def __post_init__(self):
        cfg = self.config
        buf = self.buffer
        if not isinstance(buf, np.ndarray) or buf.dtype != np.uint8 or buf.ndim != 1:
            raise ValueError("buffer must be a one-dimensional uint8 array")
        if not buf.flags.c_contiguous:
            raise ValueError("buffer must be contiguous")
        if buf.nbytes < cfg.footprint_bytes:
            raise ValueError(f"buffer holds {buf.nbytes} bytes, footprint needs {cfg.footprint_bytes}")
        if buf.ctypes.data % cfg.line_bytes:
            raise ValueError(f"buffer is not aligned to {cfg.line_bytes}-byte lines")
        if cfg.line_bytes % 8:
            raise ValueError("line_bytes must be a multiple of 8 for native loops")
        self._words = buf[:cfg.footprint_bytes].view(np.int64)
        n = cfg.lines // 2 if cfg.pattern is TrafficPattern.MEMCPY else cfg.lines
        self._order = chase_permutation(n, self.seed) if cfg.chase else np.arange(n, dtype=np.int64)
        # first touch outside any measured region
        self._words[:: self.words_per_line] = 0
        if self.pointer_chase:
            nxt = chase_links(self._order)
            self._words[self._order * self.words_per_line] = nxt[self._order] * self.words_per_line
            self._word = int(self._order[0]) * self.words_per_line

    @property
    def words_per_line(self) -> int:
        return self.config.line_bytes // 8

    @property
    def pointer_chase(self) -> bool:
        return self.config.chase and self.config.pattern is TrafficPattern.READ_MISS

    def run(self, n: int) -> int:
        from . import _native

        if n <= 0:
            return 0
        wpl = self.words_per_line
        pattern = self.config.pattern
        if self.pointer_chase:
            self._word = int(_native.chase_lines(self._words, self._word, n))
            return self._word
        if pattern is TrafficPattern.READ_MISS:
            acc, self._pos = _native.read_lines(self._words, self._order, wpl, self._pos, n)
            return int(acc)
        if pattern is TrafficPattern.MEMSET:
            self._pos = int(_native.write_lines(self._words, self._order, wpl, self._pos, n, n))
            return 0
        acc, self._pos = _native.copy_lines(
            self._words, self._order, wpl, self.config.lines // 2, self._pos, n)
        return int(acc)


def native_loop(config: WorkloadConfig, buffer: np.ndarray, seed=0) -> NativeLoop:
    return NativeLoop(config, buffer, seed)
