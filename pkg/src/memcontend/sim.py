"""Deterministic model of a shared-memory platform.

N initiators issue line-sized accesses into one shared set-associative LLC
(LRU, write-allocate).  Misses are serialized through a single DRAM
controller whose service time depends on the request direction, with a
penalty whenever the bus turns around between reads and writes.

Each initiator is in-order with one outstanding access.  Every initiator's
private footprint lives in its own tag range but indexes the same sets, so
co-running initiators can evict each other's lines.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .workload import (
    DEFAULT_EPOCH_LEN,
    DEFAULT_LINE_BYTES,
    AccessKind,
    MemAccess,
    Role,
    WorkloadConfig,
    sweep_order,
    throttle_schedule,
)


class Arbitration(str, enum.Enum):
    ROUND_ROBIN = "ROUND_ROBIN"
    FIFO = "FIFO"


@dataclass(frozen=True)
class CacheConfig:
    capacity_bytes: int = 1 << 20
    associativity: int = 16
    line_bytes: int = DEFAULT_LINE_BYTES

    def __post_init__(self):
        if min(self.capacity_bytes, self.associativity, self.line_bytes) <= 0:
            raise ValueError("cache geometry must be positive")
        way_bytes = self.associativity * self.line_bytes
        if self.capacity_bytes % way_bytes:
            raise ValueError(
                f"capacity_bytes ({self.capacity_bytes}) is not a multiple of "
                f"associativity x line_bytes ({way_bytes})"
            )
        sets = self.capacity_bytes // way_bytes
        if sets & (sets - 1):
            raise ValueError(f"number of sets must be a power of two, got {sets}")

    @property
    def num_sets(self) -> int:
        return self.capacity_bytes // (self.associativity * self.line_bytes)

    @property
    def num_lines(self) -> int:
        return self.capacity_bytes // self.line_bytes


@dataclass(frozen=True)
class DramConfig:
    read_cost: int = 40
    write_cost: int = 40
    turnaround_penalty: int = 0
    arbitration: Arbitration = Arbitration.ROUND_ROBIN

    def __post_init__(self):
        object.__setattr__(self, "arbitration", Arbitration(self.arbitration))
        if self.read_cost < 1 or self.write_cost < 1:
            raise ValueError("DRAM read_cost and write_cost must be >= 1")
        if self.turnaround_penalty < 0:
            raise ValueError("turnaround_penalty must be >= 0")

    def cost(self, kind: AccessKind) -> int:
        return self.write_cost if kind is AccessKind.WRITE else self.read_cost


@dataclass(frozen=True)
class PlatformConfig:
    cache: CacheConfig = field(default_factory=CacheConfig)
    dram: DramConfig = field(default_factory=DramConfig)
    hit_cost: int = 4
    initiator_count: int = 4

    def __post_init__(self):
        if self.initiator_count < 1:
            raise ValueError("initiator_count must be >= 1")
        if not 1 <= self.hit_cost < self.dram.read_cost:
            raise ValueError(
                f"hit_cost must satisfy 1 <= hit_cost < dram.read_cost "
                f"({self.dram.read_cost}), got {self.hit_cost}"
            )

    def with_initiators(self, n: int) -> "PlatformConfig":
        return PlatformConfig(self.cache, self.dram, self.hit_cost, n)


class CacheResult(NamedTuple):
    hit: bool
    evicted: MemAccess | None = None


class CacheEntry(NamedTuple):
    tag: int
    initiator_id: int
    lru_rank: int


class CacheState:
    """Shared LRU cache contents.

    Each set is a list of global line numbers ordered from least to most
    recently used.  Initiator ``i`` owns global lines
    ``[i * region_lines, (i + 1) * region_lines)``; ``region_lines`` is a
    multiple of the set count so every initiator starts at set 0.
    """

    def __init__(self, config: CacheConfig, region_lines: int | None = None):
        self.config = config
        self.num_sets = config.num_sets
        if region_lines is None:
            region_lines = self.num_sets << 24
        if region_lines % self.num_sets:
            raise ValueError("region_lines must be a multiple of the number of sets")
        self.region_lines = region_lines
        self.sets: list[list[int]] = [[] for _ in range(self.num_sets)]

    def global_line(self, access: MemAccess) -> int:
        lb = self.config.line_bytes
        if access.address % lb:
            raise ValueError(f"address {access.address:#x} is not line aligned")
        local = access.address // lb
        if not 0 <= local < self.region_lines:
            raise ValueError(f"address {access.address:#x} outside the initiator's range")
        return access.initiator_id * self.region_lines + local

    def access(self, access: MemAccess) -> CacheResult:
        """Look up one access, updating LRU order and installing on a miss."""
        line = self.global_line(access)
        ways = self.sets[line % self.num_sets]
        if line in ways:
            ways.remove(line)
            ways.append(line)
            return CacheResult(True)
        evicted = None
        if len(ways) >= self.config.associativity:
            victim = ways.pop(0)
            owner, local = divmod(victim, self.region_lines)
            # the victim's direction is unknown once installed; report it as a read
            evicted = MemAccess(owner, local * self.config.line_bytes, AccessKind.READ)
        ways.append(line)
        return CacheResult(False, evicted)

    def entries(self, set_index: int) -> list[CacheEntry]:
        """Valid lines of one set; rank 0 is the most recently used."""
        ways = self.sets[set_index]
        out = []
        for rank, line in enumerate(reversed(ways)):
            owner, local = divmod(line, self.region_lines)
            out.append(CacheEntry(local // self.num_sets, owner, rank))
        return out

    def occupancy(self, initiator_id: int) -> int:
        lo = initiator_id * self.region_lines
        hi = lo + self.region_lines
        return sum(lo <= line < hi for ways in self.sets for line in ways)


def cache_access(state: CacheState, access: MemAccess) -> CacheResult:
    return state.access(access)


class DramController:
    """Single DRAM controller serving at most one request at a time.

    Each initiator has at most one pending request.  ``dispatch`` starts the
    next service when the controller is free, choosing among requests that
    have already arrived.
    """

    def __init__(self, config: DramConfig, n_initiators: int):
        self.config = config
        self.n = n_initiators
        self.arrival: list[int | None] = [None] * n_initiators
        self.kind: list[AccessKind | None] = [None] * n_initiators
        self.busy_until = 0
        self.last_kind: AccessKind | None = None
        self.last_served = n_initiators - 1

    def request(self, initiator_id: int, kind: AccessKind, arrival: int):
        if self.arrival[initiator_id] is not None:
            raise RuntimeError(f"initiator {initiator_id} already has a pending request")
        self.arrival[initiator_id] = arrival
        self.kind[initiator_id] = kind

    def has_pending(self) -> bool:
        return any(a is not None for a in self.arrival)

    def _pick(self, now: int) -> int | None:
        ready = [i for i, a in enumerate(self.arrival) if a is not None and a <= now]
        if not ready:
            return None
        if self.config.arbitration is Arbitration.FIFO:
            return min(ready, key=lambda i: (self.arrival[i], i))
        return min(ready, key=lambda i: (i - self.last_served - 1) % self.n)

    def service_time(self, kind: AccessKind) -> int:
        cost = self.config.cost(kind)
        if self.last_kind is not None and self.last_kind is not kind:
            cost += self.config.turnaround_penalty
        return cost

    def dispatch(self, now: int) -> tuple[int, int] | None:
        """Start the next service at ``now``; returns (initiator, completion cycle)."""
        if now < self.busy_until:
            return None
        i = self._pick(now)
        if i is None:
            return None
        kind = self.kind[i]
        done = now + self.service_time(kind)
        self.busy_until = done
        self.last_kind = kind
        self.last_served = i
        self.arrival[i] = None
        self.kind[i] = None
        return i, done


def dram_service(queue_state: DramController, initiator_id: int, kind: AccessKind,
                 arrival: int = 0) -> int:
    """Enqueue one miss and run the controller until it is served."""
    queue_state.request(initiator_id, kind, arrival)
    now = max(arrival, queue_state.busy_until)
    while True:
        served = queue_state.dispatch(now)
        if served is None:
            now = max(now + 1, queue_state.busy_until)
            continue
        j, done = served
        if j == initiator_id:
            return done
        now = done


@dataclass
class InitiatorStats:
    role: Role
    pattern: str
    footprint_bytes: int
    throttle_pct: int
    elapsed_cycles: int = 0
    mem_accesses: int = 0
    hits: int = 0
    llc_refills: int = 0
    reads: int = 0
    writes: int = 0


@dataclass
class RunReport:
    initiators: list[InitiatorStats]
    task_index: int
    seed: int = 0

    @property
    def task(self) -> InitiatorStats:
        return self.initiators[self.task_index]

    @property
    def elapsed(self) -> int:
        return self.task.elapsed_cycles

    @property
    def mem_accesses(self) -> int:
        return self.task.mem_accesses

    @property
    def llc_refills(self) -> int:
        return self.task.llc_refills

    def to_dict(self) -> dict:
        return asdict(self)


def _validate(platform: PlatformConfig, workloads: Sequence[WorkloadConfig]) -> int:
    if not workloads:
        raise ValueError("simulate needs at least one workload")
    tasks = [i for i, w in enumerate(workloads) if w.role is Role.TASK_UNDER_TEST]
    if len(tasks) != 1:
        raise ValueError(f"exactly one TASK_UNDER_TEST workload is required, got {len(tasks)}")
    if len(workloads) != platform.initiator_count:
        raise ValueError(
            f"platform has {platform.initiator_count} initiators but "
            f"{len(workloads)} workloads were given"
        )
    for w in workloads:
        if w.line_bytes != platform.cache.line_bytes:
            raise ValueError(
                f"workload line_bytes {w.line_bytes} differs from cache line "
                f"{platform.cache.line_bytes}"
            )
    return tasks[0]


def _start_position(sweep_len: int, initiator_id: int, seed: int) -> int:
    # co-runners are already mid-sweep when the measured task starts; the odd
    # per-initiator shift keeps MEMCPY streams from running read/write in lockstep
    half = max(sweep_len // 2, 1)
    offset = 2 * int(np.random.default_rng([seed, initiator_id, 1]).integers(half))
    return (offset + initiator_id) % sweep_len


def simulate(platform: PlatformConfig, workloads: Sequence[WorkloadConfig], seed: int = 0,
             epoch_len: int = DEFAULT_EPOCH_LEN, engine: str = "compiled") -> RunReport:
    """Run the task under test to completion against its co-runners.

    Interference initiators wrap around their footprint until the task under
    test finishes.  The throttle schedule is counted in issue opportunities;
    an idle opportunity lasts ``hit_cost`` cycles.  Co-runners start at a
    seeded position inside their sweep whose parity alternates with the
    initiator id; the task under test starts at its first line.  The task's
    ``elapsed_cycles`` is the completion cycle of its last access.

    ``engine="python"`` runs the same model on :class:`CacheState` and
    :class:`DramController`; it is much slower and exists for cross-checking.
    """
    task = _validate(platform, workloads)
    plans = []
    for i, w in enumerate(workloads):
        ln, wr = sweep_order(w, (seed, i))
        a, d = throttle_schedule(w.throttle_pct, epoch_len)
        start = 0 if i == task else _start_position(len(ln), i, seed)
        plans.append((ln, wr, a, d * platform.hit_cost, start))
    if engine == "compiled":
        end, acc, hit, ref, wr = _run_compiled(platform, plans, task, workloads[task].total_accesses)
    elif engine == "python":
        end, acc, hit, ref, wr = _run_python(platform, plans, task, workloads[task].total_accesses)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    stats = []
    for i, w in enumerate(workloads):
        stats.append(InitiatorStats(
            role=w.role, pattern=w.pattern.value, footprint_bytes=w.footprint_bytes,
            throttle_pct=w.throttle_pct, elapsed_cycles=end if plans[i][2] else 0,
            mem_accesses=acc[i], hits=hit[i], llc_refills=ref[i],
            reads=acc[i] - wr[i], writes=wr[i],
        ))
    return RunReport(stats, task, seed)


def _run_compiled(platform, plans, task, task_total):
    from . import _kernel

    region = CacheState(platform.cache).region_lines
    lines = np.concatenate([np.asarray(p[0], np.int64) + i * region for i, p in enumerate(plans)])
    writes = np.concatenate([np.asarray(p[1], np.bool_) for p in plans])
    lengths = np.array([len(p[0]) for p in plans], np.int64)
    offsets = np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(np.int64)
    dram = platform.dram
    end, acc, hit, ref, wr = _kernel.run(
        lines, writes, offsets, lengths,
        np.array([p[2] for p in plans], np.int64), np.array([p[3] for p in plans], np.int64),
        np.array([p[4] for p in plans], np.int64),
        task, task_total, platform.cache.num_sets, platform.cache.associativity,
        platform.hit_cost, dram.read_cost, dram.write_cost, dram.turnaround_penalty,
        dram.arbitration is Arbitration.FIFO,
    )
    return int(end), acc.tolist(), hit.tolist(), ref.tolist(), wr.tolist()


def _run_python(platform, plans, task, task_total):
    n = len(plans)
    cache = CacheState(platform.cache)
    dram = DramController(platform.dram, n)
    lb = platform.cache.line_bytes
    pos = [p[4] for p in plans]
    slot = [0] * n
    acc = [0] * n
    hit = [0] * n
    ref = [0] * n
    wr = [0] * n
    # (cycle, priority, initiator); priority 1 = DRAM dispatch, after issues at that cycle
    heap = [(0, 0, i) for i in range(n) if plans[i][2] > 0]
    heapq.heapify(heap)
    dispatch_at = -1
    end = 0
    while heap:
        t, prio, i = heapq.heappop(heap)
        if prio:
            served = dram.dispatch(t)
            if served is not None:
                j, done = served
                heapq.heappush(heap, (done, 0, j))
                heapq.heappush(heap, (done, 1, -1))
                dispatch_at = done
            continue
        if i == task and acc[i] == task_total:
            end = t
            break
        ln, writes, active, idle = plans[i][:4]
        if slot[i] == active:
            slot[i] = 0
            if idle:
                heapq.heappush(heap, (t + idle, 0, i))
                continue
        slot[i] += 1
        k = pos[i] % len(ln)
        pos[i] += 1
        kind = AccessKind.WRITE if writes[k] else AccessKind.READ
        acc[i] += 1
        wr[i] += writes[k]
        if cache.access(MemAccess(i, ln[k] * lb, kind)).hit:
            hit[i] += 1
            heapq.heappush(heap, (t + platform.hit_cost, 0, i))
            continue
        ref[i] += 1
        dram.request(i, kind, t)
        if dram.busy_until <= t and dispatch_at != t:
            heapq.heappush(heap, (t, 1, -1))
            dispatch_at = t
    return end, acc, hit, ref, wr


def solo(platform: PlatformConfig, task: WorkloadConfig, seed: int = 0) -> RunReport:
    """The task under test alone on the platform."""
    return simulate(platform.with_initiators(1), [task], seed)


# Two demo platforms with a 1 MiB shared LLC.  They differ only in DRAM
# behaviour: on ``tx2-like`` reads and writes cost the same but turning the
# bus around is expensive, so mixed read/write traffic hurts most; on
# ``zu9eg-like`` writes are much slower than reads, so pure write traffic
# hurts most.
PRESETS: dict[str, PlatformConfig] = {
    "tx2-like": PlatformConfig(
        cache=CacheConfig(1 << 20, 2, 64),
        dram=DramConfig(read_cost=40, write_cost=40, turnaround_penalty=80),
        hit_cost=4,
        initiator_count=4,
    ),
    "zu9eg-like": PlatformConfig(
        cache=CacheConfig(1 << 20, 2, 64),
        dram=DramConfig(read_cost=40, write_cost=160, turnaround_penalty=10),
        hit_cost=4,
        initiator_count=4,
    ),
}


def preset(name: str) -> PlatformConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown platform preset {name!r}; choose from {sorted(PRESETS)}") from None
