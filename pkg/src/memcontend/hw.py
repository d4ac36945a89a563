"""Run the interference protocol on the host machine.

The task under test is pinned to one core and timed while throttled
interference generators run on other cores.  Hardware counters are read
through ``perf_event_open``; when the host does not expose them the run
continues with wall time only and says so in the report.
"""

from __future__ import annotations

import ctypes
import logging
import multiprocessing as mp
import os
import platform as _platform
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .workload import (
    Role,
    TrafficPattern,
    WorkloadConfig,
    aligned_buffer,
    native_loop,
    throttle_schedule,
)

log = logging.getLogger(__name__)

EPOCH_SECONDS = 1e-3


class AffinityError(RuntimeError):
    pass


@dataclass(frozen=True)
class CoreAssignment:
    task_core: int
    interference_cores: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "interference_cores", tuple(self.interference_cores))
        cores = (self.task_core, *self.interference_cores)
        if len(set(cores)) != len(cores):
            raise ValueError(f"core ids must be distinct, got {cores}")


# Logical counter name -> perf event per architecture.  ARM exposes the
# exact events; elsewhere the nearest generic cache event stands in and the
# report carries its name.
_HW_CACHE_LL_READ_MISS = ("hw_cache", 2 | (0 << 8) | (1 << 16), "LLC-load-misses")
_HW_CACHE_L1D_READ = ("hw_cache", 0 | (0 << 8) | (0 << 16), "L1-dcache-loads")
EVENT_TABLE = {
    "aarch64": {
        "refill": ("raw", 0x17, "L2D_CACHE_REFILL"),
        "access": ("raw", 0x13, "MEM_ACCESS"),
        "cycles": ("raw", 0x11, "CPU_CYCLES"),
    },
    "x86_64": {
        "refill": _HW_CACHE_LL_READ_MISS,
        "access": _HW_CACHE_L1D_READ,
        "cycles": ("hardware", 0, "cpu-cycles"),
    },
}
_PERF_TYPES = {"hardware": 0, "software": 1, "hw_cache": 3, "raw": 4}
_SYSCALL = {"x86_64": 298, "aarch64": 241}


@dataclass(frozen=True)
class CounterSpec:
    """Event names for the three logical counters; "auto" uses EVENT_TABLE."""

    refill_event: str = "auto"
    access_event: str = "auto"
    cycles_event: str = "auto"

    def resolve(self, arch: str | None = None) -> dict[str, tuple[str, int, str]]:
        arch = arch or _platform.machine()
        table = EVENT_TABLE.get(arch, {})
        out = {}
        for logical, name in (("refill", self.refill_event), ("access", self.access_event),
                              ("cycles", self.cycles_event)):
            if name == "auto":
                if logical in table:
                    out[logical] = table[logical]
                continue
            for ev in table.values():
                if ev[2] == name:
                    out[logical] = ev
                    break
            else:
                if name.startswith("raw:"):
                    out[logical] = ("raw", int(name[4:], 0), name)
        return out


class _PerfAttr(ctypes.Structure):
    _fields_ = [
        ("type", ctypes.c_uint32),
        ("size", ctypes.c_uint32),
        ("config", ctypes.c_uint64),
        ("sample_period", ctypes.c_uint64),
        ("sample_type", ctypes.c_uint64),
        ("read_format", ctypes.c_uint64),
        ("flags", ctypes.c_uint64),
        ("_rest", ctypes.c_uint8 * 80),
    ]


_IOC_ENABLE, _IOC_DISABLE, _IOC_RESET = 0x2400, 0x2401, 0x2403
# disabled | exclude_kernel | exclude_hv
_FLAGS = 1 | (1 << 5) | (1 << 6)


class CounterSession:
    """Per-thread counters for the calling thread.

    ``available`` is False when any requested event cannot be opened; the
    reason is kept in ``error``.
    """

    def __init__(self, events: dict[str, tuple[str, int, str]]):
        self.events = events
        self.fds: dict[str, int] = {}
        self.error = None
        arch = _platform.machine()
        if arch not in _SYSCALL:
            self.error = f"perf_event_open not wired for {arch}"
        elif not events:
            self.error = f"no counter events known for {arch}"
        else:
            self._open(_SYSCALL[arch])

    def _open(self, nr: int):
        libc = ctypes.CDLL(None, use_errno=True)
        self._libc = libc
        for logical, (kind, config, name) in self.events.items():
            attr = _PerfAttr(type=_PERF_TYPES[kind], size=ctypes.sizeof(_PerfAttr),
                             config=config, flags=_FLAGS)
            fd = libc.syscall(nr, ctypes.byref(attr), 0, -1, -1, 0)
            if fd < 0:
                err = ctypes.get_errno()
                self.error = f"{name}: {os.strerror(err)}"
                self.close()
                return
            self.fds[logical] = fd

    @property
    def available(self) -> bool:
        return self.error is None and bool(self.fds)

    def start(self):
        for fd in self.fds.values():
            self._libc.ioctl(fd, _IOC_RESET, 0)
            self._libc.ioctl(fd, _IOC_ENABLE, 0)

    def stop(self) -> dict[str, int]:
        out = {}
        for logical, fd in self.fds.items():
            self._libc.ioctl(fd, _IOC_DISABLE, 0)
            out[logical] = int.from_bytes(os.read(fd, 8), "little")
        return out

    def close(self):
        for fd in self.fds.values():
            os.close(fd)
        self.fds = {}


def host_metadata() -> dict:
    llc = 0
    level = -1
    for idx in sorted(Path("/sys/devices/system/cpu/cpu0/cache").glob("index*")):
        try:
            lvl = int((idx / "level").read_text())
            kind = (idx / "type").read_text().strip()
            size = (idx / "size").read_text().strip()
        except OSError:
            continue
        if kind == "Instruction" or lvl < level:
            continue
        mult = {"K": 1024, "M": 1024 ** 2}.get(size[-1], 1)
        llc = int(size.rstrip("KM")) * mult
        level = lvl
    return {
        "arch": _platform.machine(),
        "cpu_count": os.cpu_count(),
        "usable_cores": sorted(os.sched_getaffinity(0)),
        "llc_bytes": llc,
    }


def pin(core: int):
    try:
        os.sched_setaffinity(0, {core})
    except (OSError, ValueError) as e:
        raise AffinityError(f"cannot pin to core {core}: {e}") from e


def calibrate_max_rate(pattern: TrafficPattern, fp: int, line_bytes: int = 64,
                       chase: bool = False, min_seconds: float = 0.1) -> float:
    """Unthrottled accesses per second for a pattern, timed over >= min_seconds."""
    cfg = WorkloadConfig(pattern, fp, line_bytes, chase=chase)
    loop = native_loop(cfg, aligned_buffer(fp))
    loop.run(cfg.lines)
    n = cfg.lines
    while True:
        t0 = time.perf_counter()
        loop.run(n)
        dt = time.perf_counter() - t0
        if dt >= min_seconds:
            return n / dt
        n = int(n * max(2.0, 1.2 * min_seconds / max(dt, 1e-6)))


def run_throttled(loop, throttle_pct: int, max_rate: float, stop=None,
                  duration: float | None = None, epoch_seconds: float = EPOCH_SECONDS) -> int:
    """Duty-cycle ``loop`` against its calibrated rate; returns accesses issued.

    Each epoch issues its active share back to back and then spins until the
    epoch's wall-clock budget is spent.
    """
    epoch_len = max(100, round(max_rate * epoch_seconds))
    active, _ = throttle_schedule(throttle_pct, epoch_len)
    deadline = None if duration is None else time.perf_counter() + duration
    issued = 0
    next_epoch = time.perf_counter()
    while True:
        if stop is not None and stop.is_set():
            break
        if deadline is not None and time.perf_counter() >= deadline:
            break
        next_epoch += epoch_seconds
        if active:
            loop.run(active)
            issued += active
        while time.perf_counter() < next_epoch:
            pass
    return issued


def _interference_worker(core, cfg, throttle_pct, max_rate, seed, ready, stop, errors):
    try:
        pin(core)
        loop = native_loop(cfg, aligned_buffer(cfg.footprint_bytes), seed)
        loop.run(cfg.lines)
    except Exception as e:  # reported to the parent, which aborts the run
        errors.put(f"core {core}: {e}")
        ready.wait()
        return
    ready.wait()
    if throttle_pct > 0:
        run_throttled(loop, throttle_pct, max_rate, stop=stop)
    else:
        stop.wait()


@dataclass
class MeasuredReport:
    """Median observables of the task under test over several repetitions."""

    wall_time: float
    mem_accesses: int
    llc_refills: int | None
    reads: int
    writes: int
    cycles: int | None
    repetitions: int
    samples: list[dict] = field(default_factory=list)
    spread: dict[str, dict[str, float]] = field(default_factory=dict)
    counters_available: bool = False
    counter_note: str = ""
    counter_events: dict[str, str] = field(default_factory=dict)
    host: dict = field(default_factory=dict)

    @property
    def elapsed(self) -> float:
        return self.wall_time

    def to_dict(self) -> dict:
        return asdict(self)


def _task_counts(cfg: WorkloadConfig) -> tuple[int, int]:
    n = cfg.total_accesses
    if cfg.pattern is TrafficPattern.READ_MISS:
        return n, 0
    if cfg.pattern is TrafficPattern.MEMSET:
        return 0, n
    return (n + 1) // 2, n // 2


def run_measured(assignment: CoreAssignment, task: WorkloadConfig,
                 interference: WorkloadConfig | None, counters: CounterSpec | None = None,
                 repetitions: int = 5, warmup: int = 1, max_rate: float | None = None,
                 seed: int = 0, settle_seconds: float = 0.02) -> MeasuredReport:
    """Time the task under test while interference runs on the other cores.

    Interference starts before the first repetition and stops after the
    last, so every measured region sees steady-state traffic.  Counter
    deltas are taken immediately around each repetition.
    """
    if task.role is not Role.TASK_UNDER_TEST:
        raise ValueError("task must have role TASK_UNDER_TEST")
    if repetitions < 5 or warmup < 1:
        raise ValueError("need at least 5 repetitions after at least 1 warmup run")
    usable = os.sched_getaffinity(0)
    wanted = (assignment.task_core, *assignment.interference_cores)
    missing = [c for c in wanted if c not in usable]
    if missing:
        raise AffinityError(f"cores {missing} are not available on this host (usable: {sorted(usable)})")

    host = host_metadata()
    events = (counters or CounterSpec()).resolve()
    saved_affinity = usable
    procs = []
    ctx = mp.get_context("fork")
    stop = ctx.Event()
    active = interference is not None and bool(assignment.interference_cores)
    ready = ctx.Barrier(len(assignment.interference_cores) + 1) if active else None
    errors = ctx.Queue() if active else None
    try:
        pin(assignment.task_core)
        loop = native_loop(task, aligned_buffer(task.footprint_bytes), seed)
        loop.run(task.lines)
        if active:
            if interference.throttle_pct > 0 and max_rate is None:
                max_rate = calibrate_max_rate(interference.pattern, interference.footprint_bytes,
                                              interference.line_bytes, interference.chase)
            for k, core in enumerate(assignment.interference_cores):
                p = ctx.Process(target=_interference_worker, daemon=True, args=(
                    core, interference, interference.throttle_pct, max_rate or 0.0,
                    (seed, k + 1), ready, stop, errors))
                p.start()
                procs.append(p)
            ready.wait()
            if not errors.empty():
                raise AffinityError(errors.get())
            time.sleep(settle_seconds)

        session = CounterSession(events)
        samples = []
        try:
            for rep in range(warmup + repetitions):
                session.start()
                t0 = time.perf_counter()
                loop.run(task.total_accesses)
                dt = time.perf_counter() - t0
                counts = session.stop() if session.available else {}
                if rep >= warmup:
                    samples.append({"wall_time": dt, **counts})
        finally:
            session.close()
    finally:
        stop.set()
        for p in procs:
            p.join(timeout=5)
            if p.is_alive():
                p.terminate()
        os.sched_setaffinity(0, saved_affinity)

    def med(key):
        return statistics.median(s[key] for s in samples)

    spread = {}
    for key in samples[0]:
        vals = [s[key] for s in samples]
        spread[key] = {"min": min(vals), "median": statistics.median(vals), "max": max(vals)}
    reads, writes = _task_counts(task)
    available = session.error is None and "refill" in samples[0] and "access" in samples[0]
    if available:
        refills = int(med("refill"))
        accesses = int(med("access"))
        for s in samples:
            if s["refill"] < 0 or s["access"] < 0:
                raise RuntimeError("negative counter delta")
    else:
        refills = None
        accesses = task.total_accesses
        log.warning("hardware counters unavailable (%s); timing only", session.error)
    return MeasuredReport(
        wall_time=med("wall_time"),
        mem_accesses=accesses,
        llc_refills=refills,
        reads=reads,
        writes=writes,
        cycles=int(med("cycles")) if "cycles" in samples[0] else None,
        repetitions=repetitions,
        samples=samples,
        spread=spread,
        counters_available=available,
        counter_note="" if available else f"timing only: {session.error}",
        counter_events={k: v[2] for k, v in events.items()},
        host=host,
    )


def hw_available(cores_needed: int = 1) -> tuple[bool, str]:
    """Whether the host can run a measured experiment with counters."""
    usable = os.sched_getaffinity(0)
    if len(usable) < cores_needed:
        return False, f"host has {len(usable)} usable core(s), {cores_needed} needed"
    session = CounterSession(CounterSpec().resolve())
    ok = session.available
    session.close()
    if not ok:
        return False, f"hardware counters unavailable: {session.error}"
    return True, ""
