from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from memcontend.workload import (
    AccessGenerator,
    AccessKind,
    Role,
    TrafficPattern,
    WorkloadConfig,
    aligned_buffer,
    chase_links,
    chase_permutation,
    native_loop,
    next_access,
    sweep_order,
    throttle_schedule,
)


def take(gen, n):
    return [next_access(gen) for _ in range(n)]


def test_read_miss_wraps_around_footprint():
    gen = AccessGenerator(WorkloadConfig(TrafficPattern.READ_MISS, 256, 64))
    acc = take(gen, 6)
    assert [a.address for a in acc] == [0, 64, 128, 192, 0, 64]
    assert {a.kind for a in acc} == {AccessKind.READ}


def test_memset_writes_only():
    gen = AccessGenerator(WorkloadConfig(TrafficPattern.MEMSET, 4096, 64))
    assert {a.kind for a in take(gen, 200)} == {AccessKind.WRITE}


def test_memcpy_alternates_source_and_destination():
    gen = AccessGenerator(WorkloadConfig(TrafficPattern.MEMCPY, 256, 64))
    acc = [(a.kind, a.address) for a in take(gen, 5)]
    assert acc == [
        (AccessKind.READ, 0), (AccessKind.WRITE, 128),
        (AccessKind.READ, 64), (AccessKind.WRITE, 192),
        (AccessKind.READ, 0),
    ]


@given(st.integers(1, 64), st.integers(1, 300))
def test_memcpy_prefix_balance(half_lines, n):
    gen = AccessGenerator(WorkloadConfig(TrafficPattern.MEMCPY, 2 * half_lines * 64, 64))
    kinds = Counter(a.kind for a in take(gen, n))
    assert abs(kinds[AccessKind.READ] - kinds[AccessKind.WRITE]) <= 1


@pytest.mark.parametrize("chase", [False, True])
@pytest.mark.parametrize("pattern", list(TrafficPattern))
def test_sweep_counts_and_coverage(pattern, chase):
    cfg = WorkloadConfig(pattern, 64 * 1024, 64, chase=chase)
    lines, writes = sweep_order(cfg, seed=3)
    n = cfg.lines
    assert sorted(lines) == list(range(n))
    expected_writes = {TrafficPattern.READ_MISS: 0, TrafficPattern.MEMSET: n,
                       TrafficPattern.MEMCPY: n // 2}[pattern]
    assert sum(writes) == expected_writes


@settings(max_examples=50)
@given(st.integers(1, 500), st.integers(0, 2**32 - 1))
def test_chase_permutation_visits_each_line_once(n, seed):
    order = chase_permutation(n, seed)
    assert sorted(order.tolist()) == list(range(n))
    assert order[0] == 0
    # following the links from line 0 closes a single cycle through all lines
    nxt = chase_links(order)
    seen, cur = [], 0
    for _ in range(n):
        seen.append(cur)
        cur = int(nxt[cur])
    assert cur == 0 and sorted(seen) == list(range(n))


def test_generator_is_deterministic():
    cfg = WorkloadConfig(TrafficPattern.READ_MISS, 8192, 64, chase=True)
    a = take(AccessGenerator(cfg, seed=7), 300)
    b = take(AccessGenerator(cfg, seed=7), 300)
    c = take(AccessGenerator(cfg, seed=8), 300)
    assert a == b
    assert a != c


@pytest.mark.parametrize("pct,epoch,expected", [
    (50, 1000, (500, 500)), (0, 1000, (0, 1000)), (100, 1000, (1000, 0)), (33, 100, (33, 67)),
])
def test_throttle_schedule_examples(pct, epoch, expected):
    assert throttle_schedule(pct, epoch) == expected


@given(st.integers(0, 100), st.integers(100, 5000), st.integers(1, 50))
def test_throttle_schedule_is_exact_over_many_epochs(pct, epoch, k):
    active, idle = throttle_schedule(pct, epoch)
    assert active + idle == epoch
    assert abs(k * active - pct / 100 * k * epoch) <= k / 2


@pytest.mark.parametrize("pct", [-1, 101])
def test_throttle_schedule_rejects_bad_percent(pct):
    with pytest.raises(ValueError):
        throttle_schedule(pct, 1024)


def test_throttle_schedule_rejects_short_epoch():
    with pytest.raises(ValueError):
        throttle_schedule(50, 99)


@pytest.mark.parametrize("kwargs", [
    dict(footprint_bytes=0),
    dict(footprint_bytes=100),
    dict(throttle_pct=101),
    dict(throttle_pct=50, role=Role.TASK_UNDER_TEST),
    dict(total_accesses=10),
    dict(pattern=TrafficPattern.MEMCPY, footprint_bytes=192),
])
def test_config_validation(kwargs):
    base = dict(pattern=TrafficPattern.READ_MISS, footprint_bytes=4096)
    with pytest.raises(ValueError):
        WorkloadConfig(**{**base, **kwargs})


def test_default_total_is_one_sweep():
    cfg = WorkloadConfig(TrafficPattern.READ_MISS, 4096)
    assert cfg.total_accesses == 64 and cfg.sweeps == 1.0


# -- native loops ------------------------------------------------------------

def test_aligned_buffer():
    buf = aligned_buffer(10000)
    assert buf.ctypes.data % 4096 == 0 and buf.nbytes == 10000


def test_native_memset_writes_every_line_once_per_sweep():
    cfg = WorkloadConfig(TrafficPattern.MEMSET, 1 << 20, 64)
    buf = aligned_buffer(cfg.footprint_bytes)
    loop = native_loop(cfg, buf)
    loop.run(cfg.lines)
    words = buf.view(np.int64)
    assert (words[::8] == cfg.lines).all()
    assert (words.reshape(-1, 8)[:, 1:] == 0).all()


def test_native_chase_visits_each_line_once_per_sweep():
    cfg = WorkloadConfig(TrafficPattern.READ_MISS, 256 * 64, 64, chase=True)
    loop = native_loop(cfg, aligned_buffer(cfg.footprint_bytes), seed=5)
    visits = Counter()
    word = loop._word
    for _ in range(cfg.lines):
        visits[word // loop.words_per_line] += 1
        word = int(loop._words[word])
    assert sorted(visits) == list(range(cfg.lines))
    assert set(visits.values()) == {1}
    # the compiled chase ends where the brute-force walk ends
    assert loop.run(cfg.lines) == word


def test_native_memcpy_copies_source_to_destination():
    cfg = WorkloadConfig(TrafficPattern.MEMCPY, 64 * 64, 64)
    buf = aligned_buffer(cfg.footprint_bytes)
    loop = native_loop(cfg, buf)
    words = buf.view(np.int64)
    words[: 32 * 8: 8] = np.arange(32)
    loop.run(cfg.lines)
    assert (words[32 * 8::8] == np.arange(32) + 1).all()


def test_native_loop_rejects_bad_buffers():
    cfg = WorkloadConfig(TrafficPattern.READ_MISS, 4096, 64)
    with pytest.raises(ValueError):
        native_loop(cfg, aligned_buffer(2048))
    with pytest.raises(ValueError):
        native_loop(cfg, aligned_buffer(8192)[1:4097])
    with pytest.raises(ValueError):
        native_loop(cfg, np.zeros(512, np.int64))
