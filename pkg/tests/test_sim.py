import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import KiB, MiB, interferer, task
from lru_reference import count_refills
from memcontend.sim import (
    Arbitration,
    CacheConfig,
    CacheState,
    DramConfig,
    DramController,
    PlatformConfig,
    cache_access,
    dram_service,
    preset,
    simulate,
    solo,
)
from memcontend.workload import AccessKind, MemAccess, TrafficPattern, WorkloadConfig

R, W = AccessKind.READ, AccessKind.WRITE


# -- cache -------------------------------------------------------------------

def test_two_way_set_lru_eviction():
    # three lines mapping to one set of a 2-way cache: A, B, C evicts A
    cfg = CacheConfig(2 * 64, 2, 64)  # one set
    st_ = CacheState(cfg)
    a, b, c = (MemAccess(0, k * 64, R) for k in range(3))
    assert not cache_access(st_, a).hit
    assert not cache_access(st_, b).hit
    res = cache_access(st_, c)
    assert not res.hit and res.evicted.address == a.address
    assert cache_access(st_, b).hit
    assert not cache_access(st_, a).hit


def test_hit_refreshes_recency():
    st_ = CacheState(CacheConfig(2 * 64, 2, 64))
    a, b, c = (MemAccess(0, k * 64, R) for k in range(3))
    for x in (a, b, a):
        cache_access(st_, x)
    res = cache_access(st_, c)
    assert res.evicted.address == b.address
    assert [e.tag for e in st_.entries(0)] == [2, 0]
    assert [e.lru_rank for e in st_.entries(0)] == [0, 1]


def test_initiators_share_sets_but_not_lines():
    st_ = CacheState(CacheConfig(4 * 64, 2, 64))  # 2 sets
    assert not cache_access(st_, MemAccess(0, 0, R)).hit
    assert not cache_access(st_, MemAccess(1, 0, R)).hit
    assert cache_access(st_, MemAccess(0, 0, R)).hit
    res = cache_access(st_, MemAccess(2, 0, R))
    assert res.evicted.initiator_id == 1
    assert st_.occupancy(0) == 1 and st_.occupancy(2) == 1


def test_write_miss_allocates():
    st_ = CacheState(CacheConfig(4 * 64, 2, 64))
    assert not cache_access(st_, MemAccess(0, 64, W)).hit
    assert cache_access(st_, MemAccess(0, 64, R)).hit


def test_unaligned_address_rejected():
    with pytest.raises(ValueError):
        cache_access(CacheState(CacheConfig(4 * 64, 2, 64)), MemAccess(0, 3, R))


@pytest.mark.parametrize("kwargs", [
    dict(capacity_bytes=1000), dict(capacity_bytes=3 * 64 * 2, associativity=2), dict(associativity=0),
])
def test_cache_config_validation(kwargs):
    with pytest.raises(ValueError):
        CacheConfig(**kwargs)


def test_lru_matches_reference_on_random_traces():
    rng = random.Random(1234)
    for trial in range(1200):
        num_sets = rng.choice([1, 2, 4, 8])
        ways = rng.randint(1, 4)
        cfg = CacheConfig(num_sets * ways * 64, ways, 64)
        initiators = rng.randint(1, 3)
        span = rng.randint(1, 4 * num_sets * ways)
        trace = [(rng.randrange(initiators), rng.randrange(span) * 64)
                 for _ in range(rng.randint(1, 1000))]
        st_ = CacheState(cfg)
        misses = {}
        for i, addr in trace:
            if not st_.access(MemAccess(i, addr, rng.choice([R, W]))).hit:
                misses[i] = misses.get(i, 0) + 1
        assert misses == count_refills(trace, num_sets, ways), f"trial {trial}"


def test_simulator_refills_match_reference_on_small_runs():
    # full event-driven runs, replayed through the reference cache in issue order
    rng = random.Random(99)
    for _ in range(40):
        num_sets = rng.choice([1, 2, 4, 8])
        ways = rng.randint(1, 4)
        cache = CacheConfig(num_sets * ways * 64, ways, 64)
        fp = rng.randint(1, 3 * num_sets * ways) * 64
        cfg = WorkloadConfig(TrafficPattern.READ_MISS, fp, 64, total_accesses=rng.randint(fp // 64, 400),
                             role="TASK_UNDER_TEST")
        rep = simulate(PlatformConfig(cache, DramConfig(40, 40), 4, 1), [cfg])
        trace = [(0, (k % (fp // 64)) * 64) for k in range(cfg.total_accesses)]
        assert rep.llc_refills == count_refills(trace, num_sets, ways).get(0, 0)


def test_fp_below_capacity_single_initiator_only_cold_misses():
    platform = PlatformConfig(CacheConfig(1 * MiB, 16, 64), DramConfig(), 4, 1)
    rep = simulate(platform, [task("READ_MISS", 512 * KiB, sweeps=10)])
    assert rep.llc_refills == 8192
    assert rep.mem_accesses == 81920


@pytest.mark.parametrize("pattern", list(TrafficPattern))
def test_fp_above_capacity_always_misses(zu9eg, pattern):
    rep = solo(zu9eg, task(pattern.value, 2 * MiB, sweeps=3))
    assert rep.llc_refills == rep.mem_accesses


# -- DRAM ----------------------------------------------------------------------

def test_dram_single_read():
    assert dram_service(DramController(DramConfig(read_cost=40), 1), 0, R, 0) == 40


def test_dram_turnaround_penalty():
    ctl = DramController(DramConfig(read_cost=40, write_cost=40, turnaround_penalty=20), 1)
    first = dram_service(ctl, 0, R, 0)
    assert dram_service(ctl, 0, W, first) - first == 60


def test_dram_no_penalty_for_same_direction():
    ctl = DramController(DramConfig(40, 50, 20), 1)
    t = dram_service(ctl, 0, W, 0)
    assert dram_service(ctl, 0, W, t) - t == 50


@pytest.mark.parametrize("arb", list(Arbitration))
def test_dram_four_pending_reads(arb):
    ctl = DramController(DramConfig(40, 40, 0, arb), 4)
    for i in range(4):
        ctl.request(i, R, 0)
    done = []
    now = 0
    while ctl.has_pending():
        i, t = ctl.dispatch(now)
        done.append((i, t))
        now = t
    assert done == [(0, 40), (1, 80), (2, 120), (3, 160)]


def test_round_robin_resumes_after_last_served():
    ctl = DramController(DramConfig(40, 40, 0, Arbitration.ROUND_ROBIN), 3)
    ctl.request(1, R, 0)
    assert ctl.dispatch(0) == (1, 40)
    ctl.request(0, R, 10)
    ctl.request(2, R, 20)
    assert ctl.dispatch(40)[0] == 2


def test_fifo_serves_oldest():
    ctl = DramController(DramConfig(40, 40, 0, Arbitration.FIFO), 3)
    ctl.request(1, R, 0)
    assert ctl.dispatch(0) == (1, 40)
    ctl.request(2, R, 10)
    ctl.request(0, R, 20)
    assert ctl.dispatch(40)[0] == 2


def test_double_request_rejected():
    ctl = DramController(DramConfig(), 2)
    ctl.request(0, R, 0)
    with pytest.raises(RuntimeError):
        ctl.request(0, R, 1)


# -- whole runs --------------------------------------------------------------

def _workloads(rng, n, line=64):
    ws = []
    t = rng.randrange(n)
    for i in range(n):
        pattern = rng.choice(list(TrafficPattern))
        fp = rng.choice([2, 4, 8, 16, 40]) * line
        if i == t:
            ws.append(WorkloadConfig(pattern, fp, line, total_accesses=fp // line * rng.randint(1, 4),
                                     role="TASK_UNDER_TEST", chase=rng.random() < 0.5))
        else:
            ws.append(WorkloadConfig(pattern, fp, line, rng.choice([0, 5, 30, 50, 100]),
                                     chase=rng.random() < 0.5))
    return ws


def test_compiled_engine_matches_python_engine():
    rng = random.Random(7)
    for _ in range(60):
        n = rng.randint(1, 4)
        ways = rng.randint(1, 4)
        sets = rng.choice([1, 2, 4, 8])
        platform = PlatformConfig(
            CacheConfig(sets * ways * 64, ways, 64),
            DramConfig(rng.randint(10, 60), rng.randint(10, 200), rng.randint(0, 50),
                       rng.choice(list(Arbitration))),
            rng.randint(1, 9), n)
        ws = _workloads(rng, n)
        seed = rng.randrange(1000)
        epoch = rng.choice([100, 128, 1024])
        a = simulate(platform, ws, seed, epoch, engine="compiled")
        b = simulate(platform, ws, seed, epoch, engine="python")
        assert a == b


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_conservation_and_determinism(rng):
    n = rng.randint(1, 4)
    platform = PlatformConfig(CacheConfig(8 * 2 * 64, 2, 64), DramConfig(40, 80, 10), 4, n)
    ws = _workloads(rng, n)
    a = simulate(platform, ws, seed=3)
    assert a == simulate(platform, ws, seed=3)
    for s in a.initiators:
        assert s.hits + s.llc_refills == s.mem_accesses
        assert s.reads + s.writes == s.mem_accesses
    assert a.mem_accesses == ws[a.task_index].total_accesses


def test_isolation_baseline_equals_solo(zu9eg):
    t = task("MEMCPY", 512 * KiB, sweeps=2)
    idle = [interferer(p, 512 * KiB, 0) for p in ("READ_MISS", "MEMSET", "MEMCPY")]
    co = simulate(zu9eg, [t, *idle], seed=5)
    alone = solo(zu9eg, t, seed=5)
    assert co.elapsed == alone.elapsed
    assert co.llc_refills == alone.llc_refills
    assert all(s.mem_accesses == 0 for s in co.initiators[1:])


def test_task_position_in_list_is_irrelevant_for_solo_counts(zu9eg):
    t = task("READ_MISS", 256 * KiB, sweeps=2)
    a = simulate(zu9eg, [t] + [interferer("MEMSET", 64 * KiB, 0)] * 3)
    b = simulate(zu9eg, [interferer("MEMSET", 64 * KiB, 0)] * 3 + [t])
    assert a.elapsed == b.elapsed and a.task_index == 0 and b.task_index == 3


def test_large_fp_refills_flat_across_thr(zu9eg):
    t = task("READ_MISS", 2 * MiB, sweeps=1)
    for thr in range(0, 101, 10):
        rep = simulate(zu9eg, [t] + [interferer("READ_MISS", 512 * KiB, thr)] * 3)
        assert rep.llc_refills == rep.mem_accesses


def test_small_fp_refills_exceed_cold_misses_at_full_interference(zu9eg):
    t = task("READ_MISS", 512 * KiB, sweeps=8)
    rep = simulate(zu9eg, [t] + [interferer("READ_MISS", 512 * KiB, 100)] * 3)
    assert rep.llc_refills > 8192


@pytest.mark.parametrize("others", [0, 50, 100])
@pytest.mark.parametrize("ipattern", list(TrafficPattern))
def test_elapsed_non_decreasing_in_single_interferer_throttle(zu9eg, ipattern, others):
    t = task("READ_MISS", 512 * KiB, sweeps=4)
    prev = None
    for thr in range(0, 101, 10):
        ws = [t, interferer(ipattern.value, 512 * KiB, thr)] + \
             [interferer(ipattern.value, 512 * KiB, others)] * 2
        e = simulate(zu9eg, ws).elapsed
        if prev is not None:
            assert e >= prev, f"elapsed fell from {prev} to {e} when THR% rose to {thr}"
        prev = e


@pytest.mark.parametrize("make", [
    lambda: [],
    lambda: [task("READ_MISS", 4096), task("MEMSET", 4096)] + [interferer("READ_MISS", 4096, 0)] * 2,
    lambda: [interferer("READ_MISS", 4096, 10)] * 4,
    lambda: [task("READ_MISS", 4096)],
    lambda: [task("READ_MISS", 4096, line=128)] + [interferer("READ_MISS", 4096, 0)] * 3,
])
def test_simulate_rejects_invalid_workloads(zu9eg, make):
    with pytest.raises(ValueError):
        simulate(zu9eg, make())


def test_unknown_engine_and_preset(zu9eg):
    with pytest.raises(ValueError):
        simulate(zu9eg.with_initiators(1), [task("READ_MISS", 4096)], engine="gpu")
    with pytest.raises(ValueError):
        preset("nope")


def test_platform_validation():
    with pytest.raises(ValueError):
        PlatformConfig(hit_cost=40)
    with pytest.raises(ValueError):
        PlatformConfig(initiator_count=0)
    with pytest.raises(ValueError):
        DramConfig(read_cost=0)


def test_report_dict_roundtrip(zu9eg):
    rep = solo(zu9eg, task("MEMSET", 64 * KiB))
    d = rep.to_dict()
    assert d["initiators"][0]["llc_refills"] == rep.llc_refills
