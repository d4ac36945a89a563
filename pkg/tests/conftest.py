import pytest

from memcontend.sim import CacheConfig, DramConfig, PlatformConfig, preset
from memcontend.workload import Role, TrafficPattern, WorkloadConfig

KiB = 1 << 10
MiB = 1 << 20


def task(pattern, fp, sweeps=1, line=64):
    return WorkloadConfig(TrafficPattern(pattern), fp, line, total_accesses=sweeps * (fp // line),
                          role=Role.TASK_UNDER_TEST)


def interferer(pattern, fp, thr, chase=True, line=64):
    return WorkloadConfig(TrafficPattern(pattern), fp, line, thr, chase=chase)


@pytest.fixture
def zu9eg():
    return preset("zu9eg-like")


@pytest.fixture
def tx2():
    return preset("tx2-like")


@pytest.fixture
def tiny_platform():
    # 16 KiB, 4-way: 64 sets
    return PlatformConfig(CacheConfig(16 * KiB, 4, 64), DramConfig(40, 60, 20), 4, 3)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        verdict, title, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:>2}: {verdict}  {title}" + (f"  [{detail}]" if detail else ""))
