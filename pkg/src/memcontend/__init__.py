"""Memory contention microbenchmarks with a simulated and a measured backend."""

from .analysis import (
    GridMismatchError,
    InterferenceCurve,
    MetricKind,
    RegionClass,
    UndefinedMetricError,
    build_curves,
    classify_region,
    rf_metric,
    slowdown,
)
from .sim import (
    Arbitration,
    CacheConfig,
    CacheState,
    DramConfig,
    DramController,
    PlatformConfig,
    RunReport,
    preset,
    simulate,
)
from .workload import AccessKind, MemAccess, Role, TrafficPattern, WorkloadConfig

__version__ = "0.1.0"

__all__ = [
    "AccessKind", "Arbitration", "CacheConfig", "CacheState", "DramConfig", "DramController",
    "GridMismatchError", "InterferenceCurve", "MemAccess", "MetricKind", "PlatformConfig",
    "RegionClass", "Role", "RunReport", "TrafficPattern", "UndefinedMetricError",
    "WorkloadConfig", "build_curves", "classify_region", "preset", "rf_metric", "simulate",
    "slowdown",
]
