"""Slowdown and refill metrics, and region classification of curves."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping


class MetricKind(str, enum.Enum):
    SLOWDOWN = "SLOWDOWN"
    RF = "RF"


class RegionClass(str, enum.Enum):
    ABOVE = "ABOVE"
    CROSSING = "CROSSING"
    BELOW = "BELOW"


class UndefinedMetricError(ValueError):
    """Raised instead of returning inf/nan when a ratio has a zero denominator."""


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class InterferenceCurve:
    points: tuple[tuple[int, float], ...]
    metric_kind: MetricKind = MetricKind.SLOWDOWN

    def __post_init__(self):
        pts = tuple((int(t), float(v)) for t, v in self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "metric_kind", MetricKind(self.metric_kind))
        thr = [t for t, _ in pts]
        if any(b <= a for a, b in zip(thr, thr[1:])):
            raise ValueError(f"THR% grid must be strictly increasing, got {thr}")
        if any(v < 0 for _, v in pts):
            raise ValueError("curve values must be non-negative")
        if self.metric_kind is MetricKind.SLOWDOWN and thr and thr[0] == 0 and pts[0][1] != 1.0:
            raise ValueError(f"a slowdown curve must be 1.0 at THR%=0, got {pts[0][1]}")

    @classmethod
    def from_points(cls, points: Iterable[tuple[int, float]],
                    metric_kind: MetricKind = MetricKind.SLOWDOWN) -> "InterferenceCurve":
        """Build a curve from points in any order."""
        return cls(tuple(sorted(points)), metric_kind)

    @property
    def thr(self) -> list[int]:
        return [t for t, _ in self.points]

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.points]

    def as_dict(self) -> dict[int, float]:
        return dict(self.points)


def slowdown(t_thr: float, t_0: float) -> float:
    if t_0 <= 0:
        raise UndefinedMetricError(f"slowdown needs a positive baseline time, got {t_0}")
    return t_thr / t_0


def rf_metric(refill_thr: int, refill_0: int, mem_access: int) -> float:
    """Refill increase over the uncontended run times the induced miss rate.

    The first factor grows when co-runners evict the task's lines; the second
    keeps a large relative increase from counting when misses are rare.
    """
    if refill_0 <= 0:
        raise UndefinedMetricError("RF is undefined without baseline refills (refill_0 = 0)")
    if mem_access <= 0:
        raise UndefinedMetricError("RF is undefined without memory accesses (mem_access = 0)")
    if refill_thr > mem_access:
        raise ValueError(f"refills ({refill_thr}) cannot exceed accesses ({mem_access})")
    return (refill_thr / refill_0) * (refill_thr / mem_access)


def classify_region(test: InterferenceCurve, baseline: InterferenceCurve) -> RegionClass:
    """Place a slowdown curve relative to the baseline curve.

    ABOVE means strictly worse than the baseline at every THR% > 0, BELOW
    means never worse (ties count as not worse), CROSSING is everything else.
    THR% = 0 is ignored since every slowdown curve is 1.0 there.
    """
    for c in (test, baseline):
        if c.metric_kind is not MetricKind.SLOWDOWN:
            raise ValueError("classify_region compares slowdown curves")
    if test.thr != baseline.thr:
        raise GridMismatchError(f"THR% grids differ: {test.thr} vs {baseline.thr}")
    above = [tv > bv for (t, tv), (_, bv) in zip(test.points, baseline.points) if t > 0]
    if above and all(above):
        return RegionClass.ABOVE
    if not any(above):
        return RegionClass.BELOW
    return RegionClass.CROSSING


def build_curves(reports: Mapping[int, object]) -> tuple[InterferenceCurve, InterferenceCurve | None]:
    """Slowdown and RF curves from reports keyed by THR%.

    A report needs ``elapsed``, ``llc_refills`` and ``mem_accesses``
    attributes.  The RF curve is ``None`` when the reports carry no refill
    counts (timing-only hardware runs).
    """
    if 0 not in reports:
        raise ValueError("build_curves needs the THR%=0 baseline report")
    base = reports[0]
    grid = sorted(reports)
    sd = InterferenceCurve(
        tuple((t, slowdown(reports[t].elapsed, base.elapsed)) for t in grid), MetricKind.SLOWDOWN
    )
    if any(reports[t].llc_refills is None for t in grid):
        return sd, None
    rf = InterferenceCurve(
        tuple((t, rf_metric(reports[t].llc_refills, base.llc_refills, reports[t].mem_accesses))
              for t in grid),
        MetricKind.RF,
    )
    return sd, rf
