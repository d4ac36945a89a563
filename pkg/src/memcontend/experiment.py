"""Sweep orchestration and result files.

An experiment crosses every task under test with every interference pattern
over a THR% grid, runs each cell on the simulator or on the host, and writes

* ``results.csv``: one row of raw observables per cell,
* ``results.json``: slowdown and RF curves plus region classes,
* ``slowdown_<interference>.svg`` and ``rf_<interference>.svg`` figures.

Experiments are described by INI files; see ``load_spec`` and the README.
"""

from __future__ import annotations

import configparser
import csv
import enum
import json
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from . import plotting
from .analysis import (
    InterferenceCurve,
    MetricKind,
    RegionClass,
    build_curves,
    classify_region,
)
from .hw import CoreAssignment, CounterSpec
from .sim import Arbitration, CacheConfig, DramConfig, PlatformConfig, preset, simulate
from .workload import DEFAULT_EPOCH_LEN, Role, TrafficPattern, WorkloadConfig

CSV_COLUMNS = [
    "backend", "task_pattern", "task_fp_bytes", "interf_pattern", "interf_fp_bytes",
    "thr_pct", "elapsed", "mem_accesses", "llc_refills", "slowdown", "rf",
]
DEFAULT_THR_GRID = tuple(range(0, 101, 10))


class Backend(str, enum.Enum):
    SIM = "sim"
    HW = "hw"


class SpecError(ValueError):
    """Invalid experiment description; the message starts with the field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class TaskSpec:
    name: str
    workload: WorkloadConfig

    @property
    def key(self) -> tuple[str, int]:
        return self.workload.pattern.value, self.workload.footprint_bytes


@dataclass(frozen=True)
class InterferenceSpec:
    name: str
    pattern: TrafficPattern
    footprint_bytes: int
    chase: bool = False

    @property
    def key(self) -> tuple[str, int]:
        return self.pattern.value, self.footprint_bytes

    def workload(self, throttle_pct: int, line_bytes: int) -> WorkloadConfig:
        return WorkloadConfig(self.pattern, self.footprint_bytes, line_bytes, throttle_pct,
                              chase=self.chase)


@dataclass(frozen=True)
class AcceleratorSpec:
    """Extra non-CPU initiators that join the interference at the cell's THR%."""

    name: str
    pattern: TrafficPattern
    footprint_bytes: int
    count: int = 1
    chase: bool = False


@dataclass(frozen=True)
class HwSetup:
    assignment: CoreAssignment
    counters: CounterSpec = CounterSpec()
    repetitions: int = 5
    warmup: int = 1


@dataclass
class ExperimentSpec:
    backend: Backend
    tasks: list[TaskSpec]
    interference: list[InterferenceSpec]
    thr_grid: tuple[int, ...] = DEFAULT_THR_GRID
    output_dir: Path = Path("results")
    seed: int = 0
    platform: PlatformConfig | None = None
    hw: HwSetup | None = None
    accelerators: list[AcceleratorSpec] = field(default_factory=list)
    baseline: str | None = None
    epoch_len: int = DEFAULT_EPOCH_LEN
    jobs: int = 1

    def __post_init__(self):
        self.backend = Backend(self.backend)
        self.output_dir = Path(self.output_dir)
        grid = tuple(int(t) for t in self.thr_grid)
        if 0 not in grid:
            raise SpecError("experiment.thr_grid", "must contain 0 (the uncontended baseline)")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise SpecError("experiment.thr_grid", f"must be strictly increasing, got {list(grid)}")
        if grid[0] < 0 or grid[-1] > 100:
            raise SpecError("experiment.thr_grid", "values must lie in [0, 100]")
        self.thr_grid = grid
        if not self.tasks:
            raise SpecError("task", "at least one task section is required")
        if not self.interference:
            raise SpecError("interference", "at least one interference section is required")
        _unique([t.key for t in self.tasks], [f"task.{t.name}" for t in self.tasks])
        _unique([i.key for i in self.interference],
                [f"interference.{i.name}" for i in self.interference])
        for t in self.tasks:
            if t.workload.role is not Role.TASK_UNDER_TEST:
                raise SpecError(f"task.{t.name}", "task workloads must have role TASK_UNDER_TEST")
        if self.baseline is not None and self.baseline not in {t.name for t in self.tasks}:
            raise SpecError("experiment.baseline", f"no task named {self.baseline!r}")
        if self.backend is Backend.SIM:
            if self.platform is None:
                raise SpecError("platform", "the sim backend needs a platform section")
            if self.cpu_interferers < 0:
                raise SpecError(
                    "platform.initiator_count",
                    f"{self.platform.initiator_count} initiators cannot hold the task and "
                    f"{sum(a.count for a in self.accelerators)} accelerator streams",
                )
            lb = self.platform.cache.line_bytes
            for t in self.tasks:
                if t.workload.line_bytes != lb:
                    raise SpecError(f"task.{t.name}.line_bytes", f"must equal cache line size {lb}")
        elif self.hw is None:
            raise SpecError("hw", "the hw backend needs an hw section")

    @property
    def cpu_interferers(self) -> int:
        if self.backend is Backend.HW:
            return len(self.hw.assignment.interference_cores)
        return self.platform.initiator_count - 1 - sum(a.count for a in self.accelerators)

    @property
    def baseline_task(self) -> TaskSpec | None:
        """The named baseline, else the largest-footprint READ_MISS task."""
        if self.baseline is not None:
            return next(t for t in self.tasks if t.name == self.baseline)
        return _default_baseline(self.tasks, lambda t: t.key)


def _unique(keys: list, paths: list[str]):
    seen = {}
    for k, p in zip(keys, paths):
        if k in seen:
            raise SpecError(p, f"pattern and footprint {k} already used by {seen[k]}")
        seen[k] = p


def _default_baseline(items, key):
    rm = [x for x in items if key(x)[0] == TrafficPattern.READ_MISS.value]
    return max(rm, key=lambda x: key(x)[1]) if rm else None


# -- config file -------------------------------------------------------------

_SIZE = re.compile(r"^\s*(\d+)\s*([kmg]?)(i?b)?\s*$", re.IGNORECASE)


def parse_size(text: str) -> int:
    """``524288``, ``512K``, ``512KB`` and ``512KiB`` all mean 512 * 1024."""
    m = _SIZE.match(str(text))
    if not m:
        raise ValueError(f"not a size: {text!r}")
    return int(m.group(1)) * {"": 1, "k": 1 << 10, "m": 1 << 20, "g": 1 << 30}[m.group(2).lower()]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in re.split(r"[,\s]+", text.strip()) if x]


class _Section:
    """Typed access to one INI section that reports errors with field paths."""

    def __init__(self, name: str, data: configparser.SectionProxy | dict):
        self.name = name
        self.data = data
        self.used: set[str] = set()

    def path(self, key: str) -> str:
        return f"{self.name}.{key}"

    def get(self, key: str, conv=str, default=None, required: bool = False):
        if key not in self.data:
            if required:
                raise SpecError(self.path(key), "missing")
            return default
        self.used.add(key)
        try:
            return conv(self.data[key])
        except (ValueError, KeyError) as e:
            raise SpecError(self.path(key), f"invalid value {self.data[key]!r} ({e})") from None

    def check_unused(self):
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise SpecError(self.path(extra[0]), "unknown key")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _pattern(text: str) -> TrafficPattern:
    return TrafficPattern(text.strip().upper())


def _platform(sec: _Section) -> PlatformConfig:
    base = sec.get("preset", preset, preset("zu9eg-like"))
    try:
        cache = CacheConfig(
            sec.get("cache.capacity_bytes", parse_size, base.cache.capacity_bytes),
            sec.get("cache.associativity", int, base.cache.associativity),
            sec.get("cache.line_bytes", parse_size, base.cache.line_bytes),
        )
        dram = DramConfig(
            sec.get("dram.read_cost", int, base.dram.read_cost),
            sec.get("dram.write_cost", int, base.dram.write_cost),
            sec.get("dram.turnaround_penalty", int, base.dram.turnaround_penalty),
            sec.get("dram.arbitration", lambda s: Arbitration(s.strip().upper()),
                    base.dram.arbitration),
        )
    except SpecError:
        raise
    except ValueError as e:
        raise SpecError(sec.name, str(e)) from None
    hit_cost = sec.get("hit_cost", int, base.hit_cost)
    count = sec.get("initiator_count", int, base.initiator_count)
    try:
        return PlatformConfig(cache, dram, hit_cost, count)
    except ValueError as e:
        raise SpecError(sec.name, str(e)) from None


def _task(sec: _Section, name: str, line_bytes: int) -> TaskSpec:
    fp = sec.get("footprint_bytes", parse_size, required=True)
    lb = sec.get("line_bytes", parse_size, line_bytes)
    total = sec.get("total_accesses", int)
    sweeps = sec.get("sweeps", int)
    if total is not None and sweeps is not None:
        raise SpecError(sec.path("sweeps"), "give either sweeps or total_accesses, not both")
    if sweeps is not None:
        total = sweeps * (fp // lb)
    return TaskSpec(name, WorkloadConfig(
        sec.get("pattern", _pattern, required=True), fp, lb,
        total_accesses=total, role=Role.TASK_UNDER_TEST, chase=sec.get("chase", _bool, False),
    ))


def spec_from_config(parser: configparser.ConfigParser, base_dir: Path | None = None
                     ) -> ExperimentSpec:
    sections = {name: _Section(name, parser[name]) for name in parser.sections()}
    known = ("experiment", "platform", "hw")
    for name in sections:
        head = name.split(".", 1)[0]
        if name not in known and head not in ("task", "interference", "accelerator"):
            raise SpecError(name, "unknown section")
    exp = sections.get("experiment", _Section("experiment", {}))
    backend = exp.get("backend", lambda s: Backend(s.strip().lower()), Backend.SIM)
    platform = _platform(sections.get("platform", _Section("platform", {})))
    line_bytes = platform.cache.line_bytes

    def build(kind, fn):
        out = []
        for name, sec in sections.items():
            if name.startswith(kind + "."):
                try:
                    out.append(fn(sec, name.split(".", 1)[1]))
                except SpecError:
                    raise
                except ValueError as e:
                    raise SpecError(name, str(e)) from None
        return out

    tasks = build("task", lambda s, n: _task(s, n, line_bytes))
    interference = build("interference", lambda s, n: InterferenceSpec(
        n, s.get("pattern", _pattern, required=True),
        s.get("footprint_bytes", parse_size, required=True), s.get("chase", _bool, False)))
    accelerators = build("accelerator", lambda s, n: AcceleratorSpec(
        n, s.get("pattern", _pattern, required=True),
        s.get("footprint_bytes", parse_size, required=True), s.get("count", int, 1),
        s.get("chase", _bool, False)))

    hw = None
    if "hw" in sections:
        h = sections["hw"]
        hw = HwSetup(
            CoreAssignment(h.get("task_core", int, 0), tuple(h.get("interference_cores", _int_list, []))),
            CounterSpec(h.get("refill_event", str, "auto"), h.get("access_event", str, "auto"),
                        h.get("cycles_event", str, "auto")),
            h.get("repetitions", int, 5),
            h.get("warmup", int, 1),
        )

    out_dir = Path(exp.get("output_dir", str, "results"))
    if base_dir is not None and not out_dir.is_absolute():
        out_dir = base_dir / out_dir
    spec = ExperimentSpec(
        backend=backend,
        tasks=tasks,
        interference=interference,
        thr_grid=tuple(exp.get("thr_grid", _int_list, list(DEFAULT_THR_GRID))),
        output_dir=out_dir,
        seed=exp.get("seed", int, 0),
        platform=platform,
        hw=hw,
        accelerators=accelerators,
        baseline=exp.get("baseline", str),
        epoch_len=exp.get("epoch_len", int, DEFAULT_EPOCH_LEN),
        jobs=exp.get("jobs", int, 1),
    )
    for sec in sections.values():
        sec.check_unused()
    exp.check_unused()
    return spec


def load_spec(path: str | Path) -> ExperimentSpec:
    """Read an experiment file; ``demo:NAME`` loads a bundled demo experiment.

    Relative ``output_dir`` values resolve against the working directory.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    text = str(path)
    if text.startswith("demo:"):
        name = text[5:]
        res = resources.files("memcontend") / "specs" / f"{name}.ini"
        if not res.is_file():
            raise SpecError("demo", f"no bundled spec named {name!r}; choose from {demo_names()}")
        parser.read_string(res.read_text(), source=text)
    else:
        p = Path(path)
        if not p.is_file():
            raise SpecError("spec", f"no such file: {p}")
        parser.read(p)
    return spec_from_config(parser)


def demo_names() -> list[str]:
    folder = resources.files("memcontend") / "specs"
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".ini"))


# -- running -----------------------------------------------------------------

@dataclass(frozen=True)
class CellResult:
    backend: str
    task_pattern: str
    task_fp_bytes: int
    interf_pattern: str
    interf_fp_bytes: int
    thr_pct: int
    elapsed: float
    mem_accesses: int
    llc_refills: int | None
    slowdown: float
    rf: float | None

    @property
    def task_key(self) -> tuple[str, int]:
        return self.task_pattern, self.task_fp_bytes

    @property
    def interf_key(self) -> tuple[str, int]:
        return self.interf_pattern, self.interf_fp_bytes


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    rows: list[CellResult]
    reports: dict
    notes: list[str] = field(default_factory=list)
    files: dict[str, Path] = field(default_factory=dict)


def _sim_cell(args):
    platform, workloads, seed, epoch_len = args
    return simulate(platform, workloads, seed, epoch_len)


def _sim_workloads(spec: ExperimentSpec, task: TaskSpec, interf: InterferenceSpec, thr: int):
    lb = spec.platform.cache.line_bytes
    ws = [task.workload]
    ws += [interf.workload(thr, lb)] * spec.cpu_interferers
    for acc in spec.accelerators:
        ws += [WorkloadConfig(acc.pattern, acc.footprint_bytes, lb, thr, chase=acc.chase)] * acc.count
    return ws


def _run_cells_sim(spec: ExperimentSpec, cells):
    jobs = [(spec.platform, _sim_workloads(spec, t, i, thr), spec.seed, spec.epoch_len)
            for t, i, thr in cells]
    if spec.jobs > 1:
        with ProcessPoolExecutor(spec.jobs) as pool:
            return list(pool.map(_sim_cell, jobs, chunksize=4))
    return [_sim_cell(j) for j in jobs]


def _run_cells_hw(spec: ExperimentSpec, cells, notes: list[str]):
    from .hw import calibrate_max_rate, run_measured

    rates = {}
    out = []
    for task, interf, thr in cells:
        if interf.key not in rates:
            rates[interf.key] = calibrate_max_rate(interf.pattern, interf.footprint_bytes,
                                                  task.workload.line_bytes, interf.chase)
        rep = run_measured(
            spec.hw.assignment, task.workload,
            interf.workload(thr, task.workload.line_bytes) if thr > 0 else None,
            spec.hw.counters, spec.hw.repetitions, spec.hw.warmup, rates[interf.key], spec.seed,
        )
        if not rep.counters_available and rep.counter_note not in notes:
            notes.append(rep.counter_note)
        out.append(rep)
    return out


def run_cells(spec: ExperimentSpec) -> ExperimentResult:
    cells = [(t, i, thr) for t in spec.tasks for i in spec.interference for thr in spec.thr_grid]
    notes: list[str] = []
    if spec.backend is Backend.SIM:
        reports = _run_cells_sim(spec, cells)
    else:
        reports = _run_cells_hw(spec, cells, notes)
    by_cell = {(t.name, i.name, thr): r for (t, i, thr), r in zip(cells, reports)}
    rows = []
    for t in spec.tasks:
        for i in spec.interference:
            sweep = {thr: by_cell[(t.name, i.name, thr)] for thr in spec.thr_grid}
            sd, rf = build_curves(sweep)
            sdd = sd.as_dict()
            rfd = rf.as_dict() if rf is not None else {}
            for thr in spec.thr_grid:
                r = sweep[thr]
                rows.append(CellResult(
                    spec.backend.value, *t.key, *i.key, thr, r.elapsed, r.mem_accesses,
                    r.llc_refills, sdd[thr], rfd.get(thr),
                ))
    return ExperimentResult(spec, rows, by_cell, notes)


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run every cell and write CSV, JSON and SVG files into ``spec.output_dir``."""
    try:
        spec.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise SpecError("experiment.output_dir", f"not writable: {e}") from None
    result = run_cells(spec)
    out = spec.output_dir
    result.files["csv"] = emit_csv(result.rows, out / "results.csv")
    base = spec.baseline_task
    summary = summarize(result.rows, base.key if base else None)
    for group in summary["interference"]:
        stem = gid_for(group["interf_pattern"], group["interf_fp_bytes"])
        curves = curves_from_rows(result.rows)[(group["interf_pattern"], group["interf_fp_bytes"])]
        sd_path = out / f"slowdown_{stem}.svg"
        render_group(sd_path, curves, base.key if base else None, MetricKind.SLOWDOWN,
                     f"Interf={group['interf_pattern']} ({_size(group['interf_fp_bytes'])})")
        group["svg"] = sd_path.name
        result.files[f"svg:{stem}"] = sd_path
        if all(c[1] is not None for c in curves.values()):
            rf_path = out / f"rf_{stem}.svg"
            render_group(rf_path, curves, base.key if base else None, MetricKind.RF,
                         f"RF, Interf={group['interf_pattern']} ({_size(group['interf_fp_bytes'])})")
            group["rf_svg"] = rf_path.name
            result.files[f"rf:{stem}"] = rf_path
    summary["backend"] = spec.backend.value
    summary["seed"] = spec.seed
    summary["thr_grid"] = list(spec.thr_grid)
    if spec.backend is Backend.SIM:
        summary["platform"] = asdict(spec.platform)
        summary["cpu_interferers"] = spec.cpu_interferers
    else:
        summary["hw"] = asdict(spec.hw)
        first = next(iter(result.reports.values()))
        summary["host"] = first.host
        summary["counter_events"] = first.counter_events
    summary["tasks"] = [{"name": t.name, **_workload_dict(t.workload)} for t in spec.tasks]
    summary["accelerators"] = [asdict(a) for a in spec.accelerators]
    summary["notes"] = result.notes
    result.files["json"] = emit_json(summary, out / "results.json")
    return result


def _workload_dict(w: WorkloadConfig) -> dict:
    d = asdict(w)
    d["pattern"] = w.pattern.value
    d["role"] = w.role.value
    return d


def _size(n: int) -> str:
    for unit, div in (("MiB", 1 << 20), ("KiB", 1 << 10)):
        if n % div == 0:
            return f"{n // div}{unit}"
    return f"{n}B"


def gid_for(pattern: str, fp: int) -> str:
    return f"{pattern}_{_size(fp)}"


def task_label(key: tuple[str, int]) -> str:
    return f"{key[0]} fp={_size(key[1])}"


# -- CSV / JSON --------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(rows: Iterable[CellResult], path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return path


def _num(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        return float(text)


def read_csv(path: str | Path) -> list[CellResult]:
    path = Path(path)
    with path.open(newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        rows = []
        for rec in reader:
            rows.append(CellResult(
                rec["backend"], rec["task_pattern"], int(rec["task_fp_bytes"]),
                rec["interf_pattern"], int(rec["interf_fp_bytes"]), int(rec["thr_pct"]),
                _num(rec["elapsed"]), int(rec["mem_accesses"]), _num(rec["llc_refills"]),
                float(rec["slowdown"]), None if rec["rf"] == "" else float(rec["rf"]),
            ))
    return rows


def curves_from_rows(rows: Sequence[CellResult]
                     ) -> dict[tuple, dict[tuple, tuple[InterferenceCurve, InterferenceCurve | None]]]:
    """Group rows into {interference key: {task key: (slowdown, rf)}}, preserving row order."""
    grouped: dict = {}
    for r in rows:
        grouped.setdefault(r.interf_key, {}).setdefault(r.task_key, []).append(r)
    out: dict = {}
    for ik, tasks in grouped.items():
        out[ik] = {}
        for tk, rs in tasks.items():
            sd = InterferenceCurve.from_points([(r.thr_pct, r.slowdown) for r in rs])
            rf = None
            if all(r.rf is not None for r in rs):
                rf = InterferenceCurve.from_points([(r.thr_pct, r.rf) for r in rs], MetricKind.RF)
            out[ik][tk] = (sd, rf)
    return out


def default_baseline_key(rows: Sequence[CellResult]) -> tuple[str, int] | None:
    keys = list(dict.fromkeys(r.task_key for r in rows))
    return _default_baseline(keys, lambda k: k)


def classify_rows(rows: Sequence[CellResult], baseline: tuple[str, int] | None
                  ) -> dict[tuple, dict[tuple, RegionClass | None]]:
    out = {}
    for ik, tasks in curves_from_rows(rows).items():
        base = tasks.get(baseline)
        out[ik] = {tk: (None if base is None or tk == baseline else classify_region(sd, base[0]))
                   for tk, (sd, _) in tasks.items()}
    return out


def summarize(rows: Sequence[CellResult], baseline: tuple[str, int] | None) -> dict:
    curves = curves_from_rows(rows)
    classes = classify_rows(rows, baseline)
    groups = []
    for ik, tasks in curves.items():
        entries = []
        for tk, (sd, rf) in tasks.items():
            cls = classes[ik][tk]
            entries.append({
                "task_pattern": tk[0],
                "task_fp_bytes": tk[1],
                "baseline": tk == baseline,
                "slowdown": [list(p) for p in sd.points],
                "rf": None if rf is None else [list(p) for p in rf.points],
                "region": None if cls is None else cls.value,
            })
        groups.append({"interf_pattern": ik[0], "interf_fp_bytes": ik[1], "curves": entries})
    return {
        "baseline": None if baseline is None else
        {"task_pattern": baseline[0], "task_fp_bytes": baseline[1]},
        "interference": groups,
    }


def emit_json(summary: dict, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(summary, indent=2) + "\n")
    return path


def render_group(path: Path, curves: dict, baseline: tuple[str, int] | None,
                 metric: MetricKind, title: str) -> Path:
    pick = 0 if metric is MetricKind.SLOWDOWN else 1
    labelled = {task_label(k): v[pick] for k, v in curves.items() if v[pick] is not None}
    classes = {}
    base_label = None
    if baseline in curves:
        base_label = task_label(baseline)
        base_sd = curves[baseline][0]
        for k, (sd, _) in curves.items():
            if k != baseline:
                classes[task_label(k)] = classify_region(sd, base_sd)
    if metric is MetricKind.RF:
        # regions are defined on slowdown; RF panels show the same classes without bands
        return plotting.emit_svg(path, labelled, {}, None, title)
    return plotting.emit_svg(path, labelled, classes, base_label, title)


def replot(csv_path: str | Path, out_dir: str | Path | None = None,
           baseline: tuple[str, int] | None = None) -> list[Path]:
    """Re-render the SVG figures from an existing results CSV."""
    rows = read_csv(csv_path)
    out = Path(out_dir) if out_dir is not None else Path(csv_path).parent
    out.mkdir(parents=True, exist_ok=True)
    baseline = baseline or default_baseline_key(rows)
    paths = []
    for ik, curves in curves_from_rows(rows).items():
        stem = gid_for(*ik)
        paths.append(render_group(out / f"slowdown_{stem}.svg", curves, baseline,
                                  MetricKind.SLOWDOWN, f"Interf={ik[0]} ({_size(ik[1])})"))
        if all(c[1] is not None for c in curves.values()):
            paths.append(render_group(out / f"rf_{stem}.svg", curves, baseline, MetricKind.RF,
                                      f"RF, Interf={ik[0]} ({_size(ik[1])})"))
    return paths


def with_overrides(spec: ExperimentSpec, backend: str | None = None, seed: int | None = None,
                   output_dir: str | Path | None = None) -> ExperimentSpec:
    changes = {}
    if backend is not None:
        changes["backend"] = Backend(backend)
    if seed is not None:
        changes["seed"] = seed
    if output_dir is not None:
        changes["output_dir"] = Path(output_dir)
    return replace(spec, **changes) if changes else spec
