"""Deterministic plant simulator: scheduled telemetry plus injected faults.

Baselines are per-(operation, material) means with bounded uniform noise
drawn from counter-based streams, so every scenario is a pure function of
its spec and the same spec always yields byte-identical CSV. Bounded noise
(max deviation sqrt(3) sigma, under the 2 sigma peak test) is what keeps a
nominal scenario completely quiet under default thresholds; unbounded noise
would trip the peak-count criterion on long windows by chance alone.

Injection signatures are calibrated to fire their intended criteria cleanly:
steps are offset 15 s from the 30 s window grid so they split a window into
contrasting halves, while seizure/drop intervals stay grid-aligned so their
boundaries do not leak step artifacts into neighbouring windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .criteria import CriterionId, parse_criterion_id
from .model import (
    Access,
    DataError,
    Material,
    Operation,
    ProcessContext,
    SensorSample,
)
from .risk import RiskId, default_matrix
from .rng import sim_stream
from .store import CSV_HEADER
from .workhours import WorkCalendar, default_calendar

_SQRT3 = math.sqrt(3.0)
TEMP_NOISE_HALF_C = 0.25  # bounded, ~0.14 degC std
VIB_NOISE_REL = 0.1


class InjectionKind(str, Enum):
    SPINDLE_SEIZURE = "SpindleSeizure"
    CURRENT_PEAKS = "CurrentPeaks"
    NO_VIB_CURRENT = "NoVibCurrent"
    SENSOR_VIB_GHOST = "SensorVibGhost"
    EXCESS_VIB = "ExcessVib"
    RPM_RISE = "RpmRise"
    OUT_OF_HOURS = "OutOfHours"
    ZERO_DROP = "ZeroDrop"
    STEP_CHANGE = "StepChange"
    CNC_TAMPER = "CncTamper"
    PLC_DOS = "PlcDos"


def parse_injection_kind(token: str) -> InjectionKind:
    try:
        return InjectionKind(token)
    except ValueError:
        raise DataError(f"unknown injection kind {token!r}") from None


# Kinds that create their own telemetry outside the schedule.
_OFF_SCHEDULE = (InjectionKind.OUT_OF_HOURS, InjectionKind.PLC_DOS)

_KIND_DEFAULTS: dict[InjectionKind, dict[str, float]] = {
    InjectionKind.SPINDLE_SEIZURE: {
        "boost_a": 8.0,
        "temp_slope_c_min": 6.0,
        "stop_s": 60.0,
    },
    InjectionKind.CURRENT_PEAKS: {"n_peaks": 15.0, "spike_a": 8.0},
    InjectionKind.NO_VIB_CURRENT: {"vib_level_g": 0.005},
    InjectionKind.SENSOR_VIB_GHOST: {"vib_level_g": 0.4},
    InjectionKind.EXCESS_VIB: {"vib_level_g": 2.5},
    InjectionKind.RPM_RISE: {
        "boost_a": 4.0,
        "ramp_s": 60.0,
        "temp_slope_c_min": 3.0,
    },
    InjectionKind.OUT_OF_HOURS: {"i_level_a": 6.0, "vib_level_g": 0.3},
    InjectionKind.ZERO_DROP: {"floor_a": 0.01, "vib_level_g": 0.003},
    InjectionKind.STEP_CHANGE: {"delta_a": 5.0},
    InjectionKind.CNC_TAMPER: {
        "delta_a": 5.0,
        "step_s": 180.0,
        "drop_s": 90.0,
        "floor_a": 0.01,
    },
    InjectionKind.PLC_DOS: {"i_level_a": 6.0, "vib_level_g": 0.3},
}

EXPECTED_CRITERIA: dict[InjectionKind, tuple[CriterionId, ...]] = {
    InjectionKind.SPINDLE_SEIZURE: (
        CriterionId.TEMP_GRADIENT,
        CriterionId.SPINDLE_RPM_RISE,
        CriterionId.ZERO_DROP,
    ),
    InjectionKind.CURRENT_PEAKS: (CriterionId.CURRENT_PEAK_COUNT,),
    InjectionKind.NO_VIB_CURRENT: (CriterionId.CURRENT_WITHOUT_VIBRATION,),
    InjectionKind.SENSOR_VIB_GHOST: (
        CriterionId.VIBRATION_WITHOUT_CURRENT_C,
        CriterionId.VIBRATION_WITHOUT_CURRENT_V,
    ),
    InjectionKind.EXCESS_VIB: (CriterionId.EXCESS_VIBRATION,),
    InjectionKind.RPM_RISE: (CriterionId.SPINDLE_RPM_RISE,),
    InjectionKind.OUT_OF_HOURS: (CriterionId.OUT_OF_HOURS_USE,),
    InjectionKind.ZERO_DROP: (CriterionId.ZERO_DROP,),
    InjectionKind.STEP_CHANGE: (CriterionId.CURRENT_INTENSITY_CHANGE,),
    InjectionKind.CNC_TAMPER: (
        CriterionId.ZERO_DROP,
        CriterionId.CURRENT_INTENSITY_CHANGE,
    ),
    InjectionKind.PLC_DOS: (CriterionId.OUT_OF_HOURS_USE,),
}


def expected_risks(kind: InjectionKind) -> tuple[RiskId, ...]:
    """Union of default-matrix rows over the kind's expected criteria."""
    m = default_matrix()
    risks: set[RiskId] = set()
    for c in EXPECTED_CRITERIA[kind]:
        risks |= m.risks_for(c)
    return tuple(sorted(risks, key=lambda r: r.ordinal))


@dataclass(frozen=True, slots=True)
class Baseline:
    i_mean_a: float
    i_std_a: float
    temp_base_c: float
    vib_rms_g: float

    def __post_init__(self) -> None:
        if self.i_std_a < 0 or self.vib_rms_g < 0:
            raise DataError("baseline spreads must be non-negative")
        if self.i_mean_a - self.i_std_a * _SQRT3 < 0:
            raise DataError("baseline current noise would go negative")


@dataclass(frozen=True, slots=True)
class ScheduleEntry:
    ts_start: int
    ts_end: int
    ctx: ProcessContext

    def __post_init__(self) -> None:
        if self.ts_end <= self.ts_start:
            raise DataError("schedule entry must have positive duration")


@dataclass(frozen=True)
class AnomalyInjection:
    kind: InjectionKind
    ts_start: int
    ts_end: int
    params: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.ts_end <= self.ts_start:
            raise DataError("injection must have positive duration")
        unknown = set(self.params) - set(_KIND_DEFAULTS[self.kind])
        if unknown:
            raise DataError(
                f"{self.kind.value} does not take params {sorted(unknown)}"
            )

    def param(self, name: str) -> float:
        return self.params.get(name, _KIND_DEFAULTS[self.kind][name])

    @property
    def merged_params(self) -> dict[str, float]:
        merged = dict(_KIND_DEFAULTS[self.kind])
        merged.update(self.params)
        return merged


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    seed: int
    ts_start: int
    ts_end: int
    schedule: tuple[ScheduleEntry, ...]
    baselines: dict[tuple[Operation, Material], Baseline]
    injections: tuple[AnomalyInjection, ...] = ()
    calendar: WorkCalendar = field(default_factory=default_calendar)

    def __post_init__(self) -> None:
        if self.ts_end < self.ts_start:
            raise DataError("scenario span inverted")
        ordered = sorted(self.schedule, key=lambda e: e.ts_start)
        prev_end = None
        for e in ordered:
            if e.ts_start < self.ts_start or e.ts_end > self.ts_end:
                raise DataError("schedule entry outside scenario span")
            if prev_end is not None and e.ts_start < prev_end:
                raise DataError("schedule entries overlap")
            prev_end = e.ts_end
            key = (e.ctx.operation, e.ctx.material)
            if key not in self.baselines:
                raise DataError(
                    f"no baseline for ({key[0].value}, {key[1].value})"
                )
        for inj in self.injections:
            if inj.ts_start < self.ts_start or inj.ts_end > self.ts_end:
                raise DataError(f"{inj.kind.value} injection outside span")
            if inj.kind in _OFF_SCHEDULE:
                for e in self.schedule:
                    if inj.ts_start < e.ts_end and e.ts_start < inj.ts_end:
                        raise DataError(
                            f"{inj.kind.value} must lie outside the schedule"
                        )
                if (Operation.SPECIAL, Material.OTHER) not in self.baselines:
                    raise DataError(
                        "off-schedule injections need a (Special, Other) baseline"
                    )
            else:
                host = [
                    e
                    for e in self.schedule
                    if e.ts_start <= inj.ts_start and inj.ts_end <= e.ts_end
                ]
                if not host:
                    raise DataError(
                        f"{inj.kind.value} injection must lie within one "
                        "schedule entry"
                    )
                if inj.kind is InjectionKind.SENSOR_VIB_GHOST:
                    if host[0].ctx.operation is not Operation.IDLE:
                        raise DataError(
                            "SensorVibGhost must target an Idle entry"
                        )
                elif host[0].ctx.operation is Operation.IDLE:
                    raise DataError(
                        f"{inj.kind.value} must target an active entry"
                    )


@dataclass(frozen=True, slots=True)
class GroundTruthRow:
    ts_start: int
    ts_end: int
    kind: InjectionKind
    expected_criteria: tuple[CriterionId, ...]
    expected_risks: tuple[RiskId, ...]


GROUND_TRUTH_HEADER = "ts_start,ts_end,kind,expected_criteria,expected_risks"


class _Segment:
    """One contiguous emitted block: columnar channels plus row contexts."""

    __slots__ = ("ts0", "n", "ctx", "temp", "i_r", "i_s", "i_t", "acc", "access")

    def __init__(self, ts0: int, n: int, ctx: ProcessContext):
        self.ts0 = ts0
        self.n = n
        self.ctx = ctx
        self.temp: np.ndarray
        self.i_r: np.ndarray
        self.i_s: np.ndarray
        self.i_t: np.ndarray
        self.acc: np.ndarray  # (n, 3)
        self.access: np.ndarray  # per-row access token (CncTamper overrides)

    def rows(self, a: int, b: int) -> slice:
        """Slice of this segment's rows covering [a, b) clamped to it."""
        lo = max(a, self.ts0) - self.ts0
        hi = min(b, self.ts0 + self.n) - self.ts0
        return slice(lo, max(lo, hi))


class SimResult:
    """Materialized scenario output: segments plus ground truth."""

    def __init__(
        self,
        spec: ScenarioSpec,
        segments: list[_Segment],
        ground_truth: list[GroundTruthRow],
    ):
        self.spec = spec
        self.segments = segments
        self.ground_truth = ground_truth

    @property
    def n_samples(self) -> int:
        return sum(s.n for s in self.segments)

    def iter_csv_lines(self):
        yield CSV_HEADER
        for seg in self.segments:
            ctx = seg.ctx
            op, tool, mat = ctx.operation.value, ctx.tool, ctx.material.value
            temp = seg.temp.tolist()
            ir, is_, it = seg.i_r.tolist(), seg.i_s.tolist(), seg.i_t.tolist()
            ax = seg.acc[:, 0].tolist()
            ay = seg.acc[:, 1].tolist()
            az = seg.acc[:, 2].tolist()
            access = seg.access.tolist()
            ts0 = seg.ts0
            for i in range(seg.n):
                yield (
                    f"{ts0 + i},{temp[i]!r},{ir[i]!r},{is_[i]!r},{it[i]!r},"
                    f"{ax[i]!r},{ay[i]!r},{az[i]!r},{op},{tool},{mat},{access[i]}"
                )

    def csv_text(self) -> str:
        return "\n".join(self.iter_csv_lines()) + "\n"

    def ground_truth_csv(self) -> str:
        lines = [GROUND_TRUTH_HEADER]
        for row in self.ground_truth:
            crit = ";".join(c.value for c in row.expected_criteria)
            risks = ";".join(r.value for r in row.expected_risks)
            lines.append(
                f"{row.ts_start},{row.ts_end},{row.kind.value},{crit},{risks}"
            )
        return "\n".join(lines) + "\n"

    def samples(self) -> list[SensorSample]:
        out: list[SensorSample] = []
        for seg in self.segments:
            base_ctx = seg.ctx
            ctx_by_access = {
                base_ctx.access.value: base_ctx,
                Access.REMOTE.value: replace(base_ctx, access=Access.REMOTE),
            }
            temp = seg.temp.tolist()
            ir, is_, it = seg.i_r.tolist(), seg.i_s.tolist(), seg.i_t.tolist()
            ax = seg.acc[:, 0].tolist()
            ay = seg.acc[:, 1].tolist()
            az = seg.acc[:, 2].tolist()
            access = seg.access.tolist()
            for i in range(seg.n):
                out.append(
                    SensorSample(
                        ts=seg.ts0 + i,
                        temp=temp[i],
                        i_r=ir[i],
                        i_s=is_[i],
                        i_t=it[i],
                        acc_x=ax[i],
                        acc_y=ay[i],
                        acc_z=az[i],
                        ctx=ctx_by_access[access[i]],
                    )
                )
        return out

    def write(self, out_dir) -> None:
        import os

        os.makedirs(out_dir, exist_ok=True)
        telemetry = os.path.join(out_dir, "telemetry.csv")
        with open(telemetry + ".tmp", "w", encoding="utf-8") as fh:
            for line in self.iter_csv_lines():
                fh.write(line)
                fh.write("\n")
        os.replace(telemetry + ".tmp", telemetry)
        truth = os.path.join(out_dir, "ground_truth.csv")
        with open(truth + ".tmp", "w", encoding="utf-8") as fh:
            fh.write(self.ground_truth_csv())
        os.replace(truth + ".tmp", truth)


def _gen_segment(
    seed: int, seg_index: int, ts0: int, n: int, ctx: ProcessContext, base: Baseline
) -> _Segment:
    seg = _Segment(ts0, n, ctx)
    half_i = base.i_std_a * _SQRT3
    seg.temp = base.temp_base_c + sim_stream(seed, seg_index, 0).uniform(
        -TEMP_NOISE_HALF_C, TEMP_NOISE_HALF_C, n
    )
    seg.i_r = sim_stream(seed, seg_index, 1).uniform(
        base.i_mean_a - half_i, base.i_mean_a + half_i, n
    )
    seg.i_s = sim_stream(seed, seg_index, 2).uniform(
        base.i_mean_a - half_i, base.i_mean_a + half_i, n
    )
    seg.i_t = sim_stream(seed, seg_index, 3).uniform(
        base.i_mean_a - half_i, base.i_mean_a + half_i, n
    )
    comp = base.vib_rms_g / _SQRT3
    seg.acc = comp * (
        1.0
        + VIB_NOISE_REL
        * sim_stream(seed, seg_index, 4).uniform(-1.0, 1.0, (n, 3))
    )
    seg.access = np.array([ctx.access.value] * n, dtype=object)
    return seg


def _set_vib(seg: _Segment, sl: slice, level_g: float) -> None:
    seg.acc[sl] = level_g / _SQRT3


def _apply_injection(
    spec: ScenarioSpec, seg: _Segment, inj: AnomalyInjection
) -> None:
    sl = seg.rows(inj.ts_start, inj.ts_end)
    if sl.start >= sl.stop:
        return
    ts = np.arange(seg.ts0 + sl.start, seg.ts0 + sl.stop)
    kind = inj.kind
    if kind is InjectionKind.SPINDLE_SEIZURE:
        stop_s = int(inj.param("stop_s"))
        boost = inj.param("boost_a")
        slope_s = inj.param("temp_slope_c_min") / 60.0
        stop_at = inj.ts_end - stop_s
        run = seg.rows(inj.ts_start, stop_at)
        halt = seg.rows(stop_at, inj.ts_end)
        for arr in (seg.i_r, seg.i_s, seg.i_t):
            arr[run] += boost
            arr[halt] = 0.01
        run_ts = np.arange(seg.ts0 + run.start, seg.ts0 + run.stop)
        base_temp = spec.baselines[(seg.ctx.operation, seg.ctx.material)].temp_base_c
        seg.temp[run] = base_temp + slope_s * (run_ts - inj.ts_start)
        seg.temp[halt] = base_temp + slope_s * max(stop_at - inj.ts_start, 0)
        _set_vib(seg, halt, 0.003)
    elif kind is InjectionKind.CURRENT_PEAKS:
        n_peaks = int(inj.param("n_peaks"))
        spike = inj.param("spike_a")
        dur = inj.ts_end - inj.ts_start
        for i in range(n_peaks):
            t = inj.ts_start + int((i + 0.5) * dur / n_peaks)
            if seg.ts0 <= t < seg.ts0 + seg.n:
                j = t - seg.ts0
                seg.i_r[j] += spike
                seg.i_s[j] += spike
                seg.i_t[j] += spike
    elif kind in (
        InjectionKind.NO_VIB_CURRENT,
        InjectionKind.SENSOR_VIB_GHOST,
        InjectionKind.EXCESS_VIB,
    ):
        _set_vib(seg, sl, inj.param("vib_level_g"))
    elif kind is InjectionKind.RPM_RISE:
        boost = inj.param("boost_a")
        ramp_s = max(int(inj.param("ramp_s")), 1)
        slope_s = inj.param("temp_slope_c_min") / 60.0
        lift = boost * np.minimum((ts - inj.ts_start + 1) / ramp_s, 1.0)
        seg.i_r[sl] += lift
        seg.i_s[sl] += lift
        seg.i_t[sl] += lift
        base_temp = spec.baselines[(seg.ctx.operation, seg.ctx.material)].temp_base_c
        seg.temp[sl] = base_temp + slope_s * (ts - inj.ts_start)
    elif kind is InjectionKind.ZERO_DROP:
        floor = inj.param("floor_a")
        for arr in (seg.i_r, seg.i_s, seg.i_t):
            arr[sl] = floor
        _set_vib(seg, sl, inj.param("vib_level_g"))
    elif kind is InjectionKind.STEP_CHANGE:
        delta = inj.param("delta_a")
        for arr in (seg.i_r, seg.i_s, seg.i_t):
            arr[sl] += delta
    elif kind is InjectionKind.CNC_TAMPER:
        delta = inj.param("delta_a")
        floor = inj.param("floor_a")
        step_s = int(inj.param("step_s"))
        drop_s = int(inj.param("drop_s"))
        step = seg.rows(inj.ts_start, inj.ts_start + step_s)
        drop = seg.rows(
            inj.ts_start + step_s, inj.ts_start + step_s + drop_s
        )
        for arr in (seg.i_r, seg.i_s, seg.i_t):
            arr[step] += delta
            arr[drop] = floor
        _set_vib(seg, drop, 0.003)
        seg.access[sl] = Access.REMOTE.value
    # OUT_OF_HOURS / PLC_DOS emit their own segments; nothing to overlay.


def _off_schedule_segment(
    spec: ScenarioSpec, seg_index: int, inj: AnomalyInjection
) -> _Segment:
    access = Access.REMOTE if inj.kind is InjectionKind.PLC_DOS else Access.LOCAL
    ctx = ProcessContext(
        operation=Operation.SPECIAL,
        tool="t-serv-1",
        material=Material.OTHER,
        access=access,
    )
    base = spec.baselines[(Operation.SPECIAL, Material.OTHER)]
    shifted = Baseline(
        i_mean_a=inj.param("i_level_a"),
        i_std_a=base.i_std_a,
        temp_base_c=base.temp_base_c,
        vib_rms_g=inj.param("vib_level_g"),
    )
    return _gen_segment(
        spec.seed, seg_index, inj.ts_start, inj.ts_end - inj.ts_start, ctx, shifted
    )


def simulate(spec: ScenarioSpec) -> SimResult:
    """Run a scenario to completion. Pure: identical specs give identical
    bytes, and injections never change how baseline noise is drawn."""
    emissions: list[tuple[int, int, ProcessContext, AnomalyInjection | None]] = [
        (e.ts_start, e.ts_end, e.ctx, None) for e in spec.schedule
    ]
    for inj in spec.injections:
        if inj.kind in _OFF_SCHEDULE:
            emissions.append((inj.ts_start, inj.ts_end, None, inj))
    emissions.sort(key=lambda e: e[0])
    segments: list[_Segment] = []
    for seg_index, (a, b, ctx, off_inj) in enumerate(emissions):
        if off_inj is not None:
            segments.append(_off_schedule_segment(spec, seg_index, off_inj))
        else:
            base = spec.baselines[(ctx.operation, ctx.material)]
            segments.append(_gen_segment(spec.seed, seg_index, a, b - a, ctx, base))
    for inj in spec.injections:
        if inj.kind in _OFF_SCHEDULE:
            continue
        for seg in segments:
            _apply_injection(spec, seg, inj)
    truth = [
        GroundTruthRow(
            ts_start=inj.ts_start,
            ts_end=inj.ts_end,
            kind=inj.kind,
            expected_criteria=tuple(
                sorted(EXPECTED_CRITERIA[inj.kind], key=lambda c: c.ordinal)
            ),
            expected_risks=expected_risks(inj.kind),
        )
        for inj in sorted(spec.injections, key=lambda i: (i.ts_start, i.kind.value))
    ]
    return SimResult(spec, segments, truth)


def parse_ground_truth_csv(text: str) -> list[GroundTruthRow]:
    lines = text.splitlines()
    if not lines or lines[0] != GROUND_TRUTH_HEADER:
        raise DataError("bad ground truth header")
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise DataError(f"line {ln}: expected 5 fields")
        try:
            start, end = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise DataError(f"line {ln}: {exc}") from None
        kind = parse_injection_kind(parts[2])
        criteria = tuple(
            parse_criterion_id(t) for t in parts[3].split(";") if t
        )
        risks = tuple(RiskId(t) for t in parts[4].split(";") if t)
        rows.append(GroundTruthRow(start, end, kind, criteria, risks))
    return rows
