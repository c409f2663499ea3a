"""The ten expert rule criteria evaluated over telemetry windows.

Each criterion is a deterministic predicate over a single Window plus
configuration (and, for SpindleRpmRise, a historical per-(operation, tool)
current-quantile store). A firing carries a normalized score:

    score = measured / threshold - 1

so scores are dimensionless, comparable across criteria, and invariant when
a measured quantity and its threshold are scaled together. Strict-exceedance
criteria fire iff score > 0; the two duration-based criteria (ZeroDrop,
SpindleRpmRise) fire at `run >= min_duration` per their definitions, so an
exact-threshold run yields a firing with score 0.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .model import DataError, Operation, SensorSample, Window
from .workhours import WorkCalendar, calendar_from_entries, default_calendar


class CriterionId(Enum):
    """The ten alert criteria, in canonical (matrix row) order.

    Enum declaration order defines the ordinal used for deterministic
    tie-breaking; do not reorder.
    """

    TEMP_GRADIENT = "TempGradient"
    CURRENT_PEAK_COUNT = "CurrentPeakCount"
    CURRENT_WITHOUT_VIBRATION = "CurrentWithoutVibration"
    VIBRATION_WITHOUT_CURRENT_C = "VibrationWithoutCurrent_C"
    EXCESS_VIBRATION = "ExcessVibration"
    VIBRATION_WITHOUT_CURRENT_V = "VibrationWithoutCurrent_V"
    SPINDLE_RPM_RISE = "SpindleRpmRise"
    OUT_OF_HOURS_USE = "OutOfHoursUse"
    ZERO_DROP = "ZeroDrop"
    CURRENT_INTENSITY_CHANGE = "CurrentIntensityChange"

    @property
    def ordinal(self) -> int:
        return _ORDINALS[self]


_ORDINALS = {c: i for i, c in enumerate(CriterionId)}
CRITERION_ORDER: tuple[CriterionId, ...] = tuple(CriterionId)


def parse_criterion_id(token: str) -> CriterionId:
    try:
        return CriterionId(token)
    except ValueError:
        raise DataError(f"unknown criterion {token!r}") from None


class CriterionEvalError(DataError):
    """A criterion could not be evaluated on this window (not 'did not fire')."""


class WindowTooSmall(CriterionEvalError):
    pass


class MissingHistoryGroup(CriterionEvalError):
    pass


@dataclass(frozen=True)
class CriteriaConfig:
    """Thresholds for all ten criteria.

    The two VibrationWithoutCurrent identities share the rule but may carry
    their own thresholds; the vnc_* fields default to None, meaning "use the
    shared vib_rms_min / i_active_min".
    """

    grad_max: float = 5.0  # degC/min
    peak_sigma_k: float = 2.0
    peak_count_max: int = 10
    i_active_min: float = 1.0  # A
    vib_rms_min: float = 0.05  # g
    vib_rms_max: float = 1.5  # g
    rpm_current_quantile: float = 0.95
    rpm_min_duration_s: int = 60
    rpm_temp_slope_min: float = 2.0  # degC/min
    zero_eps: float = 0.2  # A
    zero_min_duration_s: int = 30
    step_delta_min: float = 3.0  # A
    vnc_c_vib_rms_min: float | None = None
    vnc_c_i_active_min: float | None = None
    vnc_v_vib_rms_min: float | None = None
    vnc_v_i_active_min: float | None = None
    work_calendar: WorkCalendar = field(default_factory=default_calendar)

    def __post_init__(self) -> None:
        positive = {
            "grad_max": self.grad_max,
            "peak_sigma_k": self.peak_sigma_k,
            "peak_count_max": self.peak_count_max,
            "i_active_min": self.i_active_min,
            "vib_rms_min": self.vib_rms_min,
            "vib_rms_max": self.vib_rms_max,
            "rpm_min_duration_s": self.rpm_min_duration_s,
            "rpm_temp_slope_min": self.rpm_temp_slope_min,
            "zero_eps": self.zero_eps,
            "zero_min_duration_s": self.zero_min_duration_s,
            "step_delta_min": self.step_delta_min,
        }
        for name, value in positive.items():
            if value <= 0:
                raise DataError(f"{name} must be strictly positive, got {value}")
        if not (0.0 < self.rpm_current_quantile < 1.0):
            raise DataError("rpm_current_quantile must lie in (0, 1)")
        for name in (
            "vnc_c_vib_rms_min",
            "vnc_c_i_active_min",
            "vnc_v_vib_rms_min",
            "vnc_v_i_active_min",
        ):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise DataError(f"{name} must be strictly positive, got {v}")

    @property
    def vnc_c(self) -> tuple[float, float]:
        """(vib_rms_min, i_active_min) for VibrationWithoutCurrent_C."""
        return (
            self.vnc_c_vib_rms_min if self.vnc_c_vib_rms_min is not None else self.vib_rms_min,
            self.vnc_c_i_active_min if self.vnc_c_i_active_min is not None else self.i_active_min,
        )

    @property
    def vnc_v(self) -> tuple[float, float]:
        """(vib_rms_min, i_active_min) for VibrationWithoutCurrent_V."""
        return (
            self.vnc_v_vib_rms_min if self.vnc_v_vib_rms_min is not None else self.vib_rms_min,
            self.vnc_v_i_active_min if self.vnc_v_i_active_min is not None else self.i_active_min,
        )


@dataclass(frozen=True, slots=True)
class Evidence:
    """The measured quantity that decided a firing, with its threshold."""

    quantity: str
    value: float
    threshold: float


@dataclass(frozen=True, slots=True)
class CriterionFiring:
    criterion: CriterionId
    window: Window
    score: float
    evidence: Evidence

    def __post_init__(self) -> None:
        if self.score < 0:
            raise DataError(f"firing score must be >= 0, got {self.score}")


@dataclass(frozen=True, slots=True)
class FiringSet:
    """Result of evaluate_all: at most one firing per criterion, plus the
    criteria that could not be evaluated on this window and why."""

    window: Window
    firings: tuple[CriterionFiring, ...]
    skipped: tuple[tuple[CriterionId, str], ...] = ()

    def __bool__(self) -> bool:
        return bool(self.firings)

    @property
    def criteria(self) -> tuple[CriterionId, ...]:
        return tuple(f.criterion for f in self.firings)

    def tokens(self) -> str:
        """`;`-joined criterion tokens, canonical order."""
        return ";".join(c.value for c in self.criteria)


# --------------------------------------------------------------------------
# Quantile history for SpindleRpmRise


class QuantileHistory:
    """Exact empirical quantiles of mean phase current per (operation, tool)."""

    def __init__(self, groups: dict[tuple[str, str], np.ndarray]):
        self._groups = groups

    @classmethod
    def build(cls, samples) -> "QuantileHistory":
        buckets: dict[tuple[str, str], list[float]] = {}
        for s in samples:
            key = (s.ctx.operation.value, s.ctx.tool)
            buckets.setdefault(key, []).append((s.i_r + s.i_s + s.i_t) / 3.0)
        return cls(
            {key: np.sort(np.asarray(vals, dtype=float)) for key, vals in buckets.items()}
        )

    def groups(self) -> list[tuple[str, str]]:
        return sorted(self._groups)

    def quantile(self, operation: Operation | str, tool: str, q: float) -> float:
        """Nearest-rank quantile: sorted[ceil(q*n) - 1], clamped into range."""
        op = operation.value if isinstance(operation, Operation) else operation
        vals = self._groups.get((op, tool))
        if vals is None or len(vals) == 0:
            raise MissingHistoryGroup(
                f"no history for group (operation={op}, tool={tool})"
            )
        if not (0.0 <= q <= 1.0):
            raise DataError(f"quantile {q} outside [0, 1]")
        rank = math.ceil(q * len(vals)) - 1
        rank = min(max(rank, 0), len(vals) - 1)
        return float(vals[rank])


def build_history(samples) -> QuantileHistory:
    """Build the per-(operation, tool) current-quantile store from a series."""
    return QuantileHistory.build(samples)


# --------------------------------------------------------------------------
# Window aggregates shared by the predicates


class _WindowData:
    """Column view of a window's samples, computed once per evaluation."""

    def __init__(self, w: Window):
        self.w = w
        n = len(w.samples)
        self.n = n
        self.ts = np.fromiter((s.ts for s in w.samples), dtype=np.int64, count=n)
        self.temp = np.fromiter((s.temp for s in w.samples), dtype=float, count=n)
        self.i_r = np.fromiter((s.i_r for s in w.samples), dtype=float, count=n)
        self.i_s = np.fromiter((s.i_s for s in w.samples), dtype=float, count=n)
        self.i_t = np.fromiter((s.i_t for s in w.samples), dtype=float, count=n)
        self.i_mean = (self.i_r + self.i_s + self.i_t) / 3.0
        self.sq_acc = np.fromiter(
            (s.acc_x**2 + s.acc_y**2 + s.acc_z**2 for s in w.samples),
            dtype=float,
            count=n,
        )

    @property
    def vib_rms(self) -> float:
        return float(np.sqrt(np.mean(self.sq_acc))) if self.n else 0.0

    @property
    def mean_current(self) -> float:
        return float(np.mean(self.i_mean)) if self.n else 0.0


def _ls_slope_per_min(ts: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of y over ts, in units per minute."""
    t = ts.astype(float)
    t = t - t[0]
    tm = t.mean()
    ym = y.mean()
    denom = float(np.sum((t - tm) ** 2))
    if denom == 0.0:
        return 0.0
    slope = float(np.sum((t - tm) * (y - ym))) / denom
    return slope * 60.0


def _max_subspan_slope_per_min(d: _WindowData, span_s: int = 60) -> float:
    """Max least-squares temperature slope over full span_s sub-spans.

    A sub-span is anchored at a sample and covers [ts_i, ts_i + span_s); it
    is valid only when it fits inside the window interval and holds >= 2
    samples. Windows shorter than span_s fall back to a single sub-span over
    the whole window.
    """
    ts, temp, w = d.ts, d.temp, d.w
    if w.duration_s < span_s:
        return _ls_slope_per_min(ts, temp)
    best = -math.inf
    j = 0
    n = d.n
    for i in range(n):
        if int(ts[i]) + span_s > w.ts_end:
            break
        limit = int(ts[i]) + span_s
        if j < i:
            j = i
        while j < n and ts[j] < limit:
            j += 1
        if j - i >= 2:
            best = max(best, _ls_slope_per_min(ts[i:j], temp[i:j]))
    if best == -math.inf:
        # No full sub-span had two samples; use the whole window.
        return _ls_slope_per_min(ts, temp)
    return best


def _contiguous_runs(ts: np.ndarray, mask: np.ndarray) -> int:
    """Longest run of True mask entries over consecutive (1 Hz) timestamps,
    in seconds (= sample count within the run)."""
    best = 0
    run = 0
    prev_ts = None
    for t, ok in zip(ts.tolist(), mask.tolist()):
        if ok and prev_ts is not None and t == prev_ts + 1 and run > 0:
            run += 1
        elif ok:
            run = 1
        else:
            run = 0
        best = max(best, run)
        prev_ts = t
    return best


# --------------------------------------------------------------------------
# Predicates


def _require(w: Window, n_min: int, cid: CriterionId) -> None:
    if len(w.samples) < n_min:
        raise WindowTooSmall(
            f"{cid.value} needs >= {n_min} samples, window has {len(w.samples)}"
        )


def _eval_temp_gradient(d: _WindowData, cfg: CriteriaConfig):
    slope = _max_subspan_slope_per_min(d)
    if slope > cfg.grad_max:
        return (
            slope / cfg.grad_max - 1.0,
            Evidence("max_temp_slope_c_per_min", slope, cfg.grad_max),
        )
    return None


def _eval_current_peak_count(d: _WindowData, cfg: CriteriaConfig):
    exceeded = np.zeros(d.n, dtype=bool)
    for phase in (d.i_r, d.i_s, d.i_t):
        thr = float(np.mean(phase)) + cfg.peak_sigma_k * float(np.std(phase))
        exceeded |= phase > thr
    count = int(np.count_nonzero(exceeded))
    if count > cfg.peak_count_max:
        return (
            count / cfg.peak_count_max - 1.0,
            Evidence("peak_sample_count", float(count), float(cfg.peak_count_max)),
        )
    return None


def _eval_current_without_vibration(d: _WindowData, cfg: CriteriaConfig):
    i = d.mean_current
    rms = d.vib_rms
    if i > cfg.i_active_min and rms < cfg.vib_rms_min:
        score = min(i / cfg.i_active_min - 1.0, 1.0 - rms / cfg.vib_rms_min)
        return score, Evidence("vib_rms_g", rms, cfg.vib_rms_min)
    return None


def _eval_vibration_without_current(
    d: _WindowData, vib_min: float, i_min: float
):
    i = d.mean_current
    rms = d.vib_rms
    if rms > vib_min and i < i_min:
        score = min(rms / vib_min - 1.0, 1.0 - i / i_min)
        return score, Evidence("vib_rms_g", rms, vib_min)
    return None


def _eval_excess_vibration(d: _WindowData, cfg: CriteriaConfig):
    rms = d.vib_rms
    if rms > cfg.vib_rms_max:
        return rms / cfg.vib_rms_max - 1.0, Evidence("vib_rms_g", rms, cfg.vib_rms_max)
    return None


def _eval_spindle_rpm_rise(d: _WindowData, cfg: CriteriaConfig, history: QuantileHistory):
    thresholds = np.empty(d.n, dtype=float)
    for idx, s in enumerate(d.w.samples):
        thresholds[idx] = history.quantile(
            s.ctx.operation, s.ctx.tool, cfg.rpm_current_quantile
        )
    above = d.i_mean > thresholds
    run = _contiguous_runs(d.ts, above)
    slope = _max_subspan_slope_per_min(d)
    if run >= cfg.rpm_min_duration_s and slope > cfg.rpm_temp_slope_min:
        score = min(
            run / cfg.rpm_min_duration_s - 1.0,
            slope / cfg.rpm_temp_slope_min - 1.0,
        )
        return score, Evidence(
            "above_quantile_run_s", float(run), float(cfg.rpm_min_duration_s)
        )
    return None


def _eval_out_of_hours_use(d: _WindowData, cfg: CriteriaConfig):
    cal = cfg.work_calendar
    off = np.fromiter(
        (not cal.in_hours(int(t)) for t in d.ts), dtype=bool, count=d.n
    )
    if not off.any():
        return None
    mean_i = float(np.mean(d.i_mean[off]))
    if mean_i > cfg.i_active_min:
        return (
            mean_i / cfg.i_active_min - 1.0,
            Evidence("off_hours_mean_current_a", mean_i, cfg.i_active_min),
        )
    return None


def _eval_zero_drop(d: _WindowData, cfg: CriteriaConfig):
    all_low = (
        (d.i_r < cfg.zero_eps) & (d.i_s < cfg.zero_eps) & (d.i_t < cfg.zero_eps)
    )
    active = np.fromiter(
        (s.ctx.operation is not Operation.IDLE for s in d.w.samples),
        dtype=bool,
        count=d.n,
    )
    run = _contiguous_runs(d.ts, all_low & active)
    if run >= cfg.zero_min_duration_s:
        return (
            run / cfg.zero_min_duration_s - 1.0,
            Evidence("zero_run_s", float(run), float(cfg.zero_min_duration_s)),
        )
    return None


def _eval_current_intensity_change(d: _WindowData, cfg: CriteriaConfig):
    ops = {s.ctx.operation for s in d.w.samples}
    if len(ops) != 1:
        return None
    w = d.w
    # First half: 2*(ts - start) < duration, exact in integer arithmetic.
    first = (d.ts - w.ts_start) * 2 < w.duration_s
    if not first.any() or first.all():
        return None
    delta = abs(float(np.mean(d.i_mean[~first])) - float(np.mean(d.i_mean[first])))
    if delta > cfg.step_delta_min:
        return (
            delta / cfg.step_delta_min - 1.0,
            Evidence("half_mean_delta_a", delta, cfg.step_delta_min),
        )
    return None


_MIN_SAMPLES = {
    CriterionId.TEMP_GRADIENT: 2,
    CriterionId.SPINDLE_RPM_RISE: 2,
    CriterionId.CURRENT_INTENSITY_CHANGE: 2,
}


def evaluate_criterion(
    cid: CriterionId,
    w: Window,
    cfg: CriteriaConfig,
    history: QuantileHistory | None = None,
) -> CriterionFiring | None:
    """Evaluate one criterion; None when it did not fire.

    Raises WindowTooSmall when the window cannot support the criterion and
    MissingHistoryGroup when SpindleRpmRise lacks a baseline for a group
    present in the window - both distinct from a clean 'did not fire'.
    """
    _require(w, _MIN_SAMPLES.get(cid, 1), cid)
    d = _WindowData(w)
    return _evaluate_on_data(cid, d, cfg, history)


def _evaluate_on_data(
    cid: CriterionId,
    d: _WindowData,
    cfg: CriteriaConfig,
    history: QuantileHistory | None,
) -> CriterionFiring | None:
    if cid is CriterionId.TEMP_GRADIENT:
        result = _eval_temp_gradient(d, cfg)
    elif cid is CriterionId.CURRENT_PEAK_COUNT:
        result = _eval_current_peak_count(d, cfg)
    elif cid is CriterionId.CURRENT_WITHOUT_VIBRATION:
        result = _eval_current_without_vibration(d, cfg)
    elif cid is CriterionId.VIBRATION_WITHOUT_CURRENT_C:
        vib_min, i_min = cfg.vnc_c
        result = _eval_vibration_without_current(d, vib_min, i_min)
    elif cid is CriterionId.EXCESS_VIBRATION:
        result = _eval_excess_vibration(d, cfg)
    elif cid is CriterionId.VIBRATION_WITHOUT_CURRENT_V:
        vib_min, i_min = cfg.vnc_v
        result = _eval_vibration_without_current(d, vib_min, i_min)
    elif cid is CriterionId.SPINDLE_RPM_RISE:
        if history is None:
            raise MissingHistoryGroup("SpindleRpmRise requires a quantile history")
        result = _eval_spindle_rpm_rise(d, cfg, history)
    elif cid is CriterionId.OUT_OF_HOURS_USE:
        result = _eval_out_of_hours_use(d, cfg)
    elif cid is CriterionId.ZERO_DROP:
        result = _eval_zero_drop(d, cfg)
    elif cid is CriterionId.CURRENT_INTENSITY_CHANGE:
        result = _eval_current_intensity_change(d, cfg)
    else:  # pragma: no cover - closed enum
        raise DataError(f"unknown criterion {cid}")
    if result is None:
        return None
    score, evidence = result
    return CriterionFiring(criterion=cid, window=d.w, score=score, evidence=evidence)


def evaluate_all(
    w: Window,
    cfg: CriteriaConfig,
    history: QuantileHistory | None = None,
) -> FiringSet:
    """Evaluate all ten criteria; per-criterion errors become skip markers."""
    firings: list[CriterionFiring] = []
    skipped: list[tuple[CriterionId, str]] = []
    data: _WindowData | None = None
    for cid in CriterionId:
        if len(w.samples) < _MIN_SAMPLES.get(cid, 1):
            skipped.append((cid, f"window too small ({len(w.samples)} samples)"))
            continue
        if data is None:
            data = _WindowData(w)
        try:
            firing = _evaluate_on_data(cid, data, cfg, history)
        except CriterionEvalError as exc:
            skipped.append((cid, str(exc)))
            continue
        if firing is not None:
            firings.append(firing)
    return FiringSet(window=w, firings=tuple(firings), skipped=tuple(skipped))


# --------------------------------------------------------------------------
# Config file format: flat `group.parameter = value` lines


_SCALAR_KEYS: dict[str, tuple[str, type]] = {
    "temp_gradient.grad_max": ("grad_max", float),
    "current_peak_count.peak_sigma_k": ("peak_sigma_k", float),
    "current_peak_count.peak_count_max": ("peak_count_max", int),
    "current.i_active_min": ("i_active_min", float),
    "vibration.vib_rms_min": ("vib_rms_min", float),
    "vibration.vib_rms_max": ("vib_rms_max", float),
    "spindle_rpm_rise.current_quantile": ("rpm_current_quantile", float),
    "spindle_rpm_rise.min_duration_s": ("rpm_min_duration_s", int),
    "spindle_rpm_rise.temp_slope_min": ("rpm_temp_slope_min", float),
    "zero_drop.zero_eps": ("zero_eps", float),
    "zero_drop.min_duration_s": ("zero_min_duration_s", int),
    "current_intensity_change.step_delta_min": ("step_delta_min", float),
    "vibration_without_current_c.vib_rms_min": ("vnc_c_vib_rms_min", float),
    "vibration_without_current_c.i_active_min": ("vnc_c_i_active_min", float),
    "vibration_without_current_v.vib_rms_min": ("vnc_v_vib_rms_min", float),
    "vibration_without_current_v.i_active_min": ("vnc_v_i_active_min", float),
}


def render_criteria_config(cfg: CriteriaConfig) -> str:
    """Serialize as flat key-value lines; load_criteria_config inverts this."""
    lines = []
    for key, (attr, typ) in _SCALAR_KEYS.items():
        value = getattr(cfg, attr)
        if value is None:
            continue
        lines.append(f"{key} = {value!r}" if typ is float else f"{key} = {value}")
    lines.extend(cfg.work_calendar.render_lines())
    return "\n".join(lines) + "\n"


def load_criteria_config(text: str) -> CriteriaConfig:
    """Parse the flat config format; unspecified keys keep their defaults."""
    overrides: dict[str, object] = {}
    calendar_entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"config line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key.startswith("calendar."):
            calendar_entries[key[len("calendar.") :]] = value
            continue
        spec = _SCALAR_KEYS.get(key)
        if spec is None:
            raise DataError(f"config line {lineno}: unknown key {key!r}")
        attr, typ = spec
        try:
            overrides[attr] = typ(value)
        except ValueError:
            raise DataError(
                f"config line {lineno}: bad {typ.__name__} value {value!r}"
            ) from None
    base = CriteriaConfig()
    if calendar_entries:
        overrides["work_calendar"] = calendar_from_entries(calendar_entries)
    return replace(base, **overrides)
