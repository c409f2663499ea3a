"""Core telemetry domain model: samples, process context, annotations, windows."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Operation(str, Enum):
    """Machining operation declared by the controller for each second."""

    DRILLING = "Drilling"
    FACING = "Facing"
    MILLING = "Milling"
    CONTOURING = "Contouring"
    SPECIAL = "Special"
    IDLE = "Idle"


class Material(str, Enum):
    """Workpiece material family."""

    STEEL = "Steel"
    ALUMINIUM = "Aluminium"
    PLASTIC = "Plastic"
    STAINLESS_STEEL = "StainlessSteel"
    OTHER = "Other"


class Access(str, Enum):
    """Whether the machine is driven locally or over a remote session."""

    LOCAL = "Local"
    REMOTE = "Remote"


class IncidentClass(str, Enum):
    """Expert classification attached to an annotation."""

    MACHINE_FAULT = "MachineFault"
    CYBER_INCIDENT = "CyberIncident"
    BENIGN = "Benign"
    UNSPECIFIED = "Unspecified"


# Plausibility bounds for stored samples. Configurable via StoreConfig.
TEMP_MIN_C = -40.0
TEMP_MAX_C = 400.0


class DataError(ValueError):
    """Domain-level data problem: bad enum token, bad interval, missing entity."""


def parse_operation(token: str) -> Operation:
    """Map a CSV token to Operation. Unknown tokens are an error, never Other."""
    try:
        return Operation(token)
    except ValueError:
        raise DataError(f"unknown operation {token!r}") from None


def parse_material(token: str) -> Material:
    try:
        return Material(token)
    except ValueError:
        raise DataError(f"unknown material {token!r}") from None


def parse_access(token: str) -> Access:
    try:
        return Access(token)
    except ValueError:
        raise DataError(f"unknown access {token!r}") from None


def parse_incident_class(token: str) -> IncidentClass:
    try:
        return IncidentClass(token)
    except ValueError:
        raise DataError(f"unknown incident_class {token!r}") from None


@dataclass(frozen=True, slots=True)
class ProcessContext:
    """Operation/tool/material/access context attached to one sample.

    The context is declared per row by whoever produced the CSV (controller
    or operator log); this model does not try to infer it.
    """

    operation: Operation
    tool: str
    material: Material
    access: Access

    def __post_init__(self) -> None:
        if self.operation is Operation.IDLE and self.tool != "none":
            raise DataError(
                f"Idle operation must carry tool='none', got {self.tool!r}"
            )
        if not self.tool:
            raise DataError("tool identifier must be non-empty")


@dataclass(frozen=True, slots=True)
class SensorSample:
    """One second of telemetry: temperature, phase currents, acceleration, context.

    Fields
    ------
    ts : int
        UTC epoch seconds.
    temp : float
        Spindle-area temperature, degrees C.
    i_r, i_s, i_t : float
        Per-phase current in amperes (non-negative).
    acc_x, acc_y, acc_z : float
        Acceleration per axis in g.
    ctx : ProcessContext
    """

    ts: int
    temp: float
    i_r: float
    i_s: float
    i_t: float
    acc_x: float
    acc_y: float
    acc_z: float
    ctx: ProcessContext

    def __post_init__(self) -> None:
        if self.i_r < 0 or self.i_s < 0 or self.i_t < 0:
            raise DataError(f"phase currents must be >= 0 at ts={self.ts}")
        if not (TEMP_MIN_C <= self.temp <= TEMP_MAX_C):
            raise DataError(
                f"temperature {self.temp} outside [{TEMP_MIN_C}, {TEMP_MAX_C}] at ts={self.ts}"
            )

    @property
    def i_mean(self) -> float:
        """Mean of the three phase currents."""
        return (self.i_r + self.i_s + self.i_t) / 3.0

    @property
    def vib_mag(self) -> float:
        """Instantaneous vibration magnitude sqrt(x^2+y^2+z^2) in g."""
        return (self.acc_x**2 + self.acc_y**2 + self.acc_z**2) ** 0.5


@dataclass(frozen=True, slots=True)
class Annotation:
    """Expert note over a half-open-ish interval [ts_start, ts_end].

    Intervals may overlap each other, but each must intersect stored data
    at upsert time. incident_class is optional expert judgement.
    """

    id: str
    ts_start: int
    ts_end: int
    note: str
    annotator: str
    incident_class: IncidentClass | None = None

    def __post_init__(self) -> None:
        if self.ts_start >= self.ts_end:
            raise DataError(
                f"annotation interval must satisfy ts_start < ts_end, "
                f"got [{self.ts_start}, {self.ts_end}]"
            )

    def intersects(self, ts_start: int, ts_end: int) -> bool:
        """True when [self.ts_start, self.ts_end) overlaps [ts_start, ts_end)."""
        return self.ts_start < ts_end and ts_start < self.ts_end


@dataclass(frozen=True, slots=True)
class Window:
    """A half-open interval [ts_start, ts_end) with the samples that fall in it.

    coverage = len(samples) / duration_s, i.e. the fraction of the
    expected 1 Hz samples actually present. Windows below the configured
    coverage floor are emitted flagged (low_coverage), never dropped.
    """

    ts_start: int
    ts_end: int
    samples: tuple[SensorSample, ...]
    coverage: float
    low_coverage: bool = False

    def __post_init__(self) -> None:
        if self.ts_start >= self.ts_end:
            raise DataError("window interval must be non-empty")
        for s in self.samples:
            if not (self.ts_start <= s.ts < self.ts_end):
                raise DataError(
                    f"sample ts={s.ts} outside window [{self.ts_start}, {self.ts_end})"
                )
        if not (0.0 <= self.coverage <= 1.0):
            raise DataError(f"coverage {self.coverage} outside [0, 1]")

    @property
    def duration_s(self) -> int:
        return self.ts_end - self.ts_start
