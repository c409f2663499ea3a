"""Labeling pipeline: split windows by annotation, derive labels from
criteria firings, group criteria into anomaly classes, export datasets."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum

from .criteria import (
    CriteriaConfig,
    CriterionId,
    FiringSet,
    QuantileHistory,
    evaluate_all,
    parse_criterion_id,
)
from .model import Annotation, DataError, IncidentClass, Window

NORMAL_CLASS = "Normal"


class BinaryLabel(str, Enum):
    NORMAL = "Normal"
    ANOMALOUS = "Anomalous"


class Provenance(str, Enum):
    EXPERT_ANNOTATED = "ExpertAnnotated"
    CRITERIA_DERIVED = "CriteriaDerived"
    SIMULATOR_GROUND_TRUTH = "SimulatorGroundTruth"


@dataclass(frozen=True)
class AnomalyClass:
    """A named group of criteria. The reserved Normal class has no members."""

    id: str
    name: str
    member_criteria: frozenset[CriterionId]

    def __post_init__(self) -> None:
        if self.id != NORMAL_CLASS and not self.member_criteria:
            raise DataError(f"class {self.id!r} must have member criteria")
        if self.id == NORMAL_CLASS and self.member_criteria:
            raise DataError("the Normal class cannot have member criteria")


@dataclass(frozen=True)
class Taxonomy:
    """An ordered set of anomaly classes partitioning the ten criteria."""

    classes: tuple[AnomalyClass, ...]

    def __post_init__(self) -> None:
        ids = [c.id for c in self.classes]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate class ids in taxonomy")
        if sum(1 for c in self.classes if c.id == NORMAL_CLASS) != 1:
            raise DataError("taxonomy must contain exactly one Normal class")
        seen: dict[CriterionId, str] = {}
        for c in self.classes:
            for crit in c.member_criteria:
                if crit in seen:
                    raise DataError(
                        f"criterion {crit.value} in both {seen[crit]!r} and {c.id!r}"
                    )
                seen[crit] = c.id
        missing = [c.value for c in CriterionId if c not in seen]
        if missing:
            raise DataError(f"taxonomy does not cover criteria: {missing}")

    def class_of(self, criterion: CriterionId) -> str:
        for c in self.classes:
            if criterion in c.member_criteria:
                return c.id
        raise DataError(f"criterion {criterion.value} not in taxonomy")

    @property
    def anomaly_class_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.classes if c.id != NORMAL_CLASS)


def default_taxonomy() -> Taxonomy:
    """Five anomaly classes plus Normal; partitions all ten criteria."""
    C = CriterionId
    return Taxonomy(
        classes=(
            AnomalyClass(NORMAL_CLASS, "Normal operation", frozenset()),
            AnomalyClass(
                "ThermalAnomaly",
                "Abnormal temperature rise",
                frozenset({C.TEMP_GRADIENT}),
            ),
            AnomalyClass(
                "CurrentAnomaly",
                "Abnormal current draw",
                frozenset(
                    {
                        C.CURRENT_PEAK_COUNT,
                        C.CURRENT_INTENSITY_CHANGE,
                        C.SPINDLE_RPM_RISE,
                    }
                ),
            ),
            AnomalyClass(
                "VibrationAnomaly",
                "Abnormal vibration",
                frozenset({C.EXCESS_VIBRATION, C.VIBRATION_WITHOUT_CURRENT_V}),
            ),
            AnomalyClass(
                "SensorOrIdleAnomaly",
                "Sensor or idle-state inconsistency",
                frozenset(
                    {
                        C.VIBRATION_WITHOUT_CURRENT_C,
                        C.CURRENT_WITHOUT_VIBRATION,
                        C.ZERO_DROP,
                    }
                ),
            ),
            AnomalyClass(
                "UsageAnomaly",
                "Out-of-policy machine use",
                frozenset({C.OUT_OF_HOURS_USE}),
            ),
        )
    )


@dataclass(frozen=True, slots=True)
class LabeledWindow:
    window: Window
    binary_label: BinaryLabel
    class_label: str
    provenance: Provenance
    criteria_fired: tuple[CriterionId, ...] = ()

    def __post_init__(self) -> None:
        normal = self.binary_label is BinaryLabel.NORMAL
        if normal != (self.class_label == NORMAL_CLASS):
            raise DataError(
                "class_label must be Normal exactly when binary_label is Normal"
            )


@dataclass(frozen=True)
class LabeledDataset:
    """Labeled windows of one duration plus the taxonomy that labeled them."""

    windows: tuple[LabeledWindow, ...]
    duration_s: int
    taxonomy: Taxonomy
    # Split hint: UTC day (YYYY-MM-DD) per window, aligned with `windows`.
    days: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        for lw in self.windows:
            if lw.window.duration_s != self.duration_s:
                raise DataError(
                    f"window duration {lw.window.duration_s} != dataset "
                    f"duration {self.duration_s}"
                )
        if self.days and len(self.days) != len(self.windows):
            raise DataError("days hint must align with windows")

    def __len__(self) -> int:
        return len(self.windows)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lw.class_label for lw in self.windows)

    def distinct_labels(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for lw in self.windows:
            seen.setdefault(lw.class_label, None)
        return tuple(seen)


def split_by_annotation(
    windows: list[Window], annotations: list[Annotation]
) -> tuple[list[Window], list[Window]]:
    """Partition windows into (annotated, unannotated) by interval intersection."""
    annotated: list[Window] = []
    unannotated: list[Window] = []
    for w in windows:
        if any(a.intersects(w.ts_start, w.ts_end) for a in annotations):
            annotated.append(w)
        else:
            unannotated.append(w)
    return annotated, unannotated


def _pick_class(firing_set: FiringSet, taxonomy: Taxonomy) -> str:
    """Class of the highest-score firing; ties break on lowest ordinal."""
    best = min(firing_set.firings, key=lambda f: (-f.score, f.criterion.ordinal))
    return taxonomy.class_of(best.criterion)


def derive_labels(
    windows: list[Window],
    cfg: CriteriaConfig,
    taxonomy: Taxonomy,
    history: QuantileHistory | None = None,
    annotations: list[Annotation] | None = None,
    firing_sets: list[FiringSet] | None = None,
) -> LabeledDataset:
    """Label windows by criteria firings.

    binary = Anomalous iff at least one criterion fired; the class label is
    the class of the highest-score firing (ties: lowest criterion ordinal).
    When annotations with an incident_class intersect a window and disagree
    with the criteria verdict, the expert wins: Benign forces Normal;
    MachineFault/CyberIncident force Anomalous (class = firing class when
    available, else the first anomaly class of the taxonomy).
    """
    if not windows:
        return LabeledDataset(windows=(), duration_s=0, taxonomy=taxonomy)
    if firing_sets is not None and len(firing_sets) != len(windows):
        raise DataError("firing_sets must align with windows")
    duration = windows[0].duration_s
    labeled: list[LabeledWindow] = []
    days: list[str] = []
    from .store import day_key

    for wi, w in enumerate(windows):
        fs = firing_sets[wi] if firing_sets is not None else evaluate_all(w, cfg, history)
        fired = tuple(f.criterion for f in fs.firings)
        anomalous = bool(fs.firings)
        class_label = _pick_class(fs, taxonomy) if anomalous else NORMAL_CLASS
        provenance = Provenance.CRITERIA_DERIVED

        verdict = _expert_verdict(w, annotations)
        if verdict is not None:
            if verdict is BinaryLabel.NORMAL and anomalous:
                anomalous, class_label = False, NORMAL_CLASS
                provenance = Provenance.EXPERT_ANNOTATED
            elif verdict is BinaryLabel.ANOMALOUS and not anomalous:
                anomalous = True
                class_label = taxonomy.anomaly_class_ids[0]
                provenance = Provenance.EXPERT_ANNOTATED

        labeled.append(
            LabeledWindow(
                window=w,
                binary_label=(
                    BinaryLabel.ANOMALOUS if anomalous else BinaryLabel.NORMAL
                ),
                class_label=class_label,
                provenance=provenance,
                criteria_fired=fired,
            )
        )
        days.append(day_key(w.ts_start))
    return LabeledDataset(
        windows=tuple(labeled),
        duration_s=duration,
        taxonomy=taxonomy,
        days=tuple(days),
    )


def _expert_verdict(
    w: Window, annotations: list[Annotation] | None
) -> BinaryLabel | None:
    """Expert binary verdict for a window, or None when no opinion applies."""
    if not annotations:
        return None
    verdict: BinaryLabel | None = None
    for a in annotations:
        if a.incident_class is None or not a.intersects(w.ts_start, w.ts_end):
            continue
        if a.incident_class in (
            IncidentClass.MACHINE_FAULT,
            IncidentClass.CYBER_INCIDENT,
        ):
            return BinaryLabel.ANOMALOUS  # fault/cyber outranks benign
        if a.incident_class is IncidentClass.BENIGN:
            verdict = BinaryLabel.NORMAL
    return verdict


# --------------------------------------------------------------------------
# CSV export

LABELED_CSV_HEADER = (
    "window_start,window_end,binary_label,class_label,provenance,criteria_fired"
)


def export_labeled_csv(ds: LabeledDataset) -> str:
    out = io.StringIO()
    out.write(LABELED_CSV_HEADER + "\n")
    for lw in ds.windows:
        fired = ";".join(c.value for c in lw.criteria_fired)
        out.write(
            f"{lw.window.ts_start},{lw.window.ts_end},{lw.binary_label.value},"
            f"{lw.class_label},{lw.provenance.value},{fired}\n"
        )
    return out.getvalue()


def parse_labeled_csv(text: str) -> list[dict]:
    """Parse an exported labeled dataset back into plain records."""
    lines = text.splitlines()
    if not lines or lines[0] != LABELED_CSV_HEADER:
        raise DataError("bad labeled dataset header")
    records = []
    for raw in lines[1:]:
        if not raw:
            continue
        parts = raw.split(",")
        if len(parts) != 6:
            raise DataError(f"bad labeled dataset row: {raw!r}")
        records.append(
            {
                "window_start": int(parts[0]),
                "window_end": int(parts[1]),
                "binary_label": BinaryLabel(parts[2]),
                "class_label": parts[3],
                "provenance": Provenance(parts[4]),
                "criteria_fired": tuple(
                    parse_criterion_id(tok) for tok in parts[5].split(";") if tok
                ),
            }
        )
    return records
