"""Detections CSV: one row per scored window, lossless round-trip."""

from __future__ import annotations

from dataclasses import dataclass

from .criteria import FiringSet, parse_criterion_id
from .model import DataError
from .trees import Prediction

DETECTIONS_HEADER = (
    "window_start,window_end,duration_s,predicted_class,confidence,"
    "criteria_fired,model_id"
)


@dataclass(frozen=True, slots=True)
class DetectionRow:
    window_start: int
    window_end: int
    duration_s: int
    predicted_class: str
    confidence: float
    criteria_fired: tuple[str, ...]
    model_id: str


def export_detections_csv(
    predictions: list[Prediction],
    firings: list[FiringSet] | None,
    model_id: str,
) -> str:
    """Render predictions (plus the criteria that fired on each window) as
    CSV text. `firings` aligns with `predictions` by position; pass None when
    criteria were not evaluated. Confidence uses repr so parsing recovers the
    exact float.
    """
    if firings is not None and len(firings) != len(predictions):
        raise DataError("firings must align with predictions")
    lines = [DETECTIONS_HEADER]
    for i, p in enumerate(predictions):
        w = p.window
        if w is None:
            raise DataError("prediction without a window cannot be exported")
        if "," in p.class_label or ";" in p.class_label:
            raise DataError(f"class label {p.class_label!r} not CSV-safe")
        fired = firings[i].tokens() if firings is not None else ""
        lines.append(
            f"{w.ts_start},{w.ts_end},{w.duration_s},{p.class_label},"
            f"{p.confidence!r},{fired},{model_id}"
        )
    return "\n".join(lines) + "\n"


def parse_detections_csv(text: str) -> list[DetectionRow]:
    lines = text.splitlines()
    if not lines or lines[0] != DETECTIONS_HEADER:
        raise DataError("bad detections header")
    rows = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise DataError(f"line {ln}: expected 7 fields, got {len(parts)}")
        try:
            start, end, dur = int(parts[0]), int(parts[1]), int(parts[2])
            conf = float(parts[4])
        except ValueError as exc:
            raise DataError(f"line {ln}: {exc}") from None
        tokens = tuple(t for t in parts[5].split(";") if t)
        for t in tokens:
            parse_criterion_id(t)  # validates the token
        rows.append(
            DetectionRow(
                window_start=start,
                window_end=end,
                duration_s=dur,
                predicted_class=parts[3],
                confidence=conf,
                criteria_fired=tokens,
                model_id=parts[6],
            )
        )
    return rows
