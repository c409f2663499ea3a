"""Persistent telemetry store: CSV ingest, day-oriented append-only logs,
interval queries, annotations, and window segmentation.

Layout under the store root:
    data/YYYY-MM-DD.csv   one append-only log per UTC day, ingest schema
    annotations.jsonl     one JSON object per annotation, rewritten atomically

Concurrency: one writer at a time (ingest and annotation writes serialize
through a lock); readers work over immutable tuple snapshots, so a reader
never observes a half-applied write.
"""

from __future__ import annotations

import csv
import io
import json
import os
import threading
from bisect import bisect_left
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .model import (
    Annotation,
    DataError,
    IncidentClass,
    ProcessContext,
    SensorSample,
    parse_access,
    parse_incident_class,
    parse_material,
    parse_operation,
)
from .windows import DEFAULT_COVERAGE_FLOOR, Window, segment_windows

CSV_HEADER = "ts,temp_c,i_r_a,i_s_a,i_t_a,acc_x_g,acc_y_g,acc_z_g,operation,tool,material,access"
CSV_COLUMNS = CSV_HEADER.split(",")


def format_csv_row(s: SensorSample) -> str:
    """Render one sample as an ingest-schema CSV line (no newline)."""
    return ",".join(
        (
            str(s.ts),
            repr(s.temp),
            repr(s.i_r),
            repr(s.i_s),
            repr(s.i_t),
            repr(s.acc_x),
            repr(s.acc_y),
            repr(s.acc_z),
            s.ctx.operation.value,
            s.ctx.tool,
            s.ctx.material.value,
            s.ctx.access.value,
        )
    )


def parse_csv_fields(fields: list[str]) -> SensorSample:
    """Parse one CSV record into a SensorSample. Raises DataError on bad fields."""
    if len(fields) != len(CSV_COLUMNS):
        raise DataError(f"expected {len(CSV_COLUMNS)} fields, got {len(fields)}")
    try:
        ts = int(fields[0])
    except ValueError:
        raise DataError(f"bad ts {fields[0]!r}") from None
    try:
        reals = [float(x) for x in fields[1:8]]
    except ValueError:
        raise DataError("bad numeric field") from None
    ctx = ProcessContext(
        operation=parse_operation(fields[8]),
        tool=fields[9],
        material=parse_material(fields[10]),
        access=parse_access(fields[11]),
    )
    return SensorSample(
        ts=ts,
        temp=reals[0],
        i_r=reals[1],
        i_s=reals[2],
        i_t=reals[3],
        acc_x=reals[4],
        acc_y=reals[5],
        acc_z=reals[6],
        ctx=ctx,
    )


def day_key(ts: int) -> str:
    """UTC calendar day of an epoch second, as YYYY-MM-DD."""
    return datetime.fromtimestamp(ts, tz=timezone.utc).date().isoformat()


def day_bounds(day: str) -> tuple[int, int]:
    """[start, end) epoch seconds of a UTC calendar day string."""
    try:
        d = datetime.strptime(day, "%Y-%m-%d").replace(tzinfo=timezone.utc)
    except ValueError:
        raise DataError(f"bad day {day!r}, expected YYYY-MM-DD") from None
    start = int(d.timestamp())
    return start, start + 86400


@dataclass(frozen=True, slots=True)
class IngestReport:
    accepted: int
    rejected: int
    first_error: tuple[int, str] | None = None  # (1-based line number, reason)

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "first_error": (
                None
                if self.first_error is None
                else {"line": self.first_error[0], "reason": self.first_error[1]}
            ),
        }


class SampleStore:
    """Telemetry store with optional on-disk persistence.

    root=None keeps everything in memory (handy for tests and simulation
    pipelines); otherwise day logs and annotations live under root.
    """

    def __init__(self, root: str | Path | None = None) -> None:
        self._lock = threading.RLock()
        self._days: dict[str, list[SensorSample]] = {}
        self._flat: tuple[SensorSample, ...] = ()
        self._flat_dirty = False
        self._annotations: dict[str, Annotation] = {}
        self._ann_counter = 0
        self.root = Path(root) if root is not None else None
        if self.root is not None:
            self._load()

    # ------------------------------------------------------------------ load

    def _load(self) -> None:
        data_dir = self.root / "data"
        if data_dir.is_dir():
            for path in sorted(data_dir.glob("*.csv")):
                report = self._ingest_text(
                    path.read_text(encoding="utf-8"), persist=False
                )
                if report.rejected:
                    line, reason = report.first_error or (0, "unknown")
                    raise DataError(
                        f"corrupt day log {path.name}: line {line}: {reason}"
                    )
        ann_path = self.root / "annotations.jsonl"
        if ann_path.is_file():
            for raw in ann_path.read_text(encoding="utf-8").splitlines():
                if not raw.strip():
                    continue
                obj = json.loads(raw)
                a = Annotation(
                    id=obj["id"],
                    ts_start=obj["ts_start"],
                    ts_end=obj["ts_end"],
                    note=obj["note"],
                    annotator=obj["annotator"],
                    incident_class=(
                        parse_incident_class(obj["incident_class"])
                        if obj.get("incident_class")
                        else None
                    ),
                )
                self._annotations[a.id] = a
                if a.id.startswith("a-"):
                    try:
                        self._ann_counter = max(self._ann_counter, int(a.id[2:]))
                    except ValueError:
                        pass

    # ---------------------------------------------------------------- ingest

    def ingest_csv(self, stream: bytes | str | io.IOBase) -> IngestReport:
        """Ingest an ingest-schema CSV stream.

        The header must match CSV_HEADER exactly or the whole file is
        rejected. Rows are accepted when: fields parse, plausibility bounds
        hold, the ts does not duplicate a stored second, and the ts is
        greater than the last stored second of its own UTC day (per-day
        logs are strictly append-only). Ingestion is idempotent per ts:
        re-feeding the same file rejects every row as a duplicate and
        leaves the store unchanged.
        """
        if isinstance(stream, bytes):
            text = stream.decode("utf-8")
        elif isinstance(stream, str):
            text = stream
        else:
            raw = stream.read()
            text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        return self._ingest_text(text, persist=True)

    def _ingest_text(self, text: str, persist: bool) -> IngestReport:
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty stream: missing CSV header") from None
        if header != CSV_COLUMNS:
            raise DataError(
                f"malformed header: expected {CSV_HEADER!r}, got {','.join(header)!r}"
            )

        accepted: list[SensorSample] = []
        rejected = 0
        first_error: tuple[int, str] | None = None
        with self._lock:
            # Track last-ts per day across both stored data and rows accepted
            # earlier in this same stream.
            last_ts: dict[str, int] = {
                day: rows[-1].ts for day, rows in self._days.items() if rows
            }
            for lineno, fields in enumerate(reader, start=2):
                if not fields:
                    continue
                try:
                    sample = parse_csv_fields(fields)
                except DataError as exc:
                    rejected += 1
                    if first_error is None:
                        first_error = (lineno, str(exc))
                    continue
                day = day_key(sample.ts)
                prev = last_ts.get(day)
                if prev is not None and sample.ts <= prev:
                    rejected += 1
                    if first_error is None:
                        reason = (
                            f"duplicate ts {sample.ts}"
                            if prev == sample.ts or self._has_ts(day, sample.ts)
                            else f"non-monotonic ts {sample.ts} (day tail is {prev})"
                        )
                        first_error = (lineno, reason)
                    continue
                last_ts[day] = sample.ts
                accepted.append(sample)

            if accepted:
                by_day: dict[str, list[SensorSample]] = {}
                for s in accepted:
                    by_day.setdefault(day_key(s.ts), []).append(s)
                for day, rows in by_day.items():
                    self._days.setdefault(day, []).extend(rows)
                self._flat_dirty = True
                if persist and self.root is not None:
                    self._persist_rows(by_day)
        return IngestReport(
            accepted=len(accepted), rejected=rejected, first_error=first_error
        )

    def _has_ts(self, day: str, ts: int) -> bool:
        rows = self._days.get(day)
        if not rows:
            return False
        keys = [r.ts for r in rows]
        i = bisect_left(keys, ts)
        return i < len(keys) and keys[i] == ts

    def _persist_rows(self, by_day: dict[str, list[SensorSample]]) -> None:
        data_dir = self.root / "data"
        data_dir.mkdir(parents=True, exist_ok=True)
        for day, rows in by_day.items():
            path = data_dir / f"{day}.csv"
            fresh = not path.exists()
            with path.open("a", encoding="utf-8") as fh:
                if fresh:
                    fh.write(CSV_HEADER + "\n")
                for s in rows:
                    fh.write(format_csv_row(s) + "\n")
                fh.flush()
                os.fsync(fh.fileno())

    def add_samples(self, samples: list[SensorSample]) -> IngestReport:
        """Programmatic ingest path used by simulators and tests."""
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for s in samples:
            buf.write(format_csv_row(s) + "\n")
        return self._ingest_text(buf.getvalue(), persist=True)

    # ----------------------------------------------------------------- reads

    def _snapshot(self) -> tuple[SensorSample, ...]:
        with self._lock:
            if self._flat_dirty or (not self._flat and self._days):
                merged: list[SensorSample] = []
                for day in sorted(self._days):
                    merged.extend(self._days[day])
                self._flat = tuple(merged)
                self._flat_dirty = False
            return self._flat

    def __len__(self) -> int:
        return len(self._snapshot())

    def day_index(self) -> list[tuple[str, int]]:
        """Sorted (day, sample count) pairs for every stored day."""
        with self._lock:
            return [(d, len(rows)) for d, rows in sorted(self._days.items()) if rows]

    @property
    def span(self) -> tuple[int, int] | None:
        """[first_ts, last_ts + 1) of stored data, or None when empty."""
        flat = self._snapshot()
        if not flat:
            return None
        return flat[0].ts, flat[-1].ts + 1

    def query_series(
        self,
        ts_start: int,
        ts_end: int,
        *,
        operation=None,
        tool: str | None = None,
        material=None,
        access=None,
        day: str | None = None,
    ) -> list[SensorSample]:
        """Stored samples in [ts_start, ts_end) matching every given filter."""
        if ts_start >= ts_end:
            raise DataError(f"inverted or empty range [{ts_start}, {ts_end})")
        if day is not None:
            d0, d1 = day_bounds(day)
            ts_start, ts_end = max(ts_start, d0), min(ts_end, d1)
            if ts_start >= ts_end:
                return []
        flat = self._snapshot()
        keys = [s.ts for s in flat]
        lo, hi = bisect_left(keys, ts_start), bisect_left(keys, ts_end)
        out = []
        for s in flat[lo:hi]:
            if operation is not None and s.ctx.operation is not parse_operation(
                operation if isinstance(operation, str) else operation.value
            ):
                continue
            if tool is not None and s.ctx.tool != tool:
                continue
            if material is not None and s.ctx.material is not parse_material(
                material if isinstance(material, str) else material.value
            ):
                continue
            if access is not None and s.ctx.access is not parse_access(
                access if isinstance(access, str) else access.value
            ):
                continue
            out.append(s)
        return out

    def segment_windows(
        self,
        ts_start: int,
        ts_end: int,
        duration_s: int,
        stride_s: int,
        coverage_floor: float = DEFAULT_COVERAGE_FLOOR,
    ) -> list[Window]:
        """Windows tiling [ts_start, ts_end) over the stored samples."""
        if ts_start >= ts_end:
            return []
        samples = self.query_series(ts_start, ts_end)
        return segment_windows(
            samples, ts_start, ts_end, duration_s, stride_s, coverage_floor
        )

    # ----------------------------------------------------------- annotations

    def upsert_annotation(self, a: Annotation) -> str:
        """Insert or replace an annotation; returns its id.

        Pass id='' to have the store assign one. The interval must
        intersect stored data.
        """
        with self._lock:
            if not self._intersects_data(a.ts_start, a.ts_end):
                raise DataError(
                    f"annotation [{a.ts_start}, {a.ts_end}) intersects no stored data"
                )
            if not a.id:
                self._ann_counter += 1
                a = Annotation(
                    id=f"a-{self._ann_counter:06d}",
                    ts_start=a.ts_start,
                    ts_end=a.ts_end,
                    note=a.note,
                    annotator=a.annotator,
                    incident_class=a.incident_class,
                )
            self._annotations[a.id] = a
            self._persist_annotations()
            return a.id

    def list_annotations(self, ts_start: int, ts_end: int) -> list[Annotation]:
        """Annotations whose interval intersects [ts_start, ts_end), by ts_start."""
        if ts_start >= ts_end:
            raise DataError(f"inverted or empty range [{ts_start}, {ts_end})")
        with self._lock:
            found = [
                a
                for a in self._annotations.values()
                if a.intersects(ts_start, ts_end)
            ]
        return sorted(found, key=lambda a: (a.ts_start, a.id))

    def all_annotations(self) -> list[Annotation]:
        with self._lock:
            return sorted(
                self._annotations.values(), key=lambda a: (a.ts_start, a.id)
            )

    def delete_annotation(self, ann_id: str) -> None:
        with self._lock:
            if ann_id not in self._annotations:
                raise DataError(f"unknown annotation id {ann_id!r}")
            del self._annotations[ann_id]
            self._persist_annotations()

    def _intersects_data(self, ts_start: int, ts_end: int) -> bool:
        flat = self._snapshot()
        keys = [s.ts for s in flat]
        lo = bisect_left(keys, ts_start)
        return lo < len(keys) and keys[lo] < ts_end

    def _persist_annotations(self) -> None:
        if self.root is None:
            return
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / "annotations.jsonl"
        tmp = path.with_suffix(".jsonl.tmp")
        lines = []
        for a in sorted(self._annotations.values(), key=lambda x: x.id):
            lines.append(
                json.dumps(
                    {
                        "id": a.id,
                        "ts_start": a.ts_start,
                        "ts_end": a.ts_end,
                        "note": a.note,
                        "annotator": a.annotator,
                        "incident_class": (
                            a.incident_class.value if a.incident_class else None
                        ),
                    },
                    sort_keys=True,
                )
            )
        tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        os.replace(tmp, path)


__all__ = [
    "CSV_HEADER",
    "CSV_COLUMNS",
    "IngestReport",
    "SampleStore",
    "format_csv_row",
    "parse_csv_fields",
    "day_key",
    "day_bounds",
    "IncidentClass",
]
