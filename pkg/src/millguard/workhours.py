"""Weekly working-hours calendar with timezone ownership.

Timestamps everywhere else in the package are UTC epoch seconds; this module
is the single place where they get converted to plant-local wall time to
decide whether the machine was supposed to be running.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from zoneinfo import ZoneInfo

from .model import DataError

WEEKDAY_KEYS = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


def _parse_minute(token: str) -> int:
    parts = token.split(":")
    if len(parts) != 2:
        raise DataError(f"bad time token {token!r}, expected HH:MM")
    try:
        hh, mm = int(parts[0]), int(parts[1])
    except ValueError:
        raise DataError(f"bad time token {token!r}") from None
    if not (0 <= hh <= 24 and 0 <= mm < 60) or (hh == 24 and mm != 0):
        raise DataError(f"time {token!r} out of range")
    return hh * 60 + mm


@dataclass(frozen=True)
class WorkCalendar:
    """Per-weekday working spans in plant-local minutes of day, plus timezone.

    spans maps weekday index (0=Monday .. 6=Sunday) to a tuple of
    (start_minute, end_minute) half-open ranges. Every weekday must be
    present; an empty tuple means a non-working day.
    """

    spans: dict[int, tuple[tuple[int, int], ...]]
    tz: str = "UTC"
    _zone: ZoneInfo = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if set(self.spans) != set(range(7)):
            raise DataError("calendar must define all 7 weekdays")
        for day, ranges in self.spans.items():
            for start, end in ranges:
                if not (0 <= start < end <= 24 * 60):
                    raise DataError(
                        f"calendar span {start}-{end} invalid on weekday {day}"
                    )
        try:
            zone = ZoneInfo(self.tz)
        except Exception:
            raise DataError(f"unknown timezone {self.tz!r}") from None
        object.__setattr__(self, "_zone", zone)
        object.__setattr__(self, "_minute_memo", {})

    def in_hours(self, ts: int) -> bool:
        """True when the UTC epoch second falls inside a working span."""
        # Membership only changes at minute granularity; memoize per minute.
        memo: dict = self._minute_memo  # type: ignore[attr-defined]
        key = ts // 60
        hit = memo.get(key)
        if hit is not None:
            return hit
        local = datetime.fromtimestamp(ts, tz=timezone.utc).astimezone(self._zone)
        minute = local.hour * 60 + local.minute
        result = False
        for start, end in self.spans[local.weekday()]:
            if start <= minute < end:
                result = True
                break
        memo[key] = result
        return result

    def render_lines(self) -> list[str]:
        """Serialize as `calendar.<day> = HH:MM-HH:MM[,...]` lines plus tz."""
        lines = []
        for idx, key in enumerate(WEEKDAY_KEYS):
            ranges = self.spans[idx]
            if not ranges:
                lines.append(f"calendar.{key} = off")
            else:
                body = ",".join(
                    f"{a // 60:02d}:{a % 60:02d}-{b // 60:02d}:{b % 60:02d}"
                    for a, b in ranges
                )
                lines.append(f"calendar.{key} = {body}")
        lines.append(f"calendar.tz = {self.tz}")
        return lines


def default_calendar() -> WorkCalendar:
    """Mon-Fri 06:00-22:00, weekends off, UTC."""
    working = ((6 * 60, 22 * 60),)
    spans: dict[int, tuple[tuple[int, int], ...]] = {i: working for i in range(5)}
    spans[5] = ()
    spans[6] = ()
    return WorkCalendar(spans=spans, tz="UTC")


def calendar_from_entries(entries: dict[str, str]) -> WorkCalendar:
    """Build a calendar from `calendar.*` config entries (keys without prefix)."""
    tz = entries.get("tz", "UTC")
    spans: dict[int, tuple[tuple[int, int], ...]] = {}
    for idx, key in enumerate(WEEKDAY_KEYS):
        raw = entries.get(key)
        if raw is None:
            raise DataError(f"calendar is missing weekday {key!r}")
        raw = raw.strip()
        if raw.lower() == "off":
            spans[idx] = ()
            continue
        ranges = []
        for chunk in raw.split(","):
            parts = chunk.strip().split("-")
            if len(parts) != 2:
                raise DataError(f"bad calendar span {chunk!r} for {key}")
            ranges.append((_parse_minute(parts[0]), _parse_minute(parts[1])))
        spans[idx] = tuple(ranges)
    return WorkCalendar(spans=spans, tz=tz)
