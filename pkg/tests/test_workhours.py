"""Work calendar: defaults, membership, rendering, config round-trip."""

import pytest

from millguard.model import DataError
from millguard.workhours import WorkCalendar, calendar_from_entries, default_calendar

from conftest import MONDAY


def _entries(**overrides):
    base = {k: "off" for k in ("mon", "tue", "wed", "thu", "fri", "sat", "sun")}
    base["tz"] = "UTC"
    base.update(overrides)
    return base


def test_default_weekday_span():
    cal = default_calendar()
    # Monday 2022-08-01 06:00 UTC is in hours, 05:59 is not.
    assert cal.in_hours(MONDAY + 6 * 3600)
    assert not cal.in_hours(MONDAY + 6 * 3600 - 60)
    # 22:00 is the exclusive end.
    assert cal.in_hours(MONDAY + 22 * 3600 - 60)
    assert not cal.in_hours(MONDAY + 22 * 3600)


def test_default_weekend_off():
    cal = default_calendar()
    saturday_noon = MONDAY + 5 * 86400 + 12 * 3600
    sunday_noon = MONDAY + 6 * 86400 + 12 * 3600
    assert not cal.in_hours(saturday_noon)
    assert not cal.in_hours(sunday_noon)


def test_render_lines_shape():
    lines = default_calendar().render_lines()
    assert "calendar.mon = 06:00-22:00" in lines
    assert "calendar.sat = off" in lines
    assert "calendar.tz = UTC" in lines
    assert len(lines) == 8


def test_round_trip_through_entries():
    cal = default_calendar()
    entries = {}
    for line in cal.render_lines():
        key, _, value = line.partition(" = ")
        entries[key.removeprefix("calendar.")] = value
    back = calendar_from_entries(entries)
    assert back.spans == cal.spans
    assert back.tz == cal.tz


def test_multiple_spans_per_day():
    cal = calendar_from_entries(_entries(mon="06:00-12:00,13:00-22:00"))
    assert cal.in_hours(MONDAY + 8 * 3600)
    assert not cal.in_hours(MONDAY + 12 * 3600 + 1800)  # lunch gap
    assert cal.in_hours(MONDAY + 14 * 3600)


def test_missing_weekday_rejected():
    entries = _entries()
    del entries["wed"]
    with pytest.raises(DataError):
        calendar_from_entries(entries)


@pytest.mark.parametrize(
    "mon",
    [
        "22:00-06:00",  # start after end
        "06:00-25:00",  # hour out of range
        "junk",
        "06:00",        # no range separator payload
    ],
)
def test_invalid_calendar_spans(mon):
    with pytest.raises(DataError):
        calendar_from_entries(_entries(mon=mon))


def test_timezone_shifts_membership():
    # 05:00 UTC is 07:00 in Helsinki during summer, so in hours there.
    cal = calendar_from_entries(_entries(mon="06:00-22:00", tz="Europe/Helsinki"))
    assert cal.in_hours(MONDAY + 5 * 3600)
    assert not cal.in_hours(MONDAY + 2 * 3600)


def test_unknown_timezone_rejected():
    with pytest.raises(DataError):
        calendar_from_entries(_entries(tz="Mars/Olympus"))


def test_in_hours_memo_is_consistent():
    cal = default_calendar()
    t = MONDAY + 10 * 3600
    first = cal.in_hours(t)
    assert cal.in_hours(t) == first
    assert cal.in_hours(t + 1) == first  # same minute, memo hit
