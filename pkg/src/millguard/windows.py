"""Window segmentation over ordered sample sequences."""

from __future__ import annotations

from bisect import bisect_left

from .model import DataError, SensorSample, Window

DEFAULT_COVERAGE_FLOOR = 0.5

# Default window lengths: 30 s for multi-class work, 900 s for binary sweeps.
SHORT_WINDOW_S = 30
LONG_WINDOW_S = 900


def segment_windows(
    samples: list[SensorSample] | tuple[SensorSample, ...],
    ts_start: int,
    ts_end: int,
    duration_s: int,
    stride_s: int,
    coverage_floor: float = DEFAULT_COVERAGE_FLOOR,
) -> list[Window]:
    """Tile [ts_start, ts_end) with windows of duration_s every stride_s.

    Windows start at ts_start + k*stride_s for k = 0, 1, ... while the start
    lies inside the range. A window whose nominal end would extend past
    ts_end is truncated to the range end, so with stride = duration the
    emitted windows exactly partition the range and every stored sample in
    range lands in exactly one window.

    samples must be ordered by ts (strictly increasing). Coverage is the
    number of present samples divided by the window's own duration; windows
    under coverage_floor are emitted with low_coverage=True.
    """
    if duration_s < 1:
        raise DataError("duration_s must be >= 1")
    if stride_s < 1:
        raise DataError("stride_s must be >= 1")
    if ts_start >= ts_end:
        return []

    ts_values = [s.ts for s in samples]
    out: list[Window] = []
    start = ts_start
    while start < ts_end:
        end = min(start + duration_s, ts_end)
        lo = bisect_left(ts_values, start)
        hi = bisect_left(ts_values, end)
        body = tuple(samples[lo:hi])
        duration = end - start
        coverage = len(body) / duration
        out.append(
            Window(
                ts_start=start,
                ts_end=end,
                samples=body,
                coverage=coverage,
                low_coverage=coverage < coverage_floor,
            )
        )
        start += stride_s
    return out
