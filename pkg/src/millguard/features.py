"""Window feature extraction for the tree learner.

The feature schema is versioned and its ordering is frozen: models embed
the schema version and refuse to predict on vectors from another version.

Schema fv1 (48 features):
  - for each channel in (temp, i_r, i_s, i_t, i_mean, vib_rms):
        <ch>_mean, <ch>_std, <ch>_min, <ch>_max          (24)
    vib_rms is the per-sample vibration magnitude sqrt(x^2+y^2+z^2).
  - for each current/vibration channel (i_r, i_s, i_t, i_mean, vib_rms):
        <ch>_peak_count   samples above window mean + 2*std
        <ch>_slope        least-squares slope per second            (10)
  - one-hot fractions: operation (6), material (5), access (2)      (13)
  - coverage                                                        (1)

One-hot slots hold the fraction of window samples with that value, so a
context-pure window gets an exact 0/1 encoding and mixed windows degrade
gracefully instead of being mislabeled by a majority vote.

A window with no samples encodes as the all-zero vector: coverage 0
identifies it exactly, and since no criterion can fire on an empty window
such rows carry the Normal label through training and prediction. This
keeps feature rows aligned one-to-one with segmented windows even across
data-free stretches (nights, weekends).
"""

from __future__ import annotations

import numpy as np

from .model import Access, Material, Operation, Window

SCHEMA_VERSION = "fv1"

_STAT_CHANNELS = ("temp", "i_r", "i_s", "i_t", "i_mean", "vib_rms")
_PEAK_SLOPE_CHANNELS = ("i_r", "i_s", "i_t", "i_mean", "vib_rms")
_PEAK_SIGMA = 2.0

FEATURE_NAMES: tuple[str, ...] = tuple(
    [f"{ch}_{stat}" for ch in _STAT_CHANNELS for stat in ("mean", "std", "min", "max")]
    + [
        f"{ch}_{stat}"
        for ch in _PEAK_SLOPE_CHANNELS
        for stat in ("peak_count", "slope")
    ]
    + [f"op_{op.value}" for op in Operation]
    + [f"material_{m.value}" for m in Material]
    + [f"access_{a.value}" for a in Access]
    + ["coverage"]
)

N_FEATURES = len(FEATURE_NAMES)

# Features whose split thresholds get the extra DOT tag: the per-window
# maximum current observations.
MAX_CURRENT_FEATURES = frozenset(
    i for i, name in enumerate(FEATURE_NAMES)
    if name in ("i_r_max", "i_s_max", "i_t_max", "i_mean_max")
)


def _slope_per_second(ts: np.ndarray, y: np.ndarray) -> float:
    if len(y) < 2:
        return 0.0
    t = ts.astype(float)
    t -= t[0]
    tm, ym = t.mean(), y.mean()
    denom = float(np.sum((t - tm) ** 2))
    if denom == 0.0:
        return 0.0
    return float(np.sum((t - tm) * (y - ym))) / denom


def extract_features(w: Window) -> np.ndarray:
    """Feature vector for one window, ordered per FEATURE_NAMES."""
    if not w.samples:
        return np.zeros(N_FEATURES, dtype=float)
    n = len(w.samples)
    ts = np.fromiter((s.ts for s in w.samples), dtype=np.int64, count=n)
    channels = {
        "temp": np.fromiter((s.temp for s in w.samples), dtype=float, count=n),
        "i_r": np.fromiter((s.i_r for s in w.samples), dtype=float, count=n),
        "i_s": np.fromiter((s.i_s for s in w.samples), dtype=float, count=n),
        "i_t": np.fromiter((s.i_t for s in w.samples), dtype=float, count=n),
    }
    channels["i_mean"] = (channels["i_r"] + channels["i_s"] + channels["i_t"]) / 3.0
    channels["vib_rms"] = np.fromiter(
        (s.vib_mag for s in w.samples), dtype=float, count=n
    )

    out = np.empty(N_FEATURES, dtype=float)
    pos = 0
    for ch in _STAT_CHANNELS:
        col = channels[ch]
        out[pos] = col.mean()
        out[pos + 1] = col.std()
        out[pos + 2] = col.min()
        out[pos + 3] = col.max()
        pos += 4
    for ch in _PEAK_SLOPE_CHANNELS:
        col = channels[ch]
        thr = col.mean() + _PEAK_SIGMA * col.std()
        out[pos] = float(np.count_nonzero(col > thr))
        out[pos + 1] = _slope_per_second(ts, col)
        pos += 2
    for op in Operation:
        out[pos] = sum(1 for s in w.samples if s.ctx.operation is op) / n
        pos += 1
    for m in Material:
        out[pos] = sum(1 for s in w.samples if s.ctx.material is m) / n
        pos += 1
    for a in Access:
        out[pos] = sum(1 for s in w.samples if s.ctx.access is a) / n
        pos += 1
    out[pos] = w.coverage
    return out


def feature_matrix(windows) -> np.ndarray:
    """Stack feature vectors for many windows into an (n, N_FEATURES) array."""
    rows = [extract_features(w) for w in windows]
    if not rows:
        return np.empty((0, N_FEATURES), dtype=float)
    return np.vstack(rows)
