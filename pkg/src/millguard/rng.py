"""Deterministic counter-based random streams.

All randomness in the package (tree training and the plant simulator) flows
through Philox4x64 counter-based bit generators keyed by (seed, stream id).
Each logical consumer derives its own independent stream from the pair, so
results never depend on evaluation schedule: tree 7 draws the same numbers
whether trees are trained serially or not.
"""

from __future__ import annotations

import numpy as np

# Fixed domain tags keep streams for different purposes disjoint even when
# numeric stream ids collide.
TREE_DOMAIN = 0x7472
SIM_DOMAIN = 0x73696D


def stream(seed: int, domain: int, *ids: int) -> np.random.Generator:
    """A Generator over Philox keyed by (seed, domain, ids...).

    ids are folded into the 128-bit Philox key deterministically; the
    counter starts at zero, so a stream's output depends only on the key.
    """
    lo = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    hi = np.uint64(domain & 0xFFFFFFFF)
    for part in ids:
        # 64-bit mix (splitmix64 finalizer) keeps distinct id tuples apart.
        hi = np.uint64((int(hi) * 0x9E3779B97F4A7C15 + part + 1) & 0xFFFFFFFFFFFFFFFF)
        hi ^= hi >> np.uint64(31)
    key = np.array([lo, hi], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def tree_stream(seed: int, tree_index: int) -> np.random.Generator:
    """Stream for one tree in an ensemble: depends only on (seed, index)."""
    return stream(seed, TREE_DOMAIN, tree_index)


def sim_stream(seed: int, *ids: int) -> np.random.Generator:
    """Stream for a simulator channel or injection."""
    return stream(seed, SIM_DOMAIN, *ids)
