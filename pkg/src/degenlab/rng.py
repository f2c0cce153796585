"""Counter-based random numbers (Philox4x32-10), vectorized over numpy arrays.

A draw is a pure function of ``(key, counter)``, so a particle's jump ``k``
gets the same numbers no matter how the population is split into batches or
in which order events are processed.
"""
from __future__ import annotations

import numpy as np

M0 = np.uint64(0xD2511F53)
M1 = np.uint64(0xCD9E8D57)
W0 = np.uint64(0x9E3779B9)
W1 = np.uint64(0xBB67AE85)
MASK32 = np.uint64(0xFFFFFFFF)
SHIFT32 = np.uint64(32)
ROUNDS = 10

# lanes of the counter word used by the walkers
LANE_JUMP = 0
LANE_PHASE = 1
LANE_KILL = 2
LANE_INIT = 3


def philox4x32(ctr, key, rounds: int = ROUNDS):
    """Philox4x32 block function.

    ``ctr`` is a sequence of four uint32 arrays (broadcastable), ``key`` a pair.
    Returns four uint32-valued ``uint64`` arrays.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & MASK32 for c in ctr)
    k0, k1 = (np.asarray(k, dtype=np.uint64) & MASK32 for k in key)
    for r in range(rounds):
        if r:
            k0 = (k0 + W0) & MASK32
            k1 = (k1 + W1) & MASK32
        p0 = c0 * M0
        p1 = c2 * M1
        c0, c1, c2, c3 = (
            (p1 >> SHIFT32) ^ c1 ^ k0,
            p1 & MASK32,
            (p0 >> SHIFT32) ^ c3 ^ k1,
            p0 & MASK32,
        )
    return c0, c1, c2, c3


def _split64(x):
    x = np.asarray(x, dtype=np.uint64)
    return x & MASK32, x >> SHIFT32


def raw_block(seed: int, ids, event, lane: int):
    """Four 32-bit words for each ``(id, event)`` pair under ``seed``."""
    if seed < 0:
        raise ValueError("seed must be >= 0")
    ids = np.asarray(ids, dtype=np.uint64)
    event = np.asarray(event, dtype=np.uint64)
    id_lo, id_hi = _split64(ids)
    ev_lo, _ = _split64(event)
    s_lo, s_hi = seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF
    ctr = (ev_lo, np.uint64(lane), id_lo, id_hi)
    return philox4x32(ctr, (np.uint64(s_lo), np.uint64(s_hi)))


def _to_unit(a, b):
    # 53-bit double in [0, 1)
    return ((a >> np.uint64(5)).astype(np.float64) * 67108864.0
            + (b >> np.uint64(6)).astype(np.float64)) / 9007199254740992.0


def uniforms(seed: int, ids, event, lane: int):
    """Two independent U[0,1) arrays per ``(id, event)``."""
    w = raw_block(seed, ids, event, lane)
    return _to_unit(w[0], w[1]), _to_unit(w[2], w[3])


def normals(seed: int, ids, event, lane: int):
    """Two independent standard normal arrays per ``(id, event)`` (Box-Muller)."""
    u1, u2 = uniforms(seed, ids, event, lane)
    rad = np.sqrt(-2.0 * np.log1p(-u1))
    ang = 2.0 * np.pi * u2
    return rad * np.cos(ang), rad * np.sin(ang)
