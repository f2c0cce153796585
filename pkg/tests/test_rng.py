import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degenlab.rng import LANE_JUMP, LANE_KILL, normals, philox4x32, raw_block, uniforms

KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    ((0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344), (0xA4093822, 0x299F31D0),
     (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1)),
]


def philox_scalar(ctr, key, rounds=10):
    # plain-int reference, written from the round definition
    c = list(ctr)
    k = list(key)
    for r in range(rounds):
        if r:
            k = [(k[0] + 0x9E3779B9) & 0xFFFFFFFF, (k[1] + 0xBB67AE85) & 0xFFFFFFFF]
        p0 = 0xD2511F53 * c[0]
        p1 = 0xCD9E8D57 * c[2]
        c = [((p1 >> 32) ^ c[1] ^ k[0]) & 0xFFFFFFFF, p1 & 0xFFFFFFFF,
             ((p0 >> 32) ^ c[3] ^ k[1]) & 0xFFFFFFFF, p0 & 0xFFFFFFFF]
    return tuple(c)


@pytest.mark.parametrize("ctr,key,expected", KAT)
def test_known_answers(ctr, key, expected):
    out = tuple(int(w) for w in philox4x32(ctr, key))
    assert out == expected
    assert philox_scalar(ctr, key) == expected


u32 = st.integers(0, 2**32 - 1)


@settings(max_examples=200, deadline=None)
@given(st.tuples(u32, u32, u32, u32), st.tuples(u32, u32))
def test_vectorized_matches_scalar(ctr, key):
    assert tuple(int(w) for w in philox4x32(ctr, key)) == philox_scalar(ctr, key)


def test_batch_independent_of_split():
    ids = np.arange(1000)
    whole = uniforms(7, ids, 3, LANE_JUMP)[0]
    parts = np.concatenate([uniforms(7, ids[:300], 3, LANE_JUMP)[0], uniforms(7, ids[300:], 3, LANE_JUMP)[0]])
    assert np.array_equal(whole, parts)
    rev = uniforms(7, ids[::-1], 3, LANE_JUMP)[0][::-1]
    assert np.array_equal(whole, rev)


def test_streams_differ():
    ids = np.arange(100)
    a = raw_block(1, ids, 0, LANE_JUMP)[0]
    assert not np.array_equal(a, raw_block(2, ids, 0, LANE_JUMP)[0])
    assert not np.array_equal(a, raw_block(1, ids, 1, LANE_JUMP)[0])
    assert not np.array_equal(a, raw_block(1, ids, 0, LANE_KILL)[0])
    with pytest.raises(ValueError):
        raw_block(-1, ids, 0, 0)


def test_uniform_and_normal_moments():
    ids = np.arange(200_000)
    u1, u2 = uniforms(11, ids, 0, LANE_JUMP)
    assert u1.min() >= 0 and u1.max() < 1
    assert abs(u1.mean() - 0.5) < 4 * np.sqrt(1 / 12 / ids.size)
    assert abs(np.corrcoef(u1, u2)[0, 1]) < 0.01
    z1, z2 = normals(11, ids, 0, LANE_JUMP)
    for z in (z1, z2):
        assert abs(z.mean()) < 4 / np.sqrt(ids.size)
        assert abs(z.var() - 1) < 4 * np.sqrt(2 / ids.size)
