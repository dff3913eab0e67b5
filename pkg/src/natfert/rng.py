"""Counter-based random streams (Philox4x32-10).

Every random number used by the simulator is a pure function of
``(key, counter)``, so results do not depend on execution order or on how
work is split across threads. A 64-bit seed is the key; the four 32-bit
counter words address the draw.
"""

import math

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S12 = np.uint64(12)
_TWO_M52 = 2.0**-52

# counter tags (fourth counter word)
TAG_MARRIAGE = 0
TAG_CONCEPTION = 1
TAG_FOREST = 2


@nb.njit(cache=True, inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten rounds of Philox4x32. All arguments are uint64 holding 32-bit words."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _S32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


@nb.njit(cache=True, inline="always")
def to_unit(hi, lo):
    """Map 64 random bits to a double strictly inside (0, 1)."""
    # 52 bits keep the largest value (1 - 2**-53) representable below 1
    bits = ((hi << _S32) | lo) >> _S12
    return (float(bits) + 0.5) * _TWO_M52


@nb.njit(cache=True, inline="always")
def uniform_pair(k0, k1, index, step, tag):
    """Two independent (0, 1) uniforms addressed by (index, step, tag)."""
    i = np.uint64(index)
    x0, x1, x2, x3 = philox4x32(
        i & _MASK32, i >> _S32, np.uint64(step) & _MASK32, np.uint64(tag), k0, k1
    )
    return to_unit(x0, x1), to_unit(x2, x3)


def split_key(seed):
    """Split a non-negative integer seed (< 2**64) into two 32-bit key words."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must lie in [0, 2**64), got {seed}")
    return np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32)


class PhiloxStream:
    """Python-level view of one woman's random stream.

    ``marriage_uniforms(attempt)`` returns the pair used for the
    ``attempt``-th marriage-age proposal; ``spell_uniform(j)`` the uniform
    governing the j-th exposure spell. The compiled cohort kernel reads
    exactly the same numbers.
    """

    def __init__(self, seed, index):
        self.k0, self.k1 = split_key(seed)
        self.index = int(index)

    def marriage_uniforms(self, attempt):
        return uniform_pair(self.k0, self.k1, self.index, attempt, TAG_MARRIAGE)

    def spell_uniform(self, j):
        return uniform_pair(self.k0, self.k1, self.index, j, TAG_CONCEPTION)[0]


@nb.njit(cache=True, inline="always")
def box_muller(u1, u2):
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
