"""Counter-based random number generation.

Normal variates are produced as a pure function of ``(seed, path_index,
step_index)`` using the Philox-4x32-10 block cipher (Salmon et al., "Parallel
random numbers: as easy as 1, 2, 3", SC'11) followed by an inverse-CDF
transform.  Because there is no sequential generator state, results do not
depend on how paths are batched or ordered, which is what makes simulations
bit-reproducible under any execution layout.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_ROUNDS = 10


def philox4x32(c0, c1, c2, c3, key0: int, key1: int):
    """One Philox-4x32-10 block per counter; all counter words are uint64 arrays
    (or scalars) holding 32-bit values.  Returns the four 32-bit output words."""
    x0 = np.asarray(c0, dtype=np.uint64)
    x1 = np.asarray(c1, dtype=np.uint64)
    x2 = np.asarray(c2, dtype=np.uint64)
    x3 = np.asarray(c3, dtype=np.uint64)
    k0 = np.uint64(key0) & _MASK32
    k1 = np.uint64(key1) & _MASK32
    for _ in range(_ROUNDS):
        p0 = _M0 * x0
        p1 = _M1 * x2
        hi0 = p0 >> _SHIFT32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SHIFT32
        lo1 = p1 & _MASK32
        x0 = hi1 ^ x1 ^ k0
        x1 = lo1
        x2 = hi0 ^ x3 ^ k1
        x3 = lo0
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return x0, x1, x2, x3


def uniforms(seed: int, path_index, step_index) -> np.ndarray:
    """Uniform variates in the open interval (0, 1), one per (path, step) pair.

    ``path_index`` and ``step_index`` broadcast against each other; each is a
    nonnegative integer (or array of them) below 2**64.
    """
    p = np.asarray(path_index, dtype=np.uint64)
    s = np.asarray(step_index, dtype=np.uint64)
    p, s = np.broadcast_arrays(p, s)
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    x0, x1, _, _ = philox4x32(
        p & _MASK32,
        p >> _SHIFT32,
        s & _MASK32,
        s >> _SHIFT32,
        seed & 0xFFFFFFFF,
        seed >> 32,
    )
    bits = (x0 << _SHIFT32) | x1
    # 53-bit mantissa, offset by half an ulp so 0.0 and 1.0 are unreachable
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def standard_normals(seed: int, path_index, step_index) -> np.ndarray:
    """Standard normal variates keyed on (seed, path_index, step_index)."""
    return ndtri(uniforms(seed, path_index, step_index))
