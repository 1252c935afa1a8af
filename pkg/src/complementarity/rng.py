"""Counter-based random streams keyed on integer coordinates.

Every draw is a pure function of ``(seed, *coords, draw)``, so results do not
depend on iteration order, batching or parallel scheduling. The mixer is the
SplitMix64 finaliser chained over the key parts; it is vectorised over numpy
``uint64`` arrays (wrap-around arithmetic is the intended behaviour).
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV_2_53 = 1.0 / (1 << 53)


def _splitmix(x: np.ndarray) -> np.ndarray:
    z = x + GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def hash_key(seed: int, *parts) -> np.ndarray:
    """Mix ``seed`` with each key part in turn; parts may be int arrays."""
    with np.errstate(over="ignore"):
        h = _splitmix(np.asarray(seed, dtype=np.uint64))
        for part in parts:
            h = _splitmix(h ^ np.asarray(part).astype(np.uint64))
    return h


def uniform(seed: int, *parts) -> np.ndarray:
    """Uniform doubles in [0, 1) with 53 random bits."""
    return (hash_key(seed, *parts) >> _S11).astype(np.float64) * _INV_2_53


def standard_normal(seed: int, *parts) -> np.ndarray:
    """Box-Muller normals built from draws 0 and 1 of the keyed stream."""
    u1 = uniform(seed, *parts, 0)
    u2 = uniform(seed, *parts, 1)
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
