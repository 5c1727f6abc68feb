"""Randomness plumbing.

Every random choice in the package goes through :func:`uniform_below` or
:func:`fair_bits`. A random source is either a :class:`numpy.random.Generator`
or any object with a ``uniform_below(bound)`` method (see
:mod:`condlab.exhaustive`, which uses this hook to enumerate all outcomes).
"""
import os

import numpy as np

_MASK64 = (1 << 64) - 1
_INT63 = (1 << 63) - 1


def as_rng(rng=None):
    """Return a usable random source from a seed, a generator or ``None``."""
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(None if rng is None else int(rng))
    if isinstance(rng, np.random.Generator) or hasattr(rng, "uniform_below"):
        return rng
    raise TypeError(f"unsupported random source: {type(rng).__name__}")


def uniform_below(rng, bound):
    """Exact uniform integer in ``[0, bound)`` for arbitrarily large ``bound``."""
    bound = int(bound)
    if bound <= 0:
        raise ValueError("bound must be positive")
    if not isinstance(rng, np.random.Generator):
        return int(rng.uniform_below(bound))
    if bound <= _INT63:
        return int(rng.integers(bound))
    k = bound.bit_length()
    nbytes = (k + 7) // 8
    drop = 8 * nbytes - k
    while True:
        r = int.from_bytes(rng.bytes(nbytes), "little") >> drop
        if r < bound:
            return r


def fair_bits(rng, size):
    """Boolean array of ``size`` independent fair coins."""
    if isinstance(rng, np.random.Generator):
        return rng.integers(0, 2, size=size).astype(bool)
    return np.array([rng.uniform_below(2) == 1 for _ in range(size)], dtype=bool)


def splitmix64(x):
    """The SplitMix64 finaliser, used to derive per-trial seeds."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(root, index):
    """Seed of trial ``index`` under root seed ``root``: splitmix64(root XOR index)."""
    return splitmix64((int(root) ^ int(index)) & _MASK64)


def env_seed(default=0):
    """Seed from ``CONDLAB_SEED`` if set, else ``default``."""
    value = os.environ.get("CONDLAB_SEED")
    return int(value, 0) if value else default
