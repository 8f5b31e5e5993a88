"""Seed handling shared by every random generator in the package.

All randomness flows through :func:`make_rng`, which wraps numpy's PCG64
bit generator (PCG-XSL-RR 128/64, O'Neill 2014).  Derived seeds are produced
with SplitMix64 (Steele, Lea & Flood 2014), a counter-based mixer, so a
trial's seed depends only on the master seed and the trial index and never
on the order in which trials are executed.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# Sub-stream identifiers used by the harness when splitting a trial seed.
STREAM_DEFECTS = 0
STREAM_MATRIX = 1
STREAM_NOISE = 2


def splitmix64(state):
    """One SplitMix64 output for the given 64-bit state."""
    z = (state + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed, index):
    """Seed for child stream ``index`` of ``seed``.

    Equivalent to the ``index``-th output of a SplitMix64 generator whose
    state starts at ``seed``.
    """
    if index < 0:
        raise ValueError("stream index must be non-negative")
    return splitmix64((int(seed) + index * GOLDEN_GAMMA) & MASK64)


def make_rng(seed):
    """Return a ``numpy.random.Generator`` backed by PCG64.

    An existing Generator is passed through unchanged so callers can thread a
    single stream through several draws.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))
