"""Deterministic random-number streams.

Every stochastic routine in the package draws from a PCG64 generator
keyed by ``(seed, *key)`` through :class:`numpy.random.SeedSequence`.
Keying each unit of work (a sample point, a sweep row) by its index makes
results independent of scheduling and worker count: stream ``(seed, i)``
is the same object no matter which process asks for it.
"""

from __future__ import annotations

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for ``(seed, *key)``.

    Parameters
    ----------
    seed : int
        Experiment-level seed.
    *key : int
        Index path of the unit of work (e.g. sample index, row index).
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


#: Relative scale of the low-order bit refresh used by orbit samplers.
DITHER_SCALE = 2.0 ** -26


def dither(x, rng: np.random.Generator, lo: float, hi: float):
    """Re-randomize the low-order bits of orbit points in ``[lo, hi)``.

    Branches whose slopes are powers of two act on doubles as exact bit
    shifts, so every floating-point orbit drains its mantissa and lands on
    a short dyadic cycle after ~50 steps — a measure-zero behaviour that
    poisons Birkhoff averages.  Quantizing to the grid of spacing
    ``(hi - lo) * DITHER_SCALE`` and redrawing the remainder uniformly
    replaces everything below that scale with fresh bits, which simulates
    the orbit of a generic real refinement of the same sample.  The scale
    must exceed the worst single-step bit consumption (slopes up to
    ``2**26``), and sits far below every tolerance in the package.

    Points that the refresh would push to ``hi`` or beyond are left
    unchanged.

    Parameters
    ----------
    x : float or ndarray
        Point(s) in ``[lo, hi)``.
    rng : numpy.random.Generator
        Stream supplying the refresh bits.
    lo, hi : float
        Interval bounds.
    """
    q = (hi - lo) * DITHER_SCALE
    if np.isscalar(x) or np.ndim(x) == 0:
        y = lo + (np.floor((float(x) - lo) / q) + rng.uniform()) * q
        return y if y < hi else float(x)
    y = lo + (np.floor((x - lo) / q) + rng.uniform(size=np.shape(x))) * q
    return np.where(y < hi, y, x)
