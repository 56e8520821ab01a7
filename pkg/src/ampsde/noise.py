"""Deterministic per-path Gaussian increment streams.

Every path owns an independent counter-based stream keyed by
``(seed, stream, path_index)``; identical keys reproduce identical
increments bit for bit, independent of how many other paths run or in
which order.  Fast-time increments of channel ``k`` aggregate exactly
into the slow-time increments used by the reduced equations through
``beta_slow(T) = eps * beta(T / eps^2)``: summing the per-step draws
over one slow step and scaling by ``eps`` is the identical float sum
the coupled drivers consume.
"""

from __future__ import annotations

import numpy as np

__all__ = ["NoiseSource"]


class NoiseSource:
    """Factory of per-path ``numpy`` generators (Philox, counter-based)."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)

    def generator(self, path_index: int) -> np.random.Generator:
        key = np.random.SeedSequence([self.seed, self.stream, int(path_index)])
        return np.random.Generator(np.random.Philox(key))

    def normals(self, path_index: int, shape) -> np.ndarray:
        """One-shot standard normal draw from a fresh path stream."""
        return self.generator(path_index).standard_normal(shape)

    def slow_increments(self, path_index: int, n_slow: int, m_per: int,
                        n_channels: int, eps: float, delta_t: float,
                        sub_chunk: int | None = None) -> np.ndarray:
        """Recompute the aggregated slow-time increments of a path.

        Regenerates the fast stream in the same sub-chunk layout the
        drivers use and returns ``eps * sqrt(delta_t) * sum`` per slow
        step and channel, shape ``(n_slow, n_channels)``.  Summation
        order matches the drivers, so the result is bitwise equal to
        what a coupled run consumed.
        """
        gen = self.generator(path_index)
        out = np.zeros((n_slow, n_channels))
        scale = eps * np.sqrt(delta_t)
        for r in range(n_slow):
            total = np.zeros(n_channels)
            for lo, hi in iter_chunks(m_per, sub_chunk):
                xi = gen.standard_normal((hi - lo, n_channels))
                total += scale * xi.sum(axis=0)
            out[r] = total
        return out


def iter_chunks(m_per: int, sub_chunk: int | None):
    """Split ``m_per`` fast steps into the driver's sub-chunk windows."""
    if sub_chunk is None or sub_chunk >= m_per:
        yield 0, m_per
        return
    lo = 0
    while lo < m_per:
        hi = min(lo + sub_chunk, m_per)
        yield lo, hi
        lo = hi
