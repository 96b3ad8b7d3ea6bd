"""Built-in seed distributions for the generator.

Every entry is certified against the cross-block norm threshold before it
ships in a library.  Point masses at block-structured vectors give the
extreme norms (``r(r-1)/(n(n-1))`` for a block of ``r`` ones); the
two-block uniform-sum construction gives a full-support seed whose
quadratic matrix is exactly 1/2 on the diagonal, 1/3 inside each half
block and 1/4 across blocks.
"""

from __future__ import annotations

import math

import numpy as np

from .dists import Dist, dirac, make_dist, in_seed_class

__all__ = [
    "block_dirac",
    "spread_dirac",
    "block_sum_matrix",
    "block_sum_seed",
    "default_alpha",
    "seed_library",
    "SeedLibrary",
]

# Exact block-sum seeds enumerate their full 2^n support up to this n.
_EXACT_BLOCK_SUM_LIMIT = 12


def block_dirac(n: int, r: int) -> Dist:
    """Point mass at the vector with ``r`` leading ones."""
    if not 0 <= r <= n:
        raise ValueError("block size out of range")
    v = np.zeros(n, dtype=np.uint8)
    v[:r] = 1
    return dirac(v)


def spread_dirac(n: int, r: int) -> Dist:
    """Point mass with ``r`` ones spread evenly across the coordinates."""
    if not 0 <= r <= n:
        raise ValueError("block size out of range")
    v = np.zeros(n, dtype=np.uint8)
    if r:
        idx = np.floor(np.arange(r) * n / r).astype(np.intp)
        v[idx] = 1
    return dirac(v)


def block_sum_matrix(n: int) -> np.ndarray:
    """Exact quadratic matrix of the two-block uniform-sum seed."""
    if n % 2 != 0:
        raise ValueError("n must be even")
    h = n // 2
    m = np.full((n, n), 0.25)
    m[:h, :h] = 1.0 / 3.0
    m[h:, h:] = 1.0 / 3.0
    np.fill_diagonal(m, 0.5)
    return m


def _block_weight_pattern_counts(h: int):
    """Weight of each vector in one block: uniform block sum t then a
    uniform arrangement of t ones, so a weight-t vector carries
    1 / ((h+1) C(h, t))."""
    return np.array([1.0 / ((h + 1) * math.comb(h, t)) for t in range(h + 1)])


def block_sum_seed(n: int, rng=None, samples: int = 512) -> Dist:
    """Two independent halves, each with a uniformly distributed block sum
    and a uniform arrangement of that many ones.

    Exact (full 2^n support) up to n = 12; beyond that an i.i.d. sampled
    image with merged support, which preserves the quadratic matrix up to
    Monte Carlo error.  Downstream costs are quadratic in support size,
    so the default sample budget stays moderate.
    """
    if n % 2 != 0:
        raise ValueError("n must be even")
    h = n // 2
    if n <= _EXACT_BLOCK_SUM_LIMIT:
        from .bernoulli import enumerate_bits

        bits = enumerate_bits(n)
        per_vec = _block_weight_pattern_counts(h)
        w_lo = bits[:, :h].sum(axis=1)
        w_hi = bits[:, h:].sum(axis=1)
        weights = per_vec[w_lo] * per_vec[w_hi]
        return Dist(bits, weights / weights.sum())
    if rng is None:
        raise ValueError("sampled block-sum seed needs an rng")
    rows = np.zeros((samples, n), dtype=np.uint8)
    for s in range(samples):
        for lo, hi in ((0, h), (h, n)):
            t = int(rng.integers(0, h + 1))
            if t:
                idx = rng.choice(np.arange(lo, hi), t, replace=False)
                rows[s, idx] = 1
    return make_dist(rows)


def default_alpha(n: int) -> float:
    """A level every built-in seed clears at dimension ``n``.

    The binding entry is the block-sum seed, whose centered norm sits near
    1/24 for moderate n (it degrades toward 1/30 at n = 6); 0.001 keeps
    sqrt(alpha) = 0.0316 below all of them.
    """
    return 0.001


class SeedLibrary:
    """Named collection of certified seed distributions."""

    def __init__(self, n: int, alpha: float, entries: dict, rng=None):
        self.n = n
        self.alpha = alpha
        self.entries = dict(entries)
        for name, d in self.entries.items():
            if d.n != n:
                raise ValueError(f"seed {name!r} has wrong dimension")
            if not in_seed_class(d, alpha, rng=rng):
                raise ValueError(f"seed {name!r} fails the norm threshold at alpha={alpha}")

    def names(self):
        return sorted(self.entries)

    def __getitem__(self, name) -> Dist:
        return self.entries[name]

    def __len__(self):
        return len(self.entries)

    def pick(self, rng: np.random.Generator) -> Dist:
        names = self.names()
        return self.entries[names[int(rng.integers(0, len(names)))]]


def seed_library(n: int, alpha: float | None = None, rng=None) -> SeedLibrary:
    """Default library: block and spread point masses at several sizes plus
    the block-sum seed."""
    if alpha is None:
        alpha = default_alpha(n)
    h = n // 2
    entries = {}
    sizes = sorted({max(2, h // 2), max(2, (3 * h) // 4), h})
    for r in sizes:
        entries[f"block{r}"] = block_dirac(n, r)
        entries[f"spread{r}"] = spread_dirac(n, r)
    if n <= _EXACT_BLOCK_SUM_LIMIT:
        entries["blocksum"] = block_sum_seed(n)
    elif rng is not None:
        entries["blocksum"] = block_sum_seed(n, rng=rng)
    return SeedLibrary(n, alpha, entries, rng=rng)
