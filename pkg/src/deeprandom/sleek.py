"""Permutation-kernel smoothing of distributions.

A smoothing kernel assigns probability mass to permutation *support sizes*
(the number of displaced coordinates); within a size class every
permutation gets equal weight, which is forced by conjugation invariance
and keeps kernels closed under composition.  Applying a kernel replaces a
distribution by the corresponding mixture of its relabelings, flattening
sharp directional structure before protocol use.

Support size 1 is impossible (a bijection cannot displace exactly one
point), so valid sizes are {0, 2, 3, ..., n}.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, KernelConsistencyError
from .dists import Dist, Perm, mix, identity_perm

__all__ = [
    "derangement_count",
    "size_class_count",
    "SleekKernel",
    "identity_kernel",
    "dirac_kernel",
    "sample_sigma",
    "sleek",
    "compose_check",
    "kernel_gap",
    "smoothing_preset",
    "apply_smoothing",
    "EXACT_SLEEK_LIMIT",
]

# Exact sleeking and kernel composition enumerate S_n; 7! = 5040 is the cap.
EXACT_SLEEK_LIMIT = 7


def derangement_count(n: int) -> int:
    """Number of fixed-point-free permutations of n elements."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 1
    if n == 1:
        return 0
    a, b = 1, 0  # D(0), D(1)
    for m in range(2, n + 1):
        a, b = b, (m - 1) * (a + b)
    return b


def size_class_count(n: int, ell: int) -> int:
    """Number of permutations of S_n with support size exactly ``ell``."""
    if ell < 0 or ell > n:
        raise ValueError("support size out of range")
    return math.comb(n, ell) * derangement_count(ell)


@dataclass(frozen=True)
class SleekKernel:
    """Mass per permutation support size; uniform within each size class."""

    n: int
    size_weights: tuple  # tuple of (size, mass) pairs, sorted by size

    def __post_init__(self):
        total = 0.0
        seen = set()
        for ell, w in self.size_weights:
            if ell == 1:
                raise ValueError("support size 1 is impossible for a permutation")
            if ell < 0 or ell > self.n:
                raise ValueError(f"support size {ell} out of range for n={self.n}")
            if w < 0.0:
                raise ValueError("kernel masses must be non-negative")
            if ell in seen:
                raise ValueError("duplicate support size")
            seen.add(ell)
            total += w
        if abs(total - 1.0) > 1e-12:
            raise ValueError("kernel masses must sum to 1 within 1e-12")

    @classmethod
    def from_mapping(cls, n: int, mapping) -> "SleekKernel":
        items = tuple(sorted((int(e), float(w)) for e, w in dict(mapping).items() if w != 0.0))
        return cls(n, items)

    def mass(self, ell: int) -> float:
        for e, w in self.size_weights:
            if e == ell:
                return w
        return 0.0

    def per_perm_weight(self, ell: int) -> float:
        """Weight assigned to each individual permutation of support size ell."""
        m = self.mass(ell)
        return m / size_class_count(self.n, ell) if m else 0.0

    def sizes(self):
        return [e for e, _ in self.size_weights]

    def is_identity(self) -> bool:
        return self.size_weights == ((0, 1.0),)


def identity_kernel(n: int) -> SleekKernel:
    return SleekKernel.from_mapping(n, {0: 1.0})


def dirac_kernel(n: int, ell: int) -> SleekKernel:
    """All mass on one support size, uniform over that class."""
    return SleekKernel.from_mapping(n, {ell: 1.0})


def _sample_derangement(size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform fixed-point-free permutation of ``size`` points by rejection.

    Acceptance probability tends to 1/e, so the expected number of tries
    is bounded.
    """
    if size == 0:
        return np.empty(0, dtype=np.intp)
    while True:
        p = rng.permutation(size)
        if not np.any(p == np.arange(size)):
            return p


def sample_sigma(kernel: SleekKernel, rng: np.random.Generator) -> Perm:
    """Draw a permutation: size by kernel mass, support uniformly, then a
    uniform derangement on the support."""
    sizes = [e for e, _ in kernel.size_weights]
    masses = np.array([w for _, w in kernel.size_weights])
    ell = sizes[int(rng.choice(len(sizes), p=masses))]
    mapping = np.arange(kernel.n, dtype=np.intp)
    if ell:
        support = np.sort(rng.choice(kernel.n, ell, replace=False))
        der = _sample_derangement(ell, rng)
        mapping[support] = support[der]
    return Perm(tuple(int(v) for v in mapping))


def _perms_by_size(n: int):
    """All of S_n grouped by support size (n <= EXACT_SLEEK_LIMIT)."""
    if n > EXACT_SLEEK_LIMIT:
        raise CapabilityError(f"exact sleeking limited to n <= {EXACT_SLEEK_LIMIT}")
    groups: dict[int, list] = {}
    idx = np.arange(n)
    for p in itertools.permutations(range(n)):
        arr = np.asarray(p, dtype=np.intp)
        ell = int(np.sum(arr != idx))
        groups.setdefault(ell, []).append(Perm(p))
    return groups


def sleek(phi: Dist, kernel: SleekKernel, mode: str = "auto",
          budget: int = 256, rng=None) -> Dist:
    """Apply the kernel: the mixture over sigma of ``phi ∘ sigma``.

    Exact mode builds the full mixture (n <= 7).  Sampled mode draws
    ``budget`` kernel permutations and mixes the relabelings uniformly,
    a Monte Carlo image whose mixture-level error decays at the usual
    1/sqrt(budget) rate.
    """
    if kernel.n != phi.n:
        raise ValueError("kernel dimension mismatch")
    if kernel.is_identity():
        return phi
    if mode == "auto":
        mode = "exact" if phi.n <= EXACT_SLEEK_LIMIT else "sampled"
    if mode == "exact":
        groups = _perms_by_size(phi.n)
        parts, coeffs = [], []
        for ell, _ in kernel.size_weights:
            per = kernel.per_perm_weight(ell)
            if per == 0.0:
                continue
            for sigma in groups.get(ell, []):
                parts.append(phi.compose(sigma))
                coeffs.append(per)
        return mix(parts, coeffs)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    if rng is None:
        raise ValueError("sampled sleeking needs an explicit rng")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    parts = [phi.compose(sample_sigma(kernel, rng)) for _ in range(budget)]
    return mix(parts)


def compose_check(g1: SleekKernel, g2: SleekKernel) -> SleekKernel:
    """Kernel of the composition ``T_{g1} ∘ T_{g2}``, verified well-defined.

    Exhaustively convolves over S_n (n <= 7) and checks that the
    coefficient landing on each permutation depends only on its support
    size; a spread beyond 1e-12 inside any class raises.

    Beware: the coefficient is provably constant on conjugacy classes
    (cycle types), but size classes merge several cycle types and the
    coefficient genuinely varies across them for most kernel pairs.
    Example: two transposition kernels compose to even permutations only,
    so at n = 4 the 4-cycles (odd) get zero mass while the
    double-transpositions (even, same support size 4) do not.  The check
    therefore raises for such pairs; :func:`compose_size_masses` still
    reports the well-defined per-size mass aggregate.
    """
    if g1.n != g2.n:
        raise ValueError("kernel dimension mismatch")
    n = g1.n
    if n > EXACT_SLEEK_LIMIT:
        raise CapabilityError(f"kernel composition check limited to n <= {EXACT_SLEEK_LIMIT}")
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    count = perms.shape[0]
    sizes = (perms != np.arange(n)).sum(axis=1)
    inv = np.empty_like(perms)
    rows = np.arange(count)[:, None]
    inv[rows, perms] = np.arange(n)[None, :]
    w1 = np.array([g1.per_perm_weight(int(s)) for s in sizes])
    coeffs = np.empty(count)
    for s_idx in range(count):
        # mu = sigma^{-1} ∘ target  =>  coefficient = sum_sigma g1(|sigma|) g2(|mu|)
        comp = inv[:, perms[s_idx]]
        mu_sizes = (comp != np.arange(n)).sum(axis=1)
        w2 = np.array([g2.per_perm_weight(int(s)) for s in mu_sizes])
        coeffs[s_idx] = float(w1 @ w2)
    mapping: dict[int, float] = {}
    for ell in range(n + 1):
        cls = coeffs[sizes == ell]
        if cls.size == 0:
            continue
        if cls.max() - cls.min() > 1e-12:
            raise KernelConsistencyError(
                f"composed coefficient varies within size class {ell}"
            )
        mass = float(cls.sum())
        if mass:
            mapping[ell] = mass
    return SleekKernel.from_mapping(n, mapping)


def compose_size_masses(g1: SleekKernel, g2: SleekKernel) -> dict:
    """Per-support-size mass of ``T_{g1} ∘ T_{g2}`` (always well-defined).

    Draw sigma from g1 and mu from g2 independently; this is the law of
    ``|sigma ∘ mu|``, computed by exhaustive convolution (n <= 7).
    """
    if g1.n != g2.n:
        raise ValueError("kernel dimension mismatch")
    n = g1.n
    if n > EXACT_SLEEK_LIMIT:
        raise CapabilityError(f"kernel convolution limited to n <= {EXACT_SLEEK_LIMIT}")
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp)
    sizes = (perms != np.arange(n)).sum(axis=1)
    w1 = np.array([g1.per_perm_weight(int(s)) for s in sizes])
    w2 = np.array([g2.per_perm_weight(int(s)) for s in sizes])
    out: dict[int, float] = {}
    for s_idx in range(perms.shape[0]):
        if w1[s_idx] == 0.0:
            continue
        # landing mapping of (sigma, mu) acting on vectors is mu_map[sigma_map]
        comp = perms[:, perms[s_idx]]
        comp_sizes = (comp != np.arange(n)).sum(axis=1)
        for ell in np.unique(comp_sizes):
            mass = float(w1[s_idx] * w2[comp_sizes == ell].sum())
            if mass:
                out[int(ell)] = out.get(int(ell), 0.0) + mass
    return out


def kernel_gap(phi: Dist, phi2: Dist, kernel: SleekKernel,
               trials: int = 0, rng=None, mode: str = "auto"):
    """Kernel-weighted decorrelation moment
    ``sum_sigma gamma(|sigma|) E[(x.y - x.sigma(y))^2]``.

    Returns ``(estimate, stderr)``; exact mode (n <= 7) has stderr 0.
    """
    if phi.n != phi2.n or kernel.n != phi.n:
        raise ValueError("dimension mismatch")
    n = phi.n
    if mode == "auto":
        mode = "exact" if n <= EXACT_SLEEK_LIMIT else "sampled"
    x = phi.bits.astype(np.float64)
    y = phi2.bits.astype(np.float64)
    base = x @ y.T
    if mode == "exact":
        total = 0.0
        groups = _perms_by_size(n)
        for ell, _ in kernel.size_weights:
            per = kernel.per_perm_weight(ell)
            if per == 0.0:
                continue
            for sigma in groups.get(ell, []):
                shifted = x @ y[:, sigma.array()].T
                dev = base - shifted
                total += per * float(phi.weights @ dev**2 @ phi2.weights)
        return total, 0.0
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    if trials < 1:
        raise ValueError("sampled mode needs trials >= 1")
    if rng is None:
        raise ValueError("sampled mode needs an explicit rng")
    xs = phi.sample(rng, trials).astype(np.float64)
    ys = phi2.sample(rng, trials).astype(np.float64)
    vals = np.empty(trials)
    for t in range(trials):
        sigma = sample_sigma(kernel, rng)
        vals[t] = (xs[t] @ ys[t] - xs[t] @ ys[t][sigma.array()]) ** 2
    est = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    return est, stderr


def _clamp_size(ell: int) -> int:
    """Round a target support size onto the valid lattice {0, 2, 3, ...}."""
    if ell <= 0:
        return 0
    if ell == 1:
        return 2
    return ell


def smoothing_preset(n: int, alpha: float, spread: float = 0.25):
    """The two-stage smoothing pair used before protocol elections.

    The first kernel displaces ``round(spread * n)`` coordinates; the
    second uses the level-derived fraction ``alpha^10 / (9 * 2^18)``,
    which collapses to the identity at any desk-scale ``alpha``.  The
    ``spread`` fraction is a heuristic knob; nothing pins it beyond the
    feasibility constraints of the smoothing analysis.
    """
    ell_spread = _clamp_size(round(spread * n))
    ell_level = _clamp_size(round((alpha**10 / (9.0 * 2.0**18)) * n))
    first = dirac_kernel(n, ell_spread) if ell_spread else identity_kernel(n)
    second = dirac_kernel(n, ell_level) if ell_level else identity_kernel(n)
    return first, second


def apply_smoothing(phi: Dist, alpha: float, spread: float = 0.25,
                    mode: str = "auto", budget: int = 256, rng=None) -> Dist:
    """Apply both preset kernels in sequence."""
    first, second = smoothing_preset(phi.n, alpha, spread)
    out = sleek(phi, second, mode=mode, budget=budget, rng=rng)
    return sleek(out, first, mode=mode, budget=budget, rng=rng)
