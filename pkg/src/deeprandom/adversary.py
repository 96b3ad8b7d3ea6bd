"""Opponent strategies over public information and their payoffs.

A strategy is a deterministic function of the public record estimating the
shared value ``x.y/(n k)`` from the published draws ``(i, j)`` (and, for
the general kind, the published permutation pairs).  The quality measure is
the quadratic payoff ``E[(omega(i,j) - x.y/(nk))^2]`` under a distribution
pair; larger is better for the legitimate partners.

Key computational fact: for binary private signals the public draws
satisfy ``i subset-of x`` and ``j subset-of y``, so the joint law of the
public statistics ``(|i|, |j|, i.j)`` given ``(x, y)`` depends only on the
signature ``(u, v, w) = (|x|, |y|, x.y)``.  Payoffs of statistic-table
strategies therefore reduce to small tensor contractions per distinct
signature, exact at any dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import hypergeom

from .bernoulli import binom_pmf
from .dists import Dist

__all__ = [
    "Strategy",
    "strategy_mean_match",
    "strategy_counting",
    "strategy_table",
    "strategy_bayes",
    "strategy_custom",
    "symmetrize",
    "payoff",
    "PayoffReport",
    "pair_signatures",
    "signature_table",
    "table_conditional_mean",
    "canonical_pair",
    "EXACT_PAYOFF_LIMIT",
]

# General (non-table) strategies admit exact payoffs by subset enumeration
# up to this dimension.
EXACT_PAYOFF_LIMIT = 10

# When truncating public-statistic ranges at large n, keep this many
# sigmas past the mean of each thinning binomial.
_TRUNC_SIGMAS = 12.0
_TRUNC_PAD = 10


def canonical_pair(pair):
    """Order a published permutation pair canonically.

    Strategies receive pairs only through this ordering, which makes every
    general strategy invariant under pair transposition by construction.
    """
    if pair is None:
        return None
    a, b = pair
    return (a, b) if a.mapping <= b.mapping else (b, a)


# ---------------------------------------------------------------------------
# public-statistic tables
# ---------------------------------------------------------------------------


def _binom_vec(trials: int, p: float, hi: int) -> np.ndarray:
    return np.array([binom_pmf(s, trials, p) for s in range(hi + 1)])


def _trunc(trials: int, p: float) -> int:
    if trials <= 0:
        return 0
    mean = trials * p
    sd = math.sqrt(max(trials * p * (1.0 - p), 1e-12))
    return min(trials, int(math.ceil(mean + _TRUNC_SIGMAS * sd + _TRUNC_PAD)))


_SIG_TABLE_CACHE: dict = {}


def signature_table(n: int, k: float, u: int, v: int, w: int) -> np.ndarray:
    """Joint law of ``(|i|, |j|, i.j)`` given a signature ``(u, v, w)``.

    Decomposes through the overlap: with keep-probability ``p = 1/k``,
    ``a1 = |i ∩ x∩y| ~ Bin(w, p)``, ``a2 ~ Bin(u-w, p)``,
    ``b1 = |j ∩ x∩y| ~ Bin(w, p)``, ``b2 ~ Bin(v-w, p)`` independently and
    ``i.j | a1, b1 ~ Hypergeometric(w, a1, b1)``.  Ranges are truncated at
    negligible (< 1e-12) tail mass for large n.  Result is cached.
    """
    key = (n, float(k), u, v, w)
    cached = _SIG_TABLE_CACHE.get(key)
    if cached is not None:
        return cached
    p = 1.0 / k
    if w == 0:
        # disjoint signals: i.j = 0 surely, |i| and |j| plain binomials
        a_hi = _trunc(u, p)
        b_hi = _trunc(v, p)
        table = np.zeros((a_hi + 1, b_hi + 1, 1))
        table[:, :, 0] = np.outer(_binom_vec(u, p, a_hi), _binom_vec(v, p, b_hi))
        _SIG_TABLE_CACHE[key] = table
        return table
    a1_hi = _trunc(w, p)
    a2_hi = _trunc(u - w, p)
    b1_hi = _trunc(w, p)
    b2_hi = _trunc(v - w, p)
    bw = _binom_vec(w, p, a1_hi)
    ba2 = _binom_vec(u - w, p, a2_hi)
    bb2 = _binom_vec(v - w, p, b2_hi)
    c_hi = min(a1_hi, b1_hi)
    # hyp[a1, b1, c]
    a1g, b1g, cg = np.meshgrid(
        np.arange(a1_hi + 1), np.arange(b1_hi + 1), np.arange(c_hi + 1), indexing="ij"
    )
    hyp = hypergeom.pmf(cg, w, a1g, b1g)
    hyp = np.nan_to_num(hyp, nan=0.0)
    # M1[a1, a] = P(a1) * P(a - a1); same for j
    m1 = np.zeros((a1_hi + 1, a1_hi + a2_hi + 1))
    for a1 in range(a1_hi + 1):
        m1[a1, a1 : a1 + a2_hi + 1] = bw[a1] * ba2
    m2 = np.zeros((b1_hi + 1, b1_hi + b2_hi + 1))
    for b1 in range(b1_hi + 1):
        m2[b1, b1 : b1 + b2_hi + 1] = bw[b1] * bb2
    table = np.einsum("ia,jb,ijc->abc", m1, m2, hyp, optimize=True)
    _SIG_TABLE_CACHE[key] = table
    return table


_PAIR_SIG_CACHE: dict = {}
_PAIR_SIG_CACHE_MAX = 512


def pair_signatures(phi: Dist, phi2: Dist) -> dict:
    """Distinct ``(u, v, w)`` signatures of a support pair with their mass.

    Cached by support tokens; generator loops evaluate the same seed pairs
    against many strategies.
    """
    if phi.n != phi2.n:
        raise ValueError("dimension mismatch")
    cache_key = (phi.token(), phi2.token())
    hit = _PAIR_SIG_CACHE.get(cache_key)
    if hit is not None:
        return hit
    base = phi.n + 1
    u = phi.bits.sum(axis=1).astype(np.int64)
    v = phi2.bits.sum(axis=1).astype(np.int64)
    dots = phi.bits.astype(np.int64) @ phi2.bits.T.astype(np.int64)
    codes = (u[:, None] * base + v[None, :]) * base + dots
    mass = np.outer(phi.weights, phi2.weights)
    uniq, inverse = np.unique(codes.ravel(), return_inverse=True)
    sums = np.bincount(inverse, weights=mass.ravel())
    out: dict = {}
    for code, s in zip(uniq, sums):
        w = int(code % base)
        rest = int(code // base)
        out[(rest // base, rest % base, w)] = float(s)
    if len(_PAIR_SIG_CACHE) >= _PAIR_SIG_CACHE_MAX:
        _PAIR_SIG_CACHE.clear()
    _PAIR_SIG_CACHE[cache_key] = out
    return out


def _grow_to(arr: np.ndarray, shape) -> np.ndarray:
    if all(s <= t for s, t in zip(shape, arr.shape)):
        return arr
    grown = np.zeros(tuple(max(s, t) for s, t in zip(shape, arr.shape)))
    grown[tuple(slice(0, s) for s in arr.shape)] = arr
    return grown


def pair_table_moments(phi: Dist, phi2: Dist, k: float):
    """Dense per-cell mass and first moment of the shared value: arrays
    ``(num, den)`` over the (|i|, |j|, i.j) grid."""
    n = phi.n
    num = np.zeros((1, 1, 1))
    den = np.zeros((1, 1, 1))
    for (u, v, w), mass in pair_signatures(phi, phi2).items():
        t = signature_table(n, k, u, v, w)
        num = _grow_to(num, t.shape)
        den = _grow_to(den, t.shape)
        sl = tuple(slice(0, s) for s in t.shape)
        num[sl] += mass * t * (w / (n * k))
        den[sl] += mass * t
    return num, den


def table_conditional_mean(phi: Dist, phi2: Dist, k: float) -> dict:
    """E[x.y/(nk) | |i|, |j|, i.j] under the pair, as a (a,b,c) -> value dict.

    This is the L2 projection of the shared value onto statistic tables:
    the best possible table strategy against this pair.
    """
    num, den = pair_table_moments(phi, phi2, k)
    out: dict = {}
    for a, b, c in np.argwhere(den > 0.0):
        out[(int(a), int(b), int(c))] = float(num[a, b, c] / den[a, b, c])
    return out


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------


@dataclass
class Strategy:
    """A deterministic estimator of the shared value from public data.

    ``kind`` is one of ``mean-match``, ``counting``, ``table``, ``bayes``
    or ``custom``.  Values are always clipped to [0, 1].  Table-like kinds
    are invariant under common relabeling of ``(i, j)`` by construction.
    """

    kind: str
    n: int
    k: float
    table: dict | None = None
    fallback: str = "counting"
    fn: object = None
    stat_fn: object = None
    needs_secrets: bool = False
    fallback_hits: int = field(default=0, compare=False)
    _grid: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def is_stat_table(self) -> bool:
        return self.stat_fn is not None or self.table is not None

    def _stat_value(self, a: int, b: int, c: int) -> float:
        if self.table is not None:
            val = self.table.get((a, b, c))
            if val is None:
                self.fallback_hits += 1
                val = self.k * a * b / self.n**2
            return val
        return self.stat_fn(a, b, c)

    def value(self, i, j, pair_a=None, pair_b=None) -> float:
        i = np.asarray(i, dtype=np.uint8)
        j = np.asarray(j, dtype=np.uint8)
        if self.is_stat_table:
            a = int(i.sum())
            b = int(j.sum())
            c = int(i @ j)
            raw = self._stat_value(a, b, c)
        elif self.fn is not None:
            raw = self.fn(i, j, canonical_pair(pair_a), canonical_pair(pair_b))
        else:
            raise ValueError("strategy has no evaluator")
        return float(min(1.0, max(0.0, raw)))

    def value_batch(self, i_mat, j_mat, pair_a=None, pair_b=None) -> np.ndarray:
        i_mat = np.asarray(i_mat, dtype=np.uint8)
        j_mat = np.asarray(j_mat, dtype=np.uint8)
        if self.is_stat_table:
            a = i_mat.sum(axis=1).astype(np.int64)
            b = j_mat.sum(axis=1).astype(np.int64)
            c = np.einsum("rn,rn->r", i_mat.astype(np.int64), j_mat.astype(np.int64))
            vals = np.array(
                [self._stat_value(int(x), int(y), int(z)) for x, y, z in zip(a, b, c)]
            )
            return np.clip(vals, 0.0, 1.0)
        return np.array(
            [self.value(i_mat[r], j_mat[r], pair_a, pair_b) for r in range(i_mat.shape[0])]
        )


def strategy_mean_match(n: int, k: float) -> Strategy:
    """The mean-preserving estimator ``k (i.j) / n``."""
    return Strategy("mean-match", n, k, stat_fn=lambda a, b, c, k=k, n=n: k * c / n)


def strategy_counting(n: int, k: float) -> Strategy:
    """The coordinate-blind estimator ``k |i||j| / n^2``."""
    return Strategy("counting", n, k, stat_fn=lambda a, b, c, k=k, n=n: k * a * b / n**2)


def strategy_table(n: int, k: float, table: dict) -> Strategy:
    """A statistic-table strategy with counting fallback off the table."""
    for (a, b, c) in table:
        if not (0 <= c <= min(a, b) and max(a, b) <= n and c >= a + b - n):
            raise ValueError(f"infeasible statistic triple {(a, b, c)}")
    return Strategy("table", n, k, table=dict(table))


def strategy_custom(n: int, k: float, fn) -> Strategy:
    """Wrap a general function of ``(i, j, pair_a, pair_b)``.

    Pairs arrive canonically ordered, so the strategy is invariant under
    pair transposition regardless of how ``fn`` reads them.
    """
    return Strategy("custom", n, k, fn=fn)


def strategy_bayes(phi: Dist, phi2: Dist, k: float, mode: str = "exact") -> Strategy:
    """The posterior-mean estimator given full knowledge of the pair.

    ``exact`` evaluates ``E[x.y/(nk) | i, j]`` lazily per query by direct
    support sums (binary signals make the outcome likelihood a closed
    form).  ``table`` projects onto statistic tables, which is the best
    strategy available when only relabeling-invariant information can be
    exploited.
    """
    n = phi.n
    if mode == "table":
        return strategy_table(n, k, table_conditional_mean(phi, phi2, k))
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")

    x = phi.bits.astype(np.float64)
    y = phi2.bits.astype(np.float64)
    wx = x.sum(axis=1)
    wy = y.sum(axis=1)
    cross = (x @ y.T) / (n * k)
    log_keep = math.log(1.0 / k) if k > 1 else 0.0
    log_drop = math.log1p(-1.0 / k) if k > 1 else -math.inf

    strat = Strategy("bayes", n, k, needs_secrets=True)

    def batch(i_mat, j_mat, pair_a=None, pair_b=None):
        i_mat = np.asarray(i_mat, dtype=np.float64)
        j_mat = np.asarray(j_mat, dtype=np.float64)
        wi = i_mat.sum(axis=1)
        wj = j_mat.sum(axis=1)
        # P(i | x) = [i subset x] (1/k)^|i| (1-1/k)^(|x|-|i|)
        sub_i = (i_mat @ x.T) >= wi[:, None] - 1e-9
        sub_j = (j_mat @ y.T) >= wj[:, None] - 1e-9
        if k > 1:
            like_i = sub_i * np.exp(wi[:, None] * log_keep + (wx[None, :] - wi[:, None]) * log_drop)
            like_j = sub_j * np.exp(wj[:, None] * log_keep + (wy[None, :] - wj[:, None]) * log_drop)
        else:
            like_i = ((i_mat @ x.T) == wx[None, :]) * sub_i
            like_j = ((j_mat @ y.T) == wy[None, :]) * sub_j
        a = like_i * phi.weights[None, :]
        b = like_j * phi2.weights[None, :]
        numer = np.einsum("rm,mp,rp->r", a, cross, b, optimize=True)
        denom = a.sum(axis=1) * b.sum(axis=1)
        out = np.empty(i_mat.shape[0])
        ok = denom > 0.0
        out[ok] = numer[ok] / denom[ok]
        if np.any(~ok):
            strat.fallback_hits += int(np.sum(~ok))
            out[~ok] = k * wi[~ok] * wj[~ok] / n**2
        return np.clip(out, 0.0, 1.0)

    strat.fn = lambda i, j, pa=None, pb=None: float(batch(i[None, :], j[None, :])[0])
    strat.value_batch = batch  # type: ignore[method-assign]
    return strat


def symmetrize(omega: Strategy, mode: str = "auto", rng=None, samples: int = 512) -> Strategy:
    """Average a strategy over simultaneous relabelings of ``(i, j)``.

    The orbit of ``(i, j)`` under common permutations is exactly the set of
    pairs sharing ``(|i|, |j|, i.j)``, so the exact average (n <= 8) is an
    orbit mean and the result is a statistic-table strategy.  Table-like
    strategies are already invariant and are returned unchanged.
    """
    if omega.is_stat_table:
        return omega
    n, k = omega.n, omega.k
    if mode == "auto":
        mode = "exact" if n <= 8 else "sampled"
    if mode == "exact":
        from .bernoulli import enumerate_bits

        bits = enumerate_bits(n)
        m = bits.shape[0]
        i_mat = np.repeat(bits, m, axis=0)
        j_mat = np.tile(bits, (m, 1))
        vals = omega.value_batch(i_mat, j_mat)
        a = i_mat.sum(axis=1).astype(np.int64)
        b = j_mat.sum(axis=1).astype(np.int64)
        c = np.einsum("rn,rn->r", i_mat.astype(np.int64), j_mat.astype(np.int64))
        table: dict = {}
        counts: dict = {}
        for idx in range(vals.shape[0]):
            key = (int(a[idx]), int(b[idx]), int(c[idx]))
            table[key] = table.get(key, 0.0) + float(vals[idx])
            counts[key] = counts.get(key, 0) + 1
        return strategy_table(n, k, {key: table[key] / counts[key] for key in table})
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    if rng is None:
        raise ValueError("sampled symmetrization needs an rng")
    perms = [rng.permutation(n) for _ in range(samples)]
    cache: dict = {}

    def fn(i, j, pa=None, pb=None):
        key = (i.tobytes(), j.tobytes())
        if key not in cache:
            tot = 0.0
            for p in perms:
                tot += omega.value(i[p], j[p])
            cache[key] = tot / len(perms)
        return cache[key]

    return Strategy("custom", n, k, fn=fn)


# ---------------------------------------------------------------------------
# payoffs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PayoffReport:
    payoff: float
    stderr: float
    trials: int

    def __post_init__(self):
        if self.payoff < -1e-12:
            raise ValueError("payoff must be non-negative")


def _stat_value_grid(omega: Strategy, shape) -> np.ndarray:
    """Clipped strategy values on a (|i|, |j|, i.j) grid; infeasible cells
    carry zero probability so their values are irrelevant.  The grid is
    built once at the largest requested shape and sliced thereafter."""
    cached = omega._grid
    if cached is None or any(s > t for s, t in zip(shape, cached.shape)):
        full = tuple(
            max(s, t) for s, t in zip(shape, cached.shape if cached is not None else shape)
        )
        a = np.arange(full[0], dtype=np.float64)[:, None, None]
        b = np.arange(full[1], dtype=np.float64)[None, :, None]
        c = np.arange(full[2], dtype=np.float64)[None, None, :]
        if omega.table is not None:
            grid = np.broadcast_to(omega.k * a * b / omega.n**2, full).copy()
            for (ta, tb, tc), val in omega.table.items():
                if ta < full[0] and tb < full[1] and tc < full[2]:
                    grid[ta, tb, tc] = val
        else:
            grid = np.broadcast_to(
                np.asarray(omega.stat_fn(a, b, c), dtype=np.float64), full
            ).copy()
        omega._grid = np.clip(grid, 0.0, 1.0)
    return omega._grid[tuple(slice(0, s) for s in shape)]


def _payoff_exact_table(omega: Strategy, phi: Dist, phi2: Dist, k: float) -> float:
    n = phi.n
    total = 0.0
    for (u, v, w), mass in pair_signatures(phi, phi2).items():
        t = signature_table(n, k, u, v, w)
        target = w / (n * k)
        vals = _stat_value_grid(omega, t.shape)
        total += mass * float(np.sum(t * (vals - target) ** 2))
    return total


def _payoff_exact_general(omega: Strategy, phi: Dist, phi2: Dist, k: float) -> float:
    """Exact payoff for arbitrary strategies by subset enumeration (small n)."""
    from .bernoulli import enumerate_bits

    n = phi.n
    if n > EXACT_PAYOFF_LIMIT:
        raise ValueError(f"exact general payoff limited to n <= {EXACT_PAYOFF_LIMIT}")
    p = 1.0 / k
    total = 0.0
    patterns = enumerate_bits(n)
    wts = patterns.sum(axis=1)
    for xi in range(phi.support_size):
        x = phi.bits[xi]
        sub_x = np.flatnonzero(np.all(patterns <= x[None, :], axis=1))
        i_pats = patterns[sub_x]
        pi_prob = p ** wts[sub_x] * (1 - p) ** (int(x.sum()) - wts[sub_x])
        for yi in range(phi2.support_size):
            y = phi2.bits[yi]
            target = float(x @ y) / (n * k)
            sub_y = np.flatnonzero(np.all(patterns <= y[None, :], axis=1))
            j_pats = patterns[sub_y]
            pj_prob = p ** wts[sub_y] * (1 - p) ** (int(y.sum()) - wts[sub_y])
            i_rep = np.repeat(i_pats, j_pats.shape[0], axis=0)
            j_rep = np.tile(j_pats, (i_pats.shape[0], 1))
            vals = omega.value_batch(i_rep, j_rep)
            probs = np.outer(pi_prob, pj_prob).ravel()
            total += phi.weights[xi] * phi2.weights[yi] * float(
                probs @ (vals - target) ** 2
            )
    return total


def payoff(omega: Strategy, phi: Dist, phi2: Dist, k: float,
           trials: int = 0, rng=None, mode: str = "auto") -> PayoffReport:
    """Quadratic payoff ``E[(omega(i,j) - x.y/(nk))^2]`` under the pair.

    Statistic-table strategies get exact signature-table evaluation at any
    dimension; other strategies are exact up to n = 10 and Monte Carlo
    beyond (``trials`` draws, standard error reported).
    """
    if phi.n != phi2.n:
        raise ValueError("dimension mismatch")
    n = phi.n
    if mode == "auto":
        if omega.is_stat_table:
            mode = "exact"
        elif n <= EXACT_PAYOFF_LIMIT and trials == 0:
            mode = "exact"
        else:
            mode = "mc"
    if mode == "exact":
        if omega.is_stat_table:
            return PayoffReport(_payoff_exact_table(omega, phi, phi2, k), 0.0, 0)
        return PayoffReport(_payoff_exact_general(omega, phi, phi2, k), 0.0, 0)
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    if trials < 1:
        raise ValueError("Monte Carlo payoff needs trials >= 1")
    if rng is None:
        raise ValueError("Monte Carlo payoff needs an rng")
    xs = phi.sample(rng, trials)
    ys = phi2.sample(rng, trials)
    i_mat = (rng.random(xs.shape) < xs / k).astype(np.uint8)
    j_mat = (rng.random(ys.shape) < ys / k).astype(np.uint8)
    targets = np.einsum("rn,rn->r", xs.astype(np.float64), ys.astype(np.float64)) / (n * k)
    vals = omega.value_batch(i_mat, j_mat)
    sq = (vals - targets) ** 2
    est = float(sq.mean())
    stderr = float(sq.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("inf")
    return PayoffReport(est, stderr, trials)
