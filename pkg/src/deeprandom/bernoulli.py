"""Bernoulli-vector algebra.

Conventions used throughout the package:

* a *bit vector* is a length-``n`` ``uint8`` array with entries in ``{0, 1}``
  (a published experiment outcome);
* a *parameter vector* is a length-``n`` ``float`` array with entries in
  ``[0, 1]`` (a party's private signal, one Bernoulli parameter per
  coordinate);
* *degradation* scales a parameter vector by ``1/k`` (``k >= 1``) before
  drawing, so the published outcome is a weak image of the private signal.

For a bit vector ``i`` and parameter vector ``x``::

    outcome_prob(i, x)  = prod_s ( i_s x_s + (1 - i_s)(1 - x_s) )
    ones_product(i, x)  = prod_{s : i_s = 1} x_s

``ones_product`` is the monomial basis dual to ``outcome_prob``; the two are
linked by the inversion identity ``ones_product(j, x) =
sum_{i superset of j} outcome_prob(i, x)``.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "as_bits",
    "as_params",
    "weight",
    "outcome_prob",
    "ones_product",
    "binom_pmf",
    "masked_weight_pmf",
    "masked_weight_pmf_all",
    "bernoulli_draw",
    "overlap_estimate",
    "degraded_moments",
    "MomentsReport",
    "enumerate_bits",
]

# Exact binomial coefficients below this trial count, log-gamma above.
_EXACT_BINOM_LIMIT = 30


def as_bits(values) -> np.ndarray:
    """Coerce to a validated uint8 bit vector."""
    arr = np.asarray(values)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("bit vector must be one-dimensional and non-empty")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("bit vector entries must be 0 or 1")
    return arr.astype(np.uint8)


def as_params(values) -> np.ndarray:
    """Coerce to a validated float parameter vector with entries in [0, 1]."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("parameter vector must be one-dimensional and non-empty")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("parameter vector entries must lie in [0, 1]")
    return arr


def _check_same_dim(a, b):
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def weight(bits) -> int:
    """Number of ones."""
    return int(np.sum(as_bits(bits)))


def outcome_prob(bits, params) -> float:
    """Probability of drawing ``bits`` from independent Bernoulli(``params``)."""
    i = as_bits(bits)
    x = as_params(params)
    _check_same_dim(i, x)
    factors = np.where(i == 1, x, 1.0 - x)
    return float(np.prod(factors))


def ones_product(bits, params) -> float:
    """Product of ``params`` over the coordinates where ``bits`` is 1.

    The empty product (all-zero ``bits``) is 1.  Satisfies the inversion
    identity against :func:`outcome_prob`.
    """
    i = as_bits(bits)
    x = as_params(params)
    _check_same_dim(i, x)
    sel = x[i == 1]
    return float(np.prod(sel)) if sel.size else 1.0


def binom_pmf(successes: int, trials: int, p: float) -> float:
    """Binomial point mass C(trials, successes) p^s (1-p)^(t-s).

    Exact rational arithmetic for small ``trials``; log-gamma otherwise so
    large counts never overflow.
    """
    l, r = int(successes), int(trials)
    if l < 0 or r < 0 or l > r:
        raise ValueError(f"need 0 <= successes <= trials, got {l}, {r}")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p == 0.0:
        return 1.0 if l == 0 else 0.0
    if p == 1.0:
        return 1.0 if l == r else 0.0
    if r <= _EXACT_BINOM_LIMIT:
        return float(math.comb(r, l) * p**l * (1.0 - p) ** (r - l))
    log_pmf = (
        math.lgamma(r + 1)
        - math.lgamma(l + 1)
        - math.lgamma(r - l + 1)
        + l * math.log(p)
        + (r - l) * math.log1p(-p)
    )
    return math.exp(log_pmf)


def masked_weight_pmf(mask, r: int, params) -> float:
    """P(sum of Bernoulli(``params``) draws over the coordinates selected by
    ``mask`` equals ``r``).

    Dynamic programming over the selected coordinates only, O(|mask| * r),
    so identities involving it scale far beyond exhaustive enumeration.
    """
    pmf = masked_weight_pmf_all(mask, params)
    r = int(r)
    if r < 0 or r >= pmf.size:
        return 0.0
    return float(pmf[r])


def masked_weight_pmf_all(mask, params) -> np.ndarray:
    """Full weight distribution over the coordinates selected by ``mask``.

    Returns an array of length ``|mask| + 1`` whose ``r`` entry is
    ``masked_weight_pmf(mask, r, params)``.
    """
    i = as_bits(mask)
    x = as_params(params)
    _check_same_dim(i, x)
    sel = x[i == 1]
    pmf = np.array([1.0])
    for p in sel:
        new = np.empty(pmf.size + 1)
        new[0] = pmf[0] * (1.0 - p)
        new[1:-1] = pmf[1:] * (1.0 - p) + pmf[:-1] * p
        new[-1] = pmf[-1] * p
        pmf = new
    return pmf


def bernoulli_draw(params, rng: np.random.Generator) -> np.ndarray:
    """One independent per-coordinate Bernoulli draw; deterministic given the stream."""
    x = as_params(params)
    return (rng.random(x.shape[0]) < x).astype(np.uint8)


def overlap_estimate(params, bits) -> float:
    """A party's estimator of the shared value: ``x . j / n``."""
    x = as_params(params)
    j = as_bits(bits)
    _check_same_dim(x, j)
    return float(x @ j) / x.shape[0]


class MomentsReport:
    """Closed-form moments of the two legitimate estimators.

    With private signals ``x, y``, degradation ``k`` and published draws
    ``i ~ Bern(x/k)``, ``j ~ Bern(y/k)``, the estimators are
    ``V_A = x.j/n`` and ``V_B = i.y/n``:

    * ``mean``   = x.y / (n k)          (common to both)
    * ``var_a``  = E[(V_A - mean)^2]
    * ``var_b``  = E[(V_B - mean)^2]
    * ``gap_ab`` = E[(V_B - V_A)^2]  <=  2 / (n k)
    """

    __slots__ = ("mean", "var_a", "var_b", "gap_ab", "k", "n")

    def __init__(self, mean, var_a, var_b, gap_ab, k, n):
        if var_a < 0 or var_b < 0:
            raise ValueError("variances must be non-negative")
        if gap_ab > 2.0 / (n * k) + 1e-12:
            raise ValueError("estimator gap exceeds its 2/(nk) ceiling")
        self.mean = mean
        self.var_a = var_a
        self.var_b = var_b
        self.gap_ab = gap_ab
        self.k = k
        self.n = n

    def __repr__(self):
        return (
            f"MomentsReport(mean={self.mean:.6g}, var_a={self.var_a:.6g}, "
            f"var_b={self.var_b:.6g}, gap_ab={self.gap_ab:.6g}, k={self.k}, n={self.n})"
        )


def degraded_moments(x_params, y_params, k: float) -> MomentsReport:
    """Exact moments of ``V_A``/``V_B`` for fixed private signals.

    Derivation: coordinates are independent, ``E[j_s] = y_s/k`` and
    ``Var(j_s) = (y_s/k)(1 - y_s/k)``, so the mean is bilinear and both
    variances are coordinate sums.
    """
    x = as_params(x_params)
    y = as_params(y_params)
    _check_same_dim(x, y)
    if k < 1.0:
        raise ValueError("degradation parameter k must be >= 1")
    n = x.shape[0]
    mean = float(x @ y) / (n * k)
    var_a = float(np.sum(x**2 * (y / k) * (1.0 - y / k))) / n**2
    var_b = float(np.sum(y**2 * (x / k) * (1.0 - x / k))) / n**2
    gap = float(np.sum(x * y * (x + y - 2.0 * x * y / k))) / (n**2 * k)
    return MomentsReport(mean, var_a, var_b, gap, k, n)


def enumerate_bits(n: int) -> np.ndarray:
    """All 2^n bit vectors as a (2^n, n) uint8 matrix, in integer order."""
    if n > 22:
        raise ValueError("refusing to materialize more than 2^22 bit vectors")
    codes = np.arange(1 << n, dtype=np.uint32)
    return ((codes[:, None] >> np.arange(n, dtype=np.uint32)) & 1).astype(np.uint8)
