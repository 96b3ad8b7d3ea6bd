"""The key-agreement session engine.

One block runs the full exchange for ``L`` digits under fixed choices:

1. *generation* - each party holds a seed-class distribution (elected by
   its generator) and draws a private parameter vector per round;
2. *degradation* - the published draw uses the parameters scaled by 1/k;
3. *dispersion* - each party publishes, in random order, the reverse of
   its tidying permutation together with a decoy derived from the first
   published draw, so an observer cannot tell which is which;
4. *synchronization* - each party picks one element of the other's pair,
   uniformly; in the favorable quarter of cases both pick the true
   tidying reverses and the estimators align;
5. *decorrelation* - estimators are computed in the tidied frames and
   sampled into digits on a shared cell grid with a public random origin;
6. *distillation* - the digit stream masks a weight-coded codeword; the
   receiver decodes by weight with a discard dead zone.

Public and private information never share a container: everything an
observer may legally touch lives in :class:`PublicBlock`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DispersionConstraintError
from .dists import Dist, Perm, identity_perm, tidy_cached
from .distill import DISCARD, codeword_weights, distill_encode, distill_decode

logger = logging.getLogger(__name__)

__all__ = [
    "SessionConfig",
    "RoundRecord",
    "PublicRound",
    "PublicBlock",
    "BlockTranscript",
    "dispersion_decoy",
    "sample_digit",
    "digit_stream",
    "run_block",
    "SITUATION_NAMES",
]

SITUATION_NAMES = ("S0", "S1", "S2", "S3")


@dataclass(frozen=True)
class SessionConfig:
    """Parameters of one protocol session family.

    ``gamma``/``t`` default from the dimension when omitted: the codeword
    bias shrinks like 1/(2 ln n) and the dead zone tracks
    max(4k/n, gamma/4); the pair must satisfy gamma > t.  ``K`` controls
    the sampling gauge ``K / sqrt(nk)``; useful gauges need
    1 << K << sqrt(k), which small ``k`` cannot honor (a warning is
    logged and the run proceeds).
    """

    n: int
    k: float
    alpha: float
    L: int
    K: float = 8.0
    gamma: float | None = None
    t: float | None = None
    trials: int = 1024
    seed: int = 0
    psi_retries: int = 64
    irpa_margin: int = 32

    def __post_init__(self):
        if self.n % 2 != 0 or self.n <= 4:
            raise ValueError("need even n > 4")
        if self.k < 1.0:
            raise ValueError("k must be >= 1")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.L < 4:
            raise ValueError("block length L must be >= 4")
        if self.K <= 0.0:
            raise ValueError("gauge multiplier K must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.gamma is None:
            object.__setattr__(self, "gamma", 1.0 / (2.0 * math.log(self.n)))
        if self.t is None:
            object.__setattr__(self, "t", max(4.0 * self.k / self.n, self.gamma / 4.0))
        if not 0.0 < self.t < self.gamma < 0.5:
            raise ValueError(
                f"need 0 < t < gamma < 1/2, got t={self.t}, gamma={self.gamma}"
            )
        codeword_weights(self.L, self.gamma)
        if self.K < 2.0 or self.K**2 >= self.k:
            logger.warning(
                "gauge K=%.3g outside 1 << K << sqrt(k) for k=%.3g; "
                "digit quality is degraded at this scale", self.K, self.k,
            )

    @property
    def cell(self) -> float:
        """Sampling cell width K / sqrt(nk)."""
        return self.K / math.sqrt(self.n * self.k)


# ---------------------------------------------------------------------------
# transcripts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundRecord:
    """One degraded exchange; x, y, v_a, v_b, digits are private."""

    x: np.ndarray
    y: np.ndarray
    i: np.ndarray
    j: np.ndarray
    v_a: float
    v_b: float
    digit_a: int
    digit_b: int


@dataclass(frozen=True)
class PublicRound:
    i: np.ndarray
    j: np.ndarray


@dataclass(frozen=True)
class PublicBlock:
    """Everything an observer may read for one block."""

    index: int
    pair_a: tuple  # (Perm, Perm) as published by A
    pair_b: tuple
    offset: float
    rounds: tuple  # of PublicRound
    published_codeword: np.ndarray


@dataclass(frozen=True)
class BlockTranscript:
    """Full (simulator-side) record of one block."""

    index: int
    pair_a: tuple
    pair_b: tuple
    offset: float
    rounds: tuple  # of RoundRecord
    published_codeword: np.ndarray
    situation: int
    sigma_a: Perm
    sigma_b: Perm
    tidy_a: Perm
    tidy_b: Perm
    swap_a: int
    swap_b: int
    e_a: int
    codeword: np.ndarray
    decode_b: object  # 0 | 1 | DISCARD

    def public(self) -> PublicBlock:
        return PublicBlock(
            index=self.index,
            pair_a=self.pair_a,
            pair_b=self.pair_b,
            offset=self.offset,
            rounds=tuple(PublicRound(r.i, r.j) for r in self.rounds),
            published_codeword=self.published_codeword,
        )

    @property
    def kept(self) -> bool:
        return self.decode_b is not DISCARD


# ---------------------------------------------------------------------------
# dispersion
# ---------------------------------------------------------------------------


def _plausible_band(n: int, k: float, observed_weight: int):
    """Signal-weight band [k|i| - sqrt(n), k|i| + sqrt(n)], clamped into the
    feasible range [0, n] when an outlier draw pushes it off either end."""
    lo = k * observed_weight - math.sqrt(n)
    hi = k * observed_weight + math.sqrt(n)
    if lo > n:
        lo, hi = n - math.sqrt(n), float(n)
    if hi < 0.0:
        lo, hi = 0.0, math.sqrt(n)
    return lo, hi


def _weight_band_ok(psi: Dist, k: float, observed_weight: int) -> bool:
    """Mass of the scrambling distribution on the plausible signal-weight
    band must reach 1/(2 sqrt(n)), so the observed draw is not an outlier
    for it."""
    n = psi.n
    lo, hi = _plausible_band(n, k, observed_weight)
    w = psi.bits.sum(axis=1)
    mass = float(psi.weights[(w >= lo) & (w <= hi)].sum())
    return mass >= 1.0 / (2.0 * math.sqrt(n))


def _reweight_to_band(psi: Dist, k: float, observed_weight: int) -> Dist:
    """Force the weight-band mass up to its floor by rescaling in-band points.

    If the band holds no support at all it widens in sqrt(n) steps toward
    the nearest populated weights; only a degenerate distribution with no
    weights anywhere (impossible) would error out.
    """
    n = psi.n
    lo, hi = _plausible_band(n, k, observed_weight)
    w = psi.bits.sum(axis=1)
    in_band = (w >= lo) & (w <= hi)
    widened = 0
    while not in_band.any() and widened <= n:
        lo -= math.sqrt(n)
        hi += math.sqrt(n)
        widened += 1
        in_band = (w >= lo) & (w <= hi)
    if widened:
        logger.info("weight band around %d widened %d times to reach support",
                    observed_weight, widened)
    need = 1.0 / (2.0 * math.sqrt(n))
    have = float(psi.weights[in_band].sum())
    if have <= 0.0:
        raise DispersionConstraintError(
            f"scrambling distribution has no support near weight {observed_weight}"
        )
    if have >= need:
        return psi
    weights = psi.weights.copy()
    weights[in_band] *= need / have
    weights[~in_band] *= (1.0 - need) / (1.0 - have)
    return Dist(psi.bits, weights / weights.sum())


def _subset_to_onto_perm(source: np.ndarray, target: np.ndarray, n: int) -> Perm:
    """Lexicographically-smallest mapping with sigma(source) = target (as sets)."""
    src = set(int(s) for s in source)
    tgt_in = sorted(int(t) for t in target)
    tgt_out = sorted(set(range(n)) - set(tgt_in))
    mapping = []
    it_in, it_out = iter(tgt_in), iter(tgt_out)
    for s in range(n):
        mapping.append(next(it_in) if s in src else next(it_out))
    return Perm(tuple(mapping))


def dispersion_decoy(i_bits: np.ndarray, psi: Dist, k: float,
                     mode: str = "auto", rng=None, tidied: Dist | None = None) -> Perm:
    """The decoy pair element: the reverse of the most likely tidying
    permutation on the scrambling distribution to have produced ``i``.

    For binary supports the outcome likelihood collapses to a subset
    indicator, so the search reduces to placing ``sigma^{-1}(ones of i)``
    on the subset S maximizing ``sum_{z superset S} w(z) (1-1/k)^{|z|}``.
    Exact over all |i|-subsets when that sweep is small; greedy ascent
    with local swaps otherwise.  Ties break lexicographically.
    """
    i_bits = np.asarray(i_bits, dtype=np.uint8)
    n = psi.n
    ones = np.flatnonzero(i_bits)
    r = ones.shape[0]
    if r == 0:
        return identity_perm(n)
    if tidied is None:
        _, tidied = tidy_cached(psi)
    scores_base = tidied.weights * (1.0 - 1.0 / k) ** tidied.bits.sum(axis=1) if k > 1 \
        else tidied.weights
    support = tidied.bits.astype(bool)

    def subset_score(cols) -> float:
        mask = np.all(support[:, cols], axis=1)
        return float(scores_base[mask].sum())

    if mode == "auto":
        sweep_cost = math.comb(n, r) * support.shape[0]
        mode = "exact" if sweep_cost <= 200_000 else "greedy"
    if mode == "exact":
        import itertools

        best, best_val = None, -1.0
        for comb in itertools.combinations(range(n), r):
            val = subset_score(list(comb))
            if val > best_val + 1e-15:
                best_val, best = val, comb
        chosen = np.asarray(best, dtype=np.intp)
    elif mode == "greedy":
        chosen: list = []
        alive = np.ones(support.shape[0], dtype=bool)
        for _ in range(r):
            gains = np.full(n, -1.0)
            for c in range(n):
                if c in chosen:
                    continue
                mask = alive & support[:, c]
                gains[c] = float(scores_base[mask].sum())
            pick = int(np.argmax(gains))
            chosen.append(pick)
            alive &= support[:, pick]
        chosen = np.asarray(sorted(chosen), dtype=np.intp)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    # sigma^{-1}(ones) = chosen  <=>  sigma(chosen) = ones
    return _subset_to_onto_perm(chosen, ones, n)


# ---------------------------------------------------------------------------
# digits
# ---------------------------------------------------------------------------


def sample_digit(value: float, cfg: SessionConfig, offset: float = 0.0) -> int:
    """Cell parity of the estimator on the gauge grid."""
    if not 0.0 <= value <= 1.0:
        raise ValueError("sampled value must lie in [0, 1]")
    return int(math.floor((value + offset) / cfg.cell)) & 1


def digit_stream(values: np.ndarray, cfg: SessionConfig, offset: float) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return (np.floor((values + offset) / cfg.cell).astype(np.int64) & 1).astype(np.uint8)


# ---------------------------------------------------------------------------
# the block engine
# ---------------------------------------------------------------------------


def _situation(a_true: bool, b_true: bool) -> int:
    if a_true and b_true:
        return 0
    if a_true:
        return 1
    if b_true:
        return 2
    return 3


def run_block(cfg: SessionConfig, phi: Dist, phi2: Dist, psi: Dist, psi2: Dist,
              rng: np.random.Generator, index: int = 0,
              psi_provider=None, psi2_provider=None) -> BlockTranscript:
    """Execute one L-round block and distill one bit.

    Choices (pairs, picks, sampling origin) are fixed for the block; the
    published pairs derive from the first round's draws.  The scrambling
    distributions must give the observed draw weights non-negligible mass;
    violations re-elect through the providers (up to ``cfg.psi_retries``)
    then fall back to reweighting, both logged.
    """
    n, k = cfg.n, cfg.k
    tidy_a, _ = tidy_cached(phi)
    tidy_b, _ = tidy_cached(phi2)
    role_a = tidy_a.inverse()  # published element whose inverse tidies A's frame
    role_b = tidy_b.inverse()

    xs = phi.sample(rng, cfg.L)
    ys = phi2.sample(rng, cfg.L)
    i_mat = (rng.random(xs.shape) < xs / k).astype(np.uint8)
    j_mat = (rng.random(ys.shape) < ys / k).astype(np.uint8)

    psi = _ensure_band(cfg, psi, int(i_mat[0].sum()), rng, psi_provider, "A")
    psi2 = _ensure_band(cfg, psi2, int(j_mat[0].sum()), rng, psi2_provider, "B")

    decoy_a = dispersion_decoy(i_mat[0], psi, k, rng=rng)
    decoy_b = dispersion_decoy(j_mat[0], psi2, k, rng=rng)

    swap_a = int(rng.integers(0, 2))
    swap_b = int(rng.integers(0, 2))
    pair_a = (role_a, decoy_a) if swap_a else (decoy_a, role_a)
    pair_b = (role_b, decoy_b) if swap_b else (decoy_b, role_b)

    pick_a = int(rng.integers(0, 2))  # A picks from B's pair
    pick_b = int(rng.integers(0, 2))  # B picks from A's pair
    sigma_a = pair_b[pick_a]
    sigma_b = pair_a[pick_b]
    # the true role element sits at index 1 - swap in each published pair
    a_true = pick_a == 1 - swap_b
    b_true = pick_b == 1 - swap_a

    offset = float(rng.uniform(0.0, cfg.cell))

    inv_sigma_a = sigma_a.inverse().array()
    inv_sigma_b = sigma_b.inverse().array()
    frame_a = tidy_a.array()   # role_a^{-1} == tidy_a
    frame_b = tidy_b.array()

    v_a = np.einsum("rn,rn->r", xs[:, frame_a].astype(np.float64),
                    j_mat[:, inv_sigma_a].astype(np.float64)) / n
    v_b = np.einsum("rn,rn->r", i_mat[:, inv_sigma_b].astype(np.float64),
                    ys[:, frame_b].astype(np.float64)) / n

    stream_a = digit_stream(v_a, cfg, offset)
    stream_b = digit_stream(v_b, cfg, offset)

    e_a = int(rng.integers(0, 2))
    published, codeword = distill_encode(stream_a, e_a, cfg.gamma, rng)
    decode_b = distill_decode(stream_b, published, cfg.gamma, cfg.t)

    rounds = tuple(
        RoundRecord(
            x=xs[r], y=ys[r], i=i_mat[r], j=j_mat[r],
            v_a=float(v_a[r]), v_b=float(v_b[r]),
            digit_a=int(stream_a[r]), digit_b=int(stream_b[r]),
        )
        for r in range(cfg.L)
    )
    return BlockTranscript(
        index=index,
        pair_a=pair_a,
        pair_b=pair_b,
        offset=offset,
        rounds=rounds,
        published_codeword=published,
        situation=_situation(a_true, b_true),
        sigma_a=sigma_a,
        sigma_b=sigma_b,
        tidy_a=tidy_a,
        tidy_b=tidy_b,
        swap_a=swap_a,
        swap_b=swap_b,
        e_a=e_a,
        codeword=codeword,
        decode_b=decode_b,
    )


def _ensure_band(cfg: SessionConfig, psi: Dist, observed: int,
                 rng: np.random.Generator, provider, side: str) -> Dist:
    if _weight_band_ok(psi, cfg.k, observed):
        return psi
    if provider is not None:
        for attempt in range(cfg.psi_retries):
            candidate = provider()
            if _weight_band_ok(candidate, cfg.k, observed):
                logger.debug("side %s: scrambler re-elected after %d tries", side, attempt + 1)
                return candidate
        logger.info("side %s: scrambler re-election exhausted; reweighting", side)
    else:
        logger.debug("side %s: no scrambler provider; reweighting", side)
    return _reweight_to_band(psi, cfg.k, observed)
