"""Hidden-distribution generation by recursive defeat.

The generator runs unbounded sequences of seed-class distributions.  At
each step it computes the best statistic-table strategy against its recent
value and against its running history, then re-picks a mixture of
relabeled seeds that keeps those strategies' payoffs high.  An observer
who cannot read the step counters cannot pin down which distribution is in
use, which is the whole point: the published record never carries enough
to support the Bayesian centering a fixed strategy would need.

Everything here is driven by per-signature statistic tables (see
``adversary``), so steps cost milliseconds even at protocol dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NotMatureError, ThresholdInfeasibleError
from .dists import (
    Dist,
    Perm,
    identity_perm,
    random_perm,
    all_perms,
    mix,
    in_seed_class,
    tidy_cached,
)
from .adversary import (
    Strategy,
    payoff,
    pair_signatures,
    signature_table,
    strategy_table,
    table_conditional_mean,
)
from .seeds import SeedLibrary
from .sleek import apply_smoothing
from . import rand

__all__ = [
    "DrgConfig",
    "TableStats",
    "DrgSequence",
    "new_sequence",
    "min_strategy",
    "defeating_permutation",
    "drg_step",
    "maturity",
    "table_dimension",
    "elect",
]


@dataclass(frozen=True)
class DrgConfig:
    """Tuning for one generator sequence."""

    n: int
    k: float
    alpha: float
    c_prime: float = 1.0
    process: str = "combined"  # "recent" | "average" | "combined"
    sleek_spread: float = 0.25
    sleek_budget: int = 64
    support_cap: int = 256
    candidates: int = 6
    mix_retries: int = 16
    restarts: int = 8
    regularize: bool = False
    deterministic: bool = False
    # Strategy-space dimension used for the maturity gate.  None means the
    # full feasible statistic table; campaigns at strong degradation may
    # use the much smaller reachable dimension.
    maturity_dim: int | None = None
    # Statistic accumulation: exact signature tables or Monte Carlo cell
    # sampling ("auto" switches to sampling once the tables get large).
    stats_mode: str = "auto"
    stats_draws: int = 4096

    def __post_init__(self):
        if self.process not in ("recent", "average", "combined"):
            raise ValueError(f"unknown process {self.process!r}")
        if self.stats_mode not in ("auto", "exact", "mc"):
            raise ValueError(f"unknown stats mode {self.stats_mode!r}")
        if self.n % 2 != 0 or self.n <= 4:
            raise ValueError("need even n > 4")
        if self.k < 1.0:
            raise ValueError("k must be >= 1")

    def resolved_stats_mode(self) -> str:
        if self.stats_mode != "auto":
            return self.stats_mode
        spread = self.n / self.k
        table_side = spread + 12.0 * math.sqrt(max(spread, 1.0)) + 10.0
        return "exact" if table_side**3 <= 2.0e5 else "mc"


class TableStats:
    """Accumulated statistic-table moments across generator steps.

    For every public-statistic cell ``(|i|, |j|, i.j)`` this tracks the
    mass, the first moment of the shared value and its second moment,
    summed over the self-pairs of every recorded distribution.  The
    minimizer of the *average* payoff over the table space is then the
    cell-wise conditional mean, and its achieved payoff has the closed
    form ``sum(sq) - sum(num^2 / den)`` over cells, all per recorded step.
    """

    def __init__(self, n: int, k: float, mode: str = "exact", draws: int = 4096):
        if mode not in ("exact", "mc"):
            raise ValueError(f"unknown stats mode {mode!r}")
        self.n = n
        self.k = k
        self.mode = mode
        self.draws = draws
        self.steps = 0
        shape = (1, 1, 1)
        self.num = np.zeros(shape)
        self.den = np.zeros(shape)
        self.sq = np.zeros(shape)

    def _grow(self, shape):
        if all(s <= t for s, t in zip(shape, self.num.shape)):
            return
        new_shape = tuple(max(s, t) for s, t in zip(shape, self.num.shape))
        for name in ("num", "den", "sq"):
            old = getattr(self, name)
            grown = np.zeros(new_shape)
            grown[tuple(slice(0, s) for s in old.shape)] = old
            setattr(self, name, grown)

    def record(self, phi: Dist) -> None:
        """Add the self-pair statistics of one distribution.

        Exact mode contracts signature tables; sampling mode draws
        ``draws`` public outcomes from the self-pair with a stream derived
        from the distribution token (so recording is a pure function).
        """
        if self.mode == "exact":
            for (u, v, w), mass in pair_signatures(phi, phi).items():
                t = signature_table(self.n, self.k, u, v, w)
                self._grow(t.shape)
                sl = tuple(slice(0, s) for s in t.shape)
                target = w / (self.n * self.k)
                self.num[sl] += mass * t * target
                self.den[sl] += mass * t
                self.sq[sl] += mass * t * target**2
        else:
            a, b, c, targets = sample_public_cells(phi, phi, self.k, self.draws)
            hi = (int(a.max()) + 1, int(b.max()) + 1, int(c.max()) + 1)
            self._grow(hi)
            w = 1.0 / self.draws
            np.add.at(self.num, (a, b, c), w * targets)
            np.add.at(self.den, (a, b, c), w)
            np.add.at(self.sq, (a, b, c), w * targets**2)
        self.steps += 1

    def observed_dimension(self) -> int:
        return int(np.count_nonzero(self.den > 0.0))

    def min_table(self) -> dict:
        """Cell-wise conditional mean: the average-payoff minimizer."""
        table = {}
        nz = np.argwhere(self.den > 0.0)
        for a, b, c in nz:
            table[(int(a), int(b), int(c))] = float(
                self.num[a, b, c] / self.den[a, b, c]
            )
        return table

    def min_strategy(self) -> Strategy:
        return strategy_table(self.n, self.k, self.min_table())

    def min_average_payoff(self) -> float:
        """min over table strategies of the per-step average payoff."""
        if self.steps == 0:
            return 0.0
        mask = self.den > 0.0
        reduced = float(self.sq[mask].sum() - (self.num[mask] ** 2 / self.den[mask]).sum())
        return reduced / self.steps

    def state(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "mode": self.mode,
            "draws": self.draws,
            "steps": self.steps,
            "shape": list(self.num.shape),
            "num": self.num.ravel().tolist(),
            "den": self.den.ravel().tolist(),
            "sq": self.sq.ravel().tolist(),
        }

    @classmethod
    def from_state(cls, state: dict) -> "TableStats":
        obj = cls(int(state["n"]), float(state["k"]),
                  mode=state.get("mode", "exact"), draws=int(state.get("draws", 4096)))
        obj.steps = int(state["steps"])
        shape = tuple(state["shape"])
        obj.num = np.array(state["num"]).reshape(shape)
        obj.den = np.array(state["den"]).reshape(shape)
        obj.sq = np.array(state["sq"]).reshape(shape)
        return obj


def sample_public_cells(phi: Dist, phi2: Dist, k: float, draws: int):
    """Draw public statistic cells (|i|, |j|, i.j) and their hidden targets
    from a pair, with a stream derived from the pair tokens."""
    import hashlib

    digest = hashlib.blake2b(phi.token() + phi2.token(), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    xs = phi.sample(rng, draws)
    ys = phi2.sample(rng, draws)
    i_mat = rng.random(xs.shape) < xs / k
    j_mat = rng.random(ys.shape) < ys / k
    a = i_mat.sum(axis=1).astype(np.intp)
    b = j_mat.sum(axis=1).astype(np.intp)
    c = np.einsum("rn,rn->r", i_mat.astype(np.int64), j_mat.astype(np.int64)).astype(np.intp)
    targets = np.einsum("rn,rn->r", xs.astype(np.float64), ys.astype(np.float64)) / (phi.n * k)
    return a, b, c, targets


@dataclass
class DrgSequence:
    """One running generator sequence and its accumulated history."""

    config: DrgConfig
    current: Dist
    step: int
    rng: np.random.Generator
    history: TableStats
    trace: list = field(default_factory=list)

    @property
    def effective_dim(self) -> int:
        if self.config.maturity_dim is not None:
            return self.config.maturity_dim
        return table_dimension(self.config.n)

    @property
    def maturity_step(self) -> int:
        return maturity(self.effective_dim, self.config.c_prime)

    @property
    def mature(self) -> bool:
        return self.step >= self.maturity_step


def new_sequence(config: DrgConfig, library: SeedLibrary, rng: np.random.Generator,
                 seed_name: str | None = None) -> DrgSequence:
    start = library[seed_name] if seed_name else library.pick(rng)
    history = TableStats(config.n, config.k, mode=config.resolved_stats_mode(),
                         draws=config.stats_draws)
    history.record(start)
    return DrgSequence(config=config, current=start, step=0, rng=rng, history=history,
                       trace=[history.min_average_payoff()])


def min_strategy(phi: Dist, k: float, space: str = "table",
                 mode: str = "exact", draws: int = 4096) -> Strategy:
    """Payoff-minimizing strategy over the restricted space against the
    self-pair of ``phi``: the conditional mean on statistic cells."""
    if space != "table":
        raise ValueError("only the statistic-table space is supported")
    if mode == "exact":
        return strategy_table(phi.n, k, table_conditional_mean(phi, phi, k))
    stats = TableStats(phi.n, k, mode="mc", draws=draws)
    stats.record(phi)
    return stats.min_strategy()


def defeating_permutation(omega: Strategy, psi: Dist, threshold: float, k: float,
                          mode: str = "auto", rng=None, restarts: int = 8,
                          trials: int = 2048) -> Perm:
    """Find sigma with ``payoff(omega, psi∘sigma, psi∘sigma) >= threshold``.

    Statistic-table strategies are invariant under common relabeling, so
    for them the landscape is flat: the identity either already meets the
    threshold or nothing does.  General strategies get hill climbing with
    restarts, then (n <= 8) an exhaustive sweep; only after the sweep
    fails is the threshold declared infeasible.
    """
    n = psi.n
    if rng is None:
        rng = np.random.default_rng(0)

    def value(dist: Dist) -> float:
        if omega.is_stat_table or n <= 10:
            return payoff(omega, dist, dist, k).payoff
        return payoff(omega, dist, dist, k, trials=trials,
                      rng=rand.child_rng(0, hash(dist.token()) % (2**31)), mode="mc").payoff

    if omega.is_stat_table:
        val = value(psi)
        if val >= threshold:
            return identity_perm(n)
        raise ThresholdInfeasibleError(
            f"flat landscape: table-strategy payoff {val:.3e} below threshold {threshold:.3e}",
            best_value=val,
            best_perm=identity_perm(n),
        )

    best_perm, best_val = identity_perm(n), value(psi)
    if best_val >= threshold:
        return best_perm
    for _ in range(restarts):
        perm = random_perm(n, rng)
        cur = value(psi.compose(perm))
        improved = True
        while improved:
            improved = False
            arr = np.array(perm.mapping)
            for a in range(n - 1):
                for b in range(a + 1, n):
                    arr[a], arr[b] = arr[b], arr[a]
                    cand_perm = Perm(tuple(int(v) for v in arr))
                    cand = value(psi.compose(cand_perm))
                    if cand > cur + 1e-15:
                        cur, perm = cand, cand_perm
                        improved = True
                    else:
                        arr[a], arr[b] = arr[b], arr[a]
            if cur >= threshold:
                return perm
        if cur > best_val:
            best_val, best_perm = cur, perm
    if mode != "exhaustive" and n <= 8:
        for perm in all_perms(n):
            val = value(psi.compose(perm))
            if val >= threshold:
                return perm
            if val > best_val:
                best_val, best_perm = val, perm
    raise ThresholdInfeasibleError(
        f"no permutation reaches threshold {threshold:.3e} (best {best_val:.3e})",
        best_value=best_val,
        best_perm=best_perm,
    )


def _self_payoff(omega: Strategy, cand: Dist, cfg: DrgConfig) -> float:
    if cfg.resolved_stats_mode() == "exact":
        return payoff(omega, cand, cand, cfg.k).payoff
    a, b, c, targets = sample_public_cells(cand, cand, cfg.k, cfg.stats_draws)
    vals = np.array(
        [omega._stat_value(int(x), int(y), int(z)) for x, y, z in zip(a, b, c)]
    )
    return float(np.mean((np.clip(vals, 0.0, 1.0) - targets) ** 2))


def _pick_defeating(seq: DrgSequence, omega: Strategy, pool: list) -> Dist:
    """Choose the pool entry whose self-pair payoff against omega is largest."""
    cfg = seq.config
    if cfg.deterministic:
        return pool[0]
    count = min(cfg.candidates, len(pool))
    idx = seq.rng.choice(len(pool), size=count, replace=False)
    best, best_val = None, -1.0
    for i in idx:
        cand = pool[int(i)]
        val = _self_payoff(omega, cand, cfg)
        if val > best_val:
            best, best_val = cand, val
    return best


def _random_relabel(seq: DrgSequence, dist: Dist) -> tuple[Perm, Dist]:
    if seq.config.deterministic:
        sigma = identity_perm(seq.config.n)
    else:
        sigma = random_perm(seq.config.n, seq.rng)
    return sigma, dist.compose(sigma)


def _uniform_sample_dist(seq: DrgSequence) -> Dist:
    from .dists import make_dist

    rows = (seq.rng.random((64, seq.config.n)) < 0.5).astype(np.uint8)
    return make_dist(rows)


def drg_step(seq: DrgSequence, library: SeedLibrary) -> DrgSequence:
    """Advance one step: minimize, re-pick, relabel, mix, certify.

    The new value always passes the seed-class check; if the mixture
    drops below threshold the step falls back to a single relabeled seed,
    whose norm is exactly preserved by relabeling.
    """
    cfg = seq.config
    pool = [library[name] for name in library.names()]
    pool.append(seq.current)

    omega_recent = min_strategy(seq.current, cfg.k)
    omega_avg = seq.history.min_strategy()

    parts_spec: list = []
    if cfg.process in ("recent", "combined"):
        parts_spec.append(omega_recent)
    if cfg.process in ("average", "combined"):
        parts_spec.append(omega_avg)

    new_dist = None
    for _ in range(cfg.mix_retries):
        parts = []
        for omega in parts_spec:
            psi = _pick_defeating(seq, omega, pool)
            _, relabeled = _random_relabel(seq, psi)
            parts.append(relabeled)
        if len(parts) == 1:
            cand = parts[0]
        else:
            a = 0.5 if cfg.deterministic else float(seq.rng.uniform())
            cand = mix(parts, [a, 1.0 - a])
        if cfg.regularize:
            cand = mix([cand, _uniform_sample_dist(seq)], [0.5, 0.5])
        cand = cand.prune(cfg.support_cap)
        if in_seed_class(cand, cfg.alpha, rng=seq.rng):
            new_dist = cand
            break
    if new_dist is None:
        psi = _pick_defeating(seq, parts_spec[0], pool)
        _, new_dist = _random_relabel(seq, psi)

    seq.history.record(new_dist)
    seq.trace.append(seq.history.min_average_payoff())
    return replace(seq, current=new_dist, step=seq.step + 1)


def table_dimension(n: int) -> int:
    """Number of feasible public-statistic cells (|i|, |j|, i.j)."""
    count = 0
    for a in range(n + 1):
        for b in range(n + 1):
            count += min(a, b) - max(0, a + b - n) + 1
    return count


def maturity(dim_omega: int, c_prime: float = 1.0) -> int:
    """Smallest N >= 3 with N / ln N >= c_prime * dim_omega.

    N/ln N is monotone increasing from N = 3 on, so this is also the point
    past which the ratio stays above the target.  N = 1 and N = 2 sit in
    the undefined/non-monotone fringe and are excluded by convention.
    """
    if dim_omega < 1:
        raise ValueError("dimension must be >= 1")
    target = c_prime * dim_omega
    n = 3
    while n / math.log(n) < target:
        n += 1
    return n


def elect(sequences: list, rng: np.random.Generator, alpha: float | None = None,
          spread: float | None = None, sleek_budget: int | None = None) -> Dist:
    """Combine mature sequences into one distribution ready for protocol use.

    Each current value is tidied, the tidied forms are averaged, a common
    random relabeling is applied, and the result is smoothed.  Tidied
    seed-class mixtures stack their certified subsets, so the combination
    stays in class; if smoothing erodes the norm below threshold the
    spread is halved until it fits (identity smoothing always passes).
    """
    if not sequences:
        raise ValueError("no sequences to elect from")
    cfg = sequences[0].config
    alpha = cfg.alpha if alpha is None else alpha
    spread = cfg.sleek_spread if spread is None else spread
    budget = cfg.sleek_budget if sleek_budget is None else sleek_budget
    for seq in sequences:
        if not seq.mature:
            raise NotMatureError(
                f"sequence at step {seq.step} has not reached maturity {seq.maturity_step}"
            )
    tidied = []
    for seq in sequences:
        _, t = tidy_cached(seq.current)
        tidied.append(t)
    mu = random_perm(cfg.n, rng)
    combined = mix([t.compose(mu) for t in tidied])
    current_spread = spread
    while True:
        smoothed = apply_smoothing(combined, alpha, spread=current_spread,
                                   budget=budget, rng=rng)
        smoothed = smoothed.prune(cfg.support_cap)
        if in_seed_class(smoothed, alpha, rng=rng):
            return smoothed
        if current_spread == 0.0:
            return combined
        current_spread = 0.0 if current_spread < 2.0 / cfg.n else current_spread / 2.0
