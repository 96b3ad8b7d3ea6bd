"""Monte Carlo campaigns and the reliability accounting.

A campaign runs the full pipeline per block: both parties elect
distributions from their generators, the block engine produces the public
record and the distilled bit, the receiver decodes, and every configured
opponent strategy is evaluated on the public record alone.  Rates follow
the flipping conventions: the error rate is ``2 min(p, 1-p)`` for
``p = P(e_A != e_B | kept)`` and the knowledge rate is ``2 |p' - 1/2|``
for ``p' = P(e_A = e_xi | kept)``; reliability is ``1 - eps - eps'``.

Blocks are split into a fixed number of logical shards, each with its own
derived streams and generator replicas, so reports are byte-identical for
a given (config, seed) regardless of how many worker processes map the
shards.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import rand
from .adversary import Strategy, strategy_bayes
from .dists import Dist
from .distill import DISCARD, irpa_simplified, nearest_decode
from .drg import DrgConfig, drg_step, elect, new_sequence
from .errors import ReconciliationFailedError
from .protocol import PublicBlock, SessionConfig, digit_stream, run_block
from .seeds import SeedLibrary, seed_library
from .serialize import block_record

__all__ = [
    "StatsReport",
    "CampaignOptions",
    "adversary_bit",
    "monte_carlo",
    "attack_replay",
]

WORKERS_ENV = "DEEPRANDOM_WORKERS"


@dataclass(frozen=True)
class CampaignOptions:
    """Harness knobs that are not part of the protocol contract."""

    drg_stride: int = 4        # blocks between generator advances
    drg_warmup: int | None = None  # steps before block 0 (None: run to maturity)
    shards: int = 16
    est_error: float = 0.05    # reconciliation tuning
    keep_transcripts: bool = False


@dataclass
class StatsReport:
    """Campaign outcome with per-field standard errors."""

    eps: float
    eps_prime: float
    reliability: float
    discard_rate: float
    per_situation: dict
    confidence: dict
    config_echo: dict
    adversaries: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        for val in (self.eps, self.eps_prime):
            if not 0.0 <= val <= 1.0 + 1e-12:
                raise ValueError("rates must lie in [0, 1]")
        if abs(self.reliability - (1.0 - self.eps - self.eps_prime)) > 1e-12:
            raise ValueError("reliability must equal 1 - eps - eps'")

    def as_dict(self) -> dict:
        return {
            "eps": self.eps,
            "eps_prime": self.eps_prime,
            "reliability": self.reliability,
            "discard_rate": self.discard_rate,
            "per_situation": self.per_situation,
            "confidence": self.confidence,
            "config_echo": self.config_echo,
            "adversaries": self.adversaries,
            "extras": self.extras,
        }


# ---------------------------------------------------------------------------
# adversary evaluation (public data only)
# ---------------------------------------------------------------------------


def adversary_bit(strategy: Strategy, public: PublicBlock, cfg: SessionConfig) -> int:
    """The opponent's decoded bit for one block, from public data only."""
    if not isinstance(public, PublicBlock):
        raise TypeError("adversaries are evaluated on PublicBlock views only")
    i_mat = np.stack([r.i for r in public.rounds])
    j_mat = np.stack([r.j for r in public.rounds])
    vals = strategy.value_batch(i_mat, j_mat, pair_a=public.pair_a, pair_b=public.pair_b)
    stream = digit_stream(np.clip(vals, 0.0, 1.0), cfg, public.offset)
    return nearest_decode(stream, public.published_codeword)


def _resolve_adversaries(spec, cfg: SessionConfig):
    """Normalize the adversary argument to an ordered name -> entry dict.

    Entries are either Strategy instances or factories called per block as
    ``factory(phi, phi2, cfg)`` (full-knowledge controls only).
    """
    if spec is None:
        return {}
    if isinstance(spec, Strategy):
        return {"primary": spec}
    if callable(spec):
        return {"primary": spec}
    return dict(spec)


# ---------------------------------------------------------------------------
# shard execution
# ---------------------------------------------------------------------------


@dataclass
class _ShardTally:
    blocks: int = 0
    kept: int = 0
    discarded: int = 0
    err_ab: int = 0
    situations: list = field(default_factory=lambda: [0, 0, 0, 0])
    kept_by_situation: list = field(default_factory=lambda: [0, 0, 0, 0])
    err_ab_by_situation: list = field(default_factory=lambda: [0, 0, 0, 0])
    agree_xi: dict = field(default_factory=dict)
    err_xi_by_situation: dict = field(default_factory=dict)
    bits_a: list = field(default_factory=list)
    bits_b: list = field(default_factory=list)
    records: list = field(default_factory=list)


def _shard_blocks(trials: int, shards: int):
    base, extra = divmod(trials, shards)
    counts = [base + (1 if s < extra else 0) for s in range(shards)]
    return counts


def _warm_sequence(seq, library, warmup):
    steps = warmup if warmup is not None else max(0, seq.maturity_step - seq.step)
    for _ in range(steps):
        seq = drg_step(seq, library)
    return seq


def _run_shard(shard: int, n_blocks: int, cfg: SessionConfig, drg_cfg: DrgConfig,
               options: CampaignOptions, adversaries: dict,
               library: SeedLibrary) -> _ShardTally:
    tally = _ShardTally()
    for name in adversaries:
        tally.agree_xi[name] = 0
        tally.err_xi_by_situation[name] = [0, 0, 0, 0]
    if n_blocks == 0:
        return tally

    seed = cfg.seed
    seq_a = new_sequence(drg_cfg, library, rand.child_rng(seed, shard, 1))
    seq_b = new_sequence(drg_cfg, library, rand.child_rng(seed, shard, 2))
    seq_a = _warm_sequence(seq_a, library, options.drg_warmup)
    seq_b = _warm_sequence(seq_b, library, options.drg_warmup)

    phi = phi2 = psi = psi2 = None
    for b in range(n_blocks):
        if b % max(1, options.drg_stride) == 0:
            if b:
                seq_a = drg_step(seq_a, library)
                seq_b = drg_step(seq_b, library)
            elect_rng_a = rand.child_rng(seed, shard, 3, b)
            elect_rng_b = rand.child_rng(seed, shard, 4, b)
            phi = elect([seq_a], elect_rng_a)
            psi = elect([seq_a], elect_rng_a)
            phi2 = elect([seq_b], elect_rng_b)
            psi2 = elect([seq_b], elect_rng_b)
        block_rng = rand.child_rng(seed, shard, 5, b)
        bt = run_block(cfg, phi, phi2, psi, psi2, block_rng, index=b)

        tally.blocks += 1
        tally.situations[bt.situation] += 1
        xi_bits = {}
        for name, entry in adversaries.items():
            strat = entry if isinstance(entry, Strategy) else entry(phi, phi2, cfg)
            xi_bits[name] = adversary_bit(strat, bt.public(), cfg)
        if bt.kept:
            tally.kept += 1
            tally.kept_by_situation[bt.situation] += 1
            mismatch = int(bt.decode_b != bt.e_a)
            tally.err_ab += mismatch
            tally.err_ab_by_situation[bt.situation] += mismatch
            tally.bits_a.append(bt.e_a)
            tally.bits_b.append(int(bt.decode_b))
            for name, bit in xi_bits.items():
                tally.agree_xi[name] += int(bit == bt.e_a)
                tally.err_xi_by_situation[name][bt.situation] += int(bit != bt.e_a)
        else:
            tally.discarded += 1
        if options.keep_transcripts:
            private = {
                "e_a": bt.e_a,
                "decode_b": bt.decode_b if bt.decode_b is DISCARD else int(bt.decode_b),
                "situation": bt.situation,
                "e_xi": xi_bits,
            }
            tally.records.append(block_record(bt.public(), private))
    return tally


def _merge(tallies):
    out = _ShardTally()
    for t in tallies:
        out.blocks += t.blocks
        out.kept += t.kept
        out.discarded += t.discarded
        out.err_ab += t.err_ab
        for u in range(4):
            out.situations[u] += t.situations[u]
            out.kept_by_situation[u] += t.kept_by_situation[u]
            out.err_ab_by_situation[u] += t.err_ab_by_situation[u]
        for name, v in t.agree_xi.items():
            out.agree_xi[name] = out.agree_xi.get(name, 0) + v
            by_s = out.err_xi_by_situation.setdefault(name, [0, 0, 0, 0])
            for u in range(4):
                by_s[u] += t.err_xi_by_situation[name][u]
        out.bits_a.extend(t.bits_a)
        out.bits_b.extend(t.bits_b)
        out.records.extend(t.records)
    return out


def _binom_se(p: float, count: int) -> float:
    if count <= 0:
        return float("inf")
    return math.sqrt(max(p * (1.0 - p), 0.0) / count)


# ---------------------------------------------------------------------------
# the campaign
# ---------------------------------------------------------------------------


def monte_carlo(cfg: SessionConfig, adversary, drg_config: DrgConfig | None = None,
                rng=None, options: CampaignOptions | None = None,
                library: SeedLibrary | None = None, workers: int | None = None
                ) -> StatsReport:
    """Run ``cfg.trials`` blocks end to end and account the rates.

    ``adversary`` is a Strategy, a full-knowledge factory, or a dict of
    either keyed by name; the first entry is the primary one reported in
    ``eps_prime``.  ``rng`` is accepted for interface symmetry but all
    streams derive from ``cfg.seed`` so reports are reproducible.
    """
    del rng  # streams derive from cfg.seed; see module docstring
    options = options or CampaignOptions()
    if drg_config is None:
        drg_config = DrgConfig(n=cfg.n, k=cfg.k, alpha=cfg.alpha,
                               maturity_dim=2 * cfg.n)
    if library is None:
        library = seed_library(cfg.n, cfg.alpha, rng=rand.child_rng(cfg.seed, 0))
    adversaries = _resolve_adversaries(adversary, cfg)

    shard_sizes = _shard_blocks(cfg.trials, max(1, min(options.shards, cfg.trials)))
    tasks = [
        (s, size, cfg, drg_config, options, adversaries, library)
        for s, size in enumerate(shard_sizes)
    ]
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1 and len(tasks) > 1:
        import multiprocessing as mp

        with mp.get_context("spawn").Pool(workers) as pool:
            tallies = pool.starmap(_run_shard, tasks)
    else:
        tallies = [_run_shard(*t) for t in tasks]
    tally = _merge(tallies)

    kept = tally.kept
    p_err = tally.err_ab / kept if kept else 0.0
    eps = 2.0 * min(p_err, 1.0 - p_err)
    discard_rate = tally.discarded / tally.blocks if tally.blocks else 0.0

    adversary_stats = {}
    primary_name = next(iter(adversaries), None)
    for name in adversaries:
        p_know = tally.agree_xi[name] / kept if kept else 0.5
        adversary_stats[name] = {
            "p_know": p_know,
            "eps_prime": 2.0 * abs(p_know - 0.5),
            "stderr": _binom_se(p_know, kept),
            "err_by_situation": [
                tally.err_xi_by_situation[name][u] / tally.kept_by_situation[u]
                if tally.kept_by_situation[u] else 0.0
                for u in range(4)
            ],
        }
    eps_prime = adversary_stats[primary_name]["eps_prime"] if primary_name else 0.0

    per_situation = {}
    for u in range(4):
        kept_u = tally.kept_by_situation[u]
        per_situation[f"S{u}"] = {
            "count": tally.situations[u],
            "kept": kept_u,
            "error_ab": tally.err_ab_by_situation[u] / kept_u if kept_u else 0.0,
            "error_axi": (
                tally.err_xi_by_situation[primary_name][u] / kept_u
                if primary_name and kept_u else 0.0
            ),
        }

    extras = {"kept": kept, "blocks": tally.blocks}
    if kept >= 8:
        irpa_rng = rand.child_rng(cfg.seed, 10**6)
        try:
            final_a, final_b, leaked = irpa_simplified(
                np.array(tally.bits_a, dtype=np.uint8),
                np.array(tally.bits_b, dtype=np.uint8),
                irpa_rng,
                est_error=max(options.est_error, p_err + 0.01),
                margin=min(cfg.irpa_margin, max(1, kept // 4)),
            )
            extras["irpa"] = {
                "final_len": int(final_a.shape[0]),
                "leaked": int(leaked),
                "equal": bool(np.array_equal(final_a, final_b)),
            }
        except ReconciliationFailedError as exc:
            extras["irpa"] = {"failed": str(exc)}

    confidence = {
        "eps": 2.0 * _binom_se(p_err, kept),
        "eps_prime": (2.0 * adversary_stats[primary_name]["stderr"]
                      if primary_name else float("inf")),
        "discard_rate": _binom_se(discard_rate, tally.blocks),
    }
    confidence["reliability"] = math.hypot(confidence["eps"], confidence["eps_prime"])

    report = StatsReport(
        eps=eps,
        eps_prime=eps_prime,
        reliability=1.0 - eps - eps_prime,
        discard_rate=discard_rate,
        per_situation=per_situation,
        confidence=confidence,
        config_echo={
            "n": cfg.n, "k": cfg.k, "alpha": cfg.alpha, "L": cfg.L, "K": cfg.K,
            "gamma": cfg.gamma, "t": cfg.t, "trials": cfg.trials, "seed": cfg.seed,
        },
        adversaries=adversary_stats,
        extras=extras,
    )
    if options.keep_transcripts:
        report.extras["records"] = tally.records
    return report


def full_knowledge_bayes(phi: Dist, phi2: Dist, cfg: SessionConfig) -> Strategy:
    """The negative-control factory: posterior mean with the true pair."""
    return strategy_bayes(phi, phi2, cfg.k)


def attack_replay(records, cfg: SessionConfig, strategy: Strategy) -> dict:
    """Re-evaluate a strategy on logged public data and grade against the
    held-out bits.  Returns the same knowledge accounting the in-process
    path produces, so the two can be asserted identical.
    """
    from .serialize import public_block_from_record

    kept = 0
    agree = 0
    for rec in records:
        private = rec.get("private")
        if private is None:
            raise ValueError("replay grading needs records with private fields")
        if private["decode_b"] == DISCARD:
            continue
        public = public_block_from_record(rec)
        bit = adversary_bit(strategy, public, cfg)
        kept += 1
        agree += int(bit == private["e_a"])
    p_know = agree / kept if kept else 0.5
    return {
        "kept": kept,
        "p_know": p_know,
        "eps_prime": 2.0 * abs(p_know - 0.5),
        "stderr": _binom_se(p_know, kept),
    }
