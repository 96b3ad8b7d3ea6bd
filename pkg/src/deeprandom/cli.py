"""Command-line interface.

Subcommands:

* ``simulate`` - run a campaign from a config file; writes the report to
  stdout and optionally to ``--out`` (json or csv), with figures rendered
  next to the output when ``--figures`` is set;
* ``drg``      - run/checkpoint/resume generator sequences and elect a
  distribution;
* ``attack``   - replay a logged transcript against a named strategy;
* ``verify``   - run registered numeric checks (``--all`` supported);
* ``seeds``    - list or dump the built-in seed library.

Exit status: 0 success, 1 usage/config error, 2 check failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import rand
from .adversary import strategy_counting, strategy_mean_match, strategy_table
from .campaign import CampaignOptions, attack_replay, full_knowledge_bayes, monte_carlo
from .checks import CHECK_IDS, run_all, verify
from .dists import cross_block_norm, centered_matrix, in_seed_class, quad_matrix
from .drg import DrgConfig, drg_step, elect, new_sequence
from .protocol import SessionConfig
from .seeds import seed_library
from . import serialize

__all__ = ["main", "cli"]


def _fail_usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _load_config(path: str):
    with open(path) as fh:
        values = serialize.parse_config_text(fh.read())
    return values


def _session_from_values(values: dict, override_seed=None, override_trials=None):
    session_kv, drg_kv, campaign_kv = serialize.split_config(values)
    if override_seed is not None:
        session_kv["seed"] = override_seed
    if override_trials is not None:
        session_kv["trials"] = override_trials
    cfg = SessionConfig(**session_kv)
    drg_defaults = dict(n=cfg.n, k=cfg.k, alpha=cfg.alpha, maturity_dim=2 * cfg.n)
    rename = {"drg_process": "process", "drg_spread": "sleek_spread",
              "drg_budget": "sleek_budget", "drg_support_cap": "support_cap",
              "drg_candidates": "candidates", "c_prime": "c_prime",
              "maturity_dim": "maturity_dim"}
    for key, value in drg_kv.items():
        drg_defaults[rename[key]] = value
    drg_cfg = DrgConfig(**drg_defaults)
    options = CampaignOptions(
        drg_stride=campaign_kv.get("drg_stride", 4),
        drg_warmup=campaign_kv.get("drg_warmup"),
        shards=campaign_kv.get("shards", 16),
        est_error=campaign_kv.get("est_error", 0.05),
    )
    return cfg, drg_cfg, options


def _strategy_by_name(name: str, cfg: SessionConfig):
    if name == "counting":
        return strategy_counting(cfg.n, cfg.k)
    if name == "mean-match":
        return strategy_mean_match(cfg.n, cfg.k)
    if name == "bayes-full":
        return full_knowledge_bayes
    if name.startswith("table:"):
        with open(name.split(":", 1)[1]) as fh:
            n, k, table = serialize.table_from_text(fh.read())
        return strategy_table(n, k, table)
    raise ValueError(f"unknown strategy {name!r}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_simulate(args) -> int:
    try:
        values = _load_config(args.config)
        cfg, drg_cfg, options = _session_from_values(values, args.seed, args.trials)
    except (OSError, ValueError, TypeError) as exc:
        return _fail_usage(str(exc))
    strategies = {}
    for name in args.strategy or ["counting"]:
        try:
            strategies[name] = _strategy_by_name(name, cfg)
        except (OSError, ValueError) as exc:
            return _fail_usage(str(exc))
    if args.transcript:
        options = CampaignOptions(
            drg_stride=options.drg_stride, drg_warmup=options.drg_warmup,
            shards=options.shards, est_error=options.est_error,
            keep_transcripts=True,
        )
    report = monte_carlo(cfg, strategies, drg_config=drg_cfg, options=options,
                         workers=args.workers)
    records = report.extras.pop("records", None)
    payload = (serialize.report_to_json(report) if args.format == "json"
               else serialize.report_to_csv(report))
    sys.stdout.write(payload)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
        if args.figures:
            from .figures import render_report

            prefix = args.out.rsplit(".", 1)[0]
            for path in render_report(report, prefix):
                print(f"figure: {path}")
    if args.transcript and records is not None:
        serialize.write_transcript(args.transcript, cfg, records,
                                   public_only=args.public_only)
        print(f"transcript: {args.transcript}")
    return 0


def _cmd_drg(args) -> int:
    try:
        values = _load_config(args.config) if args.config else {}
        n = values.get("n", args.n)
        k = values.get("k", args.k)
        alpha = values.get("alpha", args.alpha)
        if n is None:
            return _fail_usage("drg needs --n or a config file")
        drg_cfg = DrgConfig(n=int(n), k=float(k), alpha=float(alpha),
                            maturity_dim=values.get("maturity_dim"))
    except (OSError, ValueError, TypeError) as exc:
        return _fail_usage(str(exc))
    rng = rand.child_rng(args.seed, 0)
    library = seed_library(drg_cfg.n, drg_cfg.alpha, rng=rand.child_rng(args.seed, 1))
    if args.resume:
        sequences = serialize.restore_sequences(args.resume)
    else:
        sequences = [new_sequence(drg_cfg, library, rand.child_rng(args.seed, 2, s))
                     for s in range(args.sequences)]
    for _ in range(args.steps):
        sequences = [drg_step(seq, library) for seq in sequences]
    for seq in sequences:
        print(f"sequence: step={seq.step} support={seq.current.support_size} "
              f"min_avg_payoff={seq.history.min_average_payoff():.6g} "
              f"mature={seq.mature}")
    if args.checkpoint:
        serialize.checkpoint_sequences(args.checkpoint, sequences)
        print(f"checkpoint: {args.checkpoint}")
    if args.elect:
        dist = elect(sequences, rng)
        text = serialize.dist_to_text(dist)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
            print(f"elected: {args.out}")
        else:
            sys.stdout.write(text)
    if args.figures and sequences:
        from .figures import render_trace

        seq = sequences[0]
        prefix = (args.out or args.checkpoint or "drg").rsplit(".", 1)[0]
        for path in render_trace(seq.trace, prefix, seq.maturity_step):
            print(f"figure: {path}")
    return 0


def _cmd_attack(args) -> int:
    try:
        cfg, records = serialize.read_transcript(args.transcript)
        strategy = _strategy_by_name(args.strategy, cfg)
    except (OSError, ValueError) as exc:
        return _fail_usage(str(exc))
    if callable(strategy) and not hasattr(strategy, "value_batch"):
        return _fail_usage("attack replays need a public-data strategy")
    result = attack_replay(records, cfg, strategy)
    print(f"kept {result['kept']}")
    print(f"p_know {result['p_know']!r}")
    print(f"eps_prime {result['eps_prime']!r}")
    print(f"stderr {result['stderr']!r}")
    return 0


def _cmd_verify(args) -> int:
    ids = CHECK_IDS if args.all else tuple(args.check)
    params = {}
    if args.n:
        params["n"] = args.n
    if args.trials:
        params["trials"] = args.trials
    results = []
    failed = False
    for check_id in ids:
        try:
            res = verify(check_id, params, rand.child_rng(args.seed, 0))
        except KeyError as exc:
            return _fail_usage(str(exc))
        results.append(res)
        print(res.line())
        failed |= res.status == "fail"
    if args.out:
        lines = [res.line() for res in results]
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        if args.figures:
            from .figures import render_checks

            prefix = args.out.rsplit(".", 1)[0]
            for path in render_checks(results, prefix):
                print(f"figure: {path}")
    return 2 if failed else 0


def _cmd_seeds(args) -> int:
    try:
        library = seed_library(args.n, args.alpha, rng=rand.child_rng(args.seed, 3))
    except (ValueError,) as exc:
        return _fail_usage(str(exc))
    for name in library.names():
        dist = library[name]
        value, _ = cross_block_norm(centered_matrix(quad_matrix(dist)))
        flag = in_seed_class(dist, library.alpha)
        print(f"{name}: n={dist.n} support={dist.support_size} "
              f"norm={value:.6f} in_class={flag}")
        if args.dump:
            sys.stdout.write(serialize.dist_to_text(dist))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deeprandom",
                                     description="secret-key-agreement simulation lab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a campaign from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--strategy", action="append",
                   help="strategy name (repeatable): counting, mean-match, "
                        "bayes-full, table:FILE")
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--figures", action="store_true")
    p.add_argument("--transcript")
    p.add_argument("--public-only", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("drg", help="run or resume generator sequences")
    p.add_argument("--config")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sequences", type=int, default=1)
    p.add_argument("--steps", type=int, default=0)
    p.add_argument("--checkpoint")
    p.add_argument("--resume")
    p.add_argument("--elect", action="store_true")
    p.add_argument("--out")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=_cmd_drg)

    p = sub.add_parser("attack", help="replay a transcript against a strategy")
    p.add_argument("--transcript", required=True)
    p.add_argument("--strategy", required=True)
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("verify", help="run numeric verification checks")
    p.add_argument("check", nargs="*", help="check ids")
    p.add_argument("--all", action="store_true")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("seeds", help="list or dump the built-in seed library")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.001)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump", action="store_true")
    p.set_defaults(func=_cmd_seeds)
    return parser


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    if args.command == "verify" and not args.all and not args.check:
        return _fail_usage("verify needs check ids or --all")
    return args.func(args)


def main() -> None:
    sys.exit(cli())
