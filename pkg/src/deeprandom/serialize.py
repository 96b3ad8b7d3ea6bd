"""Structured text formats: distributions, strategy tables, configs,
transcript logs, generator checkpoints and reports.

Everything is line-oriented plain text (or JSON lines for transcripts) so
reports and logs can be diffed; float fields use ``repr`` giving >= 15
significant digits and byte-stable round trips.
"""

from __future__ import annotations

import json

import numpy as np

from .dists import Dist, Perm
from .drg import DrgConfig, DrgSequence, TableStats
from .protocol import PublicBlock, PublicRound, SessionConfig
from . import rand

__all__ = [
    "dist_to_text",
    "dist_from_text",
    "table_to_text",
    "table_from_text",
    "parse_config_text",
    "config_to_text",
    "CONFIG_FIELDS",
    "split_config",
    "write_transcript",
    "read_transcript",
    "checkpoint_sequences",
    "restore_sequences",
    "report_to_json",
    "report_to_csv",
]


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------


def dist_to_text(dist: Dist) -> str:
    lines = ["dist v1", f"n {dist.n}", f"support {dist.support_size}"]
    for row, w in zip(dist.bits, dist.weights):
        lines.append("".join(str(int(b)) for b in row) + " " + repr(float(w)))
    return "\n".join(lines) + "\n"


def dist_from_text(text: str) -> Dist:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "dist v1":
        raise ValueError("not a dist record")
    n = int(lines[1].split()[1])
    count = int(lines[2].split()[1])
    rows, weights = [], []
    for ln in lines[3 : 3 + count]:
        bits_str, w_str = ln.split()
        if len(bits_str) != n:
            raise ValueError("bit string length mismatch")
        rows.append([int(c) for c in bits_str])
        weights.append(float(w_str))
    return Dist(np.array(rows, dtype=np.uint8), np.array(weights))


# ---------------------------------------------------------------------------
# strategy tables
# ---------------------------------------------------------------------------


def table_to_text(n: int, k: float, table: dict) -> str:
    lines = ["table-strategy v1", f"n {n}", f"k {repr(float(k))}", f"rows {len(table)}"]
    for (a, b, c) in sorted(table):
        lines.append(f"{a} {b} {c} {repr(float(table[(a, b, c)]))}")
    return "\n".join(lines) + "\n"


def table_from_text(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "table-strategy v1":
        raise ValueError("not a table-strategy record")
    n = int(lines[1].split()[1])
    k = float(lines[2].split()[1])
    count = int(lines[3].split()[1])
    table = {}
    for ln in lines[4 : 4 + count]:
        a, b, c, v = ln.split()
        table[(int(a), int(b), int(c))] = float(v)
    return n, k, table


# ---------------------------------------------------------------------------
# flat key-value config
# ---------------------------------------------------------------------------

# name -> (section, type); session fields mirror SessionConfig, drg fields
# feed DrgConfig, campaign fields steer the harness.
CONFIG_FIELDS = {
    "n": ("session", int),
    "k": ("session", float),
    "alpha": ("session", float),
    "L": ("session", int),
    "K": ("session", float),
    "gamma": ("session", float),
    "t": ("session", float),
    "trials": ("session", int),
    "seed": ("session", int),
    "psi_retries": ("session", int),
    "irpa_margin": ("session", int),
    "drg_process": ("drg", str),
    "drg_spread": ("drg", float),
    "drg_budget": ("drg", int),
    "drg_support_cap": ("drg", int),
    "drg_candidates": ("drg", int),
    "drg_stride": ("campaign", int),
    "drg_warmup": ("campaign", int),
    "c_prime": ("drg", float),
    "maturity_dim": ("drg", int),
    "est_error": ("campaign", float),
    "shards": ("campaign", int),
}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; unknown keys are an error."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_FIELDS:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        _, typ = CONFIG_FIELDS[key]
        try:
            out[key] = typ(value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    return out


def config_to_text(values: dict) -> str:
    lines = []
    for key in sorted(values, key=lambda k: (CONFIG_FIELDS[k][0], k)):
        lines.append(f"{key} = {values[key]}")
    return "\n".join(lines) + "\n"


def split_config(values: dict):
    """Partition parsed config values into (session, drg, campaign) dicts."""
    session, drg_part, campaign = {}, {}, {}
    for key, value in values.items():
        section, _ = CONFIG_FIELDS[key]
        {"session": session, "drg": drg_part, "campaign": campaign}[section][key] = value
    return session, drg_part, campaign


# ---------------------------------------------------------------------------
# transcripts (JSON lines)
# ---------------------------------------------------------------------------


def _bits_str(arr) -> str:
    return "".join(str(int(b)) for b in np.asarray(arr).ravel())


def _perm_list(perm: Perm):
    return list(perm.mapping)


def _config_dict(cfg: SessionConfig) -> dict:
    return {
        "n": cfg.n, "k": cfg.k, "alpha": cfg.alpha, "L": cfg.L, "K": cfg.K,
        "gamma": cfg.gamma, "t": cfg.t, "trials": cfg.trials, "seed": cfg.seed,
        "psi_retries": cfg.psi_retries, "irpa_margin": cfg.irpa_margin,
    }


def config_from_dict(d: dict) -> SessionConfig:
    return SessionConfig(**d)


def block_record(public: PublicBlock, private: dict | None) -> dict:
    rec = {
        "type": "block",
        "index": public.index,
        "public": {
            "pair_a": [_perm_list(p) for p in public.pair_a],
            "pair_b": [_perm_list(p) for p in public.pair_b],
            "offset": public.offset,
            "i": [_bits_str(r.i) for r in public.rounds],
            "j": [_bits_str(r.j) for r in public.rounds],
            "published": _bits_str(public.published_codeword),
        },
    }
    if private is not None:
        rec["private"] = private
    return rec


def write_transcript(path, cfg: SessionConfig, records, public_only: bool = False):
    with open(path, "w") as fh:
        fh.write(json.dumps({"type": "header", "config": _config_dict(cfg)},
                            sort_keys=True) + "\n")
        for rec in records:
            if public_only:
                rec = {key: rec[key] for key in rec if key != "private"}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_transcript(path):
    """Returns (config, [records])."""
    cfg = None
    records = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec.get("type") == "header":
                cfg = config_from_dict(rec["config"])
            else:
                records.append(rec)
    if cfg is None:
        raise ValueError("transcript has no header")
    return cfg, records


def public_block_from_record(rec: dict) -> PublicBlock:
    pub = rec["public"]
    def bits(s):
        return np.array([int(c) for c in s], dtype=np.uint8)
    return PublicBlock(
        index=rec["index"],
        pair_a=tuple(Perm(tuple(m)) for m in pub["pair_a"]),
        pair_b=tuple(Perm(tuple(m)) for m in pub["pair_b"]),
        offset=float(pub["offset"]),
        rounds=tuple(PublicRound(bits(i), bits(j)) for i, j in zip(pub["i"], pub["j"])),
        published_codeword=bits(pub["published"]),
    )


# ---------------------------------------------------------------------------
# generator checkpoints
# ---------------------------------------------------------------------------


def _drg_config_dict(cfg: DrgConfig) -> dict:
    return {
        "n": cfg.n, "k": cfg.k, "alpha": cfg.alpha, "c_prime": cfg.c_prime,
        "process": cfg.process, "sleek_spread": cfg.sleek_spread,
        "sleek_budget": cfg.sleek_budget, "support_cap": cfg.support_cap,
        "candidates": cfg.candidates, "mix_retries": cfg.mix_retries,
        "restarts": cfg.restarts, "regularize": cfg.regularize,
        "deterministic": cfg.deterministic,
        "maturity_dim": cfg.maturity_dim,
    }


def checkpoint_sequences(path, sequences):
    payload = []
    for seq in sequences:
        payload.append({
            "config": _drg_config_dict(seq.config),
            "step": seq.step,
            "current": dist_to_text(seq.current),
            "rng_state": rand.generator_state(seq.rng),
            "history": seq.history.state(),
            "trace": seq.trace,
        })
    with open(path, "w") as fh:
        json.dump({"format": "drg-checkpoint v1", "sequences": payload}, fh,
                  sort_keys=True)


def restore_sequences(path):
    with open(path) as fh:
        data = json.load(fh)
    if data.get("format") != "drg-checkpoint v1":
        raise ValueError("not a generator checkpoint")
    out = []
    for entry in data["sequences"]:
        cfg = DrgConfig(**entry["config"])
        seq = DrgSequence(
            config=cfg,
            current=dist_from_text(entry["current"]),
            step=int(entry["step"]),
            rng=rand.restore_generator(entry["rng_state"]),
            history=TableStats.from_state(entry["history"]),
            trace=list(entry["trace"]),
        )
        out.append(seq)
    return out


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def report_to_json(report) -> str:
    return json.dumps(report.as_dict(), sort_keys=True, indent=2) + "\n"


def report_to_csv(report) -> str:
    rows = ["metric,value,stderr"]
    d = report.as_dict()
    conf = d.get("confidence", {})
    for name in ("eps", "eps_prime", "reliability", "discard_rate"):
        rows.append(f"{name},{d[name]!r},{conf.get(name, '')!r}")
    for situation, stats in sorted(d.get("per_situation", {}).items()):
        rows.append(f"error_ab_{situation},{stats['error_ab']!r},")
        rows.append(f"error_axi_{situation},{stats['error_axi']!r},")
    for name, stats in sorted(d.get("adversaries", {}).items()):
        rows.append(f"eps_prime_{name},{stats['eps_prime']!r},{stats['stderr']!r}")
    return "\n".join(rows) + "\n"
