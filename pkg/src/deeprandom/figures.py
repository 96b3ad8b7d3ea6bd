"""Figure rendering for the report path.

Campaign reports, check summaries and generator traces render to PNG
files next to the delimited output.  All figures go through the Agg
backend so the CLI works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_report", "render_checks", "render_trace"]


def render_report(report, prefix: str) -> list:
    """Rate and per-situation figures for one campaign report.

    Returns the written paths (``<prefix>_rates.png`` and
    ``<prefix>_situations.png``).
    """
    paths = []

    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    names = ["eps", "eps_prime", "reliability", "discard_rate"]
    values = [report.eps, report.eps_prime, report.reliability, report.discard_rate]
    errors = [report.confidence.get(n, 0.0) for n in names]
    errors = [e if np.isfinite(e) else 0.0 for e in errors]
    ax.bar(names, values, yerr=errors, capsize=4, color="#4878d0")
    ax.axhline(0.0, color="black", lw=0.8)
    ax.set_ylabel("rate")
    ax.set_title("campaign rates (error bars: 2 s.e.)")
    fig.tight_layout()
    path = f"{prefix}_rates.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    situations = sorted(report.per_situation)
    ab = [report.per_situation[s]["error_ab"] for s in situations]
    axi = [report.per_situation[s]["error_axi"] for s in situations]
    xs = np.arange(len(situations))
    width = 0.38
    ax.bar(xs - width / 2, ab, width, label="partner error", color="#4878d0")
    ax.bar(xs + width / 2, axi, width, label="opponent error", color="#d65f5f")
    ax.set_xticks(xs, situations)
    ax.set_ylabel("error rate among kept blocks")
    ax.set_title("per-situation decode errors")
    ax.legend()
    fig.tight_layout()
    path = f"{prefix}_situations.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)
    return paths


def render_checks(results, prefix: str) -> list:
    """One horizontal pass/fail strip for a check run."""
    fig, ax = plt.subplots(figsize=(6.5, 0.36 * max(4, len(results))))
    colors = {"pass": "#59a14f", "fail": "#d65f5f", "report-only": "#f2a83b"}
    ys = np.arange(len(results))
    for y, res in zip(ys, results):
        ax.barh(y, 1.0, color=colors[res.status])
        ax.text(0.02, y, f"{res.check_id}  [{res.status}]", va="center", fontsize=8)
    ax.set_yticks([])
    ax.set_xticks([])
    ax.set_xlim(0, 1)
    ax.invert_yaxis()
    ax.set_title("verification checks")
    fig.tight_layout()
    path = f"{prefix}_checks.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def render_trace(trace, prefix: str, maturity_step: int | None = None) -> list:
    """Generator trace: minimized average payoff per step."""
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    ax.plot(np.arange(len(trace)), trace, lw=1.2, color="#4878d0")
    if maturity_step is not None and maturity_step < len(trace):
        ax.axvline(maturity_step, color="#d65f5f", ls="--", lw=1.0, label="maturity")
        ax.legend()
    ax.set_xlabel("step")
    ax.set_ylabel("min average payoff (restricted space)")
    ax.set_title("generator trace")
    fig.tight_layout()
    path = f"{prefix}_trace.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]
