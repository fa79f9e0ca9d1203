"""Machine-readable reports and the N-sweep figure."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .printer import fmt_rational
from .semantics import eval_expr
from .syntax import free_vars, has_loop
from .transformers import DEFAULT_MAX_NODES, transform

STATUSES = ("Verified", "Refuted", "Unknown", "Estimated", "Encoded")

_RATIONAL = {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "riemann-wp task report",
    "type": "object",
    "required": ["task", "status", "N", "solver_time_ms", "query_nodes", "assumptions"],
    "properties": {
        "task": {"type": "string"},
        "status": {"enum": list(STATUSES)},
        "N": {"type": ["integer", "null"], "minimum": 1},
        "N_wlp": {"type": ["integer", "null"], "minimum": 1},
        "kind": {"type": ["string", "null"]},
        "solver_time_ms": {"type": "number", "minimum": 0},
        "query_nodes": {"type": "integer", "minimum": 0},
        "assumptions": {"type": "array", "items": {"type": "string"}},
        "witness": {"type": "object", "additionalProperties": _RATIONAL},
        "reason": {"type": "string"},
        "bound": {"type": "string"},
        "side_condition": {"type": "string"},
        "details": {"type": "object"},
        "program": {"type": "string"},
        "estimate": {"type": "object"},
        "output": {"type": "string"},
        "encoding": {"type": "string"},
    },
}

BATCH_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["reports"],
    "properties": {"reports": {"type": "array", "items": REPORT_SCHEMA}},
}


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def strip_timing(report: dict) -> dict:
    """Copy of a report without wall-clock fields (for reproducibility checks)."""
    out = {k: v for k, v in report.items() if k != "solver_time_ms"}
    if "reports" in out:
        out["reports"] = [strip_timing(r) for r in out["reports"]]
    return out


# ---------------------------------------------------------------- N sweep

@dataclass(frozen=True)
class SweepRow:
    n: int
    lower: Fraction
    upper: Fraction
    exact: bool


def sweep_values(prog, post, state: dict, ns, grid: int = 1, liberal: bool = False,
                 funcs=None, max_nodes: int = DEFAULT_MAX_NODES) -> list:
    """Lower and upper Riemann pre-expectations at ``state`` for each N.

    Quantified results are sampled at ``grid + 1`` points per cell, so a
    row is exact only when both values are quantifier-free.
    """
    if has_loop(prog):
        raise ValueError("sweep needs a loop-free program (unfold loops first)")
    env = {k: Fraction(v) for k, v in state.items()}
    lo_kind, hi_kind = ("lwlp", "uwlp") if liberal else ("lwp", "uwp")
    rows = []
    for n in ns:
        lo = transform(lo_kind, prog, post, n, max_nodes)
        hi = transform(hi_kind, prog, post, n, max_nodes)
        for v in free_vars(lo) | free_vars(hi):
            env.setdefault(v, Fraction(0))
        a = eval_expr(lo, env, grid, funcs)
        b = eval_expr(hi, env, grid, funcs)
        rows.append(SweepRow(n, a.lo, b.lo, a.exact and b.exact))
    return rows


def write_sweep(rows, out_dir, title: str = "", estimate=None, stem: str = "sweep") -> dict:
    """Write CSV, JSON and PNG renderings of a sweep; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / f"{stem}.csv", "json": out / f"{stem}.json", "png": out / f"{stem}.png"}
    with open(paths["csv"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "lower", "upper", "lower_float", "upper_float", "exact"])
        for r in rows:
            w.writerow([r.n, fmt_rational(r.lower), fmt_rational(r.upper),
                        f"{float(r.lower):.6f}", f"{float(r.upper):.6f}", int(r.exact)])
    data = {
        "title": title,
        "rows": [{"N": r.n, "lower": fmt_rational(r.lower), "upper": fmt_rational(r.upper),
                  "exact": r.exact} for r in rows],
    }
    if estimate is not None:
        data["estimate"] = {"mean": estimate.mean, "std_error": estimate.std_error,
                            "samples": estimate.samples, "partial": estimate.partial}
    paths["json"].write_text(json.dumps(data, indent=2) + "\n")
    plot_sweep(rows, paths["png"], title, estimate)
    return {k: str(v) for k, v in paths.items()}


def plot_sweep(rows, path, title: str = "", estimate=None, sigmas: float = 3.0):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = [r.n for r in rows]
    fig, ax = plt.subplots(figsize=(5.5, 3.6), dpi=120)
    ax.plot(ns, [float(r.lower) for r in rows], "o-", color="tab:blue", label="lower sum")
    ax.plot(ns, [float(r.upper) for r in rows], "s-", color="tab:red", label="upper sum")
    if estimate is not None:
        lo, hi = estimate.interval(sigmas)
        ax.axhline(estimate.mean, color="0.3", lw=1, ls="--", label="Monte Carlo mean")
        ax.axhspan(lo, hi, color="0.6", alpha=0.25, lw=0, label=f"$\\pm{sigmas:g}\\sigma$")
    if len(ns) > 1 and ns[-1] / max(ns[0], 1) >= 8:
        ax.set_xscale("log", base=2)
    ax.set_xticks(ns)
    ax.set_xticklabels([str(n) for n in ns])
    ax.set_xlabel("partition size N")
    ax.set_ylabel("pre-expectation at initial state")
    if title:
        ax.set_title(title, fontsize=10)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)

