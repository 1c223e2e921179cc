"""Report rendering: delimited tables plus matplotlib figures.

Every report path writes machine-readable CSV/JSON next to a rendered
figure. Figures are written without volatile PNG metadata so repeated runs
produce identical bytes.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .artifacts import write_json

_PNG_KW = dict(dpi=120, metadata={"Software": "memnav"})


def _write_csv(path, rows: list[dict], fieldnames: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_eval_report(out_csv: str, report, results) -> None:
    """report.csv (per sub-episode), report.json (aggregate), curve.csv and
    curve.png when per-budget points were requested."""
    base, _ = os.path.splitext(out_csv)
    rows = []
    for ei, result in enumerate(results):
        for gi, g in enumerate(result.per_goal):
            rows.append(
                {
                    "episode": ei,
                    "goal": gi,
                    "goal_kind": g.goal_kind,
                    "success": int(g.success),
                    "path_length": f"{g.path_length:.6g}",
                    "shortest_length": f"{g.shortest_length:.6g}",
                    "steps": g.steps,
                    "decisions_used": g.decisions_used,
                    "ended_by": g.ended_by,
                    "attempted": int(g.attempted),
                }
            )
    _write_csv(
        out_csv,
        rows,
        [
            "episode", "goal", "goal_kind", "success", "path_length",
            "shortest_length", "steps", "decisions_used", "ended_by", "attempted",
        ],
    )
    write_json(base + ".json", report.to_dict())
    if report.per_step_curve:
        curve_rows = [
            {"budget": p["budget"], "sr": f"{p['sr']:.6g}", "spl": f"{p['spl']:.6g}"}
            for p in report.per_step_curve
        ]
        _write_csv(base + "_curve.csv", curve_rows, ["budget", "sr", "spl"])
        fig, ax = plt.subplots(figsize=(5, 3.5))
        budgets = [p["budget"] for p in report.per_step_curve]
        ax.plot(budgets, [p["sr"] for p in report.per_step_curve], "o-", label="SR")
        ax.plot(budgets, [p["spl"] for p in report.per_step_curve], "s--", label="SPL")
        ax.set_xlabel("decision budget")
        ax.set_ylabel("rate")
        ax.set_ylim(0, 1)
        ax.legend()
        ax.grid(alpha=0.3)
        fig.tight_layout()
        fig.savefig(base + "_curve.png", **_PNG_KW)
        plt.close(fig)


def write_compare_report(out_dir: str, rows: list[dict], label_a: str, label_b: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    fields = [
        "budget",
        "sr_a", "sr_a_lo", "sr_a_hi", "spl_a",
        "sr_b", "sr_b_lo", "sr_b_hi", "spl_b",
    ]
    csv_rows = [
        {k: (f"{row[k]:.6g}" if isinstance(row[k], float) else row[k]) for k in fields}
        for row in rows
    ]
    _write_csv(os.path.join(out_dir, "compare.csv"), csv_rows, fields)
    write_json(
        os.path.join(out_dir, "compare.json"),
        {"label_a": label_a, "label_b": label_b, "rows": rows},
    )

    budgets = [r["budget"] for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for metric, ax in zip(("sr", "spl"), axes):
        for tag, label, color in (("a", label_a, "C0"), ("b", label_b, "C1")):
            ys = [r[f"{metric}_{tag}"] for r in rows]
            ax.plot(budgets, ys, "o-", color=color, label=label)
            if metric == "sr":
                lo = [r[f"sr_{tag}_lo"] for r in rows]
                hi = [r[f"sr_{tag}_hi"] for r in rows]
                ax.fill_between(budgets, lo, hi, color=color, alpha=0.2)
        ax.set_xlabel("decision budget")
        ax.set_ylabel(metric.upper())
        ax.set_ylim(0, 1)
        ax.grid(alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "compare.png"), **_PNG_KW)
    plt.close(fig)


def write_ablation_report(out_dir: str, rows: list[dict]) -> None:
    os.makedirs(out_dir, exist_ok=True)
    fields = ["goal_kind", "sr_with_memory", "sr_reset_memory", "n_with_memory", "n_reset_memory"]
    csv_rows = [
        {k: (f"{row[k]:.6g}" if isinstance(row[k], float) else row[k]) for k in fields}
        for row in rows
    ]
    _write_csv(os.path.join(out_dir, "ablation.csv"), csv_rows, fields)
    write_json(os.path.join(out_dir, "ablation.json"), {"rows": rows})

    kinds = [r["goal_kind"] for r in rows]
    x = range(len(kinds))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(4.0, 1.4 * len(kinds)), 3.5))
    ax.bar([i - width / 2 for i in x], [r["sr_with_memory"] for r in rows],
           width, label="memory kept", color="C0")
    ax.bar([i + width / 2 for i in x], [r["sr_reset_memory"] for r in rows],
           width, label="memory reset", color="C3")
    ax.set_xticks(list(x))
    ax.set_xticklabels(kinds)
    ax.set_ylabel("SR")
    ax.set_ylim(0, 1)
    ax.grid(axis="y", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "ablation.png"), **_PNG_KW)
    plt.close(fig)
