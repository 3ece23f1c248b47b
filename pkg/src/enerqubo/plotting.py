"""Figure rendering for benchmark reports (headless matplotlib)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import BenchReport


def render_deviation_figure(report: BenchReport, path, bins: int = 10) -> None:
    """Histogram of percentage deviations per problem family, written to file.

    One panel per family with any feasible referenced rows; infeasible rows
    appear in the panel note so they are not silently dropped.
    """
    by_family: dict[str, list[float]] = {}
    infeasible: dict[str, int] = {}
    for row in report.rows:
        infeasible.setdefault(row.family, 0)
        if row.feasible and row.deviation_pct is not None:
            by_family.setdefault(row.family, []).append(row.deviation_pct)
        elif not row.feasible:
            infeasible[row.family] += 1
    families = sorted(by_family)
    if not families:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        ax.text(0.5, 0.5, "no feasible referenced rows", ha="center", va="center")
        ax.set_axis_off()
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        return
    fig, axes = plt.subplots(
        1, len(families), figsize=(4.2 * len(families), 3.2), squeeze=False
    )
    for ax, family in zip(axes[0], families):
        values = by_family[family]
        ax.hist(values, bins=bins, color="#4878a8", edgecolor="black", linewidth=0.5)
        ax.set_title(f"{family} (n={len(values)})")
        ax.set_xlabel("deviation from reference [%]")
        ax.set_ylabel("instances")
        bad = infeasible.get(family, 0)
        if bad:
            ax.annotate(
                f"{bad} infeasible row(s) excluded",
                xy=(0.98, 0.95),
                xycoords="axes fraction",
                ha="right",
                fontsize=8,
                color="#a84848",
            )
        ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
