"""Evaluation report rendering: delimited tables, a text summary, and figures.

The TSV carries one row per subset with columns
``subset<TAB>support_pct<TAB>support_n<TAB>metric<TAB>half_width`` (metric and
half-width as percentages with four decimals; empty when undefined). Figures
are written as PNG files next to the tables.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .evaluation import CwmeResult, DeltaCwmeRow, SubsetRow


def _pct(value: float | None) -> str:
    return "" if value is None else f"{100.0 * value:.4f}"


def _pct_point(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def write_report_tsv(rows: Sequence[SubsetRow], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("subset\tsupport_pct\tsupport_n\tmetric\thalf_width\n")
        for row in rows:
            fh.write(
                f"{row.key}\t{row.support_pct:.2f}\t{row.support_n}\t"
                f"{_pct(row.value)}\t{_pct(row.half_width)}\n"
            )


def write_delta_cwme_tsv(rows: Sequence[DeltaCwmeRow], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(
            "group\trobust_cwme\trobust_exposed\tbaseline_cwme\t"
            "baseline_exposed\tdelta\n"
        )
        for row in rows:
            fh.write(
                f"{row.group}\t{_pct_point(row.robust.value)}\t{row.robust.exposed}\t"
                f"{_pct_point(row.baseline.value)}\t{row.baseline.exposed}\t"
                f"{_pct_point(row.delta)}\n"
            )


def format_report_text(
    rows: Sequence[SubsetRow],
    cwme_result: CwmeResult | None = None,
    delta_rows: Sequence[DeltaCwmeRow] | None = None,
) -> str:
    lines = []
    lines.append(f"{'subset':<38}{'support':>16}  {'metric':>16}")
    lines.append("-" * 72)
    for row in rows:
        support = f"{row.support_pct:5.1f}% ({row.support_n})"
        if row.value is None:
            metric = "undefined"
        elif row.half_width is None:
            metric = f"{100.0 * row.value:5.1f}"
        else:
            metric = f"{100.0 * row.value:5.1f} ± {100.0 * row.half_width:4.1f}"
        lines.append(f"{row.label:<38}{support:>16}  {metric:>16}")
    if cwme_result is not None:
        lines.append("")
        if cwme_result.value is None:
            lines.append("CWME: undefined (no exposed mentions)")
        else:
            lines.append(
                f"CWME: {cwme_result.value:.1f}  "
                f"(echoed {cwme_result.echoed} of {cwme_result.exposed} exposed)"
            )
    if delta_rows:
        lines.append("")
        lines.append(f"{'group':<24}{'robust':>10}{'baseline':>10}{'delta':>10}")
        lines.append("-" * 54)
        for row in delta_rows:
            rv = "undef" if row.robust.value is None else f"{row.robust.value:.1f}"
            bv = "undef" if row.baseline.value is None else f"{row.baseline.value:.1f}"
            dv = "undef" if row.delta is None else f"{row.delta:+.1f}"
            lines.append(f"{row.group:<24}{rv:>10}{bv:>10}{dv:>10}")
    return "\n".join(lines) + "\n"


def write_report_text(
    rows: Sequence[SubsetRow],
    path: str | Path,
    cwme_result: CwmeResult | None = None,
    delta_rows: Sequence[DeltaCwmeRow] | None = None,
) -> None:
    Path(path).write_text(
        format_report_text(rows, cwme_result, delta_rows), encoding="utf-8"
    )


def plot_subset_recall(rows: Sequence[SubsetRow], path: str | Path) -> None:
    """Horizontal bars of subset recall with CI half-width error bars."""
    plotted = [r for r in rows if r.value is not None]
    if not plotted:
        return
    labels = [r.label for r in plotted]
    values = [100.0 * r.value for r in plotted]
    errs = [100.0 * r.half_width if r.half_width is not None else 0.0 for r in plotted]
    fig, ax = plt.subplots(figsize=(8, 0.4 * len(plotted) + 1.5))
    y = range(len(plotted))
    ax.barh(y, values, xerr=errs, color="#4878a8", capsize=3)
    ax.set_yticks(list(y))
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    ax.set_xlabel("Recall (%)")
    ax.set_xlim(0, 100)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_recurrence_profile(rows: Sequence[SubsetRow], path: str | Path) -> None:
    """Recall across first/2nd/3rd/4th/5th+ occurrence buckets."""
    keys = ["first", "occ_2nd", "occ_3rd", "occ_4th", "occ_5th_plus"]
    by_key = {r.key: r for r in rows}
    plotted = [by_key[k] for k in keys if k in by_key and by_key[k].value is not None]
    if not plotted:
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    x = range(len(plotted))
    values = [100.0 * r.value for r in plotted]
    errs = [100.0 * r.half_width if r.half_width is not None else 0.0 for r in plotted]
    ax.bar(x, values, yerr=errs, color="#6aa84f", capsize=3)
    ax.set_xticks(list(x))
    ax.set_xticklabels([r.label for r in plotted], rotation=20, ha="right")
    ax.set_ylabel("Recall@1 (%)")
    ax.set_ylim(0, 100)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_delta_cwme(rows: Sequence[DeltaCwmeRow], path: str | Path) -> None:
    """Per-group CWME change; bars left of zero mean fewer copied errors."""
    plotted = [r for r in rows if r.delta is not None]
    if not plotted:
        return
    fig, ax = plt.subplots(figsize=(7, 0.5 * len(plotted) + 1.5))
    y = range(len(plotted))
    deltas = [r.delta for r in plotted]
    colors = ["#b04a4a" if d > 0 else "#4a7ab0" for d in deltas]
    ax.barh(y, deltas, color=colors)
    ax.set_yticks(list(y))
    ax.set_yticklabels([r.group for r in plotted])
    ax.invert_yaxis()
    ax.axvline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("ΔCWME (percentage points)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_figures(
    rows: Sequence[SubsetRow],
    outdir: str | Path,
    delta_rows: Sequence[DeltaCwmeRow] | None = None,
) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    subset_png = outdir / "subset_recall.png"
    plot_subset_recall(rows, subset_png)
    if subset_png.exists():
        written.append(subset_png)
    recurrence_png = outdir / "recurrence_recall.png"
    plot_recurrence_profile(rows, recurrence_png)
    if recurrence_png.exists():
        written.append(recurrence_png)
    if delta_rows:
        delta_png = outdir / "delta_cwme.png"
        plot_delta_cwme(delta_rows, delta_png)
        if delta_png.exists():
            written.append(delta_png)
    return written
