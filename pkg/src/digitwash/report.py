"""Rendering of result tables in the journal-style layout.

Coefficients carry significance stars with t-values parenthesized beneath,
fixed-effect Yes/No rows, and an N / adj. R-squared footer. Rendering is a
pure function of stored results: nothing is re-estimated here. Numbers are
displayed at 3 decimals; full precision stays in the JSON/CSV artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .inference import significance_stars

STAR_NOTE = (
    "*, **, and *** indicate statistical significance at the 10%, 5%, and 1% "
    "levels, respectively."
)
TVALUE_NOTE = (
    "The t-values are in parentheses (clustering standard errors at the "
    "industry level)."
)

PRECISION = 3


def _fmt(x):
    if x is None or x != x:
        return ""
    return f"{x:.{PRECISION}f}"


def coefficient_cell(coef, t_value, p_value):
    """e.g. ``0.075*** (3.25)``."""
    return f"{_fmt(coef)}{significance_stars(p_value)} ({_fmt(t_value)})"


@dataclass
class RenderedTable:
    title: str
    columns: list            # column labels; first is the row-label column
    rows: list               # list of lists of str
    notes: list = field(default_factory=list)


def render_regression_table(results, title, column_labels=None, row_order=None,
                            include_constant=True):
    """Multi-column coefficient table over a shared row universe.

    ``results`` is a list of RegressionResult; ``row_order`` pins the
    coefficient display order (default: order of first appearance).
    """
    if column_labels is None:
        column_labels = [f"({i + 1})" for i in range(len(results))]
    universe = []
    for res in results:
        for name in res.coefficients:
            if name == "_cons" or name in universe:
                continue
            universe.append(name)
    if row_order:
        ordered = [n for n in row_order if n in universe]
        ordered += [n for n in universe if n not in ordered]
        universe = ordered
    if include_constant and any("_cons" in r.coefficients for r in results):
        universe.append("_cons")

    rows = [["", *(r.dependent for r in results)]]
    for name in universe:
        cells = [name]
        for res in results:
            if name in res.coefficients:
                cells.append(coefficient_cell(
                    res.coefficients[name], res.t_values[name], res.p_values[name]
                ))
            else:
                cells.append("")
        rows.append(cells)
    rows.append(["Firm", *("Yes" if r.absorbed_fe_counts.get("firm") else "No"
                           for r in results)])
    rows.append(["Year", *("Yes" if r.absorbed_fe_counts.get("year") else "No"
                           for r in results)])
    rows.append(["N", *(str(r.n_obs) for r in results)])
    rows.append(["adj. R2", *(_fmt(r.adj_r2) for r in results)])
    return RenderedTable(
        title=title,
        columns=["", *column_labels],
        rows=rows,
        notes=[STAR_NOTE, TVALUE_NOTE],
    )


def render_summary_table(stats_frame, title="Summary statistics."):
    rows = []
    for _, row in stats_frame.iterrows():
        rows.append([
            str(row["Variables"]), str(int(row["N"])),
            *(_fmt(row[c]) for c in
              ("Mean", "Std. Dev.", "Min", "P25", "Median", "P75", "Max")),
        ])
    return RenderedTable(
        title=title,
        columns=["Variables", "N", "Mean", "Std. Dev.", "Min", "P25",
                 "Median", "P75", "Max"],
        rows=rows,
    )


def render_group_table(report, title="Between-group difference test.",
                       value_label="SPCR"):
    """Two-row layout: sizes, means, medians, the variance-homogeneity block,
    and the starred median difference."""
    rows = [
        ["1", str(report.group_sizes[0]), _fmt(report.means[0]),
         _fmt(report.medians[0]), "SD(Group2)/SD(Group1)",
         f"{_fmt(report.median_diff)}{report.stars}"],
        ["2", str(report.group_sizes[1]), _fmt(report.means[1]),
         _fmt(report.medians[1]),
         f"P = {_fmt(report.variance_p)} (ratio {_fmt(report.sd_ratio)})", ""],
    ]
    return RenderedTable(
        title=title,
        columns=["Group", "N", f"Mean of {value_label}", f"Median of {value_label}",
                 "Homogeneity of variance", "Median difference"],
        rows=rows,
        notes=[STAR_NOTE,
               f"Permutation replications B={report.replications}, seed={report.seed}."],
    )


def render_coef_diff_rows(report):
    """Footer rows for a subgroup table: replication/p pairs."""
    cells = "  ".join(
        f"{b}/{_fmt(p)}" for b, p in sorted(report.p_values.items())
    )
    return ["Between-group differences (B/p)", cells]


def to_markdown(table):
    lines = [f"### {table.title}", ""]
    lines.append("| " + " | ".join(table.columns) + " |")
    lines.append("|" + "|".join("---" for _ in table.columns) + "|")
    for row in table.rows:
        padded = list(row) + [""] * (len(table.columns) - len(row))
        lines.append("| " + " | ".join(padded) + " |")
    if table.notes:
        lines.append("")
        for note in table.notes:
            lines.append(f"Note: {note}")
    return "\n".join(lines) + "\n"


def to_latex(table):
    cols = "l" * len(table.columns)
    lines = [
        r"\begin{table}[htbp]",
        r"\caption{" + table.title + "}",
        r"\begin{tabular}{" + cols + "}",
        r"\hline",
        " & ".join(table.columns) + r" \\",
        r"\hline",
    ]
    for row in table.rows:
        padded = list(row) + [""] * (len(table.columns) - len(row))
        lines.append(" & ".join(padded) + r" \\")
    lines.append(r"\hline")
    lines.append(r"\end{tabular}")
    for note in table.notes:
        lines.append(r"\footnotesize{Note: " + note + "}")
    lines.append(r"\end{table}")
    return "\n".join(lines) + "\n"


def to_csv(table):
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        padded = list(row) + [""] * (len(table.columns) - len(row))
        writer.writerow(padded)
    for note in table.notes:
        writer.writerow([f"Note: {note}"])
    return buf.getvalue()


RENDERERS = {"markdown": to_markdown, "latex": to_latex, "csv": to_csv}
EXTENSIONS = {"markdown": ".md", "latex": ".tex", "csv": ".csv"}
