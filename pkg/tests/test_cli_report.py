import json
import os
import re

import pandas as pd
import pytest
from click.testing import CliRunner

from digitwash.cli import main
from digitwash.inference import GroupTestReport
from digitwash.report import (
    STAR_NOTE,
    TVALUE_NOTE,
    RenderedTable,
    coefficient_cell,
    render_group_table,
    render_regression_table,
    render_summary_table,
    to_csv,
    to_latex,
    to_markdown,
)


class _FakeResult:
    def __init__(self, dependent, coefficients, t_values, p_values,
                 n_obs=100, adj_r2=0.451, firm=10, year=5):
        self.dependent = dependent
        self.coefficients = coefficients
        self.t_values = t_values
        self.p_values = p_values
        self.n_obs = n_obs
        self.adj_r2 = adj_r2
        self.absorbed_fe_counts = {"firm": firm, "year": year}


class TestCells:
    def test_starred_cell(self):
        assert coefficient_cell(0.0752, 3.2508, 0.004) == "0.075*** (3.251)"

    def test_no_stars(self):
        assert coefficient_cell(0.0752, 1.1, 0.2) == "0.075 (1.100)"

    def test_single_star_band(self):
        assert coefficient_cell(-0.02, -1.8, 0.07) == "-0.020* (-1.800)"

    def test_missing_blank(self):
        assert coefficient_cell(float("nan"), float("nan"), float("nan")) == " ()"
        # only the coefficient block is used when values are present
        assert coefficient_cell(1.23456, 2.0, 0.03) == "1.235** (2.000)"


class TestRegressionTable:
    def _results(self):
        return [
            _FakeResult("spcr", {"gdt": 0.075, "BM": 0.01},
                        {"gdt": 3.25, "BM": 0.5}, {"gdt": 0.004, "BM": 0.62}),
            _FakeResult("spcr1", {"gdt": 0.061},
                        {"gdt": 2.11}, {"gdt": 0.043}, n_obs=98, adj_r2=0.377),
        ]

    def test_layout(self):
        tbl = render_regression_table(self._results(), "Demo table.")
        assert tbl.columns == ["", "(1)", "(2)"]
        assert tbl.rows[0] == ["", "spcr", "spcr1"]
        gdt_row = next(r for r in tbl.rows if r[0] == "gdt")
        assert gdt_row[1] == "0.075*** (3.250)"
        assert gdt_row[2] == "0.061** (2.110)"
        bm_row = next(r for r in tbl.rows if r[0] == "BM")
        assert bm_row[2] == ""          # absent regressor left blank
        labels = [r[0] for r in tbl.rows]
        assert labels[-4:] == ["Firm", "Year", "N", "adj. R2"]
        assert tbl.rows[-2] == ["N", "100", "98"]
        assert tbl.rows[-1] == ["adj. R2", "0.451", "0.377"]
        assert STAR_NOTE in tbl.notes and TVALUE_NOTE in tbl.notes

    def test_row_order_pinned(self):
        tbl = render_regression_table(self._results(), "Demo.",
                                      row_order=["BM", "gdt"])
        labels = [r[0] for r in tbl.rows]
        assert labels.index("BM") < labels.index("gdt")

    def test_fe_no_rows(self):
        res = _FakeResult("y", {"x": 1.0}, {"x": 2.0}, {"x": 0.04},
                          firm=0, year=0)
        tbl = render_regression_table([res], "Demo.")
        assert ["Firm", "No"] in tbl.rows and ["Year", "No"] in tbl.rows


class TestOtherTables:
    def test_summary_layout(self):
        stats = pd.DataFrame([{
            "Variables": "spcr", "N": 5, "Mean": 3.0, "Std. Dev.": 1.5811,
            "Min": 1.0, "P25": 2.0, "Median": 3.0, "P75": 4.0, "Max": 5.0,
        }])
        tbl = render_summary_table(stats)
        assert tbl.columns == ["Variables", "N", "Mean", "Std. Dev.", "Min",
                               "P25", "Median", "P75", "Max"]
        assert tbl.rows[0] == ["spcr", "5", "3.000", "1.581", "1.000",
                               "2.000", "3.000", "4.000", "5.000"]

    def test_group_table_stars_and_note(self):
        rep = GroupTestReport(
            group_sizes=(40, 60), means=(0.1, -0.2), medians=(0.05, -0.1),
            sd_ratio=1.2, variance_p=0.3, median_diff=0.15, median_diff_p=0.02,
            stars="**", replications=500, seed=3,
        )
        tbl = render_group_table(rep)
        assert tbl.rows[0][-1] == "0.150**"
        assert any("B=500" in n for n in tbl.notes)


class TestRenderers:
    def _table(self):
        return RenderedTable(title="T.", columns=["", "(1)"],
                             rows=[["x", "0.123** (2.000)"]], notes=[STAR_NOTE])

    def test_markdown(self):
        text = to_markdown(self._table())
        assert "### T." in text
        assert "| x | 0.123** (2.000) |" in text
        assert STAR_NOTE in text

    def test_latex(self):
        text = to_latex(self._table())
        assert r"\begin{tabular}{ll}" in text
        assert r"x & 0.123** (2.000) \\" in text
        assert STAR_NOTE in text

    def test_csv(self):
        text = to_csv(self._table())
        assert text.splitlines()[1] == "x,0.123** (2.000)"

    def test_three_decimal_convention_everywhere(self):
        table = self._table()
        for render in (to_markdown, to_latex, to_csv):
            for num in re.findall(r"\d+\.\d+", render(table)):
                assert len(num.split(".")[1]) == 3


def _write_config(path, outdir, **synth):
    cfg = {
        "sample": {"window": [2012, 2016]},
        "inference": {"b_values": [100], "group_b": 100, "seed": 11},
        "output": {"dir": str(outdir), "formats": ["markdown", "csv"]},
        "synth": {"n_firms": 60, "years": [2012, 2016], **synth},
    }
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    outdir = base / "out"
    config = _write_config(base / "config.json", outdir)
    result = CliRunner().invoke(main, ["run-all", "--config", str(config)])
    assert result.exit_code == 0, result.output
    return config, outdir


class TestCli:
    def test_run_all_produces_tables(self, full_run):
        _, outdir = full_run
        names = sorted(os.listdir(outdir / "tables"))
        for t in ("T2", "T3", "T4", "T5", "T6", "T7", "T8"):
            assert f"{t}.md" in names and f"{t}.csv" in names
        text = (outdir / "tables" / "T4.md").read_text(encoding="utf-8")
        assert STAR_NOTE in text

    def test_report_rerender_is_pure(self, full_run):
        config, outdir = full_run
        before = {
            p: (outdir / "tables" / p).read_bytes()
            for p in os.listdir(outdir / "tables")
        }
        result = CliRunner().invoke(main, ["report", "--config", str(config)])
        assert result.exit_code == 0, result.output
        after = {
            p: (outdir / "tables" / p).read_bytes()
            for p in os.listdir(outdir / "tables")
        }
        assert before == after

    def test_missing_config_exits_1(self, tmp_path):
        result = CliRunner().invoke(
            main, ["ingest", "--config", str(tmp_path / "nope.json")])
        assert result.exit_code == 1
        assert "ValidationError" in result.output

    def test_missing_input_exits_1_with_error_json(self, tmp_path):
        outdir = tmp_path / "out"
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "inputs": {"firm_years": str(tmp_path / "absent.csv")},
            "output": {"dir": str(outdir)},
        }), encoding="utf-8")
        result = CliRunner().invoke(main, ["ingest", "--config", str(config)])
        assert result.exit_code == 1
        payload = json.loads((outdir / "error.json").read_text(encoding="utf-8"))
        assert payload["error"] == "ValidationError"

    def test_estimation_failure_exits_2(self, tmp_path):
        # a gdt stage with too few consecutive-year pairs is a numerical
        # failure, not a config problem
        outdir = tmp_path / "out"
        outdir.mkdir()
        pd.DataFrame({
            "firm_id": ["A", "A"], "year": [2014, 2015],
            "dtd_num": [1.0, 2.0], "dtd_den": [10.0, 10.0],
        }).to_csv(outdir / "firm_year_controls.csv", index=False)
        pd.DataFrame({
            "firm_id": ["A", "A"], "year": [2014, 2015],
            "dtw": [0.01, 0.02], "sentiment": [0.1, 0.0],
            "total_words": [900, 1100],
        }).to_csv(outdir / "text_metrics.csv", index=False)
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"output": {"dir": str(outdir)}}),
                          encoding="utf-8")
        result = CliRunner().invoke(main, ["gdt", "--config", str(config)])
        assert result.exit_code == 2
        payload = json.loads((outdir / "error.json").read_text(encoding="utf-8"))
        assert payload["error"] == "InsufficientPairs"

    def test_seed_override_changes_resampled_p(self, full_run, tmp_path):
        config, outdir = full_run
        tests = json.loads((outdir / "tests.json").read_text(encoding="utf-8"))
        assert tests["T3"]["seed"] == 11
