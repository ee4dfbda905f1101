import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from digitwash.errors import DegenerateColumn, DuplicateKey, EmptyJoin, MissingColumn
from digitwash.ingest import (
    FirmYearRecord,
    SamplePolicy,
    apply_sample_filters,
    build_panel,
    derive_controls,
    firm_years_frame,
    load_firm_years,
    winsorize,
)

FY_COLUMNS = (
    "firm_id,year,industry_code,founding_year,listing_year,status,"
    "total_assets,total_liabilities,net_profit,book_value,market_value,"
    "replacement_cost,revenue,prior_revenue,cash_equivalents,"
    "intangible_assets,digital_intangible_assets,audit_unqualified,big4,dual,soe"
)


def _row(firm="A", year=2015, assets="100", industry="C39", status="normal",
         listing=2005):
    return (
        f"{firm},{year},{industry},1990,{listing},{status},{assets},50,5,30,60,"
        "90,80,70,10,8,2,1,0,0,0"
    )


def _write(tmp_path, rows):
    path = tmp_path / "fy.csv"
    path.write_text(FY_COLUMNS + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    return path


def make_record(**kwargs):
    defaults = dict(
        firm_id="A", year=2015, industry_code="C39", founding_year=1990,
        listing_year=2005, status="normal", total_assets=100.0,
        total_liabilities=50.0, net_profit=5.0, book_value=30.0,
        market_value=60.0, replacement_cost=90.0, revenue=80.0,
        prior_revenue=70.0, cash_equivalents=10.0, intangible_assets=8.0,
        digital_intangible_assets=2.0, audit_unqualified=True, big4=False,
        dual=False, soe=False,
    )
    defaults.update(kwargs)
    return FirmYearRecord(**defaults)


class TestLoadFirmYears:
    def test_two_valid_rows(self, tmp_path):
        path = _write(tmp_path, [_row("A"), _row("B")])
        records, rejects = load_firm_years(path)
        assert len(records) == 2
        assert rejects == []
        assert records[0].firm_id == "A"
        assert records[0].total_assets == 100.0

    def test_malformed_cell_rejected(self, tmp_path):
        path = _write(tmp_path, [_row("A"), _row("B", assets="abc")])
        records, rejects = load_firm_years(path)
        assert len(records) == 1
        assert len(rejects) == 1
        assert "abc" in rejects[0]["reason"] or "convert" in rejects[0]["reason"]

    def test_duplicate_key(self, tmp_path):
        path = _write(tmp_path, [_row("A", 2015), _row("A", 2015)])
        with pytest.raises(DuplicateKey):
            load_firm_years(path)

    def test_missing_column(self, tmp_path):
        path = tmp_path / "fy.csv"
        path.write_text("firm_id,year\nA,2015\n", encoding="utf-8")
        with pytest.raises(MissingColumn):
            load_firm_years(path)


class TestSampleFilters:
    def test_financial_industry_excluded(self):
        recs = [make_record(industry_code="J66"), make_record(firm_id="B")]
        kept, ledger = apply_sample_filters(recs, SamplePolicy())
        assert [r.firm_id for r in kept] == ["B"]
        assert ledger["industry_prefix"] == 1

    def test_ipo_within_window_excluded(self):
        recs = [make_record(listing_year=2015)]
        kept, ledger = apply_sample_filters(recs, SamplePolicy(window=(2010, 2021)))
        assert kept == []
        assert ledger["ipo_within_window"] == 1

    def test_normal_manufacturer_retained(self):
        recs = [make_record(listing_year=2005, industry_code="C30")]
        kept, _ = apply_sample_filters(recs, SamplePolicy())
        assert len(kept) == 1

    def test_status_excluded(self):
        recs = [make_record(status="ST"), make_record(firm_id="B", status="starST")]
        kept, ledger = apply_sample_filters(recs, SamplePolicy())
        assert kept == []
        assert ledger["status"] == 2

    def test_monotone_tightening(self):
        recs = [make_record(firm_id=f, industry_code=i)
                for f, i in zip("ABCDE", ["C1", "J6", "K2", "C3", "D4"])]
        loose, _ = apply_sample_filters(recs, SamplePolicy(exclude_industry_prefix=[]))
        tight, _ = apply_sample_filters(recs, SamplePolicy(exclude_industry_prefix=["J", "K"]))
        assert {r.firm_id for r in tight} <= {r.firm_id for r in loose}


class TestWinsorize:
    def test_constant_column_unchanged(self):
        x = np.full(10, 3.0)
        assert np.array_equal(winsorize(x, 0.01), x)

    def test_1_to_100_clamps_to_type7_quantiles(self):
        # oracle: h = (n-1)p = 0.99 -> 1 + 0.99*(2-1) = 1.99; upper mirror 99.01
        x = np.arange(1.0, 101.0)
        out = winsorize(x, 0.01)
        assert out.min() == pytest.approx(1.99, abs=1e-12)
        assert out.max() == pytest.approx(99.01, abs=1e-12)
        assert np.array_equal(out[1:-1], x[1:-1])

    def test_idempotent_when_cut_hits_order_statistic(self):
        # n=101, p=0.01: interpolation position lands exactly on the 2nd
        # order statistic, so re-winsorizing reproduces the output exactly
        rng = np.random.default_rng(0)
        x = rng.normal(size=101)
        once = winsorize(x, 0.01)
        twice = winsorize(once, 0.01)
        assert np.array_equal(once, twice)

    def test_near_idempotent_in_general(self):
        # with an interpolated cut the second pass can shift boundary values,
        # but never by more than one adjacent-order-statistic gap
        rng = np.random.default_rng(1)
        x = rng.normal(size=500)
        once = winsorize(x, 0.05)
        twice = winsorize(once, 0.05)
        gap = np.max(np.diff(np.sort(x)))
        assert np.max(np.abs(twice - once)) <= gap + 1e-12

    def test_missing_untouched(self):
        x = np.array([1.0, np.nan, 2.0, 3.0, 100.0])
        out = winsorize(x, 0.25)
        assert math.isnan(out[1])

    def test_degenerate(self):
        with pytest.raises(DegenerateColumn):
            winsorize(np.array([1.0, np.nan]), 0.01)

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=60),
        st.floats(0.0, 0.49),
    )
    def test_rank_preserving_and_bounded(self, values, frac):
        x = np.asarray(values)
        out = winsorize(x, frac)
        # order-preserving on ranks
        assert np.all(np.diff(out[np.argsort(x, kind="stable")]) >= -1e-9)
        # clamped output stays inside the original range
        assert out.min() >= x.min() - 1e-9 and out.max() <= x.max() + 1e-9


class TestDeriveControls:
    def test_unit_arithmetic(self):
        rec = make_record(
            book_value=1.0, market_value=1.0,
            total_assets=math.exp(22), total_liabilities=0.5 * math.exp(22),
        )
        c = derive_controls(rec)
        assert c["BM"] == pytest.approx(1.0)
        assert c["Size"] == pytest.approx(22.0)
        assert c["Lev"] == pytest.approx(0.5)

    def test_loss_dummy(self):
        assert derive_controls(make_record(net_profit=-5.0))["Loss"] == 1.0
        assert derive_controls(make_record(net_profit=5.0))["Loss"] == 0.0

    def test_age_undefined_when_founded_same_year(self):
        c = derive_controls(make_record(founding_year=2015, year=2015))
        assert math.isnan(c["Age"])

    def test_all_positive_denominators_no_missing(self):
        c = derive_controls(make_record())
        assert not any(math.isnan(v) for v in c.values())


class TestBuildPanel:
    def _frames(self):
        fy = firm_years_frame([make_record(firm_id="A", year=2014),
                               make_record(firm_id="A", year=2015),
                               make_record(firm_id="B", year=2014)])
        text = pd.DataFrame({"firm_id": ["A", "A"], "year": [2014, 2015],
                             "dtw": [0.1, 0.2]})
        crash = pd.DataFrame({"firm_id": ["A", "A", "B"], "year": [2014, 2015, 2014],
                              "spcr": [0.5, -0.1, 0.3]})
        return fy, text, crash

    def test_join_cardinality(self):
        fy, text, crash = self._frames()
        panel = build_panel(fy, text, crash)
        assert len(panel.data) == 2
        assert panel.observations == [("A", 2014), ("A", 2015)]

    def test_disjoint_keys_raise(self):
        fy, text, _ = self._frames()
        text["year"] = [1999, 1998]
        with pytest.raises(EmptyJoin):
            build_panel(fy, text)

    def test_deterministic_and_order_invariant(self):
        fy, text, crash = self._frames()
        p1 = build_panel(fy, text, crash)
        p2 = build_panel(fy.iloc[::-1], text.iloc[::-1], crash.iloc[::-1])
        pd.testing.assert_frame_equal(p1.data, p2.data)
