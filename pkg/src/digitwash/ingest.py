"""Load, validate, filter, and winsorize the input datasets into an aligned panel.

Inputs are plain CSV (UTF-8, header row). The firm-year file carries the
financials and governance flags from which the regression controls are
derived; weekly returns feed the crash-risk stage; the MD&A corpus feeds
the text stage.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import (
    DegenerateColumn,
    DuplicateKey,
    EmptyJoin,
    MissingColumn,
)

VALID_STATUSES = {"normal", "ST", "starST", "delisted"}

FIRM_YEAR_NUMERIC = [
    "founding_year", "listing_year",
    "total_assets", "total_liabilities", "net_profit", "book_value",
    "market_value", "replacement_cost", "revenue", "prior_revenue",
    "cash_equivalents", "intangible_assets", "digital_intangible_assets",
]
FIRM_YEAR_BOOL = ["audit_unqualified", "big4", "dual", "soe"]
FIRM_YEAR_COLUMNS = (
    ["firm_id", "year", "industry_code", "status"] + FIRM_YEAR_NUMERIC + FIRM_YEAR_BOOL
)

CONTROL_NAMES = [
    "BM", "Age", "Lev", "ROA", "Size", "Growth", "TobinQ", "Cashflow",
    "Audit", "Big4", "Dual", "Loss", "SOE",
]
# dummies are exempt from winsorization
CONTINUOUS_CONTROLS = ["BM", "Age", "Lev", "ROA", "Size", "Growth", "TobinQ", "Cashflow"]


@dataclass
class FirmYearRecord:
    firm_id: str
    year: int
    industry_code: str
    founding_year: int
    listing_year: int
    status: str
    total_assets: float
    total_liabilities: float
    net_profit: float
    book_value: float
    market_value: float
    replacement_cost: float
    revenue: float
    prior_revenue: float
    cash_equivalents: float
    intangible_assets: float
    digital_intangible_assets: float
    audit_unqualified: bool
    big4: bool
    dual: bool
    soe: bool


@dataclass
class WeeklyReturnRecord:
    firm_id: str
    week_index: int
    ret: float
    float_market_cap: float
    total_market_cap: float


@dataclass
class MdaDocument:
    firm_id: str
    year: int
    text: str


@dataclass
class SamplePolicy:
    exclude_industry_prefix: list = field(default_factory=lambda: ["J"])
    exclude_statuses: set = field(default_factory=lambda: {"ST", "starST", "delisted"})
    exclude_ipo_within_window: bool = True
    window: tuple = (2010, 2021)
    winsor_fraction: float = 0.01

    def __post_init__(self):
        if not (0 <= self.winsor_fraction < 0.5):
            raise ValueError("winsor_fraction must lie in [0, 0.5)")
        if self.window[0] > self.window[1]:
            raise ValueError("window start must not exceed end")


def _parse_bool(v):
    s = str(v).strip().lower()
    if s in ("1", "true", "t", "yes"):
        return True
    if s in ("0", "false", "f", "no"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def load_firm_years(path, schema=None):
    """Read firm-year records from CSV.

    ``schema`` optionally maps canonical column names to file column names.
    Malformed rows are collected into a rejects list (dicts with row number
    and reason) rather than aborting the load.

    Returns (records, rejects).
    """
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    if schema:
        df = df.rename(columns={v: k for k, v in schema.items()})
    for col in FIRM_YEAR_COLUMNS:
        if col not in df.columns:
            raise MissingColumn(col)

    records, rejects = [], []
    seen = {}
    for i, row in enumerate(df.itertuples(index=False)):
        raw = dict(zip(df.columns, row))
        try:
            key = (raw["firm_id"], int(raw["year"]))
            if key in seen:
                raise DuplicateKey(*key)
            seen[key] = i
            status = raw["status"].strip()
            if status not in VALID_STATUSES:
                raise ValueError(f"unknown status {status!r}")
            kwargs = {
                "firm_id": raw["firm_id"],
                "year": key[1],
                "industry_code": raw["industry_code"].strip(),
                "status": status,
            }
            for col in FIRM_YEAR_NUMERIC:
                val = raw[col].strip()
                if val == "":
                    kwargs[col] = math.nan
                else:
                    kwargs[col] = float(val)
            kwargs["founding_year"] = int(kwargs["founding_year"])
            kwargs["listing_year"] = int(kwargs["listing_year"])
            for col in FIRM_YEAR_BOOL:
                kwargs[col] = _parse_bool(raw[col])
            ta = kwargs["total_assets"]
            intan = kwargs["intangible_assets"]
            dig = kwargs["digital_intangible_assets"]
            if not math.isnan(intan) and not math.isnan(dig) and dig > intan:
                raise ValueError("digital_intangible_assets exceeds intangible_assets")
            records.append(FirmYearRecord(**kwargs))
        except DuplicateKey:
            raise
        except (ValueError, KeyError) as exc:
            rejects.append({"row": i, "firm_id": raw.get("firm_id", ""), "reason": str(exc)})
    return records, rejects


def load_weekly_returns(path):
    """Read weekly return records from CSV; returns (records, rejects)."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    for col in ("firm_id", "week_index", "ret", "float_market_cap", "total_market_cap"):
        if col not in df.columns:
            raise MissingColumn(col)
    records, rejects = [], []
    seen = set()
    for i, row in df.iterrows():
        try:
            key = (row["firm_id"], int(row["week_index"]))
            if key in seen:
                raise DuplicateKey(*key)
            seen.add(key)
            ret = float(row["ret"])
            if ret <= -1:
                raise ValueError(f"return {ret} at or below -100%")
            fcap = float(row["float_market_cap"]) if row["float_market_cap"].strip() else math.nan
            tcap = float(row["total_market_cap"]) if row["total_market_cap"].strip() else math.nan
            if fcap < 0 or tcap < 0:
                raise ValueError("negative market cap")
            records.append(WeeklyReturnRecord(key[0], key[1], ret, fcap, tcap))
        except DuplicateKey:
            raise
        except ValueError as exc:
            rejects.append({"row": i, "firm_id": row.get("firm_id", ""), "reason": str(exc)})
    return records, rejects


def load_mda_corpus(path):
    """Load MD&A documents from a CSV (firm_id, year, text) or a directory
    of ``{firm_id}_{year}.txt`` files. Documents empty after whitespace
    normalization are dropped."""
    docs = []
    if os.path.isdir(path):
        for fname in sorted(os.listdir(path)):
            if not fname.endswith(".txt"):
                continue
            stem = fname[:-4]
            firm_id, _, year = stem.rpartition("_")
            with open(os.path.join(path, fname), encoding="utf-8") as fh:
                text = fh.read()
            if text.strip():
                docs.append(MdaDocument(firm_id, int(year), text))
    else:
        df = pd.read_csv(path, dtype={"firm_id": str, "year": int, "text": str})
        for col in ("firm_id", "year", "text"):
            if col not in df.columns:
                raise MissingColumn(col)
        for _, row in df.iterrows():
            text = row["text"] if isinstance(row["text"], str) else ""
            if text.strip():
                docs.append(MdaDocument(row["firm_id"], int(row["year"]), text))
    return docs


def apply_sample_filters(records, policy):
    """Apply the sample-construction rules; returns (kept, ledger).

    Rules: (a) excluded industry prefixes, (b) excluded listing statuses,
    (c) IPO inside the sample window. The ledger counts removals per rule.
    """
    kept = []
    ledger = {"industry_prefix": 0, "status": 0, "ipo_within_window": 0, "outside_window": 0}
    start, end = policy.window
    for rec in records:
        if not (start <= rec.year <= end):
            ledger["outside_window"] += 1
            continue
        if any(rec.industry_code.startswith(p) for p in policy.exclude_industry_prefix):
            ledger["industry_prefix"] += 1
            continue
        if rec.status in policy.exclude_statuses:
            ledger["status"] += 1
            continue
        if policy.exclude_ipo_within_window and start <= rec.listing_year <= end:
            ledger["ipo_within_window"] += 1
            continue
        kept.append(rec)
    return kept, ledger


def quantile_type7(values, p):
    """Order-statistic quantile with linear interpolation at (n-1)p + 1."""
    v = np.sort(np.asarray(values, dtype=float))
    n = len(v)
    h = (n - 1) * p
    lo = int(math.floor(h))
    g = h - lo
    hi = min(lo + 1, n - 1)
    return v[lo] * (1 - g) + v[hi] * g


def winsorize(column, fraction):
    """Clamp the column to its [fraction, 1-fraction] type-7 quantiles.

    Missing values pass through untouched. Raises DegenerateColumn when
    fewer than two non-missing values are present.
    """
    if not (0 <= fraction < 0.5):
        raise ValueError("fraction must lie in [0, 0.5)")
    x = np.asarray(column, dtype=float)
    mask = ~np.isnan(x)
    if mask.sum() < 2:
        raise DegenerateColumn()
    if fraction == 0:
        return x.copy()
    lo = quantile_type7(x[mask], fraction)
    hi = quantile_type7(x[mask], 1 - fraction)
    out = x.copy()
    out[mask] = np.clip(x[mask], lo, hi)
    return out


def derive_controls(record):
    """Derive the named control variables from one firm-year record.

    Undefined ratios (non-positive denominators, non-positive age argument)
    are returned as NaN instead of raising.
    """
    r = record
    out = {}

    def ratio(num, den):
        return num / den if den and den > 0 and not math.isnan(den) else math.nan

    out["BM"] = ratio(r.book_value, r.market_value)
    age = r.year - r.founding_year
    out["Age"] = math.log(age) if age > 0 else math.nan
    out["Lev"] = ratio(r.total_liabilities, r.total_assets)
    out["ROA"] = ratio(r.net_profit, r.total_assets)
    out["Size"] = math.log(r.total_assets) if r.total_assets > 0 else math.nan
    out["Growth"] = (
        r.revenue / r.prior_revenue - 1
        if r.prior_revenue and r.prior_revenue > 0 and not math.isnan(r.prior_revenue)
        else math.nan
    )
    out["TobinQ"] = ratio(r.market_value, r.replacement_cost)
    out["Cashflow"] = ratio(r.cash_equivalents, r.total_assets)
    out["Audit"] = float(r.audit_unqualified)
    out["Big4"] = float(r.big4)
    out["Dual"] = float(r.dual)
    out["Loss"] = 1.0 if r.net_profit < 0 else 0.0
    out["SOE"] = float(r.soe)
    return out


def firm_years_frame(records):
    """Firm-year records plus derived controls as a sorted DataFrame."""
    rows = []
    for rec in records:
        row = {"firm_id": rec.firm_id, "year": rec.year, "industry": rec.industry_code}
        row.update(derive_controls(rec))
        row["dtd_num"] = rec.digital_intangible_assets
        row["dtd_den"] = rec.intangible_assets
        rows.append(row)
    df = pd.DataFrame(rows)
    return df.sort_values(["firm_id", "year"], kind="mergesort").reset_index(drop=True)


@dataclass
class PanelDataset:
    """Aligned firm-year panel: one row per (firm_id, year), plus the
    industry cluster label. Variables live in ``data`` columns."""
    data: pd.DataFrame
    cluster_column: str = "industry"

    @property
    def observations(self):
        return list(zip(self.data["firm_id"], self.data["year"]))

    @property
    def variables(self):
        reserved = {"firm_id", "year", self.cluster_column}
        return [c for c in self.data.columns if c not in reserved]

    def clusters(self):
        return self.data[self.cluster_column]


def build_panel(firm_years, text_metrics=None, crash_records=None, gdt_records=None):
    """Inner-join the stage outputs on (firm_id, year) into a PanelDataset.

    ``firm_years`` is the frame from :func:`firm_years_frame`; the others are
    DataFrames keyed by (firm_id, year). Raises EmptyJoin when no keys align.
    """
    panel = firm_years.copy()
    panel["year"] = panel["year"].astype(int)
    for extra in (text_metrics, crash_records, gdt_records):
        if extra is None:
            continue
        extra = extra.copy()
        extra["year"] = extra["year"].astype(int)
        panel = panel.merge(extra, on=["firm_id", "year"], how="inner")
    if len(panel) == 0:
        raise EmptyJoin()
    if panel.duplicated(subset=["firm_id", "year"]).any():
        dup = panel[panel.duplicated(subset=["firm_id", "year"])].iloc[0]
        raise DuplicateKey(dup["firm_id"], dup["year"])
    panel = panel.sort_values(["firm_id", "year"], kind="mergesort").reset_index(drop=True)
    return PanelDataset(panel)


def winsorize_panel(panel, columns, fraction):
    """Winsorize the given continuous columns in place over the pooled sample."""
    for col in columns:
        if col in panel.data.columns:
            vals = panel.data[col].to_numpy(dtype=float)
            if (~np.isnan(vals)).sum() >= 2 and np.nanstd(vals) > 0:
                panel.data[col] = winsorize(vals, fraction)
    return panel
