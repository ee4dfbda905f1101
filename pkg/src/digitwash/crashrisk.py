"""Stock price crash risk from weekly returns.

Chain: build weekly market returns under a weighting scheme, regress each
firm-year's weekly returns on two leads and two lags of the market return,
take w = ln(1 + residual), and summarize the w series by the negative
coefficient of skewness. Three weightings give SPCR (current-price /
float-cap), SPCR1 (equal), and SPCR2 (total-price / total-cap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import (
    InsufficientWeeks,
    NoCapData,
    SingularDesign,
    TooFewWeeks,
    ZeroDispersion,
)

WEIGHTINGS = ("current_price", "equal", "total_price")
_CAP_COLUMN = {"current_price": "float_market_cap", "total_price": "total_market_cap"}


def weekly_frame(records):
    """Weekly return records as a DataFrame sorted by (firm_id, week_index)."""
    df = pd.DataFrame([vars(r) for r in records])
    return df.sort_values(["firm_id", "week_index"], kind="mergesort").reset_index(drop=True)


def compute_market_returns(weekly, weighting):
    """Weekly market return series under the given weighting.

    ``weekly`` is a DataFrame with firm_id, week_index, ret and the two cap
    columns. Cap weightings use each firm's prior-week cap, falling back to
    the same-week cap when no prior cap exists (first week). Weeks where a
    cap weighting is requested but every cap is missing are dropped and
    reported in the diagnostics.

    Returns (series indexed by week_index, diagnostics list).
    """
    if weighting not in WEIGHTINGS:
        raise ValueError(f"unknown weighting {weighting!r}")
    df = weekly.sort_values(["firm_id", "week_index"], kind="mergesort").copy()
    diagnostics = []
    if weighting == "equal":
        series = df.groupby("week_index")["ret"].mean()
        return series.sort_index(), diagnostics

    cap_col = _CAP_COLUMN[weighting]
    df["_w"] = df.groupby("firm_id")[cap_col].shift(1)
    df["_w"] = df["_w"].fillna(df[cap_col])
    out = {}
    for week, grp in df.groupby("week_index"):
        weights = grp["_w"].to_numpy(dtype=float)
        rets = grp["ret"].to_numpy(dtype=float)
        ok = ~np.isnan(weights)
        total = weights[ok].sum()
        if not ok.any() or total <= 0:
            diagnostics.append(NoCapData(week))
            continue
        out[week] = float(np.dot(weights[ok] / total, rets[ok]))
    return pd.Series(out, dtype=float).sort_index(), diagnostics


@dataclass
class MarketModelFit:
    betas: np.ndarray       # intercept, then lag-2 .. lead-2 market coefficients
    residuals: pd.Series    # epsilon indexed by week_index
    w: pd.Series            # ln(1 + epsilon), weeks with 1+eps <= 0 dropped
    n_dropped: int


def fit_expanded_market_model(firm_returns, market, leads=2, lags=2, min_weeks=30):
    """OLS of a firm's weekly returns on lead/lag market returns.

    ``firm_returns`` and ``market`` are Series indexed by week_index. Weeks
    missing any lead/lag market value are dropped before fitting.
    """
    cols = {"mkt_0": market}
    for k in range(1, lags + 1):
        cols[f"mkt_m{k}"] = market.shift(k)
    for k in range(1, leads + 1):
        cols[f"mkt_p{k}"] = market.shift(-k)
    design = pd.DataFrame(cols)
    aligned = design.reindex(firm_returns.index)
    usable = aligned.notna().all(axis=1) & firm_returns.notna()
    y = firm_returns[usable].to_numpy(dtype=float)
    X = aligned[usable].to_numpy(dtype=float)
    n = len(y)
    if n < max(min_weeks, X.shape[1] + 2):
        raise InsufficientWeeks("?", "?", n)
    Xc = np.column_stack([np.ones(n), X])
    beta, _, rank, _ = np.linalg.lstsq(Xc, y, rcond=None)
    if rank < Xc.shape[1]:
        raise SingularDesign()
    eps = y - Xc @ beta
    eps_s = pd.Series(eps, index=firm_returns.index[usable])
    keep = 1 + eps_s > 0
    w = np.log1p(eps_s[keep])
    return MarketModelFit(
        betas=beta, residuals=eps_s, w=w, n_dropped=int((~keep).sum())
    )


def compute_ncskew(w_values):
    """Negative coefficient of skewness of a demeaned weekly-return series.

    NCSKEW = -[ n (n-1)^{3/2} sum(w^3) ] / [ (n-1)(n-2) (sum(w^2))^{3/2} ]
    """
    w = np.asarray(w_values, dtype=float)
    n = len(w)
    if n < 3:
        raise TooFewWeeks(n)
    w = w - w.mean()
    # plain products, not pow(): libm pow breaks the exact sign symmetry of
    # odd powers, which would leak into the reflection antisymmetry of the
    # statistic
    s2 = float(np.sum(w * w))
    # spread at rounding-noise level means the series is constant for all
    # practical purposes; a moment ratio of noise would be meaningless
    if s2 == 0 or float(np.ptp(w)) < 1e-12:
        raise ZeroDispersion()
    s3 = float(np.sum(w * w * w))
    return -(n * (n - 1) ** 1.5 * s3) / ((n - 1) * (n - 2) * s2 ** 1.5)


@dataclass
class CrashRiskRecord:
    firm_id: str
    year: int
    spcr: float
    spcr1: float
    spcr2: float
    n_weeks: int


def default_week_to_year(start_year, weeks_per_year=52):
    """Map serial week_index (0-based) to calendar year."""
    def fn(week_index):
        return start_year + week_index // weeks_per_year
    return fn


def assemble_spcr(weekly, week_to_year, min_weeks=30, leads=2, lags=2):
    """Run the weighting -> market model -> NCSKEW chain per firm-year.

    Per-firm-year failures yield missing values and a diagnostic entry, not
    an abort. Returns (DataFrame sorted by (firm_id, year), diagnostics).
    """
    markets = {}
    diagnostics = []
    for weighting in WEIGHTINGS:
        series, diags = compute_market_returns(weekly, weighting)
        markets[weighting] = series
        diagnostics.extend(
            {"stage": f"market:{weighting}", "detail": str(d)} for d in diags
        )

    slot = {"current_price": "spcr", "equal": "spcr1", "total_price": "spcr2"}
    results = {}
    for firm_id, grp in weekly.groupby("firm_id"):
        firm_series = grp.set_index("week_index")["ret"].sort_index()
        years = firm_series.index.map(week_to_year)
        for year in sorted(set(years)):
            year_series = firm_series[np.asarray(years) == year]
            row = {"firm_id": firm_id, "year": int(year),
                   "spcr": math.nan, "spcr1": math.nan, "spcr2": math.nan,
                   "n_weeks": 0}
            for weighting in WEIGHTINGS:
                try:
                    fit = fit_expanded_market_model(
                        year_series, markets[weighting],
                        leads=leads, lags=lags, min_weeks=min_weeks,
                    )
                    value = compute_ncskew(fit.w.to_numpy())
                except (InsufficientWeeks, SingularDesign, TooFewWeeks, ZeroDispersion) as exc:
                    diagnostics.append(
                        {"stage": f"ncskew:{weighting}", "firm_id": firm_id,
                         "year": int(year), "detail": str(exc)}
                    )
                    continue
                row[slot[weighting]] = value
                if weighting == "current_price":
                    row["n_weeks"] = int(len(fit.w))
            if not all(math.isnan(row[c]) for c in ("spcr", "spcr1", "spcr2")):
                results[(firm_id, int(year))] = row

    df = pd.DataFrame(
        list(results.values()),
        columns=["firm_id", "year", "spcr", "spcr1", "spcr2", "n_weeks"],
    )
    if len(df):
        df = df.sort_values(["firm_id", "year"], kind="mergesort").reset_index(drop=True)
    return df, diagnostics
