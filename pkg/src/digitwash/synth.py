"""Seeded synthetic data with a known data-generating process.

Produces firm-year financial records, weekly returns, and MD&A documents in
the same formats the ingestion stage consumes, plus a truth ledger (true
coefficients, latent effects, planted term counts) so downstream estimates
can be checked against ground truth. Everything is a pure function of
(config, seed).
"""

from __future__ import annotations

import json
import os
import zlib
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .ingest import FirmYearRecord, derive_controls

# sector letters avoid the excluded financial prefix "J"
_SECTORS = "CDEFGHIKLMN"

DEFAULT_CONTROL_BETAS = {
    "BM": 0.02, "Age": 0.03, "Lev": 0.05, "ROA": 0.3, "Size": -0.04,
    "Growth": -0.01, "TobinQ": -0.01, "Cashflow": -0.03,
    "Audit": 0.02, "Big4": 0.01, "Dual": -0.005,
}


@dataclass
class DgpConfig:
    n_firms: int = 200
    years: tuple = (2010, 2021)
    seed: int = 0
    true_beta_gdt_on_spcr: float = 0.075
    control_betas: dict = field(default_factory=lambda: dict(DEFAULT_CONTROL_BETAS))
    firm_effect_sd: float = 0.3
    year_effect_sd: float = 0.1
    noise_sd: float = 0.5
    n_industries: int = 30
    gdt_sd: float = 0.15
    # weekly returns
    weeks_per_year: int = 52
    market_drift: float = 0.002
    market_vol: float = 0.02
    idio_vol: float = 0.03
    beta_sd: float = 0.3
    crash_shock_rate: float = 0.1
    crash_shock_size: float = -0.12
    crash_shocks_per_year: int = 2
    # text corpus
    doc_length: int = 1000
    dt_plant_mean: float = 4.0
    epu_plant_mean: float = 2.0
    pos_plant_mean: float = 3.0
    neg_plant_mean: float = 2.0

    def __post_init__(self):
        if self.n_firms < 2:
            raise ValueError("need at least 2 firms")
        if self.years[1] - self.years[0] + 1 < 3:
            raise ValueError("window must span at least 3 years")
        if min(self.firm_effect_sd, self.year_effect_sd, self.noise_sd) < 0:
            raise ValueError("variances must be non-negative")


def _rngs(cfg, label, n):
    # crc32 keeps the stream label deterministic across processes
    ss = np.random.SeedSequence([cfg.seed, zlib.crc32(label.encode())])
    return [np.random.default_rng(s) for s in ss.spawn(n)]


def _firm_ids(cfg):
    return [f"F{i:05d}" for i in range(cfg.n_firms)]


def _industries(cfg, rng):
    codes = [
        f"{_SECTORS[i % len(_SECTORS)]}{10 + i:02d}" for i in range(cfg.n_industries)
    ]
    return rng.choice(codes, size=cfg.n_firms)


@dataclass
class SyntheticPanel:
    records: list                 # FirmYearRecord
    panel: pd.DataFrame           # firm_id, year, industry, gdt, spcr, controls
    truth: dict


def generate_panel(cfg):
    """Draw a firm-year panel with a known linear crash-risk DGP.

    spcr = alpha + beta * gdt + sum(gamma_c * control_c) + firm effect
    + year effect + noise. Controls are derived from the drawn financials
    with the production formulas, so the observable CSV and the regression
    panel agree exactly.
    """
    (rng,) = _rngs(cfg, "panel", 1)
    start, end = cfg.years
    years = list(range(start, end + 1))
    firm_ids = _firm_ids(cfg)
    industries = _industries(cfg, rng)
    soe = rng.random(cfg.n_firms) < 0.3
    founding = rng.integers(1980, 2001, cfg.n_firms)
    listing = rng.integers(2001, 2010, cfg.n_firms)

    firm_eff = rng.normal(0, cfg.firm_effect_sd, cfg.n_firms)
    year_eff = rng.normal(0, cfg.year_effect_sd, len(years))
    alpha = 0.03

    records, rows = [], []
    for i, fid in enumerate(firm_ids):
        log_assets = rng.normal(22.0, 1.0)
        revenue = float(np.exp(rng.normal(21.0, 1.0)))
        for t, year in enumerate(years):
            assets = float(np.exp(log_assets + rng.normal(0, 0.1)))
            prior_revenue = revenue
            revenue = prior_revenue * float(np.exp(rng.normal(0.08, 0.15)))
            book = assets * rng.uniform(0.3, 0.9)
            market = book / rng.uniform(0.4, 1.5)
            intangible = assets * rng.uniform(0.02, 0.10)
            rec = FirmYearRecord(
                firm_id=fid,
                year=year,
                industry_code=str(industries[i]),
                founding_year=int(founding[i]),
                listing_year=int(listing[i]),
                status="normal",
                total_assets=assets,
                total_liabilities=assets * rng.uniform(0.2, 0.8),
                net_profit=assets * rng.normal(0.04, 0.05),
                book_value=book,
                market_value=market,
                replacement_cost=assets * rng.uniform(0.8, 1.2),
                revenue=revenue,
                prior_revenue=prior_revenue,
                cash_equivalents=assets * rng.uniform(0.01, 0.2),
                intangible_assets=intangible,
                # kept on the scale of realistic text-share measures so the
                # words-vs-deeds comparison has both signs in synthetic runs
                digital_intangible_assets=intangible * rng.uniform(0.0, 0.025),
                audit_unqualified=bool(rng.random() < 0.98),
                big4=bool(rng.random() < 0.10),
                dual=bool(rng.random() < 0.15),
                soe=bool(soe[i]),
            )
            records.append(rec)

            controls = derive_controls(rec)
            gdt = rng.normal(0, cfg.gdt_sd)
            spcr = (
                alpha
                + cfg.true_beta_gdt_on_spcr * gdt
                + sum(cfg.control_betas.get(c, 0.0) * controls[c]
                      for c in cfg.control_betas)
                + firm_eff[i]
                + year_eff[t]
                + rng.normal(0, cfg.noise_sd)
            )
            row = {"firm_id": fid, "year": year, "industry": str(industries[i]),
                   "gdt": gdt, "spcr": spcr}
            row.update(controls)
            rows.append(row)

    panel = pd.DataFrame(rows)
    truth = {
        "alpha": alpha,
        "beta_gdt": cfg.true_beta_gdt_on_spcr,
        "control_betas": dict(cfg.control_betas),
        "firm_effects": dict(zip(firm_ids, firm_eff.tolist())),
        "year_effects": dict(zip(map(str, years), year_eff.tolist())),
        "noise_sd": cfg.noise_sd,
        "seed": cfg.seed,
    }
    return SyntheticPanel(records=records, panel=panel, truth=truth)


def generate_weekly_returns(cfg):
    """Weekly market-factor returns with per-firm betas, idiosyncratic noise,
    and injected negative shocks for designated crash firms.

    Returns (DataFrame, truth dict naming the crash firms).
    """
    (rng,) = _rngs(cfg, "weekly", 1)
    n_years = cfg.years[1] - cfg.years[0] + 1
    n_weeks = n_years * cfg.weeks_per_year
    firm_ids = _firm_ids(cfg)

    market = rng.normal(cfg.market_drift, cfg.market_vol, n_weeks)
    betas = rng.normal(1.0, cfg.beta_sd, cfg.n_firms)
    crash_firms = set(
        np.asarray(firm_ids)[rng.random(cfg.n_firms) < cfg.crash_shock_rate].tolist()
    )

    rows = []
    for i, fid in enumerate(firm_ids):
        rets = betas[i] * market + rng.normal(0, cfg.idio_vol, n_weeks)
        if fid in crash_firms:
            for y in range(n_years):
                lo, hi = y * cfg.weeks_per_year, (y + 1) * cfg.weeks_per_year
                picks = rng.choice(
                    np.arange(lo, hi), size=cfg.crash_shocks_per_year, replace=False
                )
                rets[picks] += cfg.crash_shock_size
        rets = np.clip(rets, -0.95, None)
        fcap = float(np.exp(rng.normal(21.0, 1.0)))
        tcap = fcap * rng.uniform(1.0, 2.5)
        cap_walk = np.exp(np.cumsum(rng.normal(0, 0.01, n_weeks)))
        for w in range(n_weeks):
            rows.append({
                "firm_id": fid, "week_index": w, "ret": float(rets[w]),
                "float_market_cap": fcap * float(cap_walk[w]),
                "total_market_cap": tcap * float(cap_walk[w]),
            })
    df = pd.DataFrame(rows)
    truth = {"crash_firms": sorted(crash_firms), "betas": dict(zip(firm_ids, betas.tolist()))}
    return df, truth


def _filler_alphabet(dictionaries):
    used = set()
    for d in dictionaries:
        for term, is_regex in d.terms:
            used.update(term.lower())
            used.update(term.upper())
    # CJK block starting at U+4E00; skip anything a dictionary term uses
    pool = [chr(c) for c in range(0x4E00, 0x4E00 + 800) if chr(c) not in used]
    if len(pool) < 50:
        raise ValueError("dictionaries exhaust the filler alphabet")
    return pool


def generate_mda(cfg, dt_dict, epu_dict, pos_dict, neg_dict):
    """Documents with dictionary terms planted at known per-document counts.

    Filler characters are drawn from an alphabet disjoint from every
    dictionary term's characters, so the planted counts are exact ground
    truth for the scanner. Returns (DataFrame(firm_id, year, text), truth).
    """
    (rng,) = _rngs(cfg, "mda", 1)
    filler = _filler_alphabet([dt_dict, epu_dict, pos_dict, neg_dict])
    years = list(range(cfg.years[0], cfg.years[1] + 1))
    firm_ids = _firm_ids(cfg)

    def literal_terms(d):
        return [t for t, is_regex in d.terms if not is_regex]

    plantable = {
        "dt": (literal_terms(dt_dict), cfg.dt_plant_mean),
        "epu": (literal_terms(epu_dict), cfg.epu_plant_mean),
        "pos": (literal_terms(pos_dict), cfg.pos_plant_mean),
        "neg": (literal_terms(neg_dict), cfg.neg_plant_mean),
    }

    rows, truth = [], {}
    for fid in firm_ids:
        for year in years:
            planted = {}
            pieces = []
            for key, (terms, mean) in plantable.items():
                count = int(rng.poisson(mean))
                planted[key] = count
                pieces.extend(str(rng.choice(terms)) for _ in range(count))
            # lengths vary across documents so log-length has within variation
            target = int(rng.integers(cfg.doc_length // 2, cfg.doc_length * 2))
            n_fill = max(target - sum(len(p) for p in pieces), 10)
            fill_chars = rng.choice(filler, size=n_fill)
            # scatter the planted terms among filler runs
            cut_points = np.sort(rng.integers(0, n_fill + 1, size=len(pieces)))
            doc, prev = [], 0
            for piece, cut in zip(pieces, cut_points):
                doc.append("".join(fill_chars[prev:cut]))
                doc.append(piece)
                prev = cut
            doc.append("".join(fill_chars[prev:]))
            text = "".join(doc)
            rows.append({"firm_id": fid, "year": year, "text": text})
            truth[f"{fid}_{year}"] = planted
    return pd.DataFrame(rows), truth


def write_bundle(cfg, outdir, dt_dict, epu_dict, pos_dict, neg_dict):
    """Write the full synthetic bundle: firm_years.csv, weekly_returns.csv,
    mda.csv, direct regression panel, and the truth ledger."""
    os.makedirs(outdir, exist_ok=True)
    syn = generate_panel(cfg)
    weekly, weekly_truth = generate_weekly_returns(cfg)
    mda, mda_truth = generate_mda(cfg, dt_dict, epu_dict, pos_dict, neg_dict)

    fy = pd.DataFrame([vars(r) for r in syn.records])
    for col in ("audit_unqualified", "big4", "dual", "soe"):
        fy[col] = fy[col].astype(int)
    fy.to_csv(os.path.join(outdir, "firm_years.csv"), index=False)
    weekly.to_csv(os.path.join(outdir, "weekly_returns.csv"), index=False)
    mda.to_csv(os.path.join(outdir, "mda.csv"), index=False)
    syn.panel.to_csv(os.path.join(outdir, "dgp_panel.csv"), index=False)

    truth = dict(syn.truth)
    truth["weekly"] = weekly_truth
    truth["mda_planted_counts"] = mda_truth
    with open(os.path.join(outdir, "truth.json"), "w", encoding="utf-8") as fh:
        json.dump(truth, fh, sort_keys=True, indent=1)
    return syn
