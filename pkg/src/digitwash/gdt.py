"""Words-vs-deeds gap construction.

DTD is the digital share of intangible assets. The headline gap measure is
built earnings-management style: regress next year's DTD on this year's
text measures (word share, sentiment, log text length) with firm and year
effects; the gap is the predicted DTD minus the realized DTD. GDT1 and
GDT2 are the simple-difference and indicator robustness variants.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
import pandas as pd

from .errors import EmptyGroupWarning, InsufficientPairs
from .panelols import ClusterSpec, FixedEffectsSpec, run_specification


def compute_dtd(record):
    """Digital intangible assets over intangible assets, clamped to [0, 1].

    NaN when intangibles are missing or non-positive.
    """
    den = record.intangible_assets
    num = record.digital_intangible_assets
    if den is None or math.isnan(den) or den <= 0 or math.isnan(num):
        return math.nan
    ratio = num / den
    if ratio < 0 or ratio > 1:
        warnings.warn(
            f"DTD outside [0,1] for ({record.firm_id!r}, {record.year}); clamped"
        )
        ratio = min(max(ratio, 0.0), 1.0)
    return ratio


def dtd_frame(records):
    """Per firm-year DTD values as a DataFrame."""
    rows = [
        {"firm_id": r.firm_id, "year": r.year, "dtd": compute_dtd(r)}
        for r in records
    ]
    df = pd.DataFrame(rows, columns=["firm_id", "year", "dtd"])
    return df.sort_values(["firm_id", "year"], kind="mergesort").reset_index(drop=True)


def estimate_gdt(panel, assign_to="target", fe_tol=1e-10):
    """Fit the prediction regression and derive the gap per firm-year.

    ``panel`` is a DataFrame with firm_id, year, dtw, sentiment, total_words
    and dtd. Consecutive-year pairs (t -> t+1) form the estimation sample:
    DTD_{t+1} on DTW_t, Sentiment_t, ln(TotalWords_t) with firm and year
    effects. The gap = predicted minus realized DTD, assigned to the target
    year t+1 (or the source year t with ``assign_to="source"``).

    Returns a DataFrame with firm_id, year, dtw, dtd, dtd_hat, gdt.
    """
    if assign_to not in ("target", "source"):
        raise ValueError("assign_to must be 'target' or 'source'")
    df = panel.sort_values(["firm_id", "year"], kind="mergesort").reset_index(drop=True)
    nxt = df[["firm_id", "year", "dtd"]].copy()
    nxt["year"] -= 1
    pairs = df.merge(
        nxt.rename(columns={"dtd": "dtd_next"}), on=["firm_id", "year"], how="inner"
    )
    pairs["log_total_words"] = np.log(pairs["total_words"].astype(float))
    pairs = pairs.dropna(subset=["dtd_next", "dtw", "sentiment", "log_total_words"])
    if len(pairs) < 4:
        raise InsufficientPairs(len(pairs))

    pairs = pairs.reset_index(drop=True)
    # only fitted values are used here; cluster by firm to satisfy the
    # covariance machinery without inventing an industry label
    result = run_specification(
        pairs,
        dependent="dtd_next",
        regressors=["dtw", "sentiment", "log_total_words"],
        fe=FixedEffectsSpec(absorb_firm=True, absorb_year=True),
        cluster=ClusterSpec("firm_id"),
        small_sample=False,
        fe_tol=fe_tol,
    )
    est = pairs.loc[result.sample_index, ["firm_id", "year", "dtw", "dtd_next"]].copy()
    est["dtd_hat"] = result.fitted
    est["gdt"] = est["dtd_hat"] - est["dtd_next"]  # = -residual

    if assign_to == "target":
        est["year"] = est["year"] + 1
        est = est.rename(columns={"dtd_next": "dtd"})
        # dtw of the target year, where observed, for the variant measures
        est = est.drop(columns=["dtw"]).merge(
            df[["firm_id", "year", "dtw"]], on=["firm_id", "year"], how="left"
        )
    else:
        est = est.drop(columns=["dtd_next"]).merge(
            df[["firm_id", "year", "dtd"]], on=["firm_id", "year"], how="left"
        )
    out = est[["firm_id", "year", "dtw", "dtd", "dtd_hat", "gdt"]]
    return out.sort_values(["firm_id", "year"], kind="mergesort").reset_index(drop=True)


def compute_variants(records):
    """Fill gdt1 = dtw - dtd and gdt2 = 1[dtw > dtd]; missing propagates."""
    df = records.copy()
    df["gdt1"] = df["dtw"] - df["dtd"]
    df["gdt2"] = np.where(
        df["gdt1"].isna(), np.nan, (df["gdt1"] > 0).astype(float)
    )
    return df


def split_groups(records, key):
    """Partition into two labeled groups.

    ``key="gdt_sign"``: Group1 gdt > 0, Group2 gdt < 0, zeros excluded.
    ``key="soe"``: SOE vs non-SOE on the SOE dummy.
    """
    if key == "gdt_sign":
        g1 = records[records["gdt"] > 0]
        g2 = records[records["gdt"] < 0]
        labels = ("Group1", "Group2")
    elif key == "soe":
        g1 = records[records["SOE"] == 1]
        g2 = records[records["SOE"] == 0]
        labels = ("SOE", "Non-SOE")
    else:
        raise ValueError(f"unknown split key {key!r}")
    for label, grp in zip(labels, (g1, g2)):
        if len(grp) == 0:
            warnings.warn(f"group {label} is empty", EmptyGroupWarning)
    return {labels[0]: g1, labels[1]: g2}
