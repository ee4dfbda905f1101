"""Summary statistics, between-group tests, and resampled coefficient
difference tests.

All resampling runs off one explicit 64-bit seed; per-replication generators
are split deterministically from it, so p-values are identical whether the
replications run serially or in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats

from .errors import IncomparableSamples, ZeroVariance
from .ingest import quantile_type7
from .panelols import run_specification

SUMMARY_COLUMNS = ["N", "Mean", "Std. Dev.", "Min", "P25", "Median", "P75", "Max"]


def significance_stars(p):
    """10/5/1% star convention."""
    if p is None or (isinstance(p, float) and math.isnan(p)):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def summary_statistics(panel, variables):
    """N / mean / sd / min / p25 / median / p75 / max per variable.

    Quantiles use the same type-7 convention as winsorization.
    """
    data = panel.data if hasattr(panel, "data") else panel
    rows = []
    for var in variables:
        x = data[var].to_numpy(dtype=float)
        x = x[~np.isnan(x)]
        n = len(x)
        rows.append({
            "Variables": var,
            "N": n,
            "Mean": x.mean() if n else math.nan,
            "Std. Dev.": x.std(ddof=1) if n > 1 else math.nan,
            "Min": x.min() if n else math.nan,
            "P25": quantile_type7(x, 0.25) if n else math.nan,
            "Median": quantile_type7(x, 0.50) if n else math.nan,
            "P75": quantile_type7(x, 0.75) if n else math.nan,
            "Max": x.max() if n else math.nan,
        })
    return pd.DataFrame(rows, columns=["Variables"] + SUMMARY_COLUMNS)


@dataclass
class VarianceTestResult:
    sd_ratio: float       # sd(group2) / sd(group1)
    f_statistic: float    # s2^2 / s1^2
    df: tuple
    p_value: float


def variance_homogeneity_test(group1, group2):
    """Two-sided F ratio test of equal variances.

    The statistic is s2^2 / s1^2 referenced to F(n2-1, n1-1); the two-sided
    p doubles the smaller tail.
    """
    g1 = np.asarray(group1, dtype=float)
    g2 = np.asarray(group2, dtype=float)
    if len(g1) < 2 or len(g2) < 2:
        raise ValueError("each group needs at least 2 observations")
    v1, v2 = g1.var(ddof=1), g2.var(ddof=1)
    if v1 == 0:
        raise ZeroVariance(1)
    if v2 == 0:
        raise ZeroVariance(2)
    f = v2 / v1
    d1, d2 = len(g2) - 1, len(g1) - 1
    cdf = stats.f.cdf(f, d1, d2)
    p = min(1.0, 2 * min(cdf, 1 - cdf))
    return VarianceTestResult(
        sd_ratio=math.sqrt(v2 / v1), f_statistic=f, df=(d1, d2), p_value=p
    )


def _spawned_rngs(seed, n):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


@dataclass
class MedianTestResult:
    median_diff: float
    p_value: float
    replications: int
    seed: int


def median_difference_test(group1, group2, B=1000, seed=0):
    """Permutation test of the difference in medians.

    Statistic: median(group1) - median(group2). Labels are randomly
    reassigned B times preserving group sizes; the two-sided p-value uses
    the (1 + hits) / (B + 1) adjustment.
    """
    if B < 100:
        raise ValueError("B must be at least 100")
    g1 = np.asarray(group1, dtype=float)
    g2 = np.asarray(group2, dtype=float)
    if len(g1) == 0 or len(g2) == 0:
        raise ValueError("both groups must be non-empty")
    observed = float(np.median(g1) - np.median(g2))
    pooled = np.concatenate([g1, g2])
    n1 = len(g1)
    hits = 0
    for rng in _spawned_rngs(seed, B):
        perm = rng.permutation(pooled)
        stat = np.median(perm[:n1]) - np.median(perm[n1:])
        if abs(stat) >= abs(observed) - 1e-15:
            hits += 1
    return MedianTestResult(
        median_diff=observed, p_value=(1 + hits) / (B + 1),
        replications=B, seed=seed,
    )


@dataclass
class GroupTestReport:
    group_sizes: tuple
    means: tuple
    medians: tuple
    sd_ratio: float
    variance_p: float
    median_diff: float
    median_diff_p: float
    stars: str
    replications: int
    seed: int

    def to_dict(self):
        return {
            "group_sizes": list(self.group_sizes),
            "means": list(self.means),
            "medians": list(self.medians),
            "sd_ratio": self.sd_ratio,
            "variance_p": self.variance_p,
            "median_diff": self.median_diff,
            "median_diff_p": self.median_diff_p,
            "stars": self.stars,
            "replications": self.replications,
            "seed": self.seed,
        }


def between_group_tests(group1, group2, B=1000, seed=0):
    """Combined group comparison: sizes, means, medians, variance
    homogeneity, and the permutation median-difference test."""
    g1 = np.asarray(group1, dtype=float)
    g2 = np.asarray(group2, dtype=float)
    var = variance_homogeneity_test(g1, g2)
    med = median_difference_test(g1, g2, B=B, seed=seed)
    return GroupTestReport(
        group_sizes=(len(g1), len(g2)),
        means=(float(g1.mean()), float(g2.mean())),
        medians=(float(np.median(g1)), float(np.median(g2))),
        sd_ratio=var.sd_ratio,
        variance_p=var.p_value,
        median_diff=med.median_diff,
        median_diff_p=med.p_value,
        stars=significance_stars(med.p_value),
        replications=B,
        seed=seed,
    )


@dataclass
class CoefDiffReport:
    focal: str
    coefficient_group1: float
    coefficient_group2: float
    difference: float
    p_values: dict   # replication count -> p-value
    seed: int

    def to_dict(self):
        return {
            "focal": self.focal,
            "coefficient_group1": self.coefficient_group1,
            "coefficient_group2": self.coefficient_group2,
            "difference": self.difference,
            "p_values": {str(k): v for k, v in self.p_values.items()},
            "seed": self.seed,
        }


def coefficient_difference_test(
    panel, dependent, regressors, focal, split_column,
    B=(500, 1000), seed=0, fe=None, cluster=None, interactions=None,
):
    """Permutation test of a between-group coefficient difference.

    The specification is estimated separately on the two groups defined by
    the binary ``split_column``; the statistic is the difference in the
    ``focal`` coefficient. Group labels are permuted at the firm level
    (each firm's observations move together). ``B`` may be a single count
    or a list; smaller counts reuse the leading replications of the
    largest, keeping every reported p-value seed-deterministic.
    """
    data = panel.data if hasattr(panel, "data") else panel
    b_list = sorted({B} if isinstance(B, int) else set(B))
    b_max = b_list[-1]

    labels = data[split_column]
    values = sorted(labels.dropna().unique())
    if len(values) != 2:
        raise ValueError(f"{split_column!r} must be binary, saw {values}")

    from .panelols import FixedEffectsSpec, absorb_fixed_effects, fit_ols

    fe_used = fe or FixedEffectsSpec()

    def fit_full(lab):
        out = []
        for v in values:
            sub = data[lab == v]
            res = run_specification(
                sub, dependent, regressors, interactions=interactions,
                fe=fe, cluster=cluster,
            )
            if focal not in res.coefficients:
                raise IncomparableSamples(focal)
            out.append(res)
        return out

    interactions = interactions or []
    rhs_names = [f"{a}:{b}" for a, b in interactions] + list(regressors)

    def fast_focal(lab):
        # permutation replicates only need the focal coefficient
        diffs = []
        for v in values:
            sub = data[lab == v]
            cols = sub[[dependent] + list(regressors)].copy()
            for a, b in interactions:
                cols[f"{a}:{b}"] = sub[a] * sub[b]
            keep = cols.notna().all(axis=1)
            sub, cols = sub[keep], cols[keep]
            if fe_used.absorb_firm:
                counts = sub.groupby("firm_id")["firm_id"].transform("size")
                sub, cols = sub[counts > 1], cols[counts > 1]
            mat = cols[[dependent] + rhs_names].to_numpy(dtype=float)
            absorbed = absorb_fixed_effects(
                mat, sub["firm_id"], sub["year"], fe_used
            )
            add_intercept = not (fe_used.absorb_firm or fe_used.absorb_year)
            ols = fit_ols(
                absorbed.columns[:, 0], absorbed.columns[:, 1:],
                add_intercept=add_intercept, column_names=rhs_names,
            )
            names = (["_cons"] if add_intercept else []) + rhs_names
            diffs.append(dict(zip(names, ols.coefficients))[focal])
        return diffs[0] - diffs[1]

    res1, res2 = fit_full(labels)
    c1 = res1.coefficients[focal]
    c2 = res2.coefficients[focal]
    observed = c1 - c2

    firms = data["firm_id"].to_numpy()
    firm_levels = pd.unique(firms)
    firm_label = data.groupby("firm_id")[split_column].first()
    label_pool = firm_label.loc[firm_levels].to_numpy()

    stats_by_rep = []
    for rng in _spawned_rngs(seed, b_max):
        shuffled = rng.permutation(label_pool)
        lab = pd.Series(
            pd.Series(shuffled, index=firm_levels).loc[firms].to_numpy(),
            index=data.index,
        )
        try:
            stats_by_rep.append(fast_focal(lab))
        except Exception:
            stats_by_rep.append(math.nan)

    p_values = {}
    for b in b_list:
        draws = np.asarray(stats_by_rep[:b], dtype=float)
        draws = draws[~np.isnan(draws)]
        hits = int(np.sum(np.abs(draws) >= abs(observed) - 1e-15))
        p_values[b] = (1 + hits) / (len(draws) + 1)

    return CoefDiffReport(
        focal=focal,
        coefficient_group1=float(c1),
        coefficient_group2=float(c2),
        difference=float(observed),
        p_values=p_values,
        seed=seed,
    )
