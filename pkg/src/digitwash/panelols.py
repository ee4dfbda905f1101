"""Two-way fixed-effects OLS with cluster-robust covariance.

Fixed effects are absorbed by alternating within-transformation (firm-demean,
year-demean, iterate to tolerance). Slopes come from an orthogonal-
decomposition least-squares solve; no normal-equations inversion on the
estimation path. Standard errors use the clustered sandwich with the
finite-sample factor [G/(G-1)] * [(N-1)/(N-K)], K counting slopes plus
absorbed fixed-effect levels.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
import scipy.linalg
from scipy import stats

from .errors import (
    NonConvergence,
    RankDeficient,
    SingletonClustersWarning,
    UndefinedDoF,
)


@dataclass
class FixedEffectsSpec:
    absorb_firm: bool = True
    absorb_year: bool = True


@dataclass
class ClusterSpec:
    cluster_variable: str = "industry"


@dataclass
class AbsorbResult:
    columns: np.ndarray
    sweeps: int
    final_delta: float
    n_firm_levels: int
    n_year_levels: int

    @property
    def absorbed_df(self):
        """Parameters consumed by absorption: all levels minus one shared
        redundancy per extra dimension (the common intercept)."""
        dims = [n for n in (self.n_firm_levels, self.n_year_levels) if n > 0]
        if not dims:
            return 0
        return sum(dims) - (len(dims) - 1)


def _group_demean(values, codes, n_groups):
    sums = np.zeros((n_groups, values.shape[1]))
    np.add.at(sums, codes, values)
    counts = np.bincount(codes, minlength=n_groups).astype(float)
    means = sums / counts[:, None]
    return values - means[codes]


def absorb_fixed_effects(columns, firm_ids, years, spec, tol=1e-10, max_sweeps=200):
    """Demean columns by firm and/or year via alternating projections.

    ``columns`` is (n_obs, n_cols). Converges in one sweep for one-way
    absorption and for balanced two-way panels; unbalanced two-way panels
    iterate until the max absolute column change falls below ``tol``.
    """
    X = np.array(columns, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    firm_codes, firm_levels = pd.factorize(np.asarray(firm_ids))
    year_codes, year_levels = pd.factorize(np.asarray(years))
    n_firms = len(firm_levels) if spec.absorb_firm else 0
    n_years = len(year_levels) if spec.absorb_year else 0

    if not spec.absorb_firm and not spec.absorb_year:
        return AbsorbResult(X, 0, 0.0, 0, 0)

    for sweep in range(1, max_sweeps + 1):
        prev = X.copy()
        if spec.absorb_firm:
            X = _group_demean(X, firm_codes, len(firm_levels))
        if spec.absorb_year:
            X = _group_demean(X, year_codes, len(year_levels))
        delta = float(np.max(np.abs(X - prev))) if X.size else 0.0
        if delta < tol:
            return AbsorbResult(X, sweep, delta, n_firms, n_years)
    raise NonConvergence(max_sweeps, delta)


@dataclass
class OlsFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray


def fit_ols(y, X, add_intercept=False, column_names=None):
    """Least squares via pivoted-QR (gelsy); raises RankDeficient naming the
    first collinear column."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    names = list(column_names) if column_names is not None else [
        f"x{i}" for i in range(X.shape[1])
    ]
    if add_intercept:
        X = np.column_stack([np.ones(len(y)), X])
        names = ["_cons"] + names
    n, k = X.shape
    if n <= k:
        raise UndefinedDoF(n, k)
    # pivoted QR both solves and localizes any rank deficiency
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    thresh = max(n, k) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
    rank = int((diag > thresh).sum())
    if rank < k:
        raise RankDeficient(names[piv[rank]])
    beta = np.empty(k)
    beta[piv] = scipy.linalg.solve_triangular(R, Q.T @ y)
    fitted = X @ beta
    return OlsFit(coefficients=beta, residuals=y - fitted, fitted=fitted)


def clustered_covariance(X, residuals, clusters, n_absorbed=0, small_sample=True):
    """Cluster-robust sandwich covariance and standard errors.

    With ``small_sample`` the estimate is scaled by [G/(G-1)]*[(N-1)/(N-K)],
    K = slopes + ``n_absorbed`` fixed-effect levels. Set False for raw-
    sandwich oracle comparisons.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    u = np.asarray(residuals, dtype=float)
    codes, levels = pd.factorize(np.asarray(clusters))
    G = len(levels)
    if G < 2:
        raise ValueError("need at least 2 clusters")
    n, k = X.shape
    sizes = np.bincount(codes)
    if (sizes == 1).all():
        warnings.warn(
            "every cluster is a singleton; clustered covariance degenerates "
            "to the heteroskedasticity-robust form",
            SingletonClustersWarning,
        )
    # scores S_g = X_g' u_g, accumulated per cluster
    scores = np.zeros((G, k))
    np.add.at(scores, codes, X * u[:, None])
    meat = scores.T @ scores
    XtX_inv = np.linalg.inv(X.T @ X)
    V = XtX_inv @ meat @ XtX_inv
    if small_sample:
        K = k + n_absorbed
        dof = n - K
        if dof <= 0:
            raise UndefinedDoF(n, K)
        V = V * (G / (G - 1)) * ((n - 1) / dof)
    return V, np.sqrt(np.diag(V))


def adjusted_r2(y, fitted, n_params_including_absorbed):
    """1 - (1 - R^2)(n - 1)/(n - K - 1)."""
    y = np.asarray(y, dtype=float)
    fitted = np.asarray(fitted, dtype=float)
    n = len(y)
    K = n_params_including_absorbed
    if n <= K + 1:
        raise UndefinedDoF(n, K + 1)
    sst = float(np.sum((y - y.mean()) ** 2))
    ssr = float(np.sum((y - fitted) ** 2))
    r2 = 1.0 - ssr / sst if sst > 0 else 1.0
    return 1.0 - (1.0 - r2) * (n - 1) / (n - K - 1)


@dataclass
class RegressionResult:
    coefficients: dict
    clustered_se: dict
    t_values: dict
    p_values: dict
    residuals: np.ndarray
    fitted: np.ndarray
    n_obs: int
    n_clusters: int
    adj_r2: float
    absorbed_fe_counts: dict
    dependent: str = ""
    dropped_singleton_firms: int = 0
    absorb_sweeps: int = 0
    sample_index: np.ndarray | None = None

    def to_dict(self):
        return {
            "dependent": self.dependent,
            "coefficients": self.coefficients,
            "clustered_se": self.clustered_se,
            "t_values": self.t_values,
            "p_values": self.p_values,
            "n_obs": self.n_obs,
            "n_clusters": self.n_clusters,
            "adj_r2": self.adj_r2,
            "absorbed_fe_counts": self.absorbed_fe_counts,
            "dropped_singleton_firms": self.dropped_singleton_firms,
        }


def _interaction_name(a, b):
    return f"{a}:{b}"


def run_specification(
    panel,
    dependent,
    regressors,
    interactions=None,
    fe=None,
    cluster=None,
    small_sample=True,
    fe_tol=1e-10,
):
    """Full estimation of one regression specification on a panel.

    ``panel`` is a PanelDataset (or bare DataFrame with firm_id, year and
    cluster columns). Interaction columns are built as element-wise products
    before demeaning. List-wise deletion over every named variable is
    applied first; firms observed once are dropped when firm effects are
    absorbed (they carry no within variation).
    """
    fe = fe or FixedEffectsSpec()
    cluster = cluster or ClusterSpec()
    data = panel.data if hasattr(panel, "data") else panel
    interactions = interactions or []

    base_vars = [dependent] + list(regressors)
    for a, b in interactions:
        for v in (a, b):
            if v not in base_vars:
                base_vars.append(v)
    for v in base_vars + [cluster.cluster_variable]:
        if v not in data.columns:
            raise KeyError(f"variable not in panel: {v!r}")

    keep_cols = list(dict.fromkeys(
        ["firm_id", "year", cluster.cluster_variable] + base_vars
    ))
    df = data[keep_cols].copy()
    for a, b in interactions:
        df[_interaction_name(a, b)] = df[a] * df[b]
    rhs_names = [_interaction_name(a, b) for a, b in interactions] + list(regressors)

    # original row labels are preserved so callers can map residuals back
    df = df.dropna(subset=[dependent] + rhs_names)

    dropped_singletons = 0
    if fe.absorb_firm:
        counts = df.groupby("firm_id")["firm_id"].transform("size")
        dropped_singletons = int((counts == 1).sum())
        df = df[counts > 1]
    if len(df) == 0:
        raise UndefinedDoF(0, len(rhs_names))

    y = df[dependent].to_numpy(dtype=float)
    X = df[rhs_names].to_numpy(dtype=float)

    add_intercept = not (fe.absorb_firm or fe.absorb_year)
    absorbed = absorb_fixed_effects(
        np.column_stack([y, X]), df["firm_id"], df["year"], fe, tol=fe_tol
    )
    y_t = absorbed.columns[:, 0]
    X_t = absorbed.columns[:, 1:]

    if add_intercept:
        fit = fit_ols(y_t, X_t, add_intercept=True, column_names=rhs_names)
        names = ["_cons"] + rhs_names
        X_used = np.column_stack([np.ones(len(y_t)), X_t])
    else:
        fit = fit_ols(y_t, X_t, add_intercept=False, column_names=rhs_names)
        names = rhs_names
        X_used = X_t

    n_absorbed = absorbed.absorbed_df
    V, se = clustered_covariance(
        X_used, fit.residuals,
        df[cluster.cluster_variable].to_numpy(),
        n_absorbed=n_absorbed,
        small_sample=small_sample,
    )
    G = df[cluster.cluster_variable].nunique()

    coefs = dict(zip(names, fit.coefficients))
    ses = dict(zip(names, se))
    tvals = {k: (coefs[k] / ses[k] if ses[k] > 0 else math.nan) for k in names}
    pvals = {
        k: (2 * stats.t.sf(abs(tvals[k]), G - 1) if not math.isnan(tvals[k]) else math.nan)
        for k in names
    }

    # fitted reconstructed against the raw dependent so fitted + resid == y
    fitted_full = y - fit.residuals
    k_slopes = len(names)
    adj = adjusted_r2(y, fitted_full, k_slopes + n_absorbed - (1 if add_intercept else 0))

    return RegressionResult(
        coefficients=coefs,
        clustered_se=ses,
        t_values=tvals,
        p_values=pvals,
        residuals=fit.residuals,
        fitted=fitted_full,
        n_obs=len(y),
        n_clusters=int(G),
        adj_r2=adj,
        absorbed_fe_counts={
            "firm": absorbed.n_firm_levels, "year": absorbed.n_year_levels,
        },
        dependent=dependent,
        dropped_singleton_firms=dropped_singletons,
        absorb_sweeps=absorbed.sweeps,
        sample_index=df.index.to_numpy(),
    )
