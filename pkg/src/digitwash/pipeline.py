"""Stage orchestration behind the CLI.

Stages couple through files in the output directory so every intermediate
is inspectable and diffable: synth -> ingest -> text -> crash -> gdt ->
regress -> tests -> report. Each stage is idempotent for fixed inputs,
config, and seed.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import pandas as pd

from . import crashrisk, gdt as gdtmod, ingest, inference, report, synth, textmetrics
from .errors import ValidationError
from .panelols import ClusterSpec, FixedEffectsSpec, run_specification

log = logging.getLogger("digitwash")

CONTROLS = ["BM", "Age", "Lev", "ROA", "Size", "Growth", "TobinQ",
            "Cashflow", "Audit", "Big4", "Dual"]
WINSOR_COLUMNS = ingest.CONTINUOUS_CONTROLS + [
    "spcr", "spcr1", "spcr2", "gdt", "gdt1", "dtw", "dtw_text", "dtd",
    "dtd_hat", "fepu", "sentiment",
]


def default_dictionary(which):
    """Load one of the bundled illustrative dictionaries (dt/epu/pos/neg)."""
    path = resources.files("digitwash.data") / f"{which}_terms.txt"
    return textmetrics.TermDictionary.from_file(str(path), name=which)


@dataclass
class RunConfig:
    firm_years: str = ""
    weekly_returns: str = ""
    mda: str = ""
    dictionaries: dict = field(default_factory=dict)  # dt/epu/pos/neg -> path
    sample: ingest.SamplePolicy = field(default_factory=ingest.SamplePolicy)
    min_weeks: int = 30
    leads: int = 2
    lags: int = 2
    weeks_per_year: int = 52
    tables: list = field(default_factory=lambda: ["T4", "T5", "T6", "T7", "T8"])
    b_values: list = field(default_factory=lambda: [500, 1000])
    group_b: int = 1000
    seed: int = 20100101
    outdir: str = "out"
    formats: list = field(default_factory=lambda: ["markdown", "csv"])
    synth: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path, overrides=None):
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls.from_dict(raw, overrides)

    @classmethod
    def from_dict(cls, raw, overrides=None):
        inputs = raw.get("inputs", {})
        sample_raw = dict(raw.get("sample", {}))
        if "exclude_statuses" in sample_raw:
            sample_raw["exclude_statuses"] = set(sample_raw["exclude_statuses"])
        if "window" in sample_raw:
            sample_raw["window"] = tuple(sample_raw["window"])
        crash = raw.get("crash", {})
        inf = raw.get("inference", {})
        out = raw.get("output", {})
        cfg = cls(
            firm_years=inputs.get("firm_years", ""),
            weekly_returns=inputs.get("weekly_returns", ""),
            mda=inputs.get("mda", ""),
            dictionaries=inputs.get("dictionaries", {}),
            sample=ingest.SamplePolicy(**sample_raw),
            min_weeks=crash.get("min_weeks", 30),
            leads=crash.get("leads", 2),
            lags=crash.get("lags", 2),
            weeks_per_year=crash.get("weeks_per_year", 52),
            tables=raw.get("regressions", {}).get("tables",
                                                  ["T4", "T5", "T6", "T7", "T8"]),
            b_values=inf.get("b_values", [500, 1000]),
            group_b=inf.get("group_b", 1000),
            seed=inf.get("seed", 20100101),
            outdir=out.get("dir", "out"),
            formats=out.get("formats", ["markdown", "csv"]),
            synth=raw.get("synth", {}),
        )
        for key, value in (overrides or {}).items():
            if value is not None:
                setattr(cfg, key, value)
        return cfg

    def load_dictionaries(self):
        dicts = {}
        for which in ("dt", "epu", "pos", "neg"):
            path = self.dictionaries.get(which)
            if path:
                dicts[which] = textmetrics.TermDictionary.from_file(path, name=which)
            else:
                dicts[which] = default_dictionary(which)
        return dicts

    def path(self, name):
        return os.path.join(self.outdir, name)


def _write_csv(df, path):
    df.to_csv(path, index=False)


def stage_synth(cfg):
    """Generate the synthetic bundle and point the input paths at it."""
    dicts = cfg.load_dictionaries()
    syn_dir = cfg.path("synth")
    params = dict(cfg.synth)
    params.setdefault("seed", cfg.seed)
    dgp = synth.DgpConfig(**params)
    synth.write_bundle(dgp, syn_dir, dicts["dt"], dicts["epu"],
                       dicts["pos"], dicts["neg"])
    cfg.firm_years = os.path.join(syn_dir, "firm_years.csv")
    cfg.weekly_returns = os.path.join(syn_dir, "weekly_returns.csv")
    cfg.mda = os.path.join(syn_dir, "mda.csv")
    log.info("synthetic bundle written to %s", syn_dir)
    return syn_dir


def stage_ingest(cfg):
    if not os.path.exists(cfg.firm_years):
        raise ValidationError(f"firm-year file not found: {cfg.firm_years}")
    records, rejects = ingest.load_firm_years(cfg.firm_years)
    kept, ledger = ingest.apply_sample_filters(records, cfg.sample)
    frame = ingest.firm_years_frame(kept)
    os.makedirs(cfg.outdir, exist_ok=True)
    _write_csv(frame, cfg.path("firm_year_controls.csv"))
    _write_csv(pd.DataFrame(rejects, columns=["row", "firm_id", "reason"]),
               cfg.path("ingest_rejects.csv"))
    ledger_df = pd.DataFrame(
        sorted(ledger.items()), columns=["rule", "n_excluded"]
    )
    _write_csv(ledger_df, cfg.path("exclusion_ledger.csv"))
    log.info("ingest: %d kept, %d rejected, exclusions %s",
             len(kept), len(rejects), ledger)
    return kept, frame


def stage_text(cfg):
    docs = ingest.load_mda_corpus(cfg.mda)
    dicts = cfg.load_dictionaries()
    metrics, skipped = textmetrics.compute_corpus_metrics(
        docs, dicts["dt"], dicts["epu"], dicts["pos"], dicts["neg"]
    )
    os.makedirs(cfg.outdir, exist_ok=True)
    _write_csv(metrics, cfg.path("text_metrics.csv"))
    if skipped:
        log.info("text: skipped %d empty documents", len(skipped))
    return metrics


def stage_crash(cfg):
    records, rejects = ingest.load_weekly_returns(cfg.weekly_returns)
    weekly = crashrisk.weekly_frame(records)
    week_to_year = crashrisk.default_week_to_year(
        cfg.sample.window[0], cfg.weeks_per_year
    )
    crash, diagnostics = crashrisk.assemble_spcr(
        weekly, week_to_year, min_weeks=cfg.min_weeks,
        leads=cfg.leads, lags=cfg.lags,
    )
    os.makedirs(cfg.outdir, exist_ok=True)
    _write_csv(crash, cfg.path("crash_risk.csv"))
    log.info("crash: %d firm-years, %d diagnostics, %d return rejects",
             len(crash), len(diagnostics), len(rejects))
    return crash


def stage_gdt(cfg):
    controls = pd.read_csv(cfg.path("firm_year_controls.csv"),
                           dtype={"firm_id": str})
    text = pd.read_csv(cfg.path("text_metrics.csv"), dtype={"firm_id": str})
    base = controls[["firm_id", "year", "dtd_num", "dtd_den"]].copy()
    base["dtd"] = np.where(
        base["dtd_den"] > 0,
        np.clip(base["dtd_num"] / base["dtd_den"], 0.0, 1.0),
        np.nan,
    )
    merged = base.merge(
        text[["firm_id", "year", "dtw", "sentiment", "total_words"]],
        on=["firm_id", "year"], how="inner",
    )
    est = gdtmod.estimate_gdt(merged)
    est = gdtmod.compute_variants(est)
    _write_csv(est, cfg.path("gdt.csv"))
    log.info("gdt: %d firm-years estimated", len(est))
    return est


def _load_panel(cfg):
    controls = pd.read_csv(cfg.path("firm_year_controls.csv"),
                           dtype={"firm_id": str})
    text = pd.read_csv(cfg.path("text_metrics.csv"), dtype={"firm_id": str})
    crash = pd.read_csv(cfg.path("crash_risk.csv"), dtype={"firm_id": str})
    gdt_df = pd.read_csv(cfg.path("gdt.csv"), dtype={"firm_id": str})
    panel = ingest.build_panel(
        controls.drop(columns=["dtd_num", "dtd_den"]),
        text[["firm_id", "year", "fepu", "sentiment", "dtw"]]
            .rename(columns={"dtw": "dtw_text"}),
        crash.drop(columns=["n_weeks"]),
        gdt_df.drop(columns=["dtw"]),
    )
    ingest.winsorize_panel(panel, WINSOR_COLUMNS, cfg.sample.winsor_fraction)
    return panel


_SPEC_MENU_ORDER = ["T4", "T5", "T6", "T7"]


def _table_specs(table):
    fe = FixedEffectsSpec(True, True)
    if table == "T4":
        return [
            dict(dependent="spcr", regressors=["gdt"], fe=fe),
            dict(dependent="spcr", regressors=["gdt"] + CONTROLS, fe=fe),
        ]
    if table == "T5":
        return [
            dict(dependent="spcr1", regressors=["gdt"] + CONTROLS, fe=fe),
            dict(dependent="spcr2", regressors=["gdt"] + CONTROLS, fe=fe),
        ]
    if table == "T6":
        return [
            dict(dependent=dep, regressors=[var] + CONTROLS, fe=fe)
            for var in ("gdt1", "gdt2")
            for dep in ("spcr", "spcr1", "spcr2")
        ]
    if table == "T7":
        return [
            dict(dependent="gdt", regressors=["fepu"], fe=fe),
            dict(dependent="gdt", regressors=["fepu"] + CONTROLS, fe=fe),
            dict(dependent="gdt", regressors=["fepu", "Loss"] + CONTROLS,
                 interactions=[("fepu", "Loss")], fe=fe),
        ]
    raise ValidationError(f"unknown regression table {table!r}")


def stage_regress(cfg):
    panel = _load_panel(cfg)
    _write_csv(panel.data, cfg.path("panel.csv"))
    cluster = ClusterSpec("industry")
    results = {}
    for table in cfg.tables:
        if table == "T8":
            continue  # estimated in stage_tests alongside its difference test
        cols = []
        for spec_kwargs in _table_specs(table):
            res = run_specification(panel, cluster=cluster, **spec_kwargs)
            cols.append(res.to_dict())
        results[table] = cols
    with open(cfg.path("regressions.json"), "w", encoding="utf-8") as fh:
        json.dump(results, fh, sort_keys=True, indent=1)
    log.info("regress: estimated tables %s", sorted(results))
    return results


def stage_tests(cfg):
    panel = _load_panel(cfg)
    out = {}
    # group split on the sign of the gap, compared on crash risk
    both = panel.data.dropna(subset=["gdt", "spcr"])
    groups = gdtmod.split_groups(both, "gdt_sign")
    g1, g2 = groups["Group1"]["spcr"], groups["Group2"]["spcr"]
    out["T3"] = inference.between_group_tests(
        g1, g2, B=cfg.group_b, seed=cfg.seed
    ).to_dict()

    if "T8" in cfg.tables:
        cluster = ClusterSpec("industry")
        fe = FixedEffectsSpec(True, True)
        sub = panel.data.dropna(subset=["spcr", "gdt", "SOE"] + CONTROLS)
        cols = []
        for value in (1.0, 0.0):
            res = run_specification(
                sub[sub["SOE"] == value], "spcr", ["gdt"] + CONTROLS,
                fe=fe, cluster=cluster,
            )
            d = res.to_dict()
            d["gdt_mean"] = float(sub.loc[sub["SOE"] == value, "gdt"].mean())
            cols.append(d)
        diff = inference.coefficient_difference_test(
            sub, "spcr", ["gdt"] + CONTROLS, focal="gdt", split_column="SOE",
            B=cfg.b_values, seed=cfg.seed, fe=fe, cluster=cluster,
        )
        out["T8"] = {"columns": cols, "difference": diff.to_dict(),
                     "seed": cfg.seed, "b_values": list(cfg.b_values)}
    with open(cfg.path("tests.json"), "w", encoding="utf-8") as fh:
        json.dump(out, fh, sort_keys=True, indent=1)
    log.info("tests: wrote %s", sorted(out))
    return out


class _ResultView:
    """Re-hydrate a stored regression result dict for rendering."""

    def __init__(self, d):
        self.coefficients = d["coefficients"]
        self.clustered_se = d["clustered_se"]
        self.t_values = d["t_values"]
        self.p_values = d["p_values"]
        self.n_obs = d["n_obs"]
        self.n_clusters = d["n_clusters"]
        self.adj_r2 = d["adj_r2"]
        self.absorbed_fe_counts = d["absorbed_fe_counts"]
        self.dependent = d["dependent"]


_ROW_ORDERS = {
    "T4": ["gdt"] + CONTROLS,
    "T5": ["gdt"] + CONTROLS,
    "T6": ["gdt1", "gdt2"] + CONTROLS,
    "T7": ["fepu:Loss", "fepu", "Loss"] + CONTROLS,
    "T8": ["gdt"] + CONTROLS,
}

_TABLE_TITLES = {
    "T4": "The baseline regression of the gap measure on crash risk.",
    "T5": "Robustness: crash risk under alternative market-return weightings.",
    "T6": "Robustness: alternative gap measures.",
    "T7": "Policy-uncertainty exposure and the gap, with the loss interaction.",
    "T8": "Ownership subgroups.",
}


def stage_report(cfg):
    tables_dir = cfg.path("tables")
    os.makedirs(tables_dir, exist_ok=True)
    rendered = {}

    panel = pd.read_csv(cfg.path("panel.csv"), dtype={"firm_id": str})
    stats = inference.summary_statistics(
        panel, [v for v in ["spcr", "gdt"] + CONTROLS if v in panel.columns]
    )
    rendered["T2"] = report.render_summary_table(stats)

    with open(cfg.path("tests.json"), encoding="utf-8") as fh:
        tests = json.load(fh)
    t3 = tests["T3"]
    rendered["T3"] = report.render_group_table(
        inference.GroupTestReport(
            group_sizes=tuple(t3["group_sizes"]), means=tuple(t3["means"]),
            medians=tuple(t3["medians"]), sd_ratio=t3["sd_ratio"],
            variance_p=t3["variance_p"], median_diff=t3["median_diff"],
            median_diff_p=t3["median_diff_p"], stars=t3["stars"],
            replications=t3["replications"], seed=t3["seed"],
        )
    )

    with open(cfg.path("regressions.json"), encoding="utf-8") as fh:
        regressions = json.load(fh)
    for table, cols in regressions.items():
        rendered[table] = report.render_regression_table(
            [_ResultView(c) for c in cols], title=_TABLE_TITLES[table],
            row_order=_ROW_ORDERS.get(table),
        )

    if "T8" in tests:
        t8 = tests["T8"]
        views = [_ResultView(c) for c in t8["columns"]]
        tbl = report.render_regression_table(
            views, title=_TABLE_TITLES["T8"],
            column_labels=["(1) SOE", "(2) Non-SOE"],
            row_order=_ROW_ORDERS["T8"],
        )
        tbl.rows.append([
            "GDT (mean)",
            *(f"{c['gdt_mean']:.3f}" for c in t8["columns"]),
        ])
        diff = inference.CoefDiffReport(
            focal=t8["difference"]["focal"],
            coefficient_group1=t8["difference"]["coefficient_group1"],
            coefficient_group2=t8["difference"]["coefficient_group2"],
            difference=t8["difference"]["difference"],
            p_values={int(k): v for k, v in t8["difference"]["p_values"].items()},
            seed=t8["difference"]["seed"],
        )
        tbl.rows.append(report.render_coef_diff_rows(diff))
        rendered["T8"] = tbl

    for name in sorted(rendered):
        for fmt in cfg.formats:
            text = report.RENDERERS[fmt](rendered[name])
            ext = report.EXTENSIONS[fmt]
            with open(os.path.join(tables_dir, f"{name}{ext}"), "w",
                      encoding="utf-8") as fh:
                fh.write(text)
    log.info("report: rendered %s in %s", sorted(rendered), cfg.formats)
    return rendered


def run_all(cfg, with_synth=True):
    os.makedirs(cfg.outdir, exist_ok=True)
    if with_synth:
        stage_synth(cfg)
    stage_ingest(cfg)
    stage_text(cfg)
    stage_crash(cfg)
    stage_gdt(cfg)
    stage_regress(cfg)
    stage_tests(cfg)
    return stage_report(cfg)
