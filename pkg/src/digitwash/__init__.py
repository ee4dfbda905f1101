"""digitwash: words-vs-deeds digital transformation gap and stock price
crash risk, from raw inputs to journal-style tables."""

from .crashrisk import assemble_spcr, compute_market_returns, compute_ncskew
from .gdt import compute_dtd, compute_variants, estimate_gdt, split_groups
from .inference import (
    between_group_tests,
    coefficient_difference_test,
    median_difference_test,
    summary_statistics,
    variance_homogeneity_test,
)
from .ingest import (
    FirmYearRecord,
    SamplePolicy,
    apply_sample_filters,
    build_panel,
    derive_controls,
    load_firm_years,
    winsorize,
)
from .panelols import (
    ClusterSpec,
    FixedEffectsSpec,
    RegressionResult,
    absorb_fixed_effects,
    adjusted_r2,
    clustered_covariance,
    fit_ols,
    run_specification,
)
from .textmetrics import TermDictionary, compute_text_metrics, count_term_hits

__version__ = "0.1.0"

__all__ = [
    "FirmYearRecord", "SamplePolicy", "apply_sample_filters", "build_panel",
    "derive_controls", "load_firm_years", "winsorize",
    "TermDictionary", "compute_text_metrics", "count_term_hits",
    "assemble_spcr", "compute_market_returns", "compute_ncskew",
    "ClusterSpec", "FixedEffectsSpec", "RegressionResult",
    "absorb_fixed_effects", "adjusted_r2", "clustered_covariance",
    "fit_ols", "run_specification",
    "compute_dtd", "compute_variants", "estimate_gdt", "split_groups",
    "between_group_tests", "coefficient_difference_test",
    "median_difference_test", "summary_statistics",
    "variance_homogeneity_test",
    "__version__",
]
