"""Canonical tail dependence: TPDM estimation, CTD, and fuzzy clustering of tail topologies."""

from ._tailtopo import (  # noqa: F401
    Error,
    InvalidArgument,
    IoError,
    NumericalError,
    ValidationError,
    accuracy,
    band_periodogram,
    cli,
    estimate_tpdm,
    fuzzy_cmeans,
    local_dft,
    numeric_ctd_oracle,
    rank_standardize,
    run_pipeline,
    simulate,
    solve_ctd,
)

__version__ = "0.1.0"
