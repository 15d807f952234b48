"""Bayesian clustering of covariance blocks."""

from ._covclust import (  # noqa: F401
    ChainAbort,
    ConfigError,
    DataError,
    DomainError,
    NumericalError,
    __version__,
    autocorrelation,
    canonical_labels,
    credible_partition_set,
    fit,
    log_likelihood,
    map_partition,
    preprocess,
    run_cli,
    similarity_matrix,
    simulate,
    stick_weights,
)
