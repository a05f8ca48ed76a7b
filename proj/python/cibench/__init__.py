"""Causal effect estimation benchmark: simulation, baselines and scoring."""

from ._core import (
    DELTA,
    SCALING_SIZES,
    CibenchError,
    aggregate_linear,
    aggregate_quadratic,
    enormse_individual,
    estimate,
    generate,
    make_ufid,
    population_metrics,
    read_labels,
    read_observations,
    score,
)

__all__ = [
    "DELTA",
    "SCALING_SIZES",
    "CibenchError",
    "aggregate_linear",
    "aggregate_quadratic",
    "enormse_individual",
    "estimate",
    "generate",
    "make_ufid",
    "population_metrics",
    "read_labels",
    "read_observations",
    "score",
]
