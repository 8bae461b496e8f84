"""Stability of dendrograms, clusterings and graphical-lasso networks.

Arrays are NumPy float64 (data rows are observations). Partitions are lists
of integer labels; graphs are dicts with ``precision``, ``adjacency``,
``lambda``, ``edge_count`` and ``density``.
"""

import json

from ._stabglasso import (
    ConvergenceError,
    Dendrogram,
    InvalidArgument,
    __version__,
    adjusted_rand_index,
    agglomerate,
    cluster_variables,
    confusion_metrics,
    cophenetic_distance,
    correlation_dissimilarity,
    generate_block_model,
    glasso,
    lambda_grid,
    minimax_ultrametric,
    normalized_cophenetic_distance,
    normalized_hamming,
    sample_correlation,
    sample_mvn,
    screen_components,
    standardize,
)
from . import _stabglasso as _ext


def default_config():
    """Default experiment configuration as a dict."""
    return json.loads(_ext.default_config())


def one_step_estimate(data, rule="EBIC", seed=0, **config):
    """Select a penalty with `rule` and fit the graphical lasso on all variables."""
    return _ext.one_step_estimate(data, rule, seed, json.dumps(config) if config else "")


def two_step_estimate(data, linkage="single", k_rule="SH", rule="BIC", seed=0, **config):
    """Cluster the variables, then select a penalty and fit within each module."""
    return _ext.two_step_estimate(data, linkage, str(k_rule), rule, seed, json.dumps(config) if config else "")


def run_tables(tables=("table1",), **config):
    """Run experiment tables; keyword arguments override config keys."""
    return _ext.run_tables(json.dumps(config), list(tables))


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]
