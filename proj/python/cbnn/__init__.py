"""Nearest-neighbour contextual bandits (CBNN).

Thin python surface over the C++ core: the online learner, the metric
reduction helpers, the experiment runner and the verification suites.
"""

from ._core import (
    ConfigError,
    GridQuantiser,
    Learner,
    MetricStore,
    PhiTable,
    ProtocolError,
    bench_timing,
    default_params,
    policy_complexity,
    run_experiment,
    verify_suite,
)

__all__ = [
    "ConfigError",
    "GridQuantiser",
    "Learner",
    "MetricStore",
    "PhiTable",
    "ProtocolError",
    "bench_timing",
    "default_params",
    "policy_complexity",
    "run_experiment",
    "verify_suite",
]
