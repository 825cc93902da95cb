"""Nonparametric bootstrap and distribution summaries.

The trace distribution is heavily skewed (rare near-collisions of sampled
circuits produce huge |Tr|^{2k} values, worse for larger k), so naive
error propagation through fits is unreliable. Resampling the raw values
and re-running the statistic is the uncertainty model for everything
downstream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

DEFAULT_REPLICATES = 300


class ReplicateFailed(Exception):
    """Raised by a statistic to signal a non-convergent replicate."""


class AllReplicatesFailedError(RuntimeError):
    """Every replicate failed: the result is a missing data point."""


@dataclass(frozen=True)
class BootstrapDistribution:
    replicate_values: np.ndarray
    statistic_name: str
    failed_replicates: int

    def __post_init__(self):
        vals = np.asarray(self.replicate_values, dtype=float)
        if vals.size and not np.all(np.isfinite(vals)):
            raise ValueError("replicate values must be finite")
        object.__setattr__(self, "replicate_values", vals)

    def __len__(self):
        return self.replicate_values.size


def bootstrap(
    values,
    statistic: Callable[[np.ndarray], float],
    replicates: int = DEFAULT_REPLICATES,
    rng: np.random.Generator | None = None,
    statistic_name: str = "statistic",
) -> BootstrapDistribution:
    """Resample ``values`` with replacement and apply the statistic.

    Each replicate draws len(values) elements with replacement. A statistic
    may raise ReplicateFailed; failures are counted, never fabricated. If
    every replicate fails the result would be a missing data point, which
    is raised instead of returned.
    """
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("bootstrap needs a nonempty sample")
    if replicates < 1:
        raise ValueError("need at least one replicate")
    if rng is None:
        rng = np.random.default_rng()
    n = values.shape[0]
    out = []
    failed = 0
    for _ in range(replicates):
        resample = values[rng.integers(0, n, n)]
        try:
            out.append(float(statistic(resample)))
        except ReplicateFailed:
            failed += 1
    if not out:
        raise AllReplicatesFailedError(
            f"missing data point: all {replicates} bootstrap replicates failed"
        )
    return BootstrapDistribution(np.array(out), statistic_name, failed)


def percentile_nearest_rank(sorted_values: np.ndarray, level: float) -> float:
    """Nearest-rank percentile (no interpolation) of an ascending array."""
    if not 0.0 <= level <= 100.0:
        raise ValueError("percentile level must be in [0, 100]")
    r = sorted_values.size
    rank = max(1, math.ceil(level / 100.0 * r))
    return float(sorted_values[rank - 1])


@dataclass(frozen=True)
class Summary:
    statistic_name: str
    median: float
    minimum: float
    maximum: float
    percentiles: dict[float, float]


def summarize(dist: BootstrapDistribution, levels: Sequence[float] = (5.0, 95.0)) -> Summary:
    """Median, requested nearest-rank percentiles, and extrema."""
    if len(dist) == 0:
        raise ValueError("cannot summarize an empty distribution")
    vals = np.sort(dist.replicate_values)
    return Summary(
        statistic_name=dist.statistic_name,
        median=percentile_nearest_rank(vals, 50.0),
        minimum=float(vals[0]),
        maximum=float(vals[-1]),
        percentiles={float(p): percentile_nearest_rank(vals, p) for p in levels},
    )
