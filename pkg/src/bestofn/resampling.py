"""Percentile-bootstrap intervals for curve estimates and exact binomial intervals.

The bootstrap here is deliberately the plain percentile method (no BCa or
studentized variants): the point of the simulation batteries is to measure how
that method's coverage behaves under a biased estimator, so the method itself
must stay vanilla. Clopper-Pearson intervals are computed from scratch via a
continued-fraction regularized incomplete beta and bisection, keeping the
package free of special-function dependencies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from math import lgamma
from typing import Sequence

import numpy as np

from .distributions import RngStream
from .estimators import (
    EstimatorKind,
    ScoreSample,
    estimate,
    meanmax_cumweights,
    unbiased_cumweights,
)


@dataclass(frozen=True)
class Interval:
    """Closed real interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval endpoints must be finite, got ({self.lo}, {self.hi})")
        if self.lo > self.hi:
            raise ValueError(f"interval lo ({self.lo}) exceeds hi ({self.hi})")

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class BootstrapConfig:
    """Resample count, nominal confidence, and the randomness source."""

    rng: RngStream
    resamples: int = 5000
    confidence: float = 0.95

    def __post_init__(self):
        if self.resamples < 1:
            raise ValueError(f"resamples must be >= 1, got {self.resamples}")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError(f"confidence must be in (0, 1), got {self.confidence}")


def percentile(values: Sequence[float] | np.ndarray, q: float) -> float:
    """Empirical percentile with linear interpolation between closest ranks.

    With sorted values y_1..y_m and position p = q*(m-1), returns
    y_{floor(p)+1} + frac(p) * (y_{floor(p)+2} - y_{floor(p)+1}), the
    "type 7" convention (numpy's default).
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("percentile of an empty sequence is undefined")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    return float(np.quantile(arr, q, method="linear"))


_BOOT_CHUNK_VALUES = 1 << 22


def _resample_statistics(
    sample: ScoreSample, kind: EstimatorKind, n: int, config: BootstrapConfig
) -> np.ndarray:
    """Estimator values over all bootstrap resamples, in draw order.

    Resampling indexes the sorted representation of the sample with uniform
    draws, so the result cannot depend on ingestion order for the
    permutation-invariant estimators. For the prefix estimator the resample's
    own draw order serves as its ingestion order. Chunk size is a fixed
    module constant, so chunking never changes the draw sequence.
    """
    size = sample.size
    values = sample.sorted_values
    gen = config.rng.generator()
    if kind is EstimatorKind.UNBIASED_U:
        cum = unbiased_cumweights(size, n)
    elif kind is EstimatorKind.MEANMAX_V:
        cum = meanmax_cumweights(size, n)
    else:
        cum = meanmax_cumweights(n, n)
    out = np.empty(config.resamples, dtype=float)
    rows_per_chunk = max(1, _BOOT_CHUNK_VALUES // size)
    done = 0
    while done < config.resamples:
        rows = min(rows_per_chunk, config.resamples - done)
        idx = gen.integers(0, size, size=(rows, size))
        draws = values[idx]
        if kind is EstimatorKind.MEANMAX_PREFIX:
            draws = draws[:, :n]
        draws.sort(axis=1)
        if draws.shape[1] == 1:
            out[done : done + rows] = draws[:, 0]
        else:
            out[done : done + rows] = draws[:, -1] - np.diff(draws, axis=1) @ cum
        done += rows
    return out


def percentile_bootstrap_ci(
    sample: ScoreSample, kind: EstimatorKind, n: int, config: BootstrapConfig
) -> Interval:
    """Percentile-bootstrap confidence interval for the budget-n estimate.

    Draws ``config.resamples`` with-replacement resamples of the full sample
    size, evaluates the chosen estimator on each, and returns the empirical
    (alpha/2, 1-alpha/2) percentiles where alpha = 1 - confidence.
    Deterministic given ``config.rng``.
    """
    estimate(sample, kind, n)  # surface estimator precondition errors up front
    stats = _resample_statistics(sample, kind, n, config)
    alpha = 1.0 - config.confidence
    return Interval(percentile(stats, alpha / 2.0), percentile(stats, 1.0 - alpha / 2.0))


_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAX_ITER = 500


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction failed to converge for a={a}, b={b}, x={x}"
    )


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), the regularized incomplete beta function.

    Continued-fraction evaluation with the standard symmetry switch at
    x = (a+1)/(a+b+2) so the fraction always converges quickly.
    """
    if a <= 0 or b <= 0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = lgamma(a + b) - lgamma(a) - lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


_INV_TOL = 1e-10


def inverse_regularized_incomplete_beta(a: float, b: float, p: float) -> float:
    """Solve I_x(a, b) = p for x by bisection.

    Converges to within ``1e-10`` in probability. Slower than a dedicated
    quantile routine but unconditionally robust, and it only runs once per
    reported interval endpoint.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    mid = 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = regularized_incomplete_beta(a, b, mid)
        if abs(f - p) <= _INV_TOL:
            return mid
        if f < p:
            lo = mid
        else:
            hi = mid
    return mid


def clopper_pearson(successes: int, trials: int, confidence: float) -> Interval:
    """Exact (Clopper-Pearson) binomial confidence interval for a proportion.

    The bounds are beta quantiles: lo solves I_x(k, m-k+1) = alpha/2 and hi
    solves I_x(k+1, m-k) = 1 - alpha/2, with lo = 0 at k = 0 and hi = 1 at
    k = m.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must be in [0, {trials}], got {successes}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    alpha = 1.0 - confidence
    k, m = successes, trials
    if k == 0:
        lo = 0.0
    else:
        lo = inverse_regularized_incomplete_beta(k, m - k + 1, alpha / 2.0)
    if k == m:
        hi = 1.0
    else:
        hi = inverse_regularized_incomplete_beta(k + 1, m - k, 1.0 - alpha / 2.0)
    return Interval(lo, hi)
