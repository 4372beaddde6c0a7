"""Ground-truth score distributions for simulation studies.

A discretized Gaussian KDE fitted to real run scores serves as the simulation
ground truth: it has an exact CDF, an exactly computable expected maximum for
every budget, and supports reproducible sampling through seeded streams.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .estimators import BudgetTooSmallError, ScoreSample

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    """Seeded, splittable source of deterministic randomness.

    Identical (seed, stream) pairs produce identical value sequences on every
    platform: the generator is Philox4x64 keyed directly with the two words,
    a counter-based algorithm with a fixed published specification. Child
    streams fold integer path indices into the stream word through SplitMix64
    (``stream' = splitmix64(stream XOR splitmix64(index))``, applied left to
    right), so any worker can rebuild its stream from (seed, path) alone.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, *indices: int) -> "RngStream":
        h = self.stream & _MASK64
        for i in indices:
            h = _splitmix64(h ^ _splitmix64(i & _MASK64))
        return RngStream(self.seed, h)


class DiscreteDistribution:
    """Finite-support distribution with precomputed CDF.

    Masses are renormalized to sum to one at construction and the final
    cumulative value is forced to exactly 1.0 so inverse-CDF sampling can
    never fall off the end.
    """

    __slots__ = ("_support", "_mass", "_cumulative")

    def __init__(self, support: Sequence[float] | np.ndarray, mass: Sequence[float] | np.ndarray):
        sup = np.atleast_1d(np.asarray(support, dtype=float))
        m = np.atleast_1d(np.asarray(mass, dtype=float))
        if sup.ndim != 1 or m.ndim != 1:
            raise ValueError("support and mass must be one-dimensional")
        if sup.size == 0:
            raise ValueError("support must contain at least one point")
        if sup.size != m.size:
            raise ValueError(f"support has {sup.size} points but mass has {m.size}")
        if not np.isfinite(sup).all():
            raise ValueError("support points must be finite")
        if sup.size > 1 and not (np.diff(sup) > 0).all():
            raise ValueError("support must be strictly increasing")
        if not np.isfinite(m).all() or (m < 0).any():
            raise ValueError("masses must be finite and non-negative")
        total = m.sum()
        if total <= 0:
            raise ValueError("masses must not all be zero")
        m = m / total
        cum = np.minimum(np.cumsum(m), 1.0)  # cumsum can overshoot 1 by an ulp
        cum[-1] = 1.0
        self._support = sup.copy()
        self._support.flags.writeable = False
        m.flags.writeable = False
        cum.flags.writeable = False
        self._mass = m
        self._cumulative = cum

    @property
    def support(self) -> np.ndarray:
        return self._support

    @property
    def mass(self) -> np.ndarray:
        return self._mass

    @property
    def cumulative(self) -> np.ndarray:
        return self._cumulative

    @property
    def size(self) -> int:
        return int(self._support.size)

    def cdf(self, x):
        """P(X <= x); right-continuous step function, scalar or array x."""
        idx = np.searchsorted(self._support, x, side="right")
        padded = np.concatenate(([0.0], self._cumulative))
        out = padded[idx]
        return float(out) if np.isscalar(x) else out

    def mean(self) -> float:
        return float(self._support @ self._mass)

    def max(self) -> float:
        return float(self._support[-1])

    def to_dict(self) -> dict:
        return {"support": self._support.tolist(), "mass": self._mass.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteDistribution":
        return cls(data["support"], data["mass"])

    def __repr__(self) -> str:
        return (
            f"DiscreteDistribution(size={self.size}, "
            f"range=[{self._support[0]:g}, {self._support[-1]:g}])"
        )


@dataclass(frozen=True)
class KdeSpec:
    """Parameters for discretizing a Gaussian KDE over run scores.

    ``bandwidth`` is either a positive width in score units or the string
    ``"scott"`` for the one-dimensional normal-reference rule
    h = std(runs, ddof=1) * B**(-1/5).
    """

    bandwidth: float | str
    support_lo: float
    support_hi: float
    bins: int = 511

    def __post_init__(self):
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "scott":
                raise ValueError(f"unknown bandwidth rule {self.bandwidth!r}; use 'scott'")
        elif not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if not self.support_lo < self.support_hi:
            raise ValueError(
                f"support_lo ({self.support_lo}) must be below support_hi ({self.support_hi})"
            )
        if self.bins < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")


# Published KDE parameters for the four reference models (bandwidth via
# Scott's rule on the original runs, which are not redistributable).
KDE_PRESETS: dict[str, KdeSpec] = {
    "mlp": KdeSpec(bandwidth=0.0049, support_lo=0.72, support_hi=0.82, bins=511),
    "lstm": KdeSpec(bandwidth=0.059, support_lo=-0.18, support_hi=1.08, bins=511),
    "glove": KdeSpec(bandwidth=0.018, support_lo=0.46, support_hi=0.97, bins=511),
    "elmo": KdeSpec(bandwidth=0.041, support_lo=0.39, support_hi=0.99, bins=511),
}


def scott_bandwidth(runs: ScoreSample) -> float:
    """Normal-reference bandwidth h = std(runs, ddof=1) * B**(-1/5)."""
    if runs.size < 2:
        return 0.0
    return float(np.std(runs.sorted_values, ddof=1) * runs.size ** (-0.2))


def fit_kde(runs: ScoreSample, spec: KdeSpec) -> DiscreteDistribution:
    """Discretized Gaussian KDE over the run scores.

    One Gaussian kernel per run value with shared bandwidth, evaluated at the
    centers of ``bins`` equal-width bins spanning the support, then
    renormalized to a probability mass function (implicit truncation at the
    support edges).
    """
    if isinstance(spec.bandwidth, str):
        h = scott_bandwidth(runs)
        if h <= 0:
            raise ValueError(
                "Scott's rule gives zero bandwidth for a constant sample; "
                "pass an explicit bandwidth instead"
            )
    else:
        h = float(spec.bandwidth)
    edges = np.linspace(spec.support_lo, spec.support_hi, spec.bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    z = (centers[:, None] - runs.sorted_values[None, :]) / h
    density = np.exp(-0.5 * z * z).sum(axis=1) / (runs.size * h * np.sqrt(2.0 * np.pi))
    total = density.sum()
    if not np.isfinite(total) or total <= 0:
        raise ValueError(
            "KDE mass vanishes on the requested support; widen the support "
            "or the bandwidth"
        )
    return DiscreteDistribution(centers, density / total)


def exact_expected_max(dist: DiscreteDistribution, n: int) -> float:
    """Exact expected maximum of n i.i.d. draws: sum of v_j * (F(v_j)^n - F(v_{j-1})^n)."""
    if n < 1:
        raise BudgetTooSmallError(f"budget n must be >= 1, got {n}")
    powered = dist.cumulative**n
    pmf_of_max = np.diff(powered, prepend=0.0)
    return float(dist.support @ pmf_of_max)


def true_curve(dist: DiscreteDistribution, n_max: int) -> np.ndarray:
    """Exact expected maxima for budgets 1..n_max."""
    if n_max < 1:
        raise BudgetTooSmallError(f"budget n_max must be >= 1, got {n_max}")
    n = np.arange(1, n_max + 1)
    powered = dist.cumulative[None, :] ** n[:, None]
    pmf = np.diff(powered, prepend=0.0, axis=1)
    return pmf @ dist.support


_MC_CHUNK_VALUES = 1 << 20


def mc_expected_max(dist: DiscreteDistribution, n: int, iterations: int, rng: RngStream) -> float:
    """Monte Carlo estimate of the expected maximum of n draws.

    Cross-check oracle for :func:`exact_expected_max`; averages the maximum
    over ``iterations`` simulated budgets. Deterministic given the stream;
    the result does not depend on internal chunking.
    """
    if n < 1:
        raise BudgetTooSmallError(f"budget n must be >= 1, got {n}")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    gen = rng.generator()
    rows_per_chunk = max(1, _MC_CHUNK_VALUES // n)
    total = 0.0
    done = 0
    while done < iterations:
        rows = min(rows_per_chunk, iterations - done)
        u = gen.random((rows, n))
        idx = np.searchsorted(dist.cumulative, u.max(axis=1), side="left")
        total += float(dist.support[idx].sum())
        done += rows
    return total / iterations


def draw_sample(dist: DiscreteDistribution, count: int, rng: RngStream) -> ScoreSample:
    """Draw ``count`` i.i.d. scores by inverse-CDF lookup.

    The draw order becomes the sample's ingestion order, so prefix-estimator
    semantics are well defined on simulated samples.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    u = rng.generator().random(count)
    idx = np.searchsorted(dist.cumulative, u, side="left")
    return ScoreSample(dist.support[idx])


def save_distribution(dist: DiscreteDistribution, path: str | Path) -> None:
    """Write the distribution as canonical JSON {mass: [...], support: [...]}."""
    text = json.dumps(dist.to_dict(), sort_keys=True, separators=(",", ":"))
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_distribution(path: str | Path) -> DiscreteDistribution:
    with open(path, encoding="utf-8") as fh:
        return DiscreteDistribution.from_dict(json.load(fh))
