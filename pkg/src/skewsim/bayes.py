"""Gaussian fusion of multi-packet skew estimates.

A Gaussian prior for the skew is built from the fractional-interval samples
(its least-squares slope and a dispersion around it); per-packet observations
with known noise variance then yield a conjugate Gaussian posterior, whose
mean is the MMSE combiner and whose variance is the Bayesian MSE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .estimator import ls_slope, unwrap_mu

VARIANCE_MODES = ("about_slope", "about_line")


@dataclass(frozen=True)
class SkewPrior:
    """Gaussian prior on the skew: mean and variance."""

    mean: float
    variance: float

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValueError("prior mean must be finite")
        if self.variance < 0.0 or math.isnan(self.variance):
            raise ValueError("prior variance must be >= 0")


@dataclass(frozen=True)
class PacketObservations:
    """Per-packet skew observations with a common noise variance."""

    values: np.ndarray
    noise_variance: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("values must be a non-empty 1-D sequence")
        if not self.noise_variance > 0:
            raise ValueError("noise_variance must be > 0")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass(frozen=True)
class SkewPosterior:
    mean: float
    variance: float

    def __post_init__(self):
        if self.variance < 0.0 or math.isnan(self.variance):
            raise ValueError("posterior variance must be >= 0")


def prior_from_trace(samples: Sequence[float], mode: str = "about_slope") -> SkewPrior:
    """Prior mean and variance from the trace samples.

    The mean is the closed-form LS slope of the samples. The default variance
    subtracts that scalar slope from every sample before averaging squares --
    statistically unusual but kept as the primary definition; pass
    ``mode="about_line"`` for the conventional residual variance about the
    fitted line.
    """
    p = np.asarray(samples, dtype=float)
    if p.ndim != 1 or len(p) < 3:
        raise ValueError("need at least 3 samples")
    if mode not in VARIANCE_MODES:
        raise ValueError(f"mode must be one of {VARIANCE_MODES}")
    slope = ls_slope(p)
    if mode == "about_slope":
        variance = float(np.mean((p - slope) ** 2))
    else:
        n = np.arange(len(p))
        intercept = float(np.mean(p) - slope * np.mean(n))
        variance = float(np.mean((p - intercept - slope * n) ** 2))
    return SkewPrior(mean=slope, variance=variance)


def posterior_params(prior: SkewPrior, obs: PacketObservations) -> SkewPosterior:
    """Conjugate Gaussian posterior of the skew given N packet observations."""
    if prior.variance == 0.0:
        return SkewPosterior(mean=prior.mean, variance=0.0)
    variance = 1.0 / (obs.n / obs.noise_variance + 1.0 / prior.variance)
    mean = (obs.n * obs.mean / obs.noise_variance + prior.mean / prior.variance) * variance
    return SkewPosterior(mean=mean, variance=variance)


def mmse_estimate(prior: SkewPrior, obs: PacketObservations) -> float:
    """Posterior-mean estimate as an explicit convex combination.

    ``P = w * xbar + (1 - w) * prior_mean`` with
    ``w = prior_var / (prior_var + noise_var / N)``; identical to
    ``posterior_params(...).mean``.
    """
    sigma2_over_n = obs.noise_variance / obs.n
    denom = prior.variance + sigma2_over_n
    if denom == 0.0:
        return prior.mean
    w = prior.variance / denom
    return w * obs.mean + (sigma2_over_n / denom) * prior.mean


def bayesian_mse(prior: SkewPrior, n_packets: int, noise_variance: float) -> float:
    """Bayesian MSE of the combiner: ``(sigma^2/N) * prior_var / (prior_var + sigma^2/N)``.

    Algebraically equal to the posterior variance.
    """
    if n_packets < 1:
        raise ValueError("n_packets must be >= 1")
    if not noise_variance > 0:
        raise ValueError("noise_variance must be > 0")
    sigma2_over_n = noise_variance / n_packets
    if prior.variance == 0.0:
        return 0.0
    return sigma2_over_n * prior.variance / (prior.variance + sigma2_over_n)


def fuse_packets(traces, obs: PacketObservations):
    """Fuse N cross-layer packets: returns (estimate, bayesian mse).

    The prior is built from the unwrapped fractional-interval samples of all
    traces concatenated; the observation mean enters through the conjugate
    combiner. Composes the smaller operations exactly.
    """
    if len(traces) < 1:
        raise ValueError("need at least one trace")
    if obs.n != len(traces):
        raise ValueError(
            f"observation count ({obs.n}) must match trace count ({len(traces)})"
        )
    samples = np.concatenate([unwrap_mu(t) for t in traces])
    prior = prior_from_trace(samples)
    return mmse_estimate(prior, obs), bayesian_mse(prior, obs.n, obs.noise_variance)
