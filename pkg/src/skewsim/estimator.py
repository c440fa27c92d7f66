"""Skew extraction from a fractional-interval trace: unwrap, least squares,
and application-layer clock correction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .clocks import ClockModel, correct_clock_rate, residual_after_correction
from .timing_loop import FractionalIntervalTrace


@dataclass(frozen=True)
class SkewEstimate:
    """Least-squares slope of the unwrapped trace and the implied clock skew."""

    slope_per_strobe: float
    skew: float
    n_points: int
    discarded_prefix: int
    residual_vs_truth: Optional[tuple] = None

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if not np.isfinite(self.skew):
            raise ValueError("skew must be finite")


def unwrap_mu(trace) -> np.ndarray:
    """Continuous version of the modulo-1 fractional-interval sequence.

    Accepts a :class:`FractionalIntervalTrace` or a bare sequence. Whenever
    successive values jump by more than 0.5 in magnitude a compensating
    integer offset is accumulated, recovering any ramp slower than 0.5 per
    strobe.
    """
    mu = np.asarray(getattr(trace, "mu", trace), dtype=float)
    if mu.size == 0:
        raise ValueError("empty trace")
    d = np.diff(mu)
    steps = np.where(d > 0.5, -1.0, np.where(d < -0.5, 1.0, 0.0))
    return mu + np.concatenate([[0.0], np.cumsum(steps)])


def ls_slope(y) -> float:
    """Closed-form least-squares slope over indices 0..N-1.

    Equivalent to fitting a line by the normal equations:
    ``-6/(N(N+1)) * sum(y) + 12/(N(N^2-1)) * sum(n*y)``.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) < 2:
        raise ValueError("need at least 2 points")
    n = len(y)
    idx = np.arange(n)
    return float(-6.0 / (n * (n + 1.0)) * np.sum(y)
                 + 12.0 / (n * (n * n - 1.0)) * np.sum(idx * y))


def estimate_skew(
    trace: FractionalIntervalTrace,
    discard: int = 500,
    true_skew: Optional[float] = None,
) -> SkewEstimate:
    """Skew from the trace: unwrap past the acquisition prefix, fit, rescale.

    The slope is divided by the loop's samples-per-symbol to express it as a
    clock-rate offset. ``true_skew`` (the configured value, when known)
    populates the residual fields.
    """
    if discard < 0:
        raise ValueError("discard must be >= 0")
    if len(trace) <= discard + 2:
        raise ValueError(
            f"trace too short: {len(trace)} strobes with discard={discard}"
        )
    unwrapped = unwrap_mu(trace.mu[discard:])
    slope = ls_slope(unwrapped)
    skew = slope / trace.loop_samples_per_symbol
    residual = None
    if true_skew is not None:
        residual = residual_after_correction(true_skew, skew)
    return SkewEstimate(
        slope_per_strobe=slope,
        skew=skew,
        n_points=len(unwrapped),
        discarded_prefix=discard,
        residual_vs_truth=residual,
    )


def correct_application_clock(clock: ClockModel, est: SkewEstimate) -> ClockModel:
    """Apply the physical-layer estimate to the receiver's application clock."""
    return correct_clock_rate(clock, est.skew)
