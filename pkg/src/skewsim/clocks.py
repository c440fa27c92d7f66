"""Hardware clock models and the skew conventions shared by the whole package.

Skew is dimensionless and follows the tick-count convention: for two clocks
observed over the same wall-clock interval, skew = tx_ticks / rx_ticks - 1.
A receiver that counts *more* ticks than the transmitter (i.e. runs fast)
therefore has negative skew.

Everything here is a pure value type or pure function; thread-safe by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MAX_ABS_SKEW = 0.1  # quartz drift is ppm-scale; anything near 10% is a config error


@dataclass(frozen=True)
class ClockModel:
    """A node's hardware clock: nominal rate, fractional skew, phase offset.

    ``skew`` is relative to the reference (transmitter) clock in the
    tick-count convention above; the effective tick rate is
    ``nominal_tick_rate / (1 + skew)``.
    """

    nominal_tick_rate: float
    skew: float = 0.0
    phase_offset: float = 0.0

    def __post_init__(self):
        if not self.nominal_tick_rate > 0:
            raise ValueError(f"nominal_tick_rate must be > 0, got {self.nominal_tick_rate}")
        if not abs(self.skew) < MAX_ABS_SKEW:
            raise ValueError(f"|skew| must be < {MAX_ABS_SKEW}, got {self.skew}")


@dataclass(frozen=True)
class TickCount:
    """First and last counter value read over an observation window."""

    first_tick: int
    last_tick: int

    def __post_init__(self):
        if self.last_tick <= self.first_tick:
            raise ValueError(
                f"last_tick must exceed first_tick, got ({self.first_tick}, {self.last_tick})"
            )

    @property
    def span(self) -> int:
        return self.last_tick - self.first_tick


def skew_from_counts(tx: TickCount, rx: TickCount) -> float:
    """Skew of the receiver clock from tick counts over a common interval.

    Returns ``tx_span / rx_span - 1``; negative when the receiver counts
    faster than the transmitter.
    """
    if tx.span <= 0 or rx.span <= 0:
        raise ValueError("tick spans must be positive")
    return tx.span / rx.span - 1.0


def residual_after_correction(true_skew: float, estimate: float):
    """Absolute and percent error left after applying a skew estimate.

    Percent error is relative to ``true_skew`` and is ``None`` when the true
    skew is zero (undefined).
    """
    absolute = abs(true_skew - estimate)
    if true_skew == 0.0:
        return absolute, None
    return absolute, 100.0 * absolute / abs(true_skew)


def simulate_tick_counts(hardware_skew: float, tx_first: int = 1, tx_last: int = 100000):
    """Tick windows both clocks accumulate over the same observation interval.

    The transmitter counts ``tx_first..tx_last``; the receiver, skewed by
    ``hardware_skew``, fits ``floor(tx_span / (1 + skew))`` tick intervals in
    the same time. Counters are integers, so the application-layer skew
    recovered from these windows differs slightly from the hardware value.
    """
    if not abs(hardware_skew) < MAX_ABS_SKEW:
        raise ValueError(f"|hardware_skew| must be < {MAX_ABS_SKEW}")
    tx = TickCount(tx_first, tx_last)
    rx_span = math.floor(tx.span / (1.0 + hardware_skew))
    rx = TickCount(tx_first, tx_first + rx_span)
    return tx, rx


def correct_clock_rate(clock: ClockModel, skew_estimate: float) -> ClockModel:
    """Multiply the clock's rate by ``(1 + skew_estimate)``.

    The corrected clock's residual skew relative to the reference is
    ``(skew - estimate) / (1 + estimate)``, first-order ``skew - estimate``.
    """
    residual = (clock.skew - skew_estimate) / (1.0 + skew_estimate)
    return ClockModel(clock.nominal_tick_rate, residual, clock.phase_offset)
