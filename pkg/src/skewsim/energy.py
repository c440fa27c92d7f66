"""Analytic link budget: skew CRLB, packet sizing, and transceiver energy.

All operations are closed forms. The baseline for comparison is an
application-layer scheme that needs at least two timestamp packets per
estimate, versus one cross-layer packet here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

# The exact packet-sizing coefficient; quoted rounded as 0.1125 elsewhere.
SYMBOL_COUNT_COEFF = 1.0 / (2.0 * math.sqrt(2.0) * math.pi)

DEFAULT_CIRCUIT_ENERGY_PER_BIT = 50e-9   # J/bit
DEFAULT_AMP_GAIN = 100e-12               # J/bit/m^2


@dataclass(frozen=True)
class LinkBudgetInput:
    """Everything needed to size a packet and price its transmission."""

    xi: float
    es_over_n0: float
    crlb_target: float
    transmission_time: float
    phase_symbols: int = 0
    samples_per_symbol: float = 8.0
    bits_per_sample: float = 12.0
    distance_m: float = 0.0
    circuit_energy_per_bit: float = DEFAULT_CIRCUIT_ENERGY_PER_BIT
    amp_gain: float = DEFAULT_AMP_GAIN

    def __post_init__(self):
        for name in ("xi", "es_over_n0", "crlb_target", "transmission_time",
                     "circuit_energy_per_bit", "amp_gain"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.phase_symbols < 0:
            raise ValueError("phase_symbols must be >= 0")
        if self.samples_per_symbol < 1 or self.bits_per_sample < 1:
            raise ValueError("samples_per_symbol and bits_per_sample must be >= 1")
        if self.distance_m < 0:
            raise ValueError("distance_m must be >= 0")


@dataclass(frozen=True)
class EnergyReport:
    crlb: float
    required_rate: float
    n_skew_symbols: float
    total_symbols: float
    total_bits: float
    tx_energy: float
    rx_energy: float
    baseline_ratio: float

    def __post_init__(self):
        for name in ("crlb", "required_rate", "n_skew_symbols", "total_symbols",
                     "total_bits", "tx_energy", "rx_energy", "baseline_ratio"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.total_symbols < self.n_skew_symbols:
            raise ValueError("total_symbols must be >= n_skew_symbols")


@dataclass(frozen=True)
class BaselineComparison:
    """Per-leg energy breakdown of one cross-layer round vs the baseline."""

    ratio: float
    proposed_tx: float
    proposed_rx: float
    baseline_tx: float
    baseline_rx: float


def crlb_skew(xi: float, rate: float, es_over_n0: float) -> float:
    """Lower bound on the skew estimator variance."""
    if not (xi > 0 and rate > 0 and es_over_n0 > 0):
        raise ValueError("xi, rate, and es_over_n0 must all be > 0")
    return 1.0 / (8.0 * math.pi**2 * xi * rate**2) / es_over_n0


def required_rate(xi: float, crlb_target: float, es_over_n0: float) -> float:
    """Symbol rate achieving the target bound; inverse of :func:`crlb_skew`."""
    if not (xi > 0 and crlb_target > 0 and es_over_n0 > 0):
        raise ValueError("xi, crlb_target, and es_over_n0 must all be > 0")
    return math.sqrt(1.0 / (8.0 * math.pi**2 * xi * crlb_target) / es_over_n0)


def required_symbols(transmission_time: float, xi: float, crlb_target: float,
                     es_over_n0: float) -> float:
    """Symbols needed for the skew estimate: rate times transmission time."""
    if not transmission_time > 0:
        raise ValueError("transmission_time must be > 0")
    return SYMBOL_COUNT_COEFF * transmission_time * math.sqrt(
        1.0 / (xi * crlb_target) / es_over_n0
    )


def packet_totals(n_skew_symbols: float, phase_symbols: float,
                  alpha: float, beta: float):
    """Total symbols and bits in the cross-layer packet."""
    if n_skew_symbols < 0 or phase_symbols < 0:
        raise ValueError("symbol counts must be >= 0")
    if alpha < 1 or beta < 1:
        raise ValueError("alpha and beta must be >= 1")
    total_symbols = n_skew_symbols + phase_symbols
    return total_symbols, alpha * beta * total_symbols


def tx_energy(total_bits: float, distance_m: float,
              e_c: float = DEFAULT_CIRCUIT_ENERGY_PER_BIT,
              epsilon: float = DEFAULT_AMP_GAIN) -> float:
    """Transmit energy: circuit term plus distance-squared amplifier term."""
    if total_bits < 0 or distance_m < 0 or e_c < 0 or epsilon < 0:
        raise ValueError("inputs must be >= 0")
    return e_c * total_bits + epsilon * total_bits * distance_m**2


def rx_energy(total_bits: float, e_c: float = DEFAULT_CIRCUIT_ENERGY_PER_BIT) -> float:
    """Receive energy: circuit term only."""
    if total_bits < 0 or e_c < 0:
        raise ValueError("inputs must be >= 0")
    return e_c * total_bits


def compare_with_baseline(
    inp: LinkBudgetInput,
    baseline_packets: int = 2,
    baseline_bits_per_packet: Optional[float] = None,
) -> BaselineComparison:
    """Energy of one cross-layer round relative to a multi-packet baseline.

    The baseline exchanges ``baseline_packets`` timestamp packets, each of
    ``baseline_bits_per_packet`` bits (defaults to the proposed packet size);
    both sides count transmit plus receive energy at the same distance.
    """
    if baseline_packets < 2:
        raise ValueError("baseline_packets must be >= 2")
    t_b = packet_bits(inp)
    base_bits = t_b if baseline_bits_per_packet is None else baseline_bits_per_packet
    p_tx = tx_energy(t_b, inp.distance_m, inp.circuit_energy_per_bit, inp.amp_gain)
    p_rx = rx_energy(t_b, inp.circuit_energy_per_bit)
    b_tx = baseline_packets * tx_energy(base_bits, inp.distance_m,
                                        inp.circuit_energy_per_bit, inp.amp_gain)
    b_rx = baseline_packets * rx_energy(base_bits, inp.circuit_energy_per_bit)
    return BaselineComparison(
        ratio=(p_tx + p_rx) / (b_tx + b_rx),
        proposed_tx=p_tx, proposed_rx=p_rx,
        baseline_tx=b_tx, baseline_rx=b_rx,
    )


def packet_bits(inp: LinkBudgetInput) -> float:
    n_s = required_symbols(inp.transmission_time, inp.xi, inp.crlb_target, inp.es_over_n0)
    _, t_b = packet_totals(n_s, inp.phase_symbols, inp.samples_per_symbol,
                           inp.bits_per_sample)
    return t_b


def build_energy_report(inp: LinkBudgetInput, baseline_packets: int = 2) -> EnergyReport:
    """Full budget: bound, rate, packet sizing, energy, baseline ratio."""
    rate = required_rate(inp.xi, inp.crlb_target, inp.es_over_n0)
    crlb = crlb_skew(inp.xi, rate, inp.es_over_n0)
    n_s = required_symbols(inp.transmission_time, inp.xi, inp.crlb_target, inp.es_over_n0)
    t_s, t_b = packet_totals(n_s, inp.phase_symbols, inp.samples_per_symbol,
                             inp.bits_per_sample)
    comparison = compare_with_baseline(inp, baseline_packets)
    return EnergyReport(
        crlb=crlb,
        required_rate=rate,
        n_skew_symbols=n_s,
        total_symbols=t_s,
        total_bits=t_b,
        tx_energy=comparison.proposed_tx,
        rx_energy=comparison.proposed_rx,
        baseline_ratio=comparison.ratio,
    )
