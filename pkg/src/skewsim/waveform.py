"""Binary-PAM waveform synthesis: SRRC pulse shaping and skewed receiver sampling.

The receiver's sampling clock is modeled by evaluating the continuous-time
pulse train directly at the skewed sampling instants, so the configured skew
is the exact ground truth (no separate resampling stage).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .clocks import MAX_ABS_SKEW

_SINGULARITY_TOL = 1e-9


@dataclass(frozen=True)
class PhyConfig:
    """Link parameters: rates, pulse shape, packet size, optional SNR.

    ``loop_upsampling_factor`` is the number of samples per symbol left after
    the front end decimates the matched-filter output to the timing-loop rate.
    """

    symbol_rate: float = 1000.0
    samples_per_symbol: int = 8
    rolloff: float = 0.5
    pulse_span: int = 10
    loop_upsampling_factor: int = 2
    n_symbols: int = 3000
    es_over_n0_db: Optional[float] = None

    def __post_init__(self):
        if not self.symbol_rate > 0:
            raise ValueError("symbol_rate must be > 0")
        if self.samples_per_symbol < 2:
            raise ValueError("samples_per_symbol must be >= 2")
        if not 0.0 < self.rolloff <= 1.0:
            raise ValueError(f"rolloff must be in (0, 1], got {self.rolloff}")
        if self.pulse_span < 4:
            raise ValueError("pulse_span must be >= 4")
        if self.loop_upsampling_factor < 1:
            raise ValueError("loop_upsampling_factor must be >= 1")
        if self.samples_per_symbol % self.loop_upsampling_factor != 0:
            raise ValueError(
                "samples_per_symbol must be divisible by loop_upsampling_factor"
            )
        if self.n_symbols <= 10 * self.pulse_span:
            raise ValueError("n_symbols must exceed 10 * pulse_span")

    @property
    def symbol_period(self) -> float:
        return 1.0 / self.symbol_rate

    @property
    def sample_period(self) -> float:
        return self.symbol_period / self.samples_per_symbol

    @property
    def decimation(self) -> int:
        return self.samples_per_symbol // self.loop_upsampling_factor


@dataclass(frozen=True)
class SymbolSequence:
    """Ordered +/-1 symbols plus the seed that produced them."""

    symbols: np.ndarray
    seed: int

    def __post_init__(self):
        sym = np.asarray(self.symbols, dtype=float)
        if sym.ndim != 1 or sym.size == 0:
            raise ValueError("symbols must be a non-empty 1-D sequence")
        if not np.all(np.abs(sym) == 1.0):
            raise ValueError("symbols must all be exactly +1 or -1")
        object.__setattr__(self, "symbols", sym)

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class SampleStream:
    """Real amplitude samples at a fixed rate."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return len(self.samples)


def generate_symbols(n: int, seed: int) -> SymbolSequence:
    """n equiprobable +/-1 symbols, reproducible for a fixed seed."""
    if n <= 0:
        raise ValueError("n must be > 0")
    rng = np.random.default_rng(seed)
    symbols = rng.integers(0, 2, size=n) * 2.0 - 1.0
    return SymbolSequence(symbols=symbols, seed=seed)


def srrc_pulse(t: np.ndarray, rolloff: float) -> np.ndarray:
    """Unnormalized square-root raised-cosine pulse at times ``t`` (symbol units).

    The removable singularities at t = 0 and t = +/- 1/(4*rolloff) are
    evaluated by their analytic limits.
    """
    if not 0.0 < rolloff <= 1.0:
        raise ValueError(f"rolloff must be in (0, 1], got {rolloff}")
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    at_zero = np.abs(t) < _SINGULARITY_TOL
    at_sing = np.abs(np.abs(t) - 1.0 / (4.0 * rolloff)) < _SINGULARITY_TOL
    regular = ~(at_zero | at_sing)

    tr = t[regular]
    num = np.sin(np.pi * tr * (1 - rolloff)) + 4 * rolloff * tr * np.cos(np.pi * tr * (1 + rolloff))
    den = np.pi * tr * (1 - (4 * rolloff * tr) ** 2)
    out[regular] = num / den
    out[at_zero] = 1.0 - rolloff + 4.0 * rolloff / np.pi
    out[at_sing] = (rolloff / np.sqrt(2.0)) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * rolloff))
        + (1 - 2 / np.pi) * np.cos(np.pi / (4 * rolloff))
    )
    return out


def srrc_taps(rolloff: float, span: int, samples_per_symbol: int) -> np.ndarray:
    """Odd-length, even-symmetric, unit-energy SRRC taps."""
    if span < 4:
        raise ValueError("span must be >= 4")
    if samples_per_symbol < 2:
        raise ValueError("samples_per_symbol must be >= 2")
    k = np.arange(-span * samples_per_symbol, span * samples_per_symbol + 1)
    raw = srrc_pulse(k / samples_per_symbol, rolloff)
    return raw / np.sqrt(np.sum(raw * raw))


def _pulse_scale(cfg: PhyConfig) -> float:
    """Normalization making discrete symbol energy exactly 1 at the nominal rate."""
    k = np.arange(-cfg.pulse_span * cfg.samples_per_symbol,
                  cfg.pulse_span * cfg.samples_per_symbol + 1)
    raw = srrc_pulse(k / cfg.samples_per_symbol, cfg.rolloff)
    return 1.0 / np.sqrt(np.sum(raw * raw))


def pulse_train(symbols: np.ndarray, cfg: PhyConfig, t_over_T: np.ndarray) -> np.ndarray:
    """Evaluate sum_m a_m * g(t - m*T) at arbitrary instants (symbol units)."""
    symbols = np.asarray(symbols, dtype=float)
    span = cfg.pulse_span
    scale = _pulse_scale(cfg)
    m_center = np.floor(t_over_T).astype(int)
    offsets = np.arange(-span, span + 1)
    m = m_center[:, None] + offsets[None, :]
    padded = np.zeros(len(symbols) + 2 * span + 2)
    padded[span + 1: span + 1 + len(symbols)] = symbols
    amps = padded[np.clip(m + span + 1, 0, len(padded) - 1)]
    return np.sum(amps * srrc_pulse(t_over_T[:, None] - m, cfg.rolloff), axis=1) * scale


def noise_sigma(es_over_n0_db: float) -> float:
    """Per-sample AWGN sigma giving the requested Es/N0 for unit symbol energy."""
    return np.sqrt(1.0 / (2.0 * 10.0 ** (es_over_n0_db / 10.0)))


def synthesize_rx_samples(
    symbols: SymbolSequence,
    cfg: PhyConfig,
    rx_skew: float = 0.0,
    rx_phase: float = 0.0,
    noise_seed: Optional[int] = None,
) -> SampleStream:
    """Receiver samples of the shaped pulse train taken under a skewed clock.

    Sample k is the pulse train evaluated at ``t_k = (k*Ts + rx_phase) * (1 + rx_skew)``
    for all t_k inside the transmission window ``[0, n_symbols*T)``; with
    ``rx_skew < 0`` the sampling instants squeeze together and the stream
    lengthens to ``~ n/(1 + rx_skew)`` samples. When ``cfg.es_over_n0_db`` is
    set, white Gaussian noise is added at the matching per-symbol SNR,
    reproducibly for a fixed ``noise_seed``.
    """
    if not abs(rx_skew) < MAX_ABS_SKEW:
        raise ValueError(f"|rx_skew| must be < {MAX_ABS_SKEW}, got {rx_skew}")
    if not abs(rx_phase) < cfg.symbol_period:
        raise ValueError("|rx_phase| must be less than one symbol period")

    T = cfg.symbol_period
    Ts = cfg.sample_period
    window_end = cfg.n_symbols * T
    # largest k with (k*Ts + phase)*(1+skew) < window_end
    n_samples = int(np.floor((window_end / (1.0 + rx_skew) - rx_phase) / Ts - 1e-9)) + 1
    if n_samples < 1:
        raise ValueError("transmission window admits no samples")
    k = np.arange(n_samples)
    t = (k * Ts + rx_phase) * (1.0 + rx_skew) / T
    x = pulse_train(symbols.symbols, cfg, t)
    if cfg.es_over_n0_db is not None:
        rng = np.random.default_rng(noise_seed)
        x = x + rng.normal(0.0, noise_sigma(cfg.es_over_n0_db), size=len(x))
    return SampleStream(samples=x, sample_rate=cfg.symbol_rate * cfg.samples_per_symbol)


def upsample_and_filter(symbols: SymbolSequence, cfg: PhyConfig) -> SampleStream:
    """Conventional zero-stuff + SRRC filter generation (skew-0 cross-check).

    Output is aligned with :func:`synthesize_rx_samples` at skew 0 and phase 0
    by discarding the filter's leading group delay.
    """
    taps = srrc_taps(cfg.rolloff, cfg.pulse_span, cfg.samples_per_symbol)
    up = np.zeros(cfg.n_symbols * cfg.samples_per_symbol)
    up[:: cfg.samples_per_symbol] = symbols.symbols
    full = np.convolve(up, taps)
    delay = cfg.pulse_span * cfg.samples_per_symbol
    x = full[delay: delay + len(up)]
    return SampleStream(samples=x, sample_rate=cfg.symbol_rate * cfg.samples_per_symbol)
