"""Figure rendering for scenario reports (fractional-interval traces)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .estimator import unwrap_mu
from .timing_loop import FractionalIntervalTrace


def save_trace_figure(trace: FractionalIntervalTrace, path, label: str = "",
                      skew: float = None, discard: int = 500) -> Path:
    """Render the raw and unwrapped fractional interval to a PNG.

    The top panel shows the modulo-1 sawtooth; the bottom panel the unwrapped
    ramp past the acquisition prefix, with its least-squares fit.
    """
    path = Path(path)
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 5.5), sharex=False)

    strobes = np.arange(len(trace))
    ax0.plot(strobes, trace.mu, lw=0.6)
    ax0.set_ylabel("fractional interval")
    ax0.set_title(label or "fractional interval")
    ax0.grid(True, linestyle=":", alpha=0.6)

    if len(trace) > discard + 2:
        uw = unwrap_mu(trace.mu[discard:])
        n = np.arange(len(uw))
        coeffs = np.polyfit(n, uw, 1)
        ax1.plot(n + discard, uw, lw=0.8, label="unwrapped")
        ax1.plot(n + discard, np.polyval(coeffs, n), "--", lw=1.0,
                 label=f"fit slope {coeffs[0]:.4e}/strobe")
        if skew is not None:
            ax1.set_title(f"estimated skew {skew:.6e}")
        ax1.legend(loc="best", fontsize=8)
    ax1.set_xlabel("strobe index")
    ax1.set_ylabel("unwrapped interval")
    ax1.grid(True, linestyle=":", alpha=0.6)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
