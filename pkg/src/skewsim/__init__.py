"""Clock-skew estimation from physical-layer symbol timing recovery.

Library plus CLI for simulating a binary-PAM link whose receiver clock runs
at a skewed rate, recovering symbol timing with a feedback loop, reading the
skew off the fractional-interval trace, fusing multi-packet estimates with a
Gaussian MMSE combiner, and pricing the packet against the estimator's
variance bound.
"""

from .bayes import (
    PacketObservations,
    SkewPosterior,
    SkewPrior,
    bayesian_mse,
    fuse_packets,
    mmse_estimate,
    posterior_params,
    prior_from_trace,
)
from .clocks import (
    ClockModel,
    TickCount,
    residual_after_correction,
    simulate_tick_counts,
    skew_from_counts,
)
from .energy import (
    EnergyReport,
    LinkBudgetInput,
    build_energy_report,
    compare_with_baseline,
    crlb_skew,
    packet_totals,
    required_rate,
    required_symbols,
    rx_energy,
    tx_energy,
)
from .estimator import (
    SkewEstimate,
    correct_application_clock,
    estimate_skew,
    ls_slope,
    unwrap_mu,
)
from .harness import (
    Scenario,
    ScenarioReport,
    export_report,
    load_scenario,
    parse_report,
    reproduce_tables,
    run_scenario,
)
from .timing_loop import (
    FractionalIntervalTrace,
    LoopConfig,
    LoopDivergence,
    LoopState,
    design_loop_gains,
    default_loop_config,
    interpolate,
    interpolation_control_step,
    loop_filter_step,
    matched_filter,
    measure_ted_gain,
    read_trace_csv,
    run_timing_recovery,
    write_trace_csv,
    zc_ted,
)
from .waveform import (
    PhyConfig,
    SampleStream,
    SymbolSequence,
    generate_symbols,
    srrc_taps,
    synthesize_rx_samples,
)

__version__ = "0.1.0"
