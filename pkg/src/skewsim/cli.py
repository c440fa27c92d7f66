"""Command-line front end: run scenarios, reproduce the benchmark tables,
and evaluate the closed-form budget operations.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import energy as energy_mod
from .bayes import fuse_packets, prior_from_trace
from .estimator import unwrap_mu
from .harness import (
    export_report,
    load_observations,
    load_scenario,
    run_scenario,
    table_scenarios,
)
from .timing_loop import read_trace_csv

import numpy as np


def _slug(label: str) -> str:
    return "".join(c.lower() if c.isalnum() else "_" for c in label).strip("_")


def _print_kv(pairs) -> None:
    for key, value in pairs:
        if isinstance(value, float):
            print(f"{key} = {value:.12g}")
        else:
            print(f"{key} = {value}")


def _export_scenario(report, trace, out_dir: Path) -> None:
    from .plots import save_trace_figure  # deferred: pulls in matplotlib

    out_dir.mkdir(parents=True, exist_ok=True)
    slug = _slug(report.label)
    export_report(report, out_dir / f"{slug}.report", trace=trace)
    if len(trace):
        skew = report.phy_layer_skew.skew if report.phy_layer_skew else None
        save_trace_figure(trace, out_dir / f"{slug}.png", label=report.label,
                          skew=skew, discard=report.phy_layer_skew.discarded_prefix
                          if report.phy_layer_skew else 500)


def _summary_pairs(report):
    pairs = [
        ("label", report.label),
        ("seed", report.seed),
        ("hardware_skew", report.configured_hardware_skew),
        ("passed", str(report.passed).lower()),
    ]
    if report.app_layer_skew is not None:
        pairs.append(("app_layer_skew", report.app_layer_skew))
    if report.phy_layer_skew is not None:
        pairs.append(("phy_layer_skew", report.phy_layer_skew.skew))
        pairs.append(("slope_per_strobe", report.phy_layer_skew.slope_per_strobe))
    if report.error_left is not None:
        pairs.append(("error_left", report.error_left))
    if report.percent_error is not None:
        pairs.append(("percent_error", report.percent_error))
    if report.symbol_errors is not None:
        pairs.append(("symbol_errors", report.symbol_errors))
    if report.failure_reason is not None:
        pairs.append(("failure_reason", report.failure_reason))
    if report.energy is not None:
        for name in ("crlb", "required_rate", "n_skew_symbols", "total_symbols",
                     "total_bits", "tx_energy", "rx_energy", "baseline_ratio"):
            pairs.append((f"energy_{name}", getattr(report.energy, name)))
    return pairs


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = type(scenario)(**{**scenario.__dict__, "seed": args.seed})
    report, trace = run_scenario(scenario)
    _print_kv(_summary_pairs(report))
    if args.out:
        _export_scenario(report, trace, Path(args.out))
    return 0 if report.passed else 1


def cmd_tables(args) -> int:
    failures = 0
    print(f"{'setup':<16} {'hardware':>13} {'estimated':>13} {'err %':>8}  status")
    for scenario in table_scenarios(args.seed_base):
        report, trace = run_scenario(scenario)
        if report.phy_layer_skew is not None:
            est = f"{report.phy_layer_skew.skew:+.4e}"
            pct = (abs(report.phy_layer_skew.skew - report.configured_hardware_skew)
                   / abs(report.configured_hardware_skew) * 100.0)
            pct_s = f"{pct:.3f}"
        else:
            est, pct_s = "diverged", "-"
        status = "pass" if report.passed else "FAIL"
        print(f"{report.label:<16} {report.configured_hardware_skew:+.4e} "
              f"{est:>13} {pct_s:>8}  {status}")
        if not report.passed:
            failures += 1
        if args.out:
            _export_scenario(report, trace, Path(args.out))
    print(f"passed = {8 - failures}/8")
    return 0 if failures == 0 else 1


def cmd_crlb(args) -> int:
    es_over_n0 = 10.0 ** (args.esn0_db / 10.0)
    value = energy_mod.crlb_skew(args.xi, args.rate, es_over_n0)
    _print_kv([("xi", args.xi), ("rate", args.rate), ("esn0_db", args.esn0_db),
               ("crlb", value)])
    return 0


def cmd_energy(args) -> int:
    tx = energy_mod.tx_energy(args.bits, args.distance, args.ec, args.eps)
    rx = energy_mod.rx_energy(args.bits, args.ec)
    _print_kv([("total_bits", args.bits), ("distance_m", args.distance),
               ("tx_energy_j", tx), ("rx_energy_j", rx),
               ("round_energy_j", tx + rx)])
    return 0


def cmd_fuse(args) -> int:
    traces = [read_trace_csv(p) for p in args.traces]
    obs = load_observations(args.obs)
    estimate, bmse = fuse_packets(traces, obs)
    prior = prior_from_trace(np.concatenate([unwrap_mu(t) for t in traces]))
    _print_kv([
        ("n_traces", len(traces)),
        ("n_observations", obs.n),
        ("prior_mean", prior.mean),
        ("prior_variance", prior.variance),
        ("observation_mean", obs.mean),
        ("noise_variance", obs.noise_variance),
        ("mmse_estimate", estimate),
        ("bayesian_mse", bmse),
    ])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewsim",
        description="Clock-skew estimation from symbol timing recovery over a "
                    "simulated PAM link.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario file")
    p.add_argument("--scenario", required=True, help="scenario file path")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out", default=None, help="directory for report, trace CSV, figure")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tables", help="reproduce the eight built-in setups")
    p.add_argument("--out", default=None, help="directory for per-setup artifacts")
    p.add_argument("--seed-base", type=int, default=101, dest="seed_base")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("crlb", help="skew estimator variance bound")
    p.add_argument("--xi", type=float, required=True, help="loop parameter")
    p.add_argument("--rate", type=float, required=True, help="symbol rate (sym/s)")
    p.add_argument("--esn0-db", type=float, required=True, dest="esn0_db")
    p.set_defaults(func=cmd_crlb)

    p = sub.add_parser("energy", help="transmit/receive energy for a packet")
    p.add_argument("--bits", type=float, required=True)
    p.add_argument("--distance", type=float, required=True, help="meters")
    p.add_argument("--ec", type=float, default=energy_mod.DEFAULT_CIRCUIT_ENERGY_PER_BIT,
                   help="circuit energy per bit (J)")
    p.add_argument("--eps", type=float, default=energy_mod.DEFAULT_AMP_GAIN,
                   help="amplifier energy per bit per m^2 (J)")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("fuse", help="Bayesian combination of packet traces")
    p.add_argument("--traces", nargs="+", required=True, help="trace CSV files")
    p.add_argument("--obs", required=True, help="observations file")
    p.set_defaults(func=cmd_fuse)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
