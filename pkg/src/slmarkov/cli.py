"""Command-line front end.

Four subcommands cover the full workflow:

  simulate   generate a state trace from a scenario (built-in or JSON file)
  identify   run the identifier plus the classical baseline over a trace
  delays     classify a packet-delay trace, then identify the 3-state chain
  compare    summarize a report CSV: RMSE against ground truth, reset latency

Reports are flat CSVs; the report-producing commands also render the
matching figures next to the CSV unless ``--no-plot`` is given.  Flag
values override config-file values, which override built-in defaults.

Exit codes: 0 success, 2 configuration or scenario error, 3 I/O error,
4 data error (malformed or inconsistent input files).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .channel import (
    ScenarioError,
    TraceFormatError,
    builtin_lte_scenario,
    generate,
    load_scenario,
    read_trace_csv,
    write_trace_csv,
)
from .delays import (
    DelayPipelineConfig,
    DelayTraceError,
    pipeline,
    read_delay_csv,
    synthetic_delay_trace,
    write_state_csv,
)
from .identifier import (
    ConfigurationError,
    IdentifierConfig,
    ObservationError,
    run_with_stats,
)
from .report import (
    ReportFormatError,
    build_report,
    read_report_csv,
    summarize,
    summary_lines,
    window_truth,
    write_report_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4

_CONFIG_ERRORS = (ScenarioError, ConfigurationError)
_DATA_ERRORS = (TraceFormatError, DelayTraceError, ObservationError, ReportFormatError)


class CliConfigError(ValueError):
    """Bad command-line or config-file input."""


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as err:
        raise CliConfigError(f"{path}: invalid JSON ({err})") from err
    if not isinstance(data, dict):
        raise CliConfigError(f"{path}: config must be a JSON object")
    return data


def _identifier_config(args, config: dict, num_states: int) -> IdentifierConfig:
    """Merge defaults, config-file section and flags into a config."""
    section = config.get("identifier", {})
    if not isinstance(section, dict):
        raise CliConfigError("config key 'identifier' must be an object")
    merged = {
        "num_states": num_states,
        "window_len": 100,
        "prior_weight": 2.0,
        "base_rates": None,
        "discount_prev": 0.999,
        "discount_new": 0.999,
        "conflict_threshold": 0.15,
    }
    known = set(merged)
    unknown = set(section) - known - {"num_states"}
    if unknown:
        raise CliConfigError(f"unknown identifier config keys: {sorted(unknown)}")
    merged.update(section)
    if getattr(args, "states", None) is not None:
        merged["num_states"] = args.states
    if args.window is not None:
        merged["window_len"] = args.window
    if args.theta is not None:
        merged["conflict_threshold"] = args.theta
    if args.discount_prev is not None:
        merged["discount_prev"] = args.discount_prev
    if args.discount_new is not None:
        merged["discount_new"] = args.discount_new
    return IdentifierConfig(**merged)


def _delay_config(args, config: dict) -> DelayPipelineConfig:
    section = config.get("delays", {})
    if not isinstance(section, dict):
        raise CliConfigError("config key 'delays' must be an object")
    merged = dataclasses.asdict(DelayPipelineConfig())
    unknown = set(section) - set(merged)
    if unknown:
        raise CliConfigError(f"unknown delays config keys: {sorted(unknown)}")
    merged.update(section)
    if args.margin is not None:
        merged["margin"] = args.margin
    if args.harq_offset is not None:
        merged["harq_offset"] = args.harq_offset
    if args.ma_window is not None:
        merged["ma_window"] = args.ma_window
    return DelayPipelineConfig(**merged)


def _scenario_from_args(args, required: bool):
    if getattr(args, "paper_scenario", False) and getattr(args, "spec", None):
        raise CliConfigError("--paper-scenario and --spec are mutually exclusive")
    if getattr(args, "paper_scenario", False):
        spec = builtin_lte_scenario()
    elif getattr(args, "spec", None):
        spec = load_scenario(args.spec)
    else:
        if required:
            raise CliConfigError("a scenario is required: pass --paper-scenario or --spec")
        return None
    if getattr(args, "seed", None) is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    return spec


def _maybe_render(args, report, out_path: Path) -> None:
    if getattr(args, "no_plot", False):
        return
    from .figures import render_report_figures

    for path in render_report_figures(report, out_path.with_suffix("")):
        print(f"wrote {path}")


def cmd_simulate(args) -> int:
    spec = _scenario_from_args(args, required=True)
    trace = generate(spec)
    write_trace_csv(trace.states, args.out)
    print(f"wrote {spec.total_packets} packets to {args.out} (seed {spec.seed})")
    return EXIT_OK


def _identify_trace(states, args, config, spec) -> tuple:
    observed_max = int(np.max(states)) if len(states) else 2
    num_states = max(2, observed_max)
    if spec is not None:
        num_states = max(num_states, spec.num_states)
    cfg = _identifier_config(args, config, num_states)

    total_windows = len(states) // cfg.window_len
    dropped = len(states) - total_windows * cfg.window_len
    if dropped:
        print(
            f"warning: dropping trailing partial window of {dropped} observations",
            file=sys.stderr,
        )

    pairs = list(run_with_stats(states, cfg))
    stats = [s for s, _ in pairs]
    outputs = [o for _, o in pairs]

    truth = None
    if spec is not None:
        truth = window_truth(spec, cfg.window_len, len(outputs))
    report = build_report(outputs, stats, truth=truth, num_states=cfg.num_states)
    return report, cfg


def cmd_identify(args) -> int:
    config = _load_config_file(args.config)
    states = read_trace_csv(args.trace)
    spec = _scenario_from_args(args, required=False)

    report, cfg = _identify_trace(states, args, config, spec)
    out_path = Path(args.out) if args.out else Path(args.trace).with_name(
        Path(args.trace).stem + "_report.csv"
    )
    write_report_csv(report, out_path)
    print(f"wrote {len(report.rows)} window rows to {out_path}")

    jump_packets = spec.jump_packets() if spec is not None else None
    summary = summarize(report, jump_packets=jump_packets, window_len=cfg.window_len)
    for line in summary_lines(summary):
        print(line)
    _maybe_render(args, report, out_path)
    return EXIT_OK


def cmd_delays(args) -> int:
    config = _load_config_file(args.config)
    if args.synthetic is not None:
        if args.delays is not None:
            raise CliConfigError("pass either a delay CSV or --synthetic, not both")
        records, _ = synthetic_delay_trace(
            args.synthetic, seed=args.seed if args.seed is not None else 0
        )
    else:
        if args.delays is None:
            raise CliConfigError("a delay CSV (or --synthetic N) is required")
        records = read_delay_csv(args.delays)

    delay_cfg = _delay_config(args, config)
    states = pipeline(records, delay_cfg)

    out_path = Path(args.out)
    write_state_csv(records, states, out_path)
    print(f"wrote {len(states)} classified packets to {out_path}")

    if len(states) < 2:
        print("trace too short to identify transitions, skipping report")
        return EXIT_OK

    args.states = 3  # the delay front end always produces a 3-state chain
    report, _ = _identify_trace(np.asarray(states), args, config, spec=None)
    report_path = (
        Path(args.report)
        if args.report
        else out_path.with_name(out_path.stem + "_report.csv")
    )
    write_report_csv(report, report_path)
    print(f"wrote {len(report.rows)} window rows to {report_path}")
    summary = summarize(report)
    for line in summary_lines(summary):
        print(line)
    _maybe_render(args, report, report_path)
    return EXIT_OK


def cmd_compare(args) -> int:
    report = read_report_csv(args.report)
    jump_packets = None
    if args.jumps:
        try:
            jump_packets = [int(p) for p in args.jumps.split(",") if p]
        except ValueError as err:
            raise CliConfigError(f"--jumps must be comma-separated integers: {err}")
    window_len = args.window if args.window is not None else 100
    summary = summarize(report, jump_packets=jump_packets, window_len=window_len)

    lines = summary_lines(summary)
    for line in lines:
        print(line)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            handle.write("metric,value\n")
            if summary.rmse_identified is not None:
                handle.write(f"rmse_identified_p11,{summary.rmse_identified[0, 0]:.9f}\n")
                handle.write(f"rmse_classical_p11,{summary.rmse_classical[0, 0]:.9f}\n")
                overall_sl = float(np.sqrt(np.mean(summary.rmse_identified ** 2)))
                overall_cl = float(np.sqrt(np.mean(summary.rmse_classical ** 2)))
                handle.write(f"rmse_identified_all,{overall_sl:.9f}\n")
                handle.write(f"rmse_classical_all,{overall_cl:.9f}\n")
            handle.write(f"reset_window_count,{len(summary.reset_windows)}\n")
            for jl in summary.jump_latencies:
                value = "undetected" if jl.latency is None else jl.latency
                handle.write(f"jump_window_{jl.jump_window}_latency,{value}\n")
        print(f"wrote summary to {args.out}")
    if args.plot:
        from .figures import render_report_figures

        for path in render_report_figures(report, Path(args.report).with_suffix("")):
            print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slmarkov",
        description="Markov channel identification with explicit statistical uncertainty",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_flags(p):
        p.add_argument("--spec", help="scenario JSON file")
        p.add_argument(
            "--paper-scenario",
            action="store_true",
            help="use the built-in LTE burst-error scenario",
        )
        p.add_argument("--seed", type=int, help="override the scenario seed")

    def add_identifier_flags(p):
        p.add_argument("--window", type=int, help="window length l_w (default 100)")
        p.add_argument("--theta", type=float, help="conflict threshold (default 0.15)")
        p.add_argument(
            "--discount-prev", type=float, help="discount for the carried opinion"
        )
        p.add_argument(
            "--discount-new", type=float, help="discount for the window opinion"
        )
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    p = sub.add_parser("simulate", help="generate a state trace from a scenario")
    add_scenario_flags(p)
    p.add_argument("--out", required=True, help="output trace CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="identify a transition matrix from a trace")
    p.add_argument("trace", help="input trace CSV (packet_index,state)")
    add_scenario_flags(p)
    add_identifier_flags(p)
    p.add_argument("--states", type=int, help="number of states (default: inferred)")
    p.add_argument("--out", help="output report CSV (default: <trace>_report.csv)")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("delays", help="classify packet delays and identify the chain")
    p.add_argument("delays", nargs="?", help="input delay CSV")
    p.add_argument(
        "--synthetic",
        type=int,
        metavar="N",
        help="generate N synthetic delay records instead of reading a file",
    )
    p.add_argument("--seed", type=int, help="seed for --synthetic")
    add_identifier_flags(p)
    p.add_argument("--margin", type=float, help="threshold margin in ms (default 3)")
    p.add_argument(
        "--harq-offset", type=float, help="retransmission delay offset in ms (default 7)"
    )
    p.add_argument(
        "--ma-window", type=int, help="inlier moving-average length (default 500)"
    )
    p.add_argument("--out", required=True, help="output state CSV")
    p.add_argument("--report", help="output report CSV (default: <out>_report.csv)")
    p.set_defaults(func=cmd_delays)

    p = sub.add_parser("compare", help="summarize a report CSV")
    p.add_argument("report", help="report CSV produced by identify/delays")
    p.add_argument("--jumps", help="comma-separated jump packet indices")
    p.add_argument("--window", type=int, help="window length used for the report")
    p.add_argument("--out", help="write summary CSV here")
    p.add_argument("--plot", action="store_true", help="render figures from the report")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliConfigError, *_CONFIG_ERRORS) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
