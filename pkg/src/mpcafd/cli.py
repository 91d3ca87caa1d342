"""``mpcafd`` command line: synth, inject, train, monitor, evaluate, trace.

Exit status: 0 on success, 1 on usage errors, 2 on data or model errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import GlobalConfig
from .dataset_io import load_bank, read_csv, read_monitor_report, save_bank, write_csv, write_monitor_report
from .errors import MpcaError
from .faultlab import generate_plant, inject_fault, load_plant_config, parse_fault
from .monitor import Alarm, detection_metrics, monitor_stream
from .pipeline import train_bank

log = logging.getLogger("mpcafd")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _on_off(text: str) -> bool:
    if text.lower() in ("on", "true", "1", "yes"):
        return True
    if text.lower() in ("off", "false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected on|off, got {text!r}")


# -- commands ---------------------------------------------------------------


def cmd_synth(config_path: str, out_path: str, seed: Optional[int] = None,
              schedule: Optional[str] = None) -> int:
    plant = load_plant_config(config_path)
    data = generate_plant(plant, schedule, seed)
    write_csv(data, out_path)
    print(f"wrote {data.n} samples x {data.m} variables to {out_path}")
    return EXIT_OK


def cmd_inject(data_path: str, out_path: str, faults: Sequence[str]) -> int:
    data = read_csv(data_path)
    for text in faults:
        spec = parse_fault(text, data)
        data = inject_fault(data, spec)
        print(f"injected {spec.kind} fault on {spec.variable}: magnitude {spec.magnitude:g} "
              f"from sample {spec.start_index}"
              + (f", ramp {spec.ramp_length}" if spec.kind == "drift" else ""))
    write_csv(data, out_path)
    return EXIT_OK


def cmd_train(data_path: str, config: GlobalConfig, bank_out: str,
              k_override: Optional[int] = None) -> int:
    data = read_csv(data_path)
    bank, summary = train_bank(data, config, k_override)
    save_bank(bank, bank_out)
    c = summary.cleaning
    print(f"training rows: {data.n} read, {summary.tagged_transients} tagged transient, "
          f"{c.rows_in - c.rows_out} removed by filters, {c.rows_out} used")
    print(f"k-means: {summary.kmeans_iterations} iterations, {summary.relabelled} samples relabelled")
    for src, dst in summary.merged.items():
        print(f"merged small condition [{src}] into [{dst}]")
    print()
    print(f"{'submodel':<9}{'n':>6}{'l':>3}{'T2 limit':>11}{'SPE limit':>11}{'phi limit':>11}  prior key")
    for sm in bank.submodels:
        key = "(none)" if sm.prior_key is None else str(sm.prior_key)
        print(f"No. {sm.condition_id:<5}{sm.n_train:>6}{sm.l:>3}{sm.t2_limit:>11.4f}"
              f"{sm.spe_limit:>11.4f}{sm.phi_limit:>11.4f}  {key}")
    print(f"\nbank with {bank.k} submodel(s) saved to {bank_out}")
    return EXIT_OK


def cmd_monitor(bank_path: str, data_path: str, report_out: str) -> int:
    bank = load_bank(bank_path)
    data = read_csv(data_path)
    records = monitor_stream(data, bank)
    write_monitor_report(records, report_out)
    n_fault = sum(r.alarm is Alarm.FAULT for r in records)
    n_unmatched = sum(r.alarm is Alarm.UNMATCHED for r in records)
    print(f"{len(records)} samples: {n_fault} alarms, {n_unmatched} unmatched; report in {report_out}")
    return EXIT_OK


def cmd_evaluate(report_path: str, fault_start: int = 0, r: int = 10) -> int:
    records = read_monitor_report(report_path)
    report = detection_metrics(records, fault_start, r)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def trace_points(records) -> list[tuple[int, float, float]]:
    """``(sample_index, phi, phi_limit)`` for every scored record."""
    return [(r.sample_index, r.phi, r.phi_limit) for r in records if r.phi is not None]


def render_trace_svg(points, width: int = 800, height: int = 300, margin: int = 40) -> str:
    """Standalone SVG: phi per sample as a polyline, its limit as a dashed line."""
    xs = [p[0] for p in points]
    top = max(max(p[1] for p in points), max(p[2] for p in points)) * 1.05
    x_lo, x_hi = min(xs), max(xs)
    span = (x_hi - x_lo) or 1

    def sx(i):
        return margin + (i - x_lo) / span * (width - 2 * margin)

    def sy(v):
        return height - margin - v / top * (height - 2 * margin)

    phi_pts = " ".join(f"{sx(i):.3f},{sy(v):.6f}" for i, v, _ in points)
    lim_pts = " ".join(f"{sx(i):.3f},{sy(lim):.6f}" for i, _, lim in points)
    return "\n".join(
        [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" data-ymax="{top!r}">',
            f'<rect width="{width}" height="{height}" fill="white"/>',
            f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
            f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
            f'<polyline id="phi" fill="none" stroke="steelblue" stroke-width="1" points="{phi_pts}"/>',
            f'<polyline id="limit" fill="none" stroke="firebrick" stroke-dasharray="6,4" points="{lim_pts}"/>',
            f'<text x="{margin}" y="{margin - 10}" font-size="12">combined index phi (limit dashed)</text>',
            f'<text x="{width - margin}" y="{height - 10}" font-size="12" text-anchor="end">sample</text>',
            "</svg>",
            "",
        ]
    )


def cmd_trace(report_path: str, svg_out: str, csv_out: Optional[str] = None) -> int:
    records = read_monitor_report(report_path)
    points = trace_points(records)
    if not points:
        raise MpcaError(f"{report_path}: no scored samples to plot")
    Path(svg_out).write_text(render_trace_svg(points), encoding="utf-8")
    csv_out = csv_out or str(Path(svg_out).with_suffix(".csv"))
    with open(csv_out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample_index", "phi"])
        writer.writerows((i, repr(v)) for i, v, _ in points)
    print(f"wrote {len(points)} points to {svg_out} and {csv_out}")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------


def _config_from_args(args) -> GlobalConfig:
    base = GlobalConfig.from_json(args.config) if args.config else GlobalConfig()
    return base.with_overrides(
        alpha=args.alpha,
        cpv_target=args.cpv,
        t2_limit_variant=args.t2_variant,
        spe_h0_variant=args.spe_variant,
        chauvenet=args.chauvenet,
        transient_k=args.transient_k,
        denoise_levels=args.denoise,
        run_length_r=args.run_length,
        match_slack=args.match_slack,
        min_samples_per_condition=args.min_samples_per_condition,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mpcafd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate synthetic multi-mode plant data")
    p.add_argument("--config", required=True, help="plant config JSON or replica name (replica_3mode, replica_1mode)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--schedule", help="named schedule in the config (e.g. train, test)")

    p = sub.add_parser("inject", help="add bias/drift sensor faults to a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fault", action="append", required=True,
                   help="bias:var=<name>,mag=<real>,start=<int> or "
                        "drift:var=<name>,mag=<real>,start=<int>,ramp=<int>; pct=<real> may replace mag")

    p = sub.add_parser("train", help="fit the condition bank")
    p.add_argument("--data", required=True)
    p.add_argument("--bank", required=True, help="output model bank JSON")
    p.add_argument("--config", help="GlobalConfig JSON; flags override it")
    p.add_argument("--alpha", type=float)
    p.add_argument("--cpv", type=float)
    p.add_argument("--t2-variant", choices=("standard", "paper_printed"))
    p.add_argument("--spe-variant", choices=("standard", "paper_printed"))
    p.add_argument("--chauvenet", type=_on_off, metavar="on|off")
    p.add_argument("--transient-k", type=float)
    p.add_argument("--denoise", type=int, metavar="LEVELS")
    p.add_argument("--run-length", type=int)
    p.add_argument("--match-slack", type=float)
    p.add_argument("--min-samples-per-condition", type=int)
    p.add_argument("--k-override", type=int, choices=(1,), help="1 = single global PCA baseline")
    p.add_argument("--seed", type=int, help="accepted for uniformity; training is deterministic")

    p = sub.add_parser("monitor", help="score a dataset against a bank")
    p.add_argument("--bank", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)

    p = sub.add_parser("evaluate", help="detection metrics from a monitor report")
    p.add_argument("--report", required=True)
    p.add_argument("--fault-start", type=int, default=0)
    p.add_argument("-r", "--run-length", type=int, default=10)

    p = sub.add_parser("trace", help="phi-vs-limit chart (SVG + CSV) from a monitor report")
    p.add_argument("--report", required=True)
    p.add_argument("--svg", required=True)
    p.add_argument("--csv", help="defaults to the SVG path with a .csv suffix")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            return cmd_synth(args.config, args.out, args.seed, args.schedule)
        if args.command == "inject":
            return cmd_inject(args.data, args.out, args.fault)
        if args.command == "train":
            return cmd_train(args.data, _config_from_args(args), args.bank, args.k_override)
        if args.command == "monitor":
            return cmd_monitor(args.bank, args.data, args.report)
        if args.command == "evaluate":
            return cmd_evaluate(args.report, args.fault_start, args.run_length)
        if args.command == "trace":
            return cmd_trace(args.report, args.svg, args.csv)
    except MpcaError as exc:
        print(f"mpcafd {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"mpcafd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    parser.error(f"unknown command {args.command}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
