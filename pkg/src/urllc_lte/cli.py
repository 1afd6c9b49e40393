"""Command-line entry point: ``urllc-lte <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from . import latency as lat
from .blind import CombineRule, Mode
from .cli_io import (ConfigParseError, build_config, emit_results, fp_analytic_command,
                     parse_config_values)
from .harness import ConfigError, PartialSweepError, run_sweep
from .selftest import format_report, run_selftest

EXIT_OK, EXIT_USAGE, EXIT_SELFTEST, EXIT_PARTIAL = 0, 1, 2, 3

log = logging.getLogger("urllc_lte")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _latency_table_text(cells) -> str:
    configs = list(lat.FRAME_CONFIGS.values())
    head = ["scheme", "dir", "k"] + [c.title for c in configs]
    rows = []
    for i in range(0, len(cells), len(configs)):
        group = cells[i:i + len(configs)]
        first = group[0]
        rows.append([first.scheme.value, first.direction.value.upper(), str(first.k)]
                    + [f"{c.verdict.value} {c.value_ms}" for c in group])
    widths = [max(len(r[j]) for r in rows + [head]) for j in range(len(head))]
    lines = ["  ".join(v.rjust(w) for v, w in zip(head, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows]
    lines.append("")
    lines.append("U: <= 1 ms (URLLC)   H: <= 10 ms (HRLLC)   -: neither")
    return "\n".join(lines) + "\n"


def _latency_table_csv(cells) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "direction", "k", "config", "latency_ms", "verdict"])
    for c in cells:
        w.writerow([c.scheme.value, c.direction.value, c.k, c.config.label, str(c.value_ms),
                    c.verdict.name])
    return buf.getvalue()


def cmd_latency_table(args) -> int:
    cells = lat.generate_table2()
    sys.stdout.write(_latency_table_csv(cells) if args.csv else _latency_table_text(cells))
    return EXIT_OK


def cmd_latency(args) -> int:
    s = lat.LatencyScenario(lat.FRAME_CONFIGS[args.config_name], args.direction, args.scheme,
                            args.k, sps=args.sps)
    b = lat.decompose(s)
    tti = s.config.tti_ms
    total_ms = lat.latency_ms_exact(s)
    out = [
        f"config {s.config.label} (TTI {float(tti):.4g} ms), {s.direction.value.upper()}, "
        f"{s.scheme.value}, k={s.k}" + (", SPS" if args.sps else ""),
        f"  T_c (2*L1/L2 + align): {b.constant} TTI",
        f"  processing sum:        {b.processing} TTI",
        f"  transmission sum:      {b.transmission} TTI",
        f"  total:                 {b.total} TTI = {float(total_ms):.4f} ms "
        f"(table value {lat.round_half_away(total_ms)})",
        f"  verdict:               {lat.classify(total_ms).name}",
    ]
    print("\n".join(out))
    return EXIT_OK


def cmd_fp_analytic(args) -> int:
    if args.n < 0:
        print("error: --n must be nonnegative", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(fp_analytic_command(args.n))
    return EXIT_OK


def cmd_codec_selftest(args) -> int:
    results = run_selftest()
    sys.stdout.write(format_report(results))
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_SELFTEST


def _sim_config(args):
    values, lines = {}, {}
    if args.config:
        values, lines = parse_config_values(Path(args.config).read_text(encoding="utf-8"))
    overrides = {
        "modes": tuple(args.mode) if args.mode else None,
        "snr_start": args.snr_start,
        "snr_stop": args.snr_stop,
        "snr_step": args.snr_step,
        "trials_per_point": args.trials,
        "master_seed": args.seed,
        "interference": args.interference,
        "combine_rule": args.combine,
    }
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
            lines.pop(key, None)
    return build_config(values, lines)


def cmd_simulate(args) -> int:
    try:
        cfg = _sim_config(args)
    except (ConfigParseError, ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    def progress(mode, al, snr, p):
        log.info("%s AL%d %g dB: %d trials, miss %.3g", mode.value, al, snr, p.trials, p.miss_rate)

    code = EXIT_OK
    try:
        stats = run_sweep(cfg, progress=progress)
    except PartialSweepError as exc:
        print(f"warning: {exc}", file=sys.stderr)
        stats, code = exc.stats, EXIT_PARTIAL
    sys.stdout.write(emit_results(stats, "table"))
    if args.out:
        Path(args.out).write_text(emit_results(stats, "csv"), encoding="utf-8")
    return code


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="urllc-lte", description="LTE URLLC latency and PDCCH reliability toolkit")
    p.add_argument("-v", "--verbose", action="store_true", help="log sweep progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("latency-table", help="print the latency table for all schemes/configs")
    t.add_argument("--csv", action="store_true", help="emit CSV instead of aligned text")
    t.set_defaults(func=cmd_latency_table)

    q = sub.add_parser("latency", help="latency breakdown of one scenario")
    q.add_argument("--config-name", required=True, choices=sorted(lat.FRAME_CONFIGS))
    q.add_argument("--direction", required=True, choices=[d.value for d in lat.Direction])
    q.add_argument("--scheme", required=True, choices=[s.value for s in lat.Scheme])
    q.add_argument("--k", required=True, type=int)
    q.add_argument("--sps", action="store_true", help="semi-persistent UL grant (no SR round trip)")
    q.set_defaults(func=cmd_latency)

    f = sub.add_parser("fp-analytic", help="false-positive probability for N blind decodes")
    f.add_argument("--n", required=True, type=int)
    f.set_defaults(func=cmd_fp_analytic)

    s = sub.add_parser("simulate", help="Monte Carlo blind-decoding sweep")
    s.add_argument("--config", metavar="PATH", help="key=value config file")
    s.add_argument("--mode", nargs="+", choices=[m.value for m in Mode])
    s.add_argument("--snr-start", type=float)
    s.add_argument("--snr-stop", type=float)
    s.add_argument("--snr-step", type=float)
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--interference", choices=["otherue", "noise"])
    s.add_argument("--combine", choices=[c.value for c in CombineRule])
    s.add_argument("--out", metavar="PATH", help="write per-point CSV here")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("codec-selftest", help="codec roundtrip and known-vector checks")
    c.set_defaults(func=cmd_codec_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
