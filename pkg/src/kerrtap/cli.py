"""Command-line front end: ``kerrtap {analyze,sweep,simulate,threshold,verify}``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.

Angles are radians unless ``--degrees`` is given. Every option can also be
set from a ``--config`` file of ``key = value`` lines keyed by the long flag
name (``eve-frame = 0.3927``); flags on the command line win.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

from .checks import run_checks
from .info import channel_metrics, threshold_alpha
from .protocol import SimConfig, run_bb84
from .tap import ProbabilityTable, closed_form_table

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

OUTPUT_COLUMNS = (
    ("theta", "phi", "alpha")
    + ProbabilityTable.ENTRIES
    + ("q_ae", "q_ab", "q_eb", "i_ae", "i_ab", "i_eb", "unsafe")
)

ANGLE_OPTIONS = {"theta", "phi", "eve_frame"}

# option name -> (default, help); angles given in radians
DEFAULTS: Dict[str, tuple] = {
    "theta": ("0.39269908169872414", "angle of Alice's state in Eve's frame (default pi/8)"),
    "phi": ("3.141592653589793", "Kerr cross-phase (default pi)"),
    "alpha": ("1.0", "fraction of pulses Eve taps (default 1)"),
    "n": ("1000000", "number of pulses (default 10^6)"),
    "seed": ("0", "RNG seed, unsigned 64-bit (default 0)"),
    "eve_frame": ("0.39269908169872414", "rotation of Eve's H/V axes from Alice's rectilinear basis (default pi/8)"),
    "flip_rate": ("0.0", "background bit-flip rate on untapped pulses (default 0)"),
    "sample_fraction": ("0.5", "fraction of sifted bits disclosed for QBER estimation (default 0.5)"),
    "chunk_size": (str(SimConfig.chunk_size), "pulses per RNG sub-stream (default 65536)"),
    "workers": ("1", "threads used for the pulse chunks (default 1)"),
    "grid": ("101", "points per axis of the verification grid (default 101)"),
}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class OutputRow:
    values: Dict[str, object]

    def as_csv_fields(self) -> List[str]:
        out = []
        for name in OUTPUT_COLUMNS:
            v = self.values[name]
            out.append(str(int(v)) if isinstance(v, bool) else repr(float(v)))
        return out


def output_row(theta: float, phi: float, alpha: float) -> OutputRow:
    table = closed_form_table(theta, phi)
    m = channel_metrics(theta, phi, alpha)
    values: Dict[str, object] = {"theta": theta, "phi": phi, "alpha": m.alpha}
    values.update(table.entries())
    for name in ("q_ae", "q_ab", "q_eb", "i_ae", "i_ab", "i_eb", "unsafe"):
        values[name] = getattr(m, name)
    return OutputRow(values)


def read_config(path: str) -> Dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


class Options:
    """Resolves option values: command line, then config file, then built-in default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = read_config(args.config) if args.config else {}
        self.degrees = args.degrees or self.config.get("degrees", "").lower() in ("1", "true", "yes")

    def raw(self, name: str) -> tuple[str, bool]:
        """Option text and whether the user supplied it."""
        value = getattr(self.args, name, None)
        if value is None:
            value = self.config.get(name)
        if value is not None:
            return value, True
        return DEFAULTS[name][0], False

    def number(self, name: str, convert: Callable[[str], float] = float):
        text, explicit = self.raw(name)
        return self._convert(name, text, convert, explicit)

    def grid(self, name: str) -> List[float]:
        text, explicit = self.raw(name)
        return parse_range(text, lambda part: self._convert(name, part, float, explicit))

    def _convert(self, name, text, convert, explicit):
        flag = "--" + name.replace("_", "-")
        try:
            value = convert(text)
        except ValueError:
            raise UsageError(f"{flag}: cannot parse {text!r}") from None
        if isinstance(value, float) and not math.isfinite(value):
            raise UsageError(f"{flag} must be finite")
        # built-in defaults are radians regardless of --degrees
        if name in ANGLE_OPTIONS and self.degrees and explicit:
            value = math.radians(value)
        return value


def parse_range(text: str, convert: Callable[[str], float]) -> List[float]:
    """``value`` or ``start:stop:step`` (stop included when it lands on the grid)."""
    parts = text.split(":")
    if len(parts) == 1:
        return [convert(parts[0])]
    if len(parts) != 3:
        raise UsageError(f"malformed range {text!r}; use start:stop:step")
    start, stop, step = (convert(p) for p in parts)
    if step <= 0 or stop < start:
        raise UsageError(f"malformed range {text!r}; need step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


def _count(text: str) -> int:
    """Integer option that also accepts exact float spellings such as ``1e6``."""
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not value.is_integer():
            raise
        return int(value)


def _print_table(rows: Sequence[tuple], out) -> None:
    width = max(len(k) for k, _ in rows)
    for key, value in rows:
        out.write(f"{key:<{width}}  {value}\n")


def _dump_json(obj, out) -> None:
    json.dump(obj, out, indent=2, allow_nan=False)
    out.write("\n")


def cmd_analyze(opts: Options, out) -> int:
    row = output_row(opts.number("theta"), opts.number("phi"), opts.number("alpha"))
    if opts.args.json:
        _dump_json(row.values, out)
    else:
        _print_table([(k, row.values[k]) for k in OUTPUT_COLUMNS], out)
    return EXIT_OK


def cmd_sweep(opts: Options, out) -> int:
    thetas, phis, alphas = opts.grid("theta"), opts.grid("phi"), opts.grid("alpha")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(OUTPUT_COLUMNS)
    for theta in thetas:
        for phi in phis:
            for alpha in alphas:
                writer.writerow(output_row(theta, phi, alpha).as_csv_fields())
    return EXIT_OK


def cmd_simulate(opts: Options, out) -> int:
    config = SimConfig(
        n_pulses=opts.number("n", _count),
        alpha=opts.number("alpha"),
        phi=opts.number("phi"),
        eve_frame_angle=opts.number("eve_frame"),
        seed=opts.number("seed", _count),
        channel_flip_rate=opts.number("flip_rate"),
        sample_fraction=opts.number("sample_fraction"),
        chunk_size=opts.number("chunk_size", int),
    )
    stats, records = run_bb84(config, workers=opts.number("workers", int))
    dump = opts.args.dump or opts.config.get("dump")
    if dump:
        try:
            with open(dump, "w", encoding="utf-8", newline="\n") as fh:
                records.write_csv(fh)
        except OSError as exc:
            print(f"kerrtap: cannot write {dump}: {exc}", file=sys.stderr)
            return EXIT_IO
    _dump_json(stats.to_dict(), out)
    return EXIT_OK


def cmd_threshold(opts: Options, out) -> int:
    theta, phi = opts.number("theta"), opts.number("phi")
    star = threshold_alpha(theta, phi)
    if star is None:
        report = {"theta": theta, "phi": phi, "alpha_star": None}
    else:
        m = channel_metrics(theta, phi, star)
        report = {
            "theta": theta,
            "phi": phi,
            "alpha_star": star,
            "q_ab": m.q_ab,
            "i_ab": m.i_ab,
            "i_ae": m.i_ae,
            "i_eb": m.i_eb,
        }
    if opts.args.json:
        _dump_json(report, out)
    elif star is None:
        out.write("no threshold: the link stays safe for every alpha in [0, 1]\n")
    else:
        _print_table(list(report.items()), out)
    return EXIT_OK


def cmd_verify(opts: Options, out) -> int:
    grid = opts.number("grid", int)
    if grid < 2:
        raise UsageError("--grid needs at least 2 points")
    results = run_checks(grid)
    for r in results:
        out.write(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}\n")
    failed = sum(not r.passed for r in results)
    out.write(f"{len(results) - failed}/{len(results)} checks passed\n")
    return EXIT_OK if failed == 0 else EXIT_VERIFY_FAILED


def _add(p: argparse.ArgumentParser, *names: str) -> None:
    for name in names:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None, help=DEFAULTS[name][1])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="file of 'key = value' option defaults")
    common.add_argument("--degrees", action="store_true", help="read angles in degrees")

    parser = argparse.ArgumentParser(
        prog="kerrtap",
        description="Translucent Kerr-interferometer eavesdropping on BB84.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="all quantities at one parameter point")
    _add(p, "theta", "phi", "alpha")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", parents=[common], help="CSV over a theta x phi x alpha grid")
    _add(p, "theta", "phi", "alpha")
    p.epilog = "each of --theta/--phi/--alpha takes a value or start:stop:step"
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo BB84 run, statistics as JSON")
    _add(p, "n", "alpha", "phi", "eve_frame", "seed", "flip_rate", "sample_fraction", "chunk_size", "workers")
    p.add_argument("--dump", help="write per-pulse records as CSV to this path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("threshold", parents=[common], help="smallest unsafe intercept fraction")
    _add(p, "theta", "phi")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("verify", parents=[common], help="closed-form vs circuit and reference-value checks")
    _add(p, "grid")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        opts = Options(args)
        return args.func(opts, out)
    except OSError as exc:
        print(f"kerrtap: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError) as exc:
        print(f"kerrtap: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
