"""``gnssdobench`` command-line interface.

Exit codes: 0 success, 1 criterion failure, 2 user or spec error,
3 environment or IO error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .archive import CsvFormatError, dumps_json, format_curves_csv, read_series_csv, write_archive
from .core import SeriesTooShort, SimulationFault
from .metrics import TauGrid, stability_curves, summarize
from .report import USABILITY_WINDOW, build_report, format_table
from .scenario.engine import run, usability_index
from .scenario.spec import SpecError, parse, validate
from .scenario.templates import TEMPLATES, template
from .sdr import CaptureConfig, validate_chain

EXIT_OK, EXIT_CRITERION, EXIT_USER, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("gnssdobench")


class UserError(Exception):
    """Bad arguments or input content; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UserError(message)


def _load_spec(args):
    if args.spec:
        path = Path(args.spec)
        try:
            text = path.read_text()
        except FileNotFoundError as exc:
            raise OSError(f"spec file not found: {path}") from exc
        spec = parse(text)
        if args.seed is not None or args.duration is not None:
            spec = validate(replace(spec, seed=spec.seed if args.seed is None else args.seed,
                                    duration=spec.duration if args.duration is None else args.duration))
        return spec
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.duration is not None:
        overrides["duration"] = args.duration
    if args.placement is not None:
        try:
            overrides["placement"] = float(args.placement)
        except ValueError:
            overrides["placement"] = args.placement
    return template(args.template, overrides)


def cmd_simulate(args) -> int:
    spec = _load_spec(args)
    if args.fidelity:
        spec = replace(spec, capture=replace(spec.capture, fidelity=args.fidelity))
    out = Path(args.out)
    if not out.parent.exists():
        raise OSError(f"parent directory {out.parent} does not exist")
    if out.exists() and not out.is_dir():
        raise OSError(f"{out} exists and is not a directory")
    result = run(spec)
    report = build_report(result)
    write_archive(result, out, report)
    if args.figures:
        from .figures import render_run
        render_run(result, out / "figures")
    print(format_table(report))
    return EXIT_OK


def _analyze_one(path: Path, grid_text: str | None, coldstart: bool, window: float, budget: float):
    series = read_series_csv(path)
    if series.has_missing:
        raise UserError(f"{path}: series has missing samples; metrics need a gap-free series")
    grid = TauGrid.parse(grid_text) if grid_text else TauGrid.decade(series.tau0, len(series))
    curves = stability_curves(series, grid)
    entry = {"file": str(path), "label": series.label, "tau0_s": series.tau0, "t0_s": series.t0,
             "summary": summarize(series).to_dict(),
             "curves": {c.kind: {"tau_s": c.taus.tolist(), "value": c.values.tolist(),
                                 "low_confidence": c.low_confidence.tolist()} for c in curves}}
    if coldstart:
        idx = usability_index(series, window, budget)
        entry["usability"] = {"window_s": window, "mtie_budget_s": budget,
                              "time_s": None if idx is None else idx * series.tau0}
    return series, curves, entry


def cmd_analyze(args) -> int:
    entries = []
    outputs = {}
    for name in args.files:
        path = Path(name)
        if not path.exists():
            raise OSError(f"input file not found: {path}")
        series, curves, entry = _analyze_one(path, args.tau_grid, args.coldstart, args.window, args.budget)
        entries.append(entry)
        outputs[f"{path.stem}_curves.csv"] = format_curves_csv(curves, series.tau0, series.t0, series.label)
    doc = {"version": __version__, "inputs": entries}
    if args.out:
        out = Path(args.out)
        if not out.parent.exists():
            raise OSError(f"parent directory {out.parent} does not exist")
        out.mkdir(exist_ok=True)
        (out / "analysis.json").write_text(dumps_json(doc))
        for fname, text in outputs.items():
            (out / fname).write_text(text)
    for e in entries:
        s = e["summary"]
        line = (f"{e['label'] or e['file']}: sigma {s['sigma_s'] * 1e9:.3f} ns, "
                f"outliers {s['outlier_count']}, max |TE| {s['max_abs_s'] * 1e9:.3f} ns")
        if "usability" in e:
            t = e["usability"]["time_s"]
            line += f", usable after {'never' if t is None else f'{t / 60:.1f} min'}"
        print(line)
    if not args.out:
        sys.stdout.write(dumps_json(doc))
    return EXIT_OK


def cmd_validate_chain(args) -> int:
    cfg = CaptureConfig(fidelity="waveform", snr_db=args.snr_db)
    report = validate_chain(cfg, duration=args.duration, seed=args.seed)
    sys.stdout.write(dumps_json(report.to_dict()))
    if not report.passed:
        print(f"FAIL: recovered 10 MHz RMS {report.rms_10mhz:.3e} s (limit {report.rms_limit:.0e} s), "
              f"{report.invalid_blocks} invalid blocks", file=sys.stderr)
        return EXIT_CRITERION
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .calibration import Settings, calibrate
    from .scenario.archetypes import dump_archetype

    settings = Settings(seeds=tuple(args.seeds))
    out = Path(args.out) if args.out else None
    if out is not None:
        if not out.parent.exists():
            raise OSError(f"parent directory {out.parent} does not exist")
        out.mkdir(exist_ok=True)
    summaries = []
    for name in args.archetypes:
        try:
            arch, summary = calibrate(name, settings, stages=tuple(args.stages))
        except KeyError as exc:
            raise UserError(str(exc.args[0])) from None
        summaries.append(summary)
        if out is not None:
            (out / f"{name}.json").write_text(dump_archetype(arch))
        else:
            sys.stdout.write(dump_archetype(arch))
    sys.stderr.write(dumps_json(summaries))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gnssdobench", description="GNSS-disciplined oscillator test-bench simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a scenario and write a run archive")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--template", choices=TEMPLATES)
    src.add_argument("--spec", help="scenario config file (JSON)")
    s.add_argument("--seed", type=int)
    s.add_argument("--duration", type=float, help="override run length (s)")
    s.add_argument("--placement", help="mock-up placement: A, B or a coupling gain")
    s.add_argument("--fidelity", choices=("phase", "waveform"))
    s.add_argument("-o", "--out", required=True, help="archive directory")
    s.add_argument("--figures", action="store_true", help="also render PNG figures into <out>/figures")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="stability curves and statistics of series CSV files")
    a.add_argument("files", nargs="+")
    a.add_argument("--tau-grid", help="comma-separated tau values in seconds (default: 1-2-5 decades)")
    a.add_argument("--out", help="directory for analysis.json and *_curves.csv")
    a.add_argument("--coldstart", action="store_true", help="report usability time (series starts at first fix)")
    a.add_argument("--window", type=float, default=USABILITY_WINDOW, help="usability window (s)")
    a.add_argument("--budget", type=float, default=25e-9, help="usability MTIE budget (s)")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("validate-chain", help="round-trip check of the sample-level measurement chain")
    v.add_argument("--snr-db", type=float, default=None, help="signal-to-noise ratio; omit for noiseless")
    v.add_argument("--duration", type=float, default=10.0)
    v.add_argument("--seed", type=int, default=1)
    v.set_defaults(func=cmd_validate_chain)

    c = sub.add_parser("calibrate", help="fit archetype parameters to the reference figures")
    c.add_argument("--archetypes", nargs="+", default=["model-F", "model-L"])
    c.add_argument("--stages", nargs="+", default=["noise", "warmup", "holdover"],
                   choices=["noise", "warmup", "holdover"])
    c.add_argument("--seeds", nargs="+", type=int, default=[1, 2, 3])
    c.add_argument("--out", help="directory for fitted <archetype>.json (default: stdout)")
    c.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except SpecError as exc:
        for path, msg in exc.problems:
            print(f"spec error: {path}: {msg}", file=sys.stderr)
        return EXIT_USER
    except CsvFormatError as exc:
        print(f"csv error: {exc}", file=sys.stderr)
        return EXIT_USER
    except (UserError, SeriesTooShort, SimulationFault, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
