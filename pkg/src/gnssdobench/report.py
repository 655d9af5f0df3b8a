"""Summary tables for a finished run and their comparison with reference values.

The reference values are laboratory measurements of the two
device models that the shipped archetypes imitate.  Each comparison row
states the target, the accepted band and whether the run falls inside it.
"""

from __future__ import annotations

import numpy as np

from .core import PPS, TENMHZ
from .metrics import SeriesTooShort, mtie, summarize
from .scenario.engine import RunResult, usability_time

# holdover checkpoints in seconds after the reference is lost
CHECKPOINTS = (900, 1800, 3600, 10800, 43200, 86400)
CHECKPOINT_LABELS = ("15min", "30min", "1h", "3h", "12h", "24h")

# maximum 10 MHz time error during holdover (s) at each checkpoint
REFERENCE_HOLDOVER = {
    "model-L": (0.2e-6, 0.3e-6, 2.9e-6, 13.4e-6, 40.9e-6, 41.3e-6),
    "model-F": (0.1e-6, 0.2e-6, 0.2e-6, 1.1e-6, 10.4e-6, 21.9e-6),
}
HOLDOVER_FACTOR = 2.0

# (target, low, high) per archetype; None means unbounded
REFERENCE_STEADY = {
    "model-F": {
        "pps_sigma_s": (1e-9, None, 2e-9),
        "pps_mtie_1800_s": (10e-9, 5e-9, 20e-9),
        "tenmhz_mtie_1800_s": (25e-9, None, 50e-9),
    },
    "model-L": {
        "pps_sigma_s": (28e-9, 15e-9, 45e-9),
        "pps_mtie_1800_s": (100e-9, 100e-9, None),
    },
}

# cold start: usability window, MTIE budget and (target, low, high) in seconds
USABILITY_WINDOW = 1800.0
USABILITY_BUDGET = {"model-F": 25e-9, "model-L": 200e-9}
REFERENCE_USABILITY = {
    "model-F": (15 * 60.0, 5 * 60.0, 30 * 60.0),
    "model-L": (30 * 60.0, 20 * 60.0, 60 * 60.0),
}

MTIE_WINDOW = 1800


def holdover_checkpoints(result: RunResult, dut: int, kind: str = TENMHZ,
                         checkpoints=CHECKPOINTS) -> list[float | None]:
    """Largest pair time-error excursion since holdover entry, at each checkpoint.

    The excursion is measured on the pair series of ``dut`` relative to its
    value at the first holdover entry.  Checkpoints beyond the end of the
    holdover interval (or the run) are None.
    """
    trace = result.duts[dut]
    if not trace.holdover_entries:
        raise ValueError(f"device {dut} never entered holdover")
    start = int(trace.holdover_entries[0])
    end = int(trace.reacquisitions[0]) + 1 if trace.reacquisitions else len(trace.modes)
    x = result.pair_series(*result.pair_of(dut), kind).samples
    dev = np.abs(x[start:end] - x[start])
    out = []
    for c in checkpoints:
        out.append(float(dev[: c + 1].max()) if c < dev.size else None)
    return out


def _band_row(quantity: str, archetype: str, measured, target, low, high) -> dict:
    ok = measured is not None
    if ok and low is not None:
        ok = measured >= low
    if ok and high is not None:
        ok = measured <= high
    return {"quantity": quantity, "archetype": archetype, "target": target, "low": low,
            "high": high, "measured": measured, "pass": bool(ok)}


def pair_statistics(result: RunResult, pair: tuple[int, int]) -> dict:
    out = {}
    for kind in (PPS, TENMHZ):
        series = result.pair_series(*pair, kind)
        entry = summarize(series).to_dict()
        try:
            entry[f"mtie_{MTIE_WINDOW}_s"] = mtie(series, MTIE_WINDOW)
        except SeriesTooShort:
            entry[f"mtie_{MTIE_WINDOW}_s"] = None
        out[kind] = entry
    return out


def _exposed(result: RunResult, pair: tuple[int, int]) -> int:
    """The pair member carrying the experiment's disturbance, else the first."""
    for i in pair:
        d = result.spec.duts[i]
        if d.cold_start or d.gnss_outages or d.shaker or d.placement_gain > 0:
            return i
    return pair[0]


def build_report(result: RunResult) -> dict:
    """Per-pair statistics, holdover table, usability and reference comparison."""
    spec = result.spec
    report = {"scenario": spec.name, "seed": spec.seed, "spec_hash": result.meta["spec_hash"],
              "pairs": [], "comparison": []}
    for pair in spec.pairs:
        a, b = pair
        dut = _exposed(result, pair)
        arch = result.duts[dut].archetype
        stats = pair_statistics(result, pair)
        entry = {"pair": f"{result.duts[a].label}-{result.duts[b].label}", "archetype": arch,
                 "exposed": result.duts[dut].label, "statistics": stats,
                 "emi_events": int(result.duts[dut].emi_events[-1]) if len(result.duts[dut].emi_events) else 0}
        trace = result.duts[dut]
        if trace.holdover_entries:
            cps = holdover_checkpoints(result, dut)
            entry["holdover_max_te_s"] = dict(zip(CHECKPOINT_LABELS, cps))
            entry["holdover_entries_s"] = list(trace.holdover_entries)
            entry["reacquisitions_s"] = list(trace.reacquisitions)
            for label, value, ref in zip(CHECKPOINT_LABELS, cps, REFERENCE_HOLDOVER.get(arch, ())):
                report["comparison"].append(_band_row(f"holdover_max_te_{label}_s", arch, value, ref,
                                                      ref / HOLDOVER_FACTOR, ref * HOLDOVER_FACTOR))
        if spec.duts[dut].cold_start:
            budget = USABILITY_BUDGET.get(arch, 25e-9)
            usable = usability_time(result, dut, USABILITY_WINDOW, budget)
            entry["first_fix_s"] = trace.first_fix
            entry["usability"] = {"window_s": USABILITY_WINDOW, "mtie_budget_s": budget, "time_s": usable}
            if arch in REFERENCE_USABILITY:
                report["comparison"].append(_band_row("usability_time_s", arch, usable,
                                                      *REFERENCE_USABILITY[arch]))
        if spec.name == "steady_state" and arch in REFERENCE_STEADY:
            measured = {"pps_sigma_s": stats[PPS]["sigma_s"],
                        "pps_mtie_1800_s": stats[PPS][f"mtie_{MTIE_WINDOW}_s"],
                        "tenmhz_mtie_1800_s": stats[TENMHZ][f"mtie_{MTIE_WINDOW}_s"]}
            for quantity, (target, low, high) in REFERENCE_STEADY[arch].items():
                report["comparison"].append(_band_row(quantity, arch, measured[quantity], target, low, high))
        report["pairs"].append(entry)
    return report


def format_table(report: dict) -> str:
    """Plain-text summary printed by ``gnssdobench simulate``."""
    lines = [f"scenario {report['scenario']}  seed {report['seed']}"]
    for p in report["pairs"]:
        s = p["statistics"]
        lines.append(f"  {p['pair']:<12} {p['archetype']:<8} "
                     f"PPS sigma {s[PPS]['sigma_s'] * 1e9:8.2f} ns  outliers {s[PPS]['outlier_count']:4d}  "
                     f"MTIE(1800 s) PPS {_ns(s[PPS]['mtie_1800_s'])}  10MHz {_ns(s[TENMHZ]['mtie_1800_s'])}")
        if "holdover_max_te_s" in p:
            cells = "  ".join(f"{k} {_us(v)}" for k, v in p["holdover_max_te_s"].items())
            lines.append(f"    holdover max |TE| (us): {cells}")
        if "usability" in p:
            t = p["usability"]["time_s"]
            lines.append(f"    usable after first fix: {'never' if t is None else f'{t / 60:.1f} min'}")
    if report["comparison"]:
        passed = sum(r["pass"] for r in report["comparison"])
        lines.append(f"  reference comparison: {passed}/{len(report['comparison'])} within band")
    return "\n".join(lines)


def _ns(v):
    return "   n/a" if v is None else f"{v * 1e9:6.1f} ns"


def _us(v):
    return "n/a" if v is None else f"{v * 1e6:.2f}"


__all__ = ["CHECKPOINTS", "build_report", "format_table", "holdover_checkpoints", "pair_statistics"]
