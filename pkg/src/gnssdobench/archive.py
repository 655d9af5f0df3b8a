"""Run archives and the CSV formats shared by ``simulate`` and ``analyze``.

Series CSV::

    # tau0=1 t0=0 label=dut01-dut02 PPS
    t_s,value_s
    0,1.2345e-09
    ...

Curve CSV uses the columns ``tau_s,adev,tie_rms_s,mtie_s``; the per-device
state CSV uses ``t_s,state,fix`` with the controller mode name.  Floats are
written with ``repr`` so a write/read round trip is exact and identical runs
give identical bytes.
"""

from __future__ import annotations

import json
import math
import platform
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .core import PPS, TENMHZ, TimeErrorSeries
from .discipline import Mode
from .metrics import StabilityCurve
from .scenario.engine import RunResult
from .scenario.spec import serialize

SERIES_COLUMNS = ("t_s", "value_s")
CURVE_COLUMNS = ("tau_s", "adev", "tie_rms_s", "mtie_s")
ENV_COLUMNS = ("t_s", "accel_peak_g", "thrust_pw_us", "thrust_activity", "satellites")
STATE_COLUMNS = ("t_s", "state", "fix")


class CsvFormatError(ValueError):
    """Malformed CSV input; ``line`` is 1-based."""

    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def _num(v: float) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _header(tau0: float, t0: float, label: str) -> str:
    if "\n" in label:
        raise ValueError("labels must be single-line")
    return f"# tau0={_num(tau0)} t0={_num(t0)} label={label}\n"


def format_series_csv(series: TimeErrorSeries) -> str:
    lines = [_header(series.tau0, series.t0, series.label), ",".join(SERIES_COLUMNS) + "\n"]
    t = series.times
    lines.extend(f"{_num(a)},{_num(b)}\n" for a, b in zip(t.tolist(), series.samples.tolist()))
    return "".join(lines)


def parse_header(line: str, path, lineno: int = 1) -> dict:
    if not line.startswith("#"):
        raise CsvFormatError(path, lineno, "missing '# tau0=... t0=... label=...' header")
    body = line[1:].strip()
    out = {}
    head, sep, label = body.partition("label=")
    out["label"] = label.strip() if sep else ""
    for token in head.split():
        key, eq, value = token.partition("=")
        if not eq:
            raise CsvFormatError(path, lineno, f"header token {token!r} is not key=value")
        try:
            out[key] = float(value)
        except ValueError:
            raise CsvFormatError(path, lineno, f"header value {token!r} is not a number") from None
    for key in ("tau0", "t0"):
        if key not in out:
            raise CsvFormatError(path, lineno, f"header lacks {key}")
    if not (out["tau0"] > 0 and math.isfinite(out["tau0"])):
        raise CsvFormatError(path, lineno, "tau0 must be a positive number")
    return out


def parse_series_csv(text: str, path="<series>", kind: str | None = None) -> TimeErrorSeries:
    """Parse a series CSV; the time column must advance by tau0 per row."""
    lines = text.splitlines()
    if not lines:
        raise CsvFormatError(path, 1, "empty file")
    meta = parse_header(lines[0], path)
    if len(lines) < 2 or [c.strip() for c in lines[1].split(",")] != list(SERIES_COLUMNS):
        raise CsvFormatError(path, 2, f"expected column header {','.join(SERIES_COLUMNS)}")
    tau0, t0 = meta["tau0"], meta["t0"]
    values = []
    for lineno, raw in enumerate(lines[2:], start=3):
        if not raw.strip():
            continue
        cells = raw.split(",")
        if len(cells) != 2:
            raise CsvFormatError(path, lineno, f"expected 2 columns, found {len(cells)}")
        try:
            t, v = float(cells[0]), float(cells[1])
        except ValueError:
            raise CsvFormatError(path, lineno, "non-numeric value") from None
        expected = t0 + len(values) * tau0
        if not math.isclose(t, expected, rel_tol=1e-9, abs_tol=1e-9 * tau0):
            raise CsvFormatError(path, lineno, f"time {t} breaks the uniform grid (expected {expected})")
        values.append(v)
    if not values:
        raise CsvFormatError(path, len(lines) + 1, "no samples")
    if kind is None and meta["label"].endswith(PPS):
        kind = PPS
    try:
        return TimeErrorSeries(t0, tau0, np.array(values), meta["label"], kind)
    except ValueError as exc:
        raise CsvFormatError(path, 3, str(exc)) from None


def read_series_csv(path, kind: str | None = None) -> TimeErrorSeries:
    path = Path(path)
    return parse_series_csv(path.read_text(), path, kind)


def format_curves_csv(curves: tuple[StabilityCurve, StabilityCurve, StabilityCurve], tau0: float,
                      t0: float, label: str) -> str:
    """One row per tau of the union grid; metrics not defined at a tau are empty."""
    adev, tie, mt = curves
    taus = sorted(set(adev.taus.tolist()) | set(tie.taus.tolist()) | set(mt.taus.tolist()))
    lookup = [dict(zip(c.taus.tolist(), c.values.tolist())) for c in (adev, tie, mt)]
    lines = [_header(tau0, t0, label), ",".join(CURVE_COLUMNS) + "\n"]
    for tau in taus:
        cells = [_num(tau)] + ["" if tau not in d else _num(d[tau]) for d in lookup]
        lines.append(",".join(cells) + "\n")
    return "".join(lines)


def format_env_csv(env: dict) -> str:
    lines = [_header(1.0, 0.0, "environment"), ",".join(ENV_COLUMNS) + "\n"]
    cols = [np.asarray(env[c]).tolist() for c in ENV_COLUMNS]
    lines.extend(",".join(_num(v) for v in row) + "\n" for row in zip(*cols))
    return "".join(lines)


def format_state_csv(trace) -> str:
    """Per-second controller mode and GNSS fix flag of one device."""
    lines = [_header(1.0, 0.0, f"{trace.label} state"), ",".join(STATE_COLUMNS) + "\n"]
    lines.extend(f"{k},{Mode(int(m)).name},{int(f)}\n" for k, (m, f) in enumerate(zip(trace.modes, trace.fix)))
    return "".join(lines)


def dumps_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def meta_dict(result: RunResult) -> dict:
    return {**result.meta, "versions": {"gnssdobench": __version__, "numpy": np.__version__,
                                        "scipy": scipy.__version__, "python": platform.python_version()}}


def write_archive(result: RunResult, out_dir, report: dict) -> list[Path]:
    """Write the complete run archive below ``out_dir`` (created if absent).

    The parent of ``out_dir`` must exist.  Returns the written paths.
    """
    out = Path(out_dir)
    if not out.parent.exists():
        raise FileNotFoundError(f"parent directory {out.parent} does not exist")
    out.mkdir(exist_ok=True)
    (out / "series").mkdir(exist_ok=True)
    (out / "pairs").mkdir(exist_ok=True)
    files = {
        out / "spec.cfg": serialize(result.spec),
        out / "meta.json": dumps_json(meta_dict(result)),
        out / "env.csv": format_env_csv(result.env),
        out / "report.json": dumps_json(report),
    }
    for trace in result.duts:
        for kind in (PPS, TENMHZ):
            files[out / "series" / f"{trace.label}_{kind}.csv"] = format_series_csv(trace.series[kind])
        files[out / "series" / f"{trace.label}_state.csv"] = format_state_csv(trace)
    for (a, b), by_kind in result.pairs.items():
        la, lb = result.duts[a].label, result.duts[b].label
        for kind, series in by_kind.items():
            files[out / "pairs" / f"{la}-{lb}_{kind}.csv"] = format_series_csv(series)
    for path, text in files.items():
        path.write_text(text)
    return sorted(files)
