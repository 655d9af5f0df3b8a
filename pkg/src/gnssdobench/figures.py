"""Optional PNG figures for a run archive (``simulate --figures``).

Rendering uses the non-interactive Agg backend and never touches the CSV or
JSON outputs, so archives stay byte-identical whether or not figures are drawn.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .core import PPS, TENMHZ  # noqa: E402
from .metrics import SeriesTooShort, TauGrid, stability_curves  # noqa: E402
from .scenario.engine import RunResult  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (7.0, 4.3),
    "savefig.dpi": 120,
}
KIND_NAMES = {PPS: "1 PPS", TENMHZ: "10 MHz"}


def _pair_name(result: RunResult, pair) -> str:
    a, b = pair
    return f"{result.duts[a].label}-{result.duts[b].label}"


def plot_time_error(result: RunResult, path: Path) -> Path:
    """Pair time error against time, one panel per pair."""
    pairs = list(result.pairs)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(pairs), 1, sharex=True, squeeze=False,
                                 figsize=(7.0, 2.2 * len(pairs) + 0.6))
        for ax, pair in zip(axes[:, 0], pairs):
            for kind in (TENMHZ, PPS):
                s = result.pairs[pair][kind]
                ax.plot(s.times / 3600.0, s.samples * 1e9, lw=0.6, label=KIND_NAMES[kind])
            ax.set_ylabel("time error (ns)")
            ax.set_title(f"{_pair_name(result, pair)} ({result.duts[pair[0]].archetype})", fontsize=9)
            ax.legend(loc="upper right")
        axes[-1, 0].set_xlabel("time (h)")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_stability(result: RunResult, path: Path) -> Path:
    """ADEV, TIE_rms and MTIE of every pair's PPS and 10 MHz series."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 3, figsize=(10.0, 3.4))
        for pair, by_kind in result.pairs.items():
            for kind, series in by_kind.items():
                try:
                    curves = stability_curves(series, TauGrid.decade(series.tau0, len(series)))
                except SeriesTooShort:
                    continue
                label = f"{_pair_name(result, pair)} {KIND_NAMES[kind]}"
                for ax, curve in zip(axes, curves):
                    ax.loglog(curve.taus, curve.values, marker=".", lw=0.8, label=label)
        for ax, title, unit in zip(axes, ("ADEV", "TIE rms", "MTIE"), ("", " (s)", " (s)")):
            ax.set_xlabel("tau (s)")
            ax.set_ylabel(title + unit)
        axes[0].legend(fontsize=6)
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def plot_environment(result: RunResult, path: Path) -> Path:
    env = result.env
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(2, 1, sharex=True)
        t = env["t_s"] / 3600.0
        axes[0].plot(t, env["accel_peak_g"], lw=0.8)
        axes[0].set_ylabel("peak accel (g)")
        axes[1].plot(t, env["thrust_pw_us"], lw=0.8)
        axes[1].set_ylabel("ESC pulse width (us)")
        axes[1].set_xlabel("time (h)")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path


def render_run(result: RunResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [
        plot_time_error(result, out / "time_error.png"),
        plot_stability(result, out / "stability.png"),
        plot_environment(result, out / "environment.png"),
    ]
