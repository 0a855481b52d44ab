"""Timeline and zoom figures from run CSV logs.

Rendering is a pure function of (CSV contents, spec): fixed figure sizes,
fixed dpi and stripped PNG metadata keep repeated renders byte-identical
for a given plotting-backend version.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reader import check_interval, read_run

CHANNELS = ("cc_tg_d1", "cc_tg_d2")
CHANNEL_LABELS = {"cc_tg_d1": "Tg & D1", "cc_tg_d2": "Tg & D2"}
CHANNEL_COLORS = {"cc_tg_d1": "#0e6ba8", "cc_tg_d2": "#bf4342"}

SAVE_OPTS = dict(dpi=130, metadata={"Software": None})


@dataclass(frozen=True)
class PlotSpec:
    inputs: tuple[str, ...]
    out: str
    channels: tuple[str, ...] = CHANNELS
    interval: tuple[float, float] | None = None
    highlights: tuple[tuple[float, float, str], ...] = ()
    markers: tuple[float, ...] = ()
    titles: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        unknown = [ch for ch in self.channels if ch not in CHANNELS]
        if unknown:
            raise ValueError(f"unknown channel(s): {', '.join(unknown)}")


def _shade_uncontrolled(ax, data) -> None:
    t = data["t"]
    disabled = data["en_control"] == 0
    if not disabled.any():
        return
    edges = np.flatnonzero(np.diff(disabled.astype(int)))
    starts = [t[0]] if disabled[0] else []
    starts += [t[i + 1] for i in edges if not disabled[i]]
    ends = [t[i + 1] for i in edges if disabled[i]]
    if len(ends) < len(starts):
        ends.append(t[-1])
    for lo, hi in zip(starts, ends):
        ax.axvspan(lo, hi, color="#d94a4a", alpha=0.18, linewidth=0)


def _column_title(spec: PlotSpec, index: int) -> str:
    if index < len(spec.titles):
        return spec.titles[index]
    return Path(spec.inputs[index]).stem


def plot_timeline(spec: PlotSpec) -> str:
    """Two stacked panels per input run: counts on top, stretcher word below.

    Ticks where the loop was open are shaded in the counts panel.
    """
    runs = [read_run(path) for path in spec.inputs]
    for data in runs:
        for start, end, _label in spec.highlights:
            check_interval(data, start, end)

    ncols = len(runs)
    fig, axes = plt.subplots(
        2, ncols, figsize=(7.0 * ncols, 6.0), sharex="col", squeeze=False
    )
    for col, data in enumerate(runs):
        t = data["t"]
        ax_counts, ax_word = axes[0][col], axes[1][col]
        for channel in spec.channels:
            ax_counts.plot(
                t,
                data[channel],
                linewidth=0.9,
                color=CHANNEL_COLORS[channel],
                label=CHANNEL_LABELS[channel],
            )
        _shade_uncontrolled(ax_counts, data)
        for start, end, label in spec.highlights:
            ax_counts.axvspan(start, end, color="#777777", alpha=0.15, linewidth=0)
            if label:
                ax_counts.text(
                    (start + end) / 2.0,
                    0.97,
                    label,
                    transform=ax_counts.get_xaxis_transform(),
                    ha="center",
                    va="top",
                    fontsize=8,
                )
        ax_counts.set_ylabel("coincidences per 1 s")
        ax_counts.set_title(_column_title(spec, col), fontsize=10)
        ax_counts.legend(loc="lower left", fontsize=8)

        ax_word.plot(t, data["s_ctrl2"], linewidth=0.9, color="#2a2a2a")
        ax_word.set_ylabel("stretcher output (AU)")
        ax_word.set_xlabel("time (s)")
    fig.tight_layout()
    fig.savefig(spec.out, **SAVE_OPTS)
    plt.close(fig)
    return spec.out


def plot_zoom(spec: PlotSpec) -> str:
    """Interval close-up: counts with mean +/- sigma band, step-size detail."""
    if spec.interval is None:
        raise ValueError("plot_zoom requires an interval")
    runs = [read_run(path) for path in spec.inputs]
    start, end = spec.interval
    for data in runs:
        check_interval(data, start, end)

    ncols = len(runs)
    fig, axes = plt.subplots(
        2, ncols, figsize=(6.0 * ncols, 5.6), sharex="col", squeeze=False
    )
    for col, data in enumerate(runs):
        mask = (data["t"] >= start) & (data["t"] <= end)
        t = data["t"][mask]
        ax_counts, ax_word = axes[0][col], axes[1][col]
        for channel in spec.channels:
            values = data[channel][mask]
            mean = float(np.mean(values))
            sigma = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
            color = CHANNEL_COLORS[channel]
            ax_counts.plot(
                t, values, linewidth=1.0, color=color,
                label=CHANNEL_LABELS[channel],
            )
            ax_counts.axhline(mean, color=color, linewidth=0.8, linestyle="--")
            ax_counts.axhspan(mean - sigma, mean + sigma, color=color, alpha=0.15,
                              linewidth=0)
        for marker in spec.markers:
            ax_counts.axvline(marker, color="#444444", linewidth=0.8,
                              linestyle=":")
        ax_counts.set_ylabel("coincidences per 1 s")
        ax_counts.set_title(_column_title(spec, col), fontsize=10)
        ax_counts.legend(loc="best", fontsize=8)

        ax_word.step(t, data["s_ctrl2"][mask], where="post", linewidth=1.0,
                     color="#2a2a2a")
        ax_word.set_ylabel("stretcher output (AU)")
        ax_word.set_xlabel("time (s)")
    fig.tight_layout()
    fig.savefig(spec.out, **SAVE_OPTS)
    plt.close(fig)
    return spec.out
