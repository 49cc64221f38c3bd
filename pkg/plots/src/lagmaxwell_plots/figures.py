"""Figure builders: residual-history families and field-magnitude heatmaps.

Rendering is deliberately pinned down — fixed backend, fonts, figure
geometry, colors — so that byte-identical inputs produce pixel-identical
PNGs on a given matplotlib install (the golden-file contract).
"""

from __future__ import annotations

import glob as _glob
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import rc_context

from .io import (
    MalformedInputError,
    load_field_dump,
    load_residual_curve,
    require_single_scenario,
)

_CYCLE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]

_RC = {
    "font.family": "DejaVu Sans",
    "font.size": 10.0,
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "lines.linewidth": 1.5,
    "axes.prop_cycle": plt.cycler(color=_CYCLE),
    "legend.framealpha": 0.9,
}

_ARC_COLOR = "#d62728"
_PNG_META = {"Software": "lagmaxwell-plots"}


@dataclass(frozen=True)
class FigureSpec:
    """What to plot: an input glob, axis scaling, optional label overrides
    keyed by angle token (e.g. ``"0.0500pi"``), and the output path."""

    inputs: str
    output: str
    log_y: bool = True
    labels: Optional[Mapping[str, str]] = None
    title: Optional[str] = None


@dataclass(frozen=True)
class RenderResult:
    """Where the figure landed, plus enough structure for checks: legend
    labels in draw order, and (for heatmaps) the data-area pixel box of the
    saved image as (row0, row1, col0, col1)."""

    path: Path
    labels: tuple = ()
    data_box: Optional[tuple] = None


def _matching_files(pattern: str):
    paths = sorted(Path(p) for p in _glob.glob(pattern))
    if not paths:
        raise MalformedInputError(f"no files match {pattern!r}")
    return paths


def _pretty(token: str) -> str:
    # "0.0500pi" -> "0.0500π"
    return token[:-2] + "π" if token.endswith("pi") else token


def plot_residuals(spec: FigureSpec) -> RenderResult:
    """Render one residual-vs-iteration curve per matching CSV.

    Curves are ordered (and the legend listed) by slot angle descending,
    then by mode name; all inputs must belong to a single scenario.
    """
    paths = _matching_files(spec.inputs)
    sid = require_single_scenario(paths)
    curves = sorted((load_residual_curve(p) for p in paths),
                    key=lambda c: (-c.alpha, c.mode))

    overrides = dict(spec.labels or {})
    labels = []
    with rc_context(_RC):
        fig = plt.figure(figsize=(6.4, 4.8))
        ax = fig.add_axes([0.115, 0.11, 0.795, 0.8])
        try:
            for c in curves:
                label = overrides.get(c.alpha_token,
                                      f"α = {_pretty(c.alpha_token)}, {c.mode}")
                labels.append(label)
                x = np.arange(len(c.history))
                if spec.log_y:
                    ax.semilogy(x, c.history, label=label)
                else:
                    ax.plot(x, c.history, label=label)
            ax.set_xlabel("iteration")
            ax.set_ylabel("relative residual")
            ax.grid(True, which="both", alpha=0.3)
            ax.legend(loc="upper right")
            ax.set_title(spec.title if spec.title is not None else f"scenario {sid}")
            out = Path(spec.output)
            fig.savefig(out, metadata=_PNG_META)
        finally:
            plt.close(fig)
    return RenderResult(path=out, labels=tuple(labels))


def plot_field(spec: FigureSpec) -> RenderResult:
    """Render a field-magnitude heatmap with source marker and, when the
    scenario has a conductor, the arc it occupies (angles alpha/2 to
    2*pi - alpha/2 about the circle center; the slot faces +x)."""
    paths = _matching_files(spec.inputs)
    if len(paths) != 1:
        raise MalformedInputError(
            f"field plot needs exactly one input, {spec.inputs!r} matches {len(paths)}")
    dump = load_field_dump(paths[0])
    cfg = dump.manifest.get("config", {})
    try:
        width, height = float(cfg["width"]), float(cfg["height"])
        cx, cy, radius = float(cfg["circle_x"]), float(cfg["circle_y"]), float(cfg["radius"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInputError(
            f"{dump.path}: manifest config lacks geometry fields ({exc})") from exc

    with rc_context(_RC):
        fig = plt.figure(figsize=(6.4, 6.4))
        # fixed axes geometry: 480x480 device pixels for the data area
        ax = fig.add_axes([0.125, 0.125, 0.75, 0.75])
        try:
            im = ax.imshow(dump.pixels, origin="lower", extent=(0, width, 0, height),
                           cmap="viridis", vmin=0, vmax=255,
                           interpolation="nearest", aspect="auto")
            sx, sy = (cx, cy) if radius > 0 else (width / 2, height / 2)
            ax.plot([sx], [sy], marker="+", color="white", markersize=12,
                    markeredgewidth=1.6, linestyle="none", antialiased=False)
            if radius > 0 and dump.alpha < 2 * np.pi:
                theta = np.linspace(dump.alpha / 2, 2 * np.pi - dump.alpha / 2, 721)
                ax.plot(cx + radius * np.cos(theta), cy + radius * np.sin(theta),
                        color=_ARC_COLOR, linewidth=1.8, solid_capstyle="butt")
            ax.set_xlim(0, width)
            ax.set_ylim(0, height)
            ax.set_xlabel("x")
            ax.set_ylabel("y")
            ax.set_title(spec.title if spec.title is not None
                         else f"field magnitude, α = {_pretty(dump.alpha_token)}")
            cax = fig.add_axes([0.895, 0.125, 0.025, 0.75])
            fig.colorbar(im, cax=cax)

            fig.canvas.draw()
            bbox = ax.get_window_extent()
            h_px = int(round(fig.get_figheight() * fig.dpi))
            data_box = (int(round(h_px - bbox.y1)), int(round(h_px - bbox.y0)),
                        int(round(bbox.x0)), int(round(bbox.x1)))
            out = Path(spec.output)
            fig.savefig(out, metadata=_PNG_META)
        finally:
            plt.close(fig)
    return RenderResult(path=out, data_box=data_box)
