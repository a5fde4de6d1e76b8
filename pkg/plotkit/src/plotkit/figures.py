"""The four figure kinds and their deterministic rendering.

Each kind reads one or more validated CSVs and draws onto a fixed-size
figure; saving embeds no timestamps (SVG Date stripped, fixed hash salt),
so identical inputs produce identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .schema import CsvSchemaError, read_slice, read_trace, require_schema
from .smooth import moving_average

FIGURE_KINDS = ("outputs-over-time", "init-slices", "ntk-evolution", "mnist-ntk")
FIGSIZE = (8.0, 5.0)
MAX_LEGEND = 12
DEFAULT_WINDOW = 51

_INPUT_SCHEMA = {
    "outputs-over-time": "trace",
    "init-slices": "slice",
    "ntk-evolution": "trace",
    "mnist-ntk": "trace",
}


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple
    out: str
    window: int = DEFAULT_WINDOW  # mnist-ntk only
    log_scale: bool = False  # ntk-evolution only
    raster: bool = False

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("figure needs at least one input CSV")
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError(f"window must be a positive odd integer, got {self.window}")


def _validated_inputs(spec: FigureSpec) -> list:
    expected = _INPUT_SCHEMA[spec.kind]
    paths = [Path(p) for p in spec.inputs]
    for p in paths:
        if not p.is_file():
            raise CsvSchemaError(f"input CSV {p} does not exist")
        require_schema(p, expected)
    if expected == "trace" and len(paths) > 1:
        raise CsvSchemaError(f"{spec.kind} takes exactly one trace CSV, got {len(paths)}")
    return paths


def _legend_if_readable(ax, count):
    if count <= MAX_LEGEND:
        ax.legend(loc="best", fontsize=8)


def _draw_outputs_over_time(ax, paths):
    trace = read_trace(paths[0])
    for i, series in sorted(trace["f"].items()):
        ax.plot(trace["epochs"], series, label=f"sample {i}")
    ax.set_xlabel("epoch")
    ax.set_ylabel("network output f")
    ax.set_title("training outputs over epochs")
    _legend_if_readable(ax, len(trace["f"]))


def _draw_init_slices(ax, paths):
    widths = {}
    analytic = None
    for p in paths:
        data = read_slice(p)
        if data["analytic"].size:
            analytic = data["analytic"]
        for (m, seed), curve in data["empirical"].items():
            widths.setdefault(m, {})[seed] = curve
    cycle = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for k, m in enumerate(sorted(widths)):
        color = cycle[k % len(cycle)]
        for pos, seed in enumerate(sorted(widths[m])):
            curve = widths[m][seed]
            ax.plot(curve[:, 0], curve[:, 1], color=color, alpha=0.6, lw=1.0,
                    label=f"m={m}" if pos == 0 else "_nolegend_")
    if analytic is not None and analytic.size:
        ax.plot(analytic[:, 0], analytic[:, 1], color="black", ls="--", lw=2.0,
                label="analytic")
    ax.set_xlabel("slice angle theta")
    ax.set_ylabel("kernel value")
    ax.set_title("init kernel slices by width")
    _legend_if_readable(ax, len(widths) + 1)


def _draw_ntk_evolution(ax, paths, log_scale):
    trace = read_trace(paths[0])
    for (i, j), series in sorted(trace["K"].items()):
        ax.plot(trace["epochs"], series, lw=1.2, label=f"K[{i},{j}]")
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("empirical NTK entry")
    ax.set_title("watched NTK entries over training")
    _legend_if_readable(ax, len(trace["K"]))


def _draw_mnist_ntk(ax, paths, window):
    trace = read_trace(paths[0])
    cycle = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for k, ((i, j), series) in enumerate(sorted(trace["K"].items())):
        color = cycle[k % len(cycle)]
        ax.plot(trace["epochs"], series, color=color, alpha=0.35, lw=0.8,
                label="_nolegend_")
        ax.plot(trace["epochs"], moving_average(series, window), color=color,
                ls="--", lw=1.6, label=f"K[{i},{j}] smoothed")
    ax.set_xlabel("epoch")
    ax.set_ylabel("diagonal NTK entry")
    ax.set_title(f"MNIST diagonal NTK entries (window {window})")
    _legend_if_readable(ax, len(trace["K"]))


def build_figure(spec: FigureSpec):
    """Validate inputs and draw; returns the matplotlib figure."""
    paths = _validated_inputs(spec)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    if spec.kind == "outputs-over-time":
        _draw_outputs_over_time(ax, paths)
    elif spec.kind == "init-slices":
        _draw_init_slices(ax, paths)
    elif spec.kind == "ntk-evolution":
        _draw_ntk_evolution(ax, paths, spec.log_scale)
    else:
        _draw_mnist_ntk(ax, paths, spec.window)
    return fig


def render(spec: FigureSpec) -> Path:
    """Render to spec.out (SVG by default, PNG with raster=True)."""
    out = Path(spec.out)
    fig = build_figure(spec)
    try:
        with plt.rc_context({"svg.hashsalt": "plotkit"}):
            if spec.raster or out.suffix.lower() == ".png":
                fig.savefig(out, format="png", dpi=120)
            else:
                # Date: None keeps rerenders byte-identical
                fig.savefig(out, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return out
