"""Figure rendering: boxplot grids, the bimodal panel, and weight scatters.

The renderer only re-arranges numbers that already live in the run
directory; reference lines come from the summary JSONs, never from a
recomputation.  Each render reports a checksum of exactly the values it
plotted so a consumer can verify the figure against the source CSVs.
Images are written atomically (temp file, then rename): a failed render
leaves no partial output.
"""

import hashlib
import os
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import schemas
from .schemas import SchemaError

KINDS = ("boxplot-grid", "nonconvergence-panel", "scatter-weights")

MODE_COLORS = {"low": "tab:blue", "high": "tab:red", "other": "0.6"}


@dataclass(frozen=True)
class FigureSpec:
    """What to render: a run directory, a figure kind, where to write it."""

    run_dir: Path
    kind: str
    out_path: Path
    title: str = ""
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "run_dir", Path(self.run_dir))
        object.__setattr__(self, "out_path", Path(self.out_path))


@dataclass(frozen=True)
class RenderResult:
    out_path: Path
    checksum: str
    plotted: dict = field(repr=False)


def plotted_checksum(arrays: dict) -> str:
    """sha256 over the plotted float values, keyed and ordered by name."""
    digest = hashlib.sha256()
    for name in sorted(arrays):
        values = np.asarray(arrays[name], dtype=float).ravel()
        digest.update(name.encode("utf-8"))
        digest.update(b":")
        digest.update(",".join(repr(float(v)) for v in values).encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def render(spec: FigureSpec) -> RenderResult:
    """Validate inputs, draw the figure, write it atomically.

    Returns the output path and the checksum of the plotted values; the
    same checksum is recorded in ``<out>.meta.json``.
    """

    if spec.kind == "boxplot-grid":
        figure, plotted = _render_boxplot_grid(spec)
    elif spec.kind == "nonconvergence-panel":
        figure, plotted = _render_nonconvergence(spec)
    else:
        figure, plotted = _render_weight_scatter(spec)

    checksum = plotted_checksum(plotted)
    out = spec.out_path
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(out.name + ".tmp")
    try:
        figure.savefig(tmp, dpi=spec.dpi)
    finally:
        plt.close(figure)
    os.replace(tmp, out)

    meta = out.with_name(out.name + ".meta.json")
    import json

    with open(meta, "w", encoding="utf-8") as handle:
        json.dump(
            {"kind": spec.kind, "run_dir": str(spec.run_dir), "checksum": checksum},
            handle,
            sort_keys=True,
            indent=2,
        )
        handle.write("\n")
    return RenderResult(out_path=out, checksum=checksum, plotted=plotted)


def _render_boxplot_grid(spec):
    cells = schemas.discover_grid_cells(spec.run_dir)
    delta2_levels = sorted({c["delta2"] for c in cells}, reverse=True)
    s_levels = sorted({c["s"] for c in cells}, reverse=True)
    n_rows, n_cols = len(delta2_levels), len(s_levels)
    figure, axes = plt.subplots(
        n_rows, n_cols, figsize=(4.2 * n_cols, 3.2 * n_rows), squeeze=False
    )
    plotted = {}
    for cell in cells:
        row = delta2_levels.index(cell["delta2"])
        col = s_levels.index(cell["s"])
        axis = axes[row][col]
        trials = schemas.load_trials(cell["trials_path"])
        summary = schemas.load_summary(cell["summary_path"])
        name = f"s{cell['s']}_d{cell['delta2']}_p{cell['p']}"
        plotted[name] = trials["active_ratio"]
        position = sorted(
            {c["p"] for c in cells if c["s"] == cell["s"] and c["delta2"] == cell["delta2"]}
        ).index(cell["p"])
        axis.boxplot(
            trials["active_ratio"], positions=[position], widths=0.55, manage_ticks=False
        )
        limit = summary.get("f_beta_star")
        if limit is not None:
            axis.axhline(limit, linestyle="--", color="tab:orange", linewidth=1.0)
    for row, delta2 in enumerate(delta2_levels):
        for col, s in enumerate(s_levels):
            axis = axes[row][col]
            p_values = sorted(
                {c["p"] for c in cells if c["s"] == s and c["delta2"] == delta2}
            )
            axis.set_xticks(range(len(p_values)))
            axis.set_xticklabels([str(p) for p in p_values])
            axis.set_title(f"s={s}, delta2={delta2}")
            axis.set_xlabel("p")
            if col == 0:
                axis.set_ylabel("active ratio")
    if spec.title:
        figure.suptitle(spec.title)
    figure.tight_layout()
    return figure, plotted


def _render_nonconvergence(spec):
    layout = schemas.discover_nonconvergence(spec.run_dir)
    curve = schemas.load_gcurve(layout["curve_path"])
    summary = schemas.load_gcurve_summary(layout["summary_path"])
    panels = layout["panels"]

    figure = plt.figure(figsize=(4.0 * len(panels), 6.4))
    grid = figure.add_gridspec(2, len(panels), height_ratios=[1.0, 0.8])
    plotted = {"g_curve_y": curve["y"], "g_curve_g": curve["g"]}

    for i, panel in enumerate(panels):
        axis = figure.add_subplot(grid[0, i])
        trials = schemas.load_trials(panel["trials_path"])
        plotted[f"ratios_p{panel['p']}"] = trials["active_ratio"]
        colors = [MODE_COLORS.get(mode, "0.6") for mode in trials["mode"]]
        axis.scatter(trials["trial"], trials["active_ratio"], s=8, c=colors)
        axis.axhline(summary["liminf"], linestyle="--", color="tab:orange", linewidth=1.0)
        axis.axhline(summary["limsup"], linestyle="-.", color="darkred", linewidth=1.0)
        axis.axhspan(summary["liminf"], summary["limsup"], color="gold", alpha=0.15)
        axis.set_title(f"p={panel['p']}")
        axis.set_xlabel("trial")
        if i == 0:
            axis.set_ylabel("active ratio")

    axis = figure.add_subplot(grid[1, :])
    ys, gs = curve["y"], curve["g"]
    axis.plot(ys, gs, color="black", linewidth=1.2)
    axis.fill_between(ys, gs, 0.0, where=gs > 0, color="tab:green", alpha=0.25)
    axis.fill_between(ys, gs, 0.0, where=gs < 0, color="tab:pink", alpha=0.35)
    axis.axhline(0.0, color="0.4", linewidth=0.8)
    beta_star = summary.get("beta_star")
    if beta_star is not None:
        axis.axvline(beta_star, linestyle=":", color="0.3", linewidth=1.0)
    axis.set_xlabel("y")
    axis.set_ylabel("G(y)")
    if spec.title:
        figure.suptitle(spec.title)
    figure.tight_layout()
    return figure, plotted


def _render_weight_scatter(spec):
    path = Path(spec.run_dir) / "weights_scatter.csv"
    if not path.exists():
        raise SchemaError(f"{spec.run_dir}: missing weights_scatter.csv")
    data = schemas.load_weight_scatter(path)
    figure, axis = plt.subplots(figsize=(7.0, 4.6))
    axis.scatter(data["beta"], data["gmv"], s=4, color="tab:blue", label="long-short", alpha=0.5)
    axis.scatter(data["beta"], data["lomv"], s=4, color="black", label="long-only")
    axis.axhline(0.0, color="0.4", linewidth=0.8)
    axis.set_xlabel("beta")
    axis.set_ylabel("weight")
    axis.legend()
    if spec.title:
        axis.set_title(spec.title)
    figure.tight_layout()
    plotted = {"beta": data["beta"], "lomv": data["lomv"], "gmv": data["gmv"]}
    return figure, plotted
