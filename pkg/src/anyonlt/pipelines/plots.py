from __future__ import annotations

import io
from typing import Iterable, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import pandas as pd  # noqa: E402
from matplotlib import rcParams  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from anyonlt.errors import InvalidInputError  # noqa: E402

KINDS = ("line", "heatmap", "overlay")

rcParams["svg.hashsalt"] = "anyonlt"
rcParams["svg.fonttype"] = "none"


def _heatmap(ax, frame: pd.DataFrame):
    table = frame.pivot(index="y", columns="x", values="value").sort_index().sort_index(axis=1)
    xs, ys = table.columns.to_numpy(float), table.index.to_numpy(float)
    image = ax.imshow(
        table.to_numpy(float),
        origin="lower",
        extent=(xs[0], xs[-1], ys[0], ys[-1]),
        cmap="viridis",
        interpolation="nearest",
        aspect="equal",
    )
    return image


def emit_plot(
    frame: pd.DataFrame,
    kind: str = "line",
    *,
    x: Optional[str] = None,
    title: str = "",
    xlabel: Optional[str] = None,
    ylabel: Optional[str] = None,
    logx: bool = False,
    squares: Iterable[Tuple[Tuple[float, float], float]] = (),
    references: Sequence[Tuple[str, float]] = (),
) -> str:
    """
    Render a self-contained SVG document.

    line     columns other than `x` (default: the first) plotted against it
    heatmap  long-format columns x, y, value
    overlay  heatmap plus squares given as ((cx, cy), side)
    `references` draws labelled horizontal lines (line plots only).
    """
    if kind not in KINDS:
        raise InvalidInputError(f"unknown plot kind {kind!r}")
    if frame is None or frame.empty:
        raise InvalidInputError("cannot plot an empty series")

    fig = Figure(figsize=(6.0, 4.5) if kind == "line" else (5.5, 5.0))
    ax = fig.add_subplot(1, 1, 1)
    if kind == "line":
        xcol = x or frame.columns[0]
        for col in frame.columns:
            if col == xcol:
                continue
            ax.plot(frame[xcol], frame[col], marker="o", markersize=3, label=str(col))
        for label, value in references:
            ax.axhline(value, linestyle="--", linewidth=0.8, color="grey", label=label)
        if logx:
            ax.set_xscale("log")
        ax.set_xlabel(xlabel or str(xcol))
        if ylabel:
            ax.set_ylabel(ylabel)
        ax.legend(loc="best", fontsize="small")
        ax.grid(True, linewidth=0.3)
    else:
        missing = {"x", "y", "value"} - set(frame.columns)
        if missing:
            raise InvalidInputError(f"heatmap frame needs columns x, y, value; missing {sorted(missing)}")
        image = _heatmap(ax, frame)
        fig.colorbar(image, ax=ax, shrink=0.8)
        if kind == "overlay":
            for (cx, cy), side in squares:
                ax.add_patch(
                    Rectangle((cx - side / 2, cy - side / 2), side, side, fill=False, linewidth=0.6, edgecolor="white")
                )
        ax.set_xlabel(xlabel or "x")
        ax.set_ylabel(ylabel or "y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()
