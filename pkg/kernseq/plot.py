import logging
import xml.etree.ElementTree as ET
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import numpy.typing as npt

from kernseq.exceptions import ConfigError, InputError

# ==========================================================================================
# ==========================================================================================

# File:    plot.py
# Date:    October 18, 2026
# Author:  Jonathan A. Webb
# Purpose: Deterministic SVG scatter plots of two dimensional coordinates coloured by
#          class label
# ==========================================================================================
# ==========================================================================================
# Domain types

SVG_NS = "http://www.w3.org/2000/svg"

# Categorical colours, assigned to labels in sorted order and cycled past the end
PALETTE: tuple[str, ...] = (
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
    "#bcbd22",
    "#17becf",
)
UNLABELED_COLOR = "#404040"
MARGIN = 0.05
LEGEND_WIDTH = 150
PADDING = 20


def palette_for(labels: Sequence[str | None]) -> dict[str, str]:
    """Colour per distinct label, in sorted label order."""
    distinct = sorted({lab for lab in labels if lab is not None})
    return {lab: PALETTE[i % len(PALETTE)] for i, lab in enumerate(distinct)}


# ------------------------------------------------------------------------------------------


@dataclass
class ScatterSpec:
    """
    What to draw.

    Attributes:
        points: Coordinates, shape ``(n, 2)``.
        labels: Optional label per point.
        ids: Optional id per point, written as a tooltip.
        width: Image width in pixels.
        height: Image height in pixels.
        legend: Draw a legend of the labels when any point is labeled.
        title: Optional title line.
        radius: Circle radius in pixels.
    """

    points: npt.NDArray[np.float64]
    labels: list[str | None] = field(default_factory=list)
    ids: list[str] = field(default_factory=list)
    width: int = 640
    height: int = 480
    legend: bool = True
    title: str | None = None
    radius: float = 3.0

    def __post_init__(self) -> None:
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        n = self.points.shape[0]
        if self.points.shape[1] != 2:
            raise ConfigError(f"Scatter plots need two columns, got shape {self.points.shape}")
        if not self.labels:
            self.labels = [None] * n
        if len(self.labels) != n or (self.ids and len(self.ids) != n):
            raise ConfigError(f"Labels and ids must match the {n} points")
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("Plot width and height must be positive")

    @property
    def palette(self) -> dict[str, str]:
        return palette_for(self.labels)


# ==========================================================================================
# ==========================================================================================


def _fmt(v: float) -> str:
    return f"{v:.3f}"


# ------------------------------------------------------------------------------------------


def _axis_range(values: npt.NDArray[np.float64]) -> tuple[float, float]:
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo if hi > lo else 1.0
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lo - MARGIN * span, hi + MARGIN * span


# ------------------------------------------------------------------------------------------


def plot_scatter(spec: ScatterSpec, path: Path) -> None:
    """
    Write ``spec`` as an SVG 1.1 document.

    Each point is one ``circle`` element.  Axes are scaled to the data with a 5% margin
    on every side.  When enabled and at least one point is labeled, the legend lists
    the labels in sorted order with ``rect`` swatches.  Identical specs produce identical
    bytes.

    Raises:
        ConfigError: No points.
        InputError: The file cannot be written.
    """
    if spec.points.shape[0] < 1:
        raise ConfigError("Nothing to plot")
    palette = spec.palette
    show_legend = spec.legend and bool(palette)

    top = PADDING + (20 if spec.title else 0)
    left = PADDING
    plot_w = spec.width - 2 * PADDING - (LEGEND_WIDTH if show_legend else 0)
    plot_h = spec.height - top - PADDING
    if plot_w <= 0 or plot_h <= 0:
        raise ConfigError(f"Plot {spec.width}x{spec.height} is too small for its legend and padding")
    xlo, xhi = _axis_range(spec.points[:, 0])
    ylo, yhi = _axis_range(spec.points[:, 1])

    root = ET.Element(
        "svg",
        {
            "xmlns": SVG_NS,
            "version": "1.1",
            "width": str(spec.width),
            "height": str(spec.height),
            "viewBox": f"0 0 {spec.width} {spec.height}",
        },
    )
    ET.SubElement(root, "rect", {"x": "0", "y": "0", "width": "100%", "height": "100%", "fill": "#ffffff"})
    if spec.title:
        attrs = {"x": _fmt(spec.width / 2), "y": str(PADDING), "text-anchor": "middle", "font-size": "14"}
        title = ET.SubElement(root, "text", attrs)
        title.text = spec.title
    ET.SubElement(
        root,
        "rect",
        {
            "x": str(left),
            "y": str(top),
            "width": str(plot_w),
            "height": str(plot_h),
            "fill": "none",
            "stroke": "#000000",
        },
    )

    points = ET.SubElement(root, "g", {"id": "points"})
    for i, (x, y) in enumerate(spec.points):
        cx = left + (x - xlo) / (xhi - xlo) * plot_w
        cy = top + (yhi - y) / (yhi - ylo) * plot_h
        label = spec.labels[i]
        circle = ET.SubElement(
            points,
            "circle",
            {
                "cx": _fmt(cx),
                "cy": _fmt(cy),
                "r": _fmt(spec.radius),
                "fill": palette[label] if label is not None else UNLABELED_COLOR,
            },
        )
        if spec.ids:
            ET.SubElement(circle, "title").text = spec.ids[i]

    if show_legend:
        legend = ET.SubElement(root, "g", {"id": "legend"})
        x0 = left + plot_w + PADDING
        for row, (label, color) in enumerate(palette.items()):
            y0 = top + row * 18
            swatch = {"x": str(x0), "y": str(y0), "width": "10", "height": "10", "fill": color}
            ET.SubElement(legend, "rect", swatch)
            text = ET.SubElement(legend, "text", {"x": str(x0 + 16), "y": str(y0 + 9), "font-size": "12"})
            text.text = label

    tree = ET.ElementTree(root)
    ET.indent(tree)
    try:
        tree.write(path, encoding="utf-8", xml_declaration=True)
    except OSError as e:
        raise InputError(f"Cannot write plot {path}: {e}") from e
    logging.getLogger("kernseq.plot").info("Wrote %d points to %s", spec.points.shape[0], path)


# ==========================================================================================
# ==========================================================================================
# eof
