"""Render scheduling-metrics CSVs as figures.

Two figure kinds are supported: per-method MSE-versus-time curves with dashed
average lines, and node maps coloured by absolute error with the active subset
circled.  Inputs are the documented CSV schemas only; nothing here imports the
library that produced them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class SchemaError(ValueError):
    """An input CSV does not match the documented schema."""


@dataclass
class PlotSpec:
    """What to draw and where to put it."""

    kind: str
    out_path: str
    inputs: dict = field(default_factory=dict)
    mark_every: int | None = None
    subset_id: int | None = None
    figsize: tuple[float, float] = (8.0, 4.5)
    dpi: int = 100

    def __post_init__(self):
        if self.kind not in ("timeseries", "node-map"):
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        for name, path in self.inputs.items():
            if not Path(path).exists():
                raise SchemaError(f"{name} file not found: {path}")


def _read_csv(path, expected_header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != expected_header:
            raise SchemaError(f"{path}: expected columns {expected_header}, "
                              f"got {header}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def plot_timeseries(spec: PlotSpec) -> str:
    """MSE-versus-time curves, one per method, with dashed average lines.

    Expects a ``t,method,mse_db`` CSV.  Vertical dashed markers are drawn at
    multiples of ``mark_every`` when given (the re-partitioning instants).
    """
    rows = _read_csv(spec.inputs["metrics"], ["t", "method", "mse_db"])
    series: dict[str, list[tuple[int, float]]] = {}
    for t_str, method, mse_str in rows:
        series.setdefault(method, []).append((int(t_str), float(mse_str)))

    fig, ax = plt.subplots(figsize=spec.figsize, dpi=spec.dpi)
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    t_max = 0
    for i, (method, points) in enumerate(sorted(series.items())):
        points.sort()
        ts = [p[0] for p in points]
        vals = [p[1] for p in points]
        t_max = max(t_max, max(ts))
        color = colors[i % len(colors)]
        ax.plot(ts, vals, label=method, color=color, marker="o", markersize=2.5)
        ax.axhline(float(np.mean(vals)), color=color, linestyle="--",
                   linewidth=1.0, alpha=0.8)
    if spec.mark_every:
        for t in range(spec.mark_every, t_max + 1, spec.mark_every):
            ax.axvline(t, color="gray", linestyle="--", linewidth=0.8, alpha=0.6)
    ax.set_xlabel("time step")
    ax.set_ylabel("MSE [dB]")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)
    return spec.out_path


def plot_node_map(spec: PlotSpec) -> str:
    """Scatter of node positions coloured by absolute error.

    Expects ``node,x,y`` coordinates, ``node,abs_error`` values, and a
    ``subset_id,node_id`` partition; the nodes of ``subset_id`` are circled.
    """
    coords_rows = _read_csv(spec.inputs["coords"], ["node", "x", "y"])
    error_rows = _read_csv(spec.inputs["errors"], ["node", "abs_error"])
    part_rows = _read_csv(spec.inputs["partition"], ["subset_id", "node_id"])

    n = len(coords_rows)
    if len(error_rows) != n:
        raise SchemaError("coords and errors describe different node counts")
    xy = np.zeros((n, 2))
    for node, x, y in coords_rows:
        xy[int(node)] = (float(x), float(y))
    err = np.zeros(n)
    for node, e in error_rows:
        err[int(node)] = float(e)
    subset_nodes = [int(node) for sid, node in part_rows
                    if spec.subset_id is None or int(sid) == spec.subset_id]
    if not subset_nodes:
        raise SchemaError(f"partition has no nodes for subset {spec.subset_id}")
    if max(int(node) for _sid, node in part_rows) >= n:
        raise SchemaError("partition references unknown nodes")

    fig, ax = plt.subplots(figsize=(spec.figsize[0], spec.figsize[0] * 0.8),
                           dpi=spec.dpi)
    sc = ax.scatter(xy[:, 0], xy[:, 1], c=err, cmap="viridis", s=26)
    ax.scatter(xy[subset_nodes, 0], xy[subset_nodes, 1], facecolors="none",
               edgecolors="red", s=120, linewidths=1.4, label="sampled")
    fig.colorbar(sc, ax=ax, label="|error|")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)
    return spec.out_path


def png_dimensions(path) -> tuple[int, int]:
    """Width and height from a PNG header, for golden-size checks."""
    import struct

    with open(path, "rb") as fh:
        header = fh.read(24)
    if header[:8] != b"\x89PNG\r\n\x1a\n":
        raise SchemaError(f"{path} is not a PNG file")
    width, height = struct.unpack(">II", header[16:24])
    return int(width), int(height)
