"""Delimited and graphical output for CLI results.

CSV files are written with a fixed numeric format so identical inputs give
byte-identical files.  SVG rendering is purely presentational: the locus is
drawn as a point cloud, geodesics as polylines, and for heis3 a z = const
slice is selected before projecting to the (x, y) plane.
"""

from __future__ import annotations

from fractions import Fraction

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

# fixed hash salt so SVG ids do not depend on the process
matplotlib.rcParams["svg.hashsalt"] = "arskit"


def format_number(v) -> str:
    """Stable text form: Fractions as p/q, floats via repr, ints plain."""
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return repr(float(v) + 0.0)  # normalizes -0.0


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _slice_points(points, z_value, thickness):
    """Keep (x, y) of the points with |z - z_value| <= thickness."""
    kept = []
    for p in points:
        if abs(float(p[2]) - z_value) <= thickness:
            kept.append((float(p[0]), float(p[1])))
    return kept


def render_locus_svg(path, points, dim: int, box, z_slice: float = 0.0,
                     resolution: int = 64) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    if dim == 3:
        thickness = (box[0][1] - box[0][0]) / resolution
        xy = _slice_points(points, z_slice, thickness)
        title = f"singular locus, slice z = {z_slice:g}"
    else:
        xy = [(float(p[0]), float(p[1])) for p in points]
        title = "singular locus"
    if xy:
        ax.scatter([p[0] for p in xy], [p[1] for p in xy], s=4)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title)
    ax.set_xlim(box[0])
    ax.set_ylim(box[1])
    ax.set_aspect("equal")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_geodesic_svg(path, trace, dim: int) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    xs = [float(g.coords[0]) for g in trace.points]
    ys = [float(g.coords[1]) for g in trace.points]
    ax.plot(xs, ys, lw=1.2)
    ax.scatter([xs[0]], [ys[0]], marker="o", s=20, label="start")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    title = "geodesic projection (x, y)" if dim == 3 else "geodesic"
    ax.set_title(title)
    ax.legend(loc="best")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
