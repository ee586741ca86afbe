"""Deterministic SVG export and matplotlib figure rendering.

The SVG writer is hand-rolled so that identical inputs produce
byte-identical files (snapshot-test friendly): fixed float formatting,
fixed element order, no timestamps. The PNG path goes through the Agg
backend and is for human eyes, not for diffing.
"""

from __future__ import annotations

import math

from .mesh import WeightedMesh

_F = "%.6f"  # every coordinate and style number goes through this


def _fmt(x: float) -> str:
    s = _F % (x + 0.0)  # +0.0 folds -0.0 into 0.0
    return s


def _face_fill(w: float, w_min: float, w_max: float) -> str:
    # light for cheap faces, dark slate for expensive ones
    if w_max <= w_min:
        t = 0.0
    else:
        t = (w - w_min) / (w_max - w_min)
    lo = (244, 247, 250)
    hi = (74, 103, 146)
    r, g, b = (round(a + t * (b_ - a)) for a, b_ in zip(lo, hi))
    return f"#{r:02x}{g:02x}{b:02x}"


class _View:
    """Map mesh coordinates into an SVG viewport (y flipped)."""

    def __init__(self, mesh: WeightedMesh, width: float, margin: float):
        xs = [p.x for p in mesh.vertices]
        ys = [p.y for p in mesh.vertices]
        self.x0, self.x1 = min(xs), max(xs)
        self.y0, self.y1 = min(ys), max(ys)
        span_x = max(self.x1 - self.x0, 1e-12)
        span_y = max(self.y1 - self.y0, 1e-12)
        self.scale = (width - 2 * margin) / span_x
        self.margin = margin
        self.width = width
        self.height = 2 * margin + span_y * self.scale

    def pt(self, p) -> tuple[float, float]:
        x = self.margin + (p[0] - self.x0) * self.scale
        y = self.height - self.margin - (p[1] - self.y0) * self.scale
        return x, y

    def xy(self, p) -> str:
        x, y = self.pt(p)
        return _fmt(x) + "," + _fmt(y)


def render_svg(
    mesh: WeightedMesh,
    path=None,
    rays=None,
    points=None,
    width: float = 720.0,
    margin: float = 24.0,
) -> str:
    """Render the mesh (faces shaded by weight), optional overlays, and
    an optional path polyline. Returns the SVG document as a string.

    rays: iterable of polylines drawn as thin overlay paths.
    points: iterable of (x, y) drawn as small markers.
    """
    view = _View(mesh, width, margin)
    w_min = min(f.weight for f in mesh.faces)
    w_max = max(f.weight for f in mesh.faces)
    out = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(
        '<svg xmlns="http://www.w3.org/2000/svg" width="%s" height="%s" '
        'viewBox="0 0 %s %s">' % (_fmt(view.width), _fmt(view.height),
                                  _fmt(view.width), _fmt(view.height))
    )
    for f in mesh.faces:
        pts = " ".join(view.xy(mesh.vertices[v]) for v in f.vertex_ids)
        out.append('<polygon points="%s" fill="%s" stroke="none"/>'
                   % (pts, _face_fill(f.weight, w_min, w_max)))
    for ei in range(len(mesh.edges)):
        a, b = mesh.edge_points(ei)
        xa, ya = view.pt(a)
        xb, yb = view.pt(b)
        out.append('<line x1="%s" y1="%s" x2="%s" y2="%s" '
                   'stroke="#30363c" stroke-width="1.0"/>'
                   % (_fmt(xa), _fmt(ya), _fmt(xb), _fmt(yb)))
    if rays:
        for poly in rays:
            if len(poly) < 2:
                continue
            d = "M " + " L ".join(view.xy(p) for p in poly)
            out.append('<path d="%s" fill="none" stroke="#e08020" '
                       'stroke-width="0.8" opacity="0.7"/>' % d)
    if path and len(path) >= 2:
        pts = " ".join(view.xy(p) for p in path)
        out.append('<polyline points="%s" fill="none" stroke="#c0182c" '
                   'stroke-width="2.2"/>' % pts)
    if points:
        for p in points:
            x, y = view.pt(p)
            out.append('<circle cx="%s" cy="%s" r="3.2" fill="#c0182c"/>'
                       % (_fmt(x), _fmt(y)))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_svg(path, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def render_figure(
    mesh: WeightedMesh,
    out_path,
    path=None,
    rays=None,
    points=None,
    title: str | None = None,
    dpi: int = 150,
) -> None:
    """Write a PNG (or any matplotlib-supported format) of the scene."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.collections import LineCollection, PolyCollection

    w_min = min(f.weight for f in mesh.faces)
    w_max = max(f.weight for f in mesh.faces)
    polys, shades = [], []
    for f in mesh.faces:
        polys.append([(mesh.vertices[v].x, mesh.vertices[v].y) for v in f.vertex_ids])
        t = 0.0 if w_max <= w_min else (f.weight - w_min) / (w_max - w_min)
        shades.append(t)

    fig, ax = plt.subplots(figsize=(7.2, 6.0))
    pc = PolyCollection(polys, array=shades, cmap="Blues", alpha=0.85,
                        edgecolors="none")
    pc.set_clim(0.0, 1.0)
    ax.add_collection(pc)
    segs = []
    for ei in range(len(mesh.edges)):
        a, b = mesh.edge_points(ei)
        segs.append([(a.x, a.y), (b.x, b.y)])
    ax.add_collection(LineCollection(segs, colors="#30363c", linewidths=0.7))
    if rays:
        for poly in rays:
            if len(poly) >= 2:
                ax.plot([p[0] for p in poly], [p[1] for p in poly],
                        color="#e08020", lw=0.8, alpha=0.7)
    if path and len(path) >= 2:
        ax.plot([p[0] for p in path], [p[1] for p in path],
                color="#c0182c", lw=2.0)
    if points:
        ax.plot([p[0] for p in points], [p[1] for p in points], "o",
                color="#c0182c", ms=5)
    ax.set_aspect("equal")
    ax.autoscale()
    if title:
        ax.set_title(title)
    fig.colorbar(pc, ax=ax, label="face weight (normalized)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=dpi)
    plt.close(fig)


def event_log_segments(log: list[dict]) -> list[list[tuple[float, float]]]:
    """Pull drawable front segments out of an engine event log."""
    segs = []
    for rec in log:
        lo, hi = rec.get("lo"), rec.get("hi")
        if lo is not None and hi is not None:
            segs.append([tuple(lo), tuple(hi)])
    return segs


def wavefront_snapshot(spmap) -> list[list[tuple[float, float]]]:
    """Front segments of all live coverage records, for overlay drawing."""
    segs = []
    for rec in spmap.records:
        if rec.live:
            segs.append([tuple(rec.p0), tuple(rec.p1)])
    return segs


def _ray_arrow(p, theta, t_hat, n_hat, length: float):
    # unit direction at signed angle theta from inward normal n_hat
    d = (
        n_hat[0] * math.cos(theta) + t_hat[0] * math.sin(theta),
        n_hat[1] * math.cos(theta) + t_hat[1] * math.sin(theta),
    )
    return [tuple(p), (p[0] + length * d[0], p[1] + length * d[1])]
