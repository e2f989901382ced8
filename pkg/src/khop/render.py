"""SVG drawings of instances, trees and shifted dissections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional
from xml.sax.saxutils import quoteattr

from .dissection import Shift, build_dissection, portal_positions
from .geom_instance import NormalizedInstance
from .reference_solvers import HopTree

MIN_CANVAS = 64


@dataclass(frozen=True)
class RenderSpec:
    instance: NormalizedInstance
    tree: Optional[HopTree] = None
    shift: Optional[Shift] = None
    m: int = 2
    size: int = 512
    point_radius: float = 4.0
    edge_stroke: str = "#1f4e79"
    cut_stroke: str = "#bbbbbb"
    portal_fill: str = "#d98c00"

    def __post_init__(self):
        if self.size < MIN_CANVAS:
            raise ValueError(f"canvas must be at least {MIN_CANVAS}px, got {self.size}")
        if self.shift is not None:
            self.shift.check(self.instance.L)
        if self.tree is not None and self.tree.n != self.instance.n:
            raise ValueError("tree and instance disagree on the number of points")


def dissection_segments(inst: NormalizedInstance, shift: Shift) -> list[tuple[float, float, float, float]]:
    """Cut segments of every subdivided box, clipped to the bounding square [0, L]^2."""
    L = inst.L
    segs = set()
    for box in build_dissection(inst, shift).walk():
        if box.is_leaf:
            continue
        ox, oy = box.origin
        h = box.side // 2
        for x0, y0, x1, y1 in ((ox + h, oy, ox + h, oy + box.side), (ox, oy + h, ox + box.side, oy + h)):
            cx0, cx1 = max(min(x0, x1), 0), min(max(x0, x1), L)
            cy0, cy1 = max(min(y0, y1), 0), min(max(y0, y1), L)
            if x0 == x1 and 0 < x0 < L and cy0 < cy1:
                segs.add((x0, cy0, x0, cy1))
            elif y0 == y1 and 0 < y0 < L and cx0 < cx1:
                segs.add((cx0, y0, cx1, y0))
    return sorted(segs)


def portal_points(inst: NormalizedInstance, shift: Shift, m: int) -> list[tuple[float, float]]:
    L = inst.L
    out = set()
    for box in build_dissection(inst, shift).walk():
        for x, y in portal_positions(box, m):
            if 0 <= x <= L and 0 <= y <= L:
                out.add((round(float(x), 6), round(float(y), 6)))
    return sorted(out)


def render_svg(spec: RenderSpec) -> str:
    inst = spec.instance
    pad = spec.point_radius * 3
    unit = (spec.size - 2 * pad) / inst.L

    def px(x: float, y: float) -> tuple[str, str]:
        return f"{pad + x * unit:.3f}", f"{spec.size - pad - y * unit:.3f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.size}" height="{spec.size}" '
        f'viewBox="0 0 {spec.size} {spec.size}">',
        f'<rect class="frame" x="0" y="0" width="{spec.size}" height="{spec.size}" fill="white"/>',
    ]
    x0, y0 = px(0, inst.L)
    out.append(f'<rect class="bbox" x="{x0}" y="{y0}" width="{inst.L * unit:.3f}" '
               f'height="{inst.L * unit:.3f}" fill="none" stroke="#666666"/>')
    if spec.shift is not None:
        for a, b, c, d in dissection_segments(inst, spec.shift):
            (sx, sy), (tx, ty) = px(a, b), px(c, d)
            out.append(f'<line class="cut" x1="{sx}" y1="{sy}" x2="{tx}" y2="{ty}" '
                       f'stroke={quoteattr(spec.cut_stroke)} stroke-width="1"/>')
        for x, y in portal_points(inst, spec.shift, spec.m):
            cx, cy = px(x, y)
            out.append(f'<rect class="portal" x="{float(cx) - 1.5:.3f}" y="{float(cy) - 1.5:.3f}" '
                       f'width="3" height="3" fill={quoteattr(spec.portal_fill)}/>')
    pts = inst.grid_points
    if spec.tree is not None:
        for p, v in spec.tree.edges:
            (sx, sy), (tx, ty) = px(*pts[p]), px(*pts[v])
            out.append(f'<line class="edge" x1="{sx}" y1="{sy}" x2="{tx}" y2="{ty}" '
                       f'stroke={quoteattr(spec.edge_stroke)} stroke-width="1.5"/>')
    for i, (x, y) in enumerate(pts):
        cx, cy = px(x, y)
        if i == inst.root_index:
            out.append(f'<circle class="point root" cx="{cx}" cy="{cy}" '
                       f'r="{spec.point_radius * 1.5}" fill="#c0392b"/>')
        else:
            out.append(f'<circle class="point" cx="{cx}" cy="{cy}" r="{spec.point_radius}" '
                       f'fill="#222222"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
