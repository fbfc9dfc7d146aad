"""Deterministic SVG rendering of a rollout.

Visual grammar follows the figure convention: operator mode means dashed red,
autonomy mode means solid black, robot path as a brown stroked polyline with an
arrowhead, obstacles as gray circles (light gray while occluded), regions as
translucent rectangles.  Output is byte-stable for a given (trace, spec).
"""

from __future__ import annotations

from .errors import CodedError

SVG_SIZE = 640
MARGIN = 40


def _fmt(x: float) -> str:
    return f"{x:.2f}"


class _Frame:
    """World-to-screen transform derived from the scenario bounds."""

    def __init__(self, bounds):
        xmin, ymin, xmax, ymax = bounds
        span = max(xmax - xmin, ymax - ymin, 1e-9)
        self.scale = (SVG_SIZE - 2 * MARGIN) / span
        self.xmin, self.ymin, self.ymax = xmin, ymin, ymax

    def pt(self, p):
        x = MARGIN + (float(p[0]) - self.xmin) * self.scale
        # flip y so +y is up
        y = MARGIN + (self.ymax - float(p[1])) * self.scale
        return _fmt(x), _fmt(y)

    def poly(self, pts):
        return " ".join(",".join(self.pt(p)) for p in pts)


def render_svg(trace, spec) -> str:
    """Render one trace to a standalone SVG document (deterministic bytes)."""
    if not trace.records:
        raise CodedError("empty-trace", "nothing to render")
    f = _Frame(spec.world.bounds)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" '
        f'viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">',
        f'<rect width="{SVG_SIZE}" height="{SVG_SIZE}" fill="white"/>',
        f"<!-- scenario {spec.sid}; controller {trace.records[0].controller} -->",
    ]

    for name, rect in spec.world.regions:
        x0, y0 = f.pt((rect[0], rect[3]))
        x1, y1 = f.pt((rect[2], rect[1]))
        w = _fmt(float(x1) - float(x0))
        h = _fmt(float(y1) - float(y0))
        parts.append(
            f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="#4488cc" '
            f'fill-opacity="0.15" stroke="#4488cc" stroke-dasharray="2,2">'
            f"<title>{name}</title></rect>"
        )

    last = trace.records[-1]
    obstacle_now = {oid: (pos, vis) for oid, pos, vis in last.obstacle_positions}
    for o in spec.world.obstacles:
        pos, vis = obstacle_now.get(o.oid, (o.position, True))
        cx, cy = f.pt(pos)
        r = _fmt(o.radius * f.scale)
        fill = "#888888" if vis else "#dddddd"
        parts.append(f'<circle cx="{cx}" cy="{cy}" r="{r}" fill="{fill}">'
                     f"<title>{o.oid}</title></circle>")

    # mode means from the first record that has them (the initial belief)
    summary = {}
    for rec in trace.records:
        if rec.mode_summary:
            summary = rec.mode_summary
            break
    for label, weight, pts in summary.get("autonomy", []):
        if len(pts) >= 2:
            parts.append(
                f'<polyline points="{f.poly(pts)}" fill="none" stroke="black" '
                f'stroke-width="1.5" stroke-opacity="{_fmt(max(weight, 0.15))}">'
                f"<title>autonomy:{label}</title></polyline>"
            )
    for label, weight, pts in summary.get("operator", []):
        if len(pts) >= 2:
            parts.append(
                f'<polyline points="{f.poly(pts)}" fill="none" stroke="red" '
                f'stroke-width="1.5" stroke-dasharray="6,4" '
                f'stroke-opacity="{_fmt(max(weight, 0.15))}">'
                f"<title>operator:{label}</title></polyline>"
            )

    path = [r.robot_position for r in trace.records]
    parts.append(f'<polyline points="{f.poly(path)}" fill="none" stroke="#8b4513" '
                 'stroke-width="2.5"/>')
    if len(path) >= 2:
        (x0, y0), (x1, y1) = f.pt(path[-2]), f.pt(path[-1])
        parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="#8b4513" '
                     'stroke-width="2.5" marker-end="url(#arrow)"/>')
        parts.insert(1, (
            '<defs><marker id="arrow" viewBox="0 0 10 10" refX="8" refY="5" '
            'markerWidth="6" markerHeight="6" orient="auto-start-reverse">'
            '<path d="M 0 0 L 10 5 L 0 10 z" fill="#8b4513"/></marker></defs>'
        ))

    gx, gy = f.pt(spec.world.goal)
    parts.append(f'<circle cx="{gx}" cy="{gy}" r="{_fmt(spec.goal_radius * f.scale)}" '
                 'fill="none" stroke="green" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
