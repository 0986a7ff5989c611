"""Static SVG of accuracy curves with confidence bands."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .bench import CurvePoint

WIDTH, HEIGHT = 640, 420
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 150, 30, 60

COLORS = {"spectral": "#d62728", "l1spectral": "#1f77b4"}
LABELS = {"spectral": "spectral", "l1spectral": "l1-spectral"}
_FALLBACK = ("#2ca02c", "#9467bd", "#8c564b", "#ff7f0e")


class Axes:
    """Maps data coordinates (p, fraction) to SVG pixels; y spans [0, 1]."""

    def __init__(self, x_min: float, x_max: float):
        if x_max <= x_min:
            x_min, x_max = x_min - 0.05, x_max + 0.05
        self.x_min, self.x_max = x_min, x_max
        self.left = MARGIN_LEFT
        self.right = WIDTH - MARGIN_RIGHT
        self.top = MARGIN_TOP
        self.bottom = HEIGHT - MARGIN_BOTTOM

    def x(self, p: float) -> float:
        return self.left + (p - self.x_min) / (self.x_max - self.x_min) * (self.right - self.left)

    def y(self, frac: float) -> float:
        return self.bottom - frac * (self.bottom - self.top)


def _pts(coords) -> str:
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in coords)


def render_curves_svg(points: list[CurvePoint], title: str = "") -> str:
    if not points:
        raise ValueError("nothing to plot")
    algos = list(dict.fromkeys(c.algorithm for c in points))
    ax = Axes(min(c.p for c in points), max(c.p for c in points))
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle">{escape(title)}</text>')

    # axes, ticks and grid
    out.append(f'<g class="axes" stroke="black" stroke-width="1">'
               f'<line x1="{ax.left}" y1="{ax.bottom}" x2="{ax.right}" y2="{ax.bottom}"/>'
               f'<line x1="{ax.left}" y1="{ax.top}" x2="{ax.left}" y2="{ax.bottom}"/></g>')
    ticks = ['<g class="ticks">']
    for i in range(6):
        frac = i / 5
        y = ax.y(frac)
        ticks.append(f'<line x1="{ax.left}" y1="{y:.2f}" x2="{ax.right}" y2="{y:.2f}" '
                     f'stroke="#dddddd"/>')
        ticks.append(f'<text x="{ax.left - 8}" y="{y + 4:.2f}" text-anchor="end">{frac:.1f}</text>')
    xs = sorted({c.p for c in points})
    for p in xs:
        x = ax.x(p)
        ticks.append(f'<line x1="{x:.2f}" y1="{ax.bottom}" x2="{x:.2f}" y2="{ax.bottom + 5}" '
                     f'stroke="black"/>')
        ticks.append(f'<text x="{x:.2f}" y="{ax.bottom + 18}" text-anchor="middle">{p:g}</text>')
    ticks.append('</g>')
    out.extend(ticks)
    out.append(f'<text x="{(ax.left + ax.right) / 2:.1f}" y="{HEIGHT - 15}" '
               f'text-anchor="middle">perturbation p</text>')
    out.append(f'<text transform="translate(18,{(ax.top + ax.bottom) / 2:.1f}) rotate(-90)" '
               f'text-anchor="middle">fraction correctly classified</text>')

    for i, algo in enumerate(algos):
        color = COLORS.get(algo, _FALLBACK[i % len(_FALLBACK)])
        curve = sorted((c for c in points if c.algorithm == algo), key=lambda c: c.p)
        upper = [(ax.x(c.p), ax.y(c.ci95_high)) for c in curve]
        lower = [(ax.x(c.p), ax.y(c.ci95_low)) for c in reversed(curve)]
        out.append(f'<polygon class="band" data-algorithm="{escape(algo)}" '
                   f'points="{_pts(upper + lower)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = [(ax.x(c.p), ax.y(c.mean_correct)) for c in curve]
        out.append(f'<polyline class="mean" data-algorithm="{escape(algo)}" '
                   f'points="{_pts(line)}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = ax.top + 20 + 22 * i
        out.append(f'<line x1="{ax.right + 15}" y1="{ly}" x2="{ax.right + 40}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ax.right + 46}" y="{ly + 4}">'
                   f'{escape(LABELS.get(algo, algo))}</text>')
    out.append('</svg>')
    return "\n".join(out) + "\n"
