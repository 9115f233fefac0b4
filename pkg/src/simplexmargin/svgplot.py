"""Tiny SVG line-plot writer: panels with linear or log axes, polylines, markers, legends.

Enough for the experiment figures; it makes no attempt at typographic finesse.
"""

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    ticks, t = [], start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:g}"


class Panel:
    """One set of axes. ``box`` is (x, y, width, height) in figure pixels."""

    def __init__(self, box, title="", xlabel="", ylabel="", xlog=False, ylog=False):
        self.box = box
        self.title = title
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.xlog = xlog
        self.ylog = ylog
        self.series = []

    def line(self, xs, ys, label=None, color=None, marker=False, dashed=False):
        color = color or PALETTE[len(self.series) % len(PALETTE)]
        pts = [(float(x), float(y)) for x, y in zip(xs, ys)
               if math.isfinite(x) and math.isfinite(y)
               and (not self.xlog or x > 0) and (not self.ylog or y > 0)]
        self.series.append(dict(points=pts, label=label, color=color, marker=marker, dashed=dashed))
        return self

    def _tx(self, v, log):
        return math.log10(v) if log else v

    def _limits(self):
        pts = [p for s in self.series for p in s["points"]]
        if not pts:
            return (0, 1), (0, 1)
        xs = [self._tx(x, self.xlog) for x, _ in pts]
        ys = [self._tx(y, self.ylog) for _, y in pts]
        lims = []
        for lo, hi in ((min(xs), max(xs)), (min(ys), max(ys))):
            if hi - lo < 1e-12:
                lo, hi = lo - 0.5, hi + 0.5
            pad = 0.05 * (hi - lo)
            lims.append((lo - pad, hi + pad))
        return lims

    def render(self):
        x0, y0, w, h = self.box
        (xa, xb), (ya, yb) = self._limits()

        def px(x):
            return x0 + (self._tx(x, self.xlog) - xa) / (xb - xa) * w

        def py(y):
            return y0 + h - (self._tx(y, self.ylog) - ya) / (yb - ya) * h

        out = [f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="white" stroke="black"/>']
        for axis, (lo, hi), log in (("x", (xa, xb), self.xlog), ("y", (ya, yb), self.ylog)):
            if log:
                ticks = [10.0 ** k for k in range(math.ceil(lo), math.floor(hi) + 1)]
            else:
                ticks = _nice_ticks(lo, hi)
            for t in ticks:
                if axis == "x":
                    X = px(t)
                    out.append(f'<line x1="{X:.1f}" y1="{y0 + h}" x2="{X:.1f}" y2="{y0 + h + 4}" stroke="black"/>')
                    out.append(f'<text x="{X:.1f}" y="{y0 + h + 16}" font-size="10" text-anchor="middle">{_fmt(t)}</text>')
                else:
                    Y = py(t)
                    out.append(f'<line x1="{x0 - 4}" y1="{Y:.1f}" x2="{x0}" y2="{Y:.1f}" stroke="black"/>')
                    out.append(f'<text x="{x0 - 6}" y="{Y + 3:.1f}" font-size="10" text-anchor="end">{_fmt(t)}</text>')
        if self.title:
            out.append(f'<text x="{x0 + w / 2}" y="{y0 - 6}" font-size="12" text-anchor="middle">{escape(self.title)}</text>')
        if self.xlabel:
            out.append(f'<text x="{x0 + w / 2}" y="{y0 + h + 30}" font-size="11" text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            cx, cy = x0 - 40, y0 + h / 2
            out.append(f'<text x="{cx}" y="{cy}" font-size="11" text-anchor="middle" '
                       f'transform="rotate(-90 {cx} {cy})">{escape(self.ylabel)}</text>')
        for s in self.series:
            if not s["points"]:
                continue
            coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in s["points"])
            dash = ' stroke-dasharray="5,3"' if s["dashed"] else ""
            out.append(f'<polyline points="{coords}" fill="none" stroke="{s["color"]}" stroke-width="1.5"{dash}/>')
            if s["marker"]:
                for x, y in s["points"]:
                    out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" fill="{s["color"]}"/>')
        labelled = [s for s in self.series if s["label"]]
        for i, s in enumerate(labelled):
            ly = y0 + 12 + 14 * i
            out.append(f'<line x1="{x0 + w - 90}" y1="{ly}" x2="{x0 + w - 72}" y2="{ly}" stroke="{s["color"]}" stroke-width="2"/>')
            out.append(f'<text x="{x0 + w - 68}" y="{ly + 4}" font-size="10">{escape(s["label"])}</text>')
        return out


class Figure:
    def __init__(self, width=640, height=480):
        self.width = width
        self.height = height
        self.panels = []

    def panel(self, box, **kw):
        p = Panel(box, **kw)
        self.panels.append(p)
        return p

    def grid(self, rows, cols, margin=(60, 30, 50, 20), gap=(60, 50), **kw):
        """Regular layout; ``margin`` is (left, top, bottom, right), returns panels row-major."""
        left, top, bottom, right = margin
        gx, gy = gap
        w = (self.width - left - right - gx * (cols - 1)) / cols
        h = (self.height - top - bottom - gy * (rows - 1)) / rows
        return [self.panel((left + c * (w + gx), top + r * (h + gy), w, h), **kw)
                for r in range(rows) for c in range(cols)]

    def to_svg(self):
        body = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
                f'font-family="sans-serif">', f'<rect width="100%" height="100%" fill="white"/>']
        for p in self.panels:
            body.extend(p.render())
        body.append("</svg>")
        return "\n".join(body) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_svg())
