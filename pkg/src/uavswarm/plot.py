"""Static SVG rendering of trajectory logs (no plotting library needed)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .engine import TrajectoryLog

WIDTH, HEIGHT = 800, 600
MARGIN = 60
PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]
ISO = math.radians(30.0)


class _Canvas:
    """Maps data coordinates into the plotting frame (y axis up)."""

    def __init__(self, xlim, ylim, equal=False):
        x0, x1 = xlim
        y0, y1 = ylim
        if x1 - x0 <= 0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 - y0 <= 0:
            y0, y1 = y0 - 1, y1 + 1
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        w, h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
        sx, sy = w / (x1 - x0), h / (y1 - y0)
        if equal:
            sx = sy = min(sx, sy)
        self.sx, self.sy = sx, sy
        self.parts: list[str] = []

    def X(self, x):
        return MARGIN + (np.asarray(x) - self.x0) * self.sx

    def Y(self, y):
        return HEIGHT - MARGIN - (np.asarray(y) - self.y0) * self.sy

    def polyline(self, xs, ys, color, cls="curve", extra=""):
        if len(xs) == 0:
            return
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(self.X(xs), self.Y(ys)))
        self.parts.append(f'<polyline class="{cls}" points="{pts}" fill="none" '
                          f'stroke="{color}" stroke-width="1.2"{extra}/>')

    def circle(self, x, y, r, cls="obstacle"):
        self.parts.append(f'<circle class="{cls}" cx="{float(self.X(x)):.2f}" cy="{float(self.Y(y)):.2f}" '
                          f'r="{r * self.sx:.2f}" fill="#999" fill-opacity="0.4" stroke="#333"/>')

    def rect(self, x0, y0, x1, y1, cls="building"):
        X0, X1 = sorted((float(self.X(x0)), float(self.X(x1))))
        Y0, Y1 = sorted((float(self.Y(y0)), float(self.Y(y1))))
        self.parts.append(f'<rect class="{cls}" x="{X0:.2f}" y="{Y0:.2f}" width="{X1 - X0:.2f}" '
                          f'height="{Y1 - Y0:.2f}" fill="#c8a27a" fill-opacity="0.5" stroke="#6b4f2f"/>')

    def hline(self, y, cls, dashed=True):
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        Y = float(self.Y(y))
        self.parts.append(f'<line class="{cls}" x1="{MARGIN}" y1="{Y:.2f}" x2="{WIDTH - MARGIN}" '
                          f'y2="{Y:.2f}" stroke="#000"{dash}/>')

    def render(self, title, xlabel, ylabel) -> str:
        bottom, right = HEIGHT - MARGIN, WIDTH - MARGIN
        axes = [
            f'<line class="axis" x1="{MARGIN}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#000"/>',
            f'<line class="axis" x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{bottom}" stroke="#000"/>',
        ]
        for v in np.linspace(self.x0, self.x1, 6):
            X = float(self.X(v))
            if MARGIN - 1e-6 <= X <= right + 1e-6:
                axes.append(f'<text x="{X:.1f}" y="{bottom + 18}" font-size="11" text-anchor="middle">{v:.3g}</text>')
        for v in np.linspace(self.y0, self.y1, 6):
            Y = float(self.Y(v))
            if MARGIN - 1e-6 <= Y <= bottom + 1e-6:
                axes.append(f'<text x="{MARGIN - 6}" y="{Y + 4:.1f}" font-size="11" text-anchor="end">{v:.3g}</text>')
        axes.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 15}" font-size="13" text-anchor="middle">{escape(xlabel)}</text>')
        axes.append(f'<text x="15" y="{HEIGHT / 2}" font-size="13" text-anchor="middle" '
                    f'transform="rotate(-90 15 {HEIGHT / 2})">{escape(ylabel)}</text>')
        axes.append(f'<text x="{WIDTH / 2}" y="25" font-size="15" text-anchor="middle">{escape(title)}</text>')
        body = "\n".join(axes + self.parts)
        return (f'<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
                f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
                f'{body}\n</svg>\n')


def _limits(*arrays, pad=0.05):
    vals = np.concatenate([np.ravel(a) for a in arrays if np.size(a)]) if any(np.size(a) for a in arrays) else np.zeros(0)
    if vals.size == 0:
        return (0.0, 1.0)
    lo, hi = float(vals.min()), float(vals.max())
    span = hi - lo or 1.0
    return lo - pad * span, hi + pad * span


def isometric(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Isometric screen coordinates of ``(..., 3)`` points."""
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    return (x - y) * math.cos(ISO), (x + y) * math.sin(ISO) + z


def top_view(log: TrajectoryLog, obstacles=(), buildings=()) -> str:
    """``obstacles``: (trajectory (k, 3), radius) pairs; ``buildings``: (lo, hi) pairs."""
    xs = [log.p[..., 0]] + [o[0][:, 0] for o in obstacles] + [np.array([b[0][0], b[1][0]]) for b in buildings]
    ys = [log.p[..., 1]] + [o[0][:, 1] for o in obstacles]
    c = _Canvas(_limits(*xs), _limits(*ys), equal=True)
    for lo, hi in buildings:
        c.rect(lo[0], lo[1], hi[0], hi[1])
    for path, radius in obstacles:
        c.circle(path[0, 0], path[0, 1], radius)
        if np.ptp(path[:, :2], axis=0).max() > 0:
            c.polyline(path[:, 0], path[:, 1], "#555", cls="obstacle-path", extra=' stroke-dasharray="3,3"')
            c.circle(path[-1, 0], path[-1, 1], radius, cls="obstacle-final")
    for i in range(log.n_agents if log.p.size else 0):
        c.polyline(log.p[:, i, 0], log.p[:, i, 1], PALETTE[i % len(PALETTE)])
    return c.render("Trajectories (top view)", "x [m]", "y [m]")


def projection_view(log: TrajectoryLog, obstacles=()) -> str:
    sx, sy = isometric(log.p) if log.p.size else (np.zeros(0), np.zeros(0))
    c = _Canvas(_limits(sx), _limits(sy), equal=True)
    for path, radius in obstacles:
        ox, oy = isometric(path[:1])
        c.circle(ox[0], oy[0], radius)
    for i in range(log.n_agents if log.p.size else 0):
        c.polyline(sx[:, i], sy[:, i], PALETTE[i % len(PALETTE)])
    return c.render("Trajectories (isometric projection)", "", "")


def separation_view(log: TrajectoryLog, agent: int = 0, r_s: float = 1.0) -> str:
    """Distance from ``agent`` to every other agent over time, safety range dashed."""
    if log.p.size:
        d = np.linalg.norm(log.p - log.p[:, agent:agent + 1, :], axis=2)
        others = [j for j in range(log.n_agents) if j != agent]
    else:
        d, others = np.zeros((0, 0)), []
    ylim = _limits(d[:, others] if others else np.zeros(0), np.array([0.0, r_s]))
    c = _Canvas(_limits(log.t), (0.0, ylim[1]))
    c.hline(r_s, "safety-line")
    for j in others:
        c.polyline(log.t, d[:, j], PALETTE[j % len(PALETTE)], extra=f' data-pair="{agent}-{j}"')
    return c.render(f"Relative distance to agent {agent}", "t [s]", "|d_ij| [m]")
