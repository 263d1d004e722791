"""Deterministic SVG rendering of a world and a planner result."""

from __future__ import annotations

import math
from typing import Sequence

from .gridmap import GridWorld

CELL = 4


def _fmt(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def _xy(p: Sequence[float]) -> tuple[float, float]:
    return (p[0] + 0.5) * CELL, (p[1] + 0.5) * CELL


def _polyline(points, color: str, width: float, opacity: float = 1.0) -> str:
    if len(points) < 2:
        return ""
    coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in map(_xy, points))
    return (
        f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{_fmt(width)}" '
        f'stroke-opacity="{_fmt(opacity)}" stroke-linejoin="round" stroke-linecap="round"/>'
    )


def _star(p, r: float) -> str:
    cx, cy = _xy(p)
    pts = []
    for k in range(10):
        rad = r if k % 2 == 0 else r * 0.45
        a = -math.pi / 2 + k * math.pi / 5
        pts.append(f"{_fmt(cx + rad * math.cos(a))},{_fmt(cy + rad * math.sin(a))}")
    return f'<polygon points="{" ".join(pts)}" fill="red"/>'


def _triangle(p, r: float) -> str:
    cx, cy = _xy(p)
    pts = [(cx, cy - r), (cx - r * 0.87, cy + r * 0.5), (cx + r * 0.87, cy + r * 0.5)]
    return f'<polygon points="{" ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)}" fill="red"/>'


def _obstacles(world: GridWorld) -> list[str]:
    out = []
    for y, row in enumerate(world.free_mask):
        x = 0
        w = len(row)
        while x < w:
            if row[x]:
                x += 1
                continue
            x0 = x
            while x < w and not row[x]:
                x += 1
            out.append(f'<rect x="{x0 * CELL}" y="{y * CELL}" width="{(x - x0) * CELL}" height="{CELL}" fill="#808080"/>')
    return out


def render_svg(world: GridWorld, result: dict | None = None) -> str:
    """SVG of the map with base, goals, tethers and path taken from a result dictionary.

    Uses only JSON-serializable fields so a reloaded result file renders to
    the same bytes.
    """
    width, height = world.width * CELL, world.height * CELL
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    parts.extend(_obstacles(world))
    result = result or {}
    for tether in result.get("tethers", []):
        parts.append(_polyline(tether, "#909090", CELL * 0.4))
    path = result.get("path") or []
    parts.append(_polyline(path, "blue", CELL * 0.5))
    r = CELL * 1.6
    for g in result.get("goals", []):
        parts.append(_star(g, r))
    if result.get("base") is not None:
        parts.append(_triangle(result["base"], r))
    parts.append("</svg>")
    return "\n".join(p for p in parts if p) + "\n"
