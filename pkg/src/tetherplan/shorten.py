"""Untethered path shortening (UPS) in a grid environment.

Blocked cells of a mask are modelled as open 2x2 squares centered on the
cell centers, so a straight move between two free cell centers is allowed
iff it stays at Chebyshev distance >= 1 from every blocked center. The
boundary of that blocked region only bends at lattice points, and the taut
curve of a homotopy class (unique in a planar domain) bends only at free
lattice points next to a blocked quadrant. Everything below is exact integer geometry.

A clear move also passes the Bresenham ``segment_free`` test, so every
shortcut accepted here is a free Bresenham segment as well.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from typing import Sequence

import numpy as np

from .curve import Point, Polyline, normalize
from .gridmap import CFREE_MASK, GridWorld
from .homotopy import CurveCollisionError

_DIAGONALS = ((1, 1), (1, -1), (-1, 1), (-1, -1))
SMALL_WINDOW = 96
NARROW_BOX = 64
KEY_STRIDE = 1 << 20


class ShorteningError(RuntimeError):
    pass


def blocked_padded(world: GridWorld, mask: str) -> np.ndarray:
    """Blocked cells with a one-cell ring of out-of-bounds obstacle; ``[y + 1, x + 1]``."""
    key = ("blocked", mask)
    hit = world._cache.get(key)
    if hit is None:
        hit = np.pad(~world.mask(mask), 1, constant_values=True)
        hit.setflags(write=False)
        world._cache[key] = hit
    return hit


def corner_table(world: GridWorld, mask: str) -> np.ndarray:
    """Rows ``(x, y, dx, dy, key)``: free lattice point whose quadrant towards ``(dx, dy)`` is blocked nearby.

    A quadrant is blocked when the diagonal cell or either orthogonal cell on
    that side is blocked. Rows are sorted by ``key = x * KEY_STRIDE + y`` so a
    bounding box is one slice per column.
    """
    key = ("corners", mask)
    hit = world._cache.get(key)
    if hit is not None:
        return hit
    bp = blocked_padded(world, mask)
    h, w = world.height, world.width

    def at(dx: int, dy: int) -> np.ndarray:
        return bp[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    free = ~at(0, 0)
    rows = []
    for dx, dy in _DIAGONALS:
        quad = free & (at(dx, dy) | at(dx, 0) | at(0, dy))
        ys, xs = np.nonzero(quad)
        rows.append(np.stack([xs, ys, np.full_like(xs, dx), np.full_like(ys, dy), xs * KEY_STRIDE + ys], axis=1))
    table = np.concatenate(rows).astype(np.int64)
    table = table[np.lexsort((table[:, 3], table[:, 2], table[:, 1], table[:, 0]))]
    table.setflags(write=False)
    world._cache[key] = table
    return table


def segment_clear(world: GridWorld, a: Point, b: Point, mask: str = CFREE_MASK) -> bool:
    """True iff the segment keeps Chebyshev distance >= 1 from every blocked cell center."""
    if not (world.is_free(a, mask) and world.is_free(b, mask)):
        return False
    if a == b:
        return True
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    if abs(dx) <= 1 and abs(dy) <= 1:
        if dx and dy:
            m = world.mask(mask)
            return bool(m[ay, bx] and m[by, ax])
        return True
    bp = blocked_padded(world, mask)
    x0, x1 = min(ax, bx), max(ax, bx)
    y0, y1 = min(ay, by), max(ay, by)
    # padded rows/cols: cell c sits at index c + 1; window covers c in [lo-1, hi+1]
    win = bp[y0 : y1 + 3, x0 : x1 + 3]
    ys, xs = np.nonzero(win)
    if xs.size == 0:
        return True
    cx = xs + (x0 - 1)
    cy = ys + (y0 - 1)
    ox = (x1 > cx - 1) & (x0 < cx + 1)
    oy = (y1 > cy - 1) & (y0 < cy + 1)
    # projection on the segment normal (-dy, dx)
    proj = -dy * (cx - ax) + dx * (cy - ay)
    on = np.abs(proj) < abs(dx) + abs(dy)
    return not bool(np.any(ox & oy & on))


def polyline_clear(world: GridWorld, points: Sequence[Point], mask: str = CFREE_MASK) -> bool:
    if len(points) == 1:
        return world.is_free(points[0], mask)
    return all(segment_clear(world, points[i], points[i + 1], mask) for i in range(len(points) - 1))


def _cross(ox: int, oy: int, ax: int, ay: int, bx: int, by: int) -> int:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _strictly_inside(p: Point, q: Point, r: Point) -> bool:
    # r strictly between rays p and q of a cone narrower than a half-plane
    pq = p[0] * q[1] - p[1] * q[0]
    pr = p[0] * r[1] - p[1] * r[0]
    rq = r[0] * q[1] - r[1] * q[0]
    if pq > 0:
        return pr > 0 and rq > 0
    return pr < 0 and rq < 0


def _same_dir(p: Point, q: Point) -> bool:
    return p[0] * q[1] - p[1] * q[0] == 0 and p[0] * q[0] + p[1] * q[1] > 0


def _cones_overlap(p1: Point, q1: Point, p2: Point, q2: Point) -> bool:
    if (
        _strictly_inside(p1, q1, p2)
        or _strictly_inside(p1, q1, q2)
        or _strictly_inside(p2, q2, p1)
        or _strictly_inside(p2, q2, q1)
    ):
        return True
    return (_same_dir(p1, p2) and _same_dir(q1, q2)) or (_same_dir(p1, q2) and _same_dir(q1, p2))


def _hull(points: list[Point]) -> list[Point]:
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and _cross(*lower[-2], *lower[-1], *p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(*upper[-2], *upper[-1], *p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


class CornerIndex:
    """Corner table with per-column lists for cheap narrow-window queries."""

    def __init__(self, table: np.ndarray):
        self.table = table
        cols: dict[int, tuple[list[int], list[tuple[int, int, int, int]]]] = {}
        for x, y, dx, dy, _ in table.tolist():
            ys, rows = cols.setdefault(x, ([], []))
            ys.append(y)
            rows.append((x, y, dx, dy))
        self.cols = cols

    def window(self, xmin: int, xmax: int, ymin: int, ymax: int):
        """Rows inside the box: a list when the box is narrow, else an array."""
        if xmax - xmin <= NARROW_BOX:
            out: list[tuple[int, int, int, int]] = []
            for x in range(xmin, xmax + 1):
                col = self.cols.get(x)
                if col is not None:
                    ys, rows = col
                    out.extend(rows[bisect_left(ys, ymin) : bisect_right(ys, ymax)])
            return out
        keys = self.table[:, 4]
        cols = np.arange(xmin, xmax + 1, dtype=np.int64) * KEY_STRIDE
        lo = np.searchsorted(keys, cols + ymin, side="left")
        hi = np.searchsorted(keys, cols + ymax, side="right")
        counts = hi - lo
        total = int(counts.sum())
        idx = np.repeat(lo - np.cumsum(counts) + counts, counts) + np.arange(total)
        return self.table[idx, :4]


def corner_index(world: GridWorld, mask: str) -> CornerIndex:
    key = ("corner_index", mask)
    hit = world._cache.get(key)
    if hit is None:
        hit = world._cache[key] = CornerIndex(corner_table(world, mask))
    return hit


def _blocking_corners_small(rows, a: Point, v: Point, b: Point, sigma: int) -> list[Point]:
    # scalar version of the array test below; numpy overhead dominates on short windows
    edges = ((a, v), (v, b), (b, a))
    coef = []
    for p, q in edges:
        ex, ey = sigma * (q[0] - p[0]), sigma * (q[1] - p[1])
        coef.append((ex, -ey, -ex * p[1] + ey * p[0]))
    (a1, b1, c1), (a2, b2, c2), (a3, b3, c3) = coef
    out: list[Point] = []
    v_hit = False
    for zx, zy, ddx, ddy in rows:
        s1 = a1 * zy + b1 * zx + c1
        if s1 < 0:
            continue
        s2 = a2 * zy + b2 * zx + c2
        if s2 < 0:
            continue
        s3 = a3 * zy + b3 * zx + c3
        if s3 < 0:
            continue
        zeros = (s1 == 0) + (s2 == 0) + (s3 == 0)
        if zeros == 0:
            out.append((zx, zy))
        elif zeros == 1:
            ex, ny = coef[0 if s1 == 0 else (1 if s2 == 0 else 2)][:2]
            # open quadrant meets the interior half-plane of this edge
            if ny * ddx > 0 or ex * ddy > 0:
                out.append((zx, zy))
        elif zeros == 2 and not v_hit and zx == v[0] and zy == v[1]:
            u1 = (a[0] - v[0], a[1] - v[1])
            u2 = (b[0] - v[0], b[1] - v[1])
            v_hit = _cones_overlap(u1, u2, (ddx, 0), (0, ddy))
    if v_hit:
        out.append(v)
    return out


def _blocking_corners(index: CornerIndex, a: Point, v: Point, b: Point, sigma: int) -> list[Point]:
    """Corner points whose obstacle quadrant reaches into the open triangle ``a v b``."""
    xmin, xmax = min(a[0], v[0], b[0]), max(a[0], v[0], b[0])
    ymin, ymax = min(a[1], v[1], b[1]), max(a[1], v[1], b[1])
    c = index.window(xmin, xmax, ymin, ymax)
    if len(c) == 0:
        return []
    if len(c) <= SMALL_WINDOW:
        return _blocking_corners_small(c if isinstance(c, list) else c.tolist(), a, v, b, sigma)
    c = np.asarray(c)
    # prefilter to the closed triangle in one product, then the exact scalar test
    coef = np.array(
        [[sigma * (p[1] - q[1]), sigma * (q[0] - p[0])] for p, q in ((a, v), (v, b), (b, a))], dtype=np.int64
    )
    off = np.array([sigma * ((q[1] - p[1]) * p[0] - (q[0] - p[0]) * p[1]) for p, q in ((a, v), (v, b), (b, a))])
    s = c[:, :2] @ coef.T + off
    inside = s.min(axis=1) >= 0
    if not inside.any():
        return []
    return _blocking_corners_small(c[inside].tolist(), a, v, b, sigma)


def _taut_chain(corners: CornerIndex, a: Point, v: Point, b: Point) -> list[Point] | None:
    """Replacement for the interior vertex ``v`` of ``a v b``, or None when already taut."""
    if a == v or v == b:
        return []
    sigma = _cross(*a, *v, *b)
    if sigma == 0:
        return []
    sigma = 1 if sigma > 0 else -1
    blockers = _blocking_corners(corners, a, v, b, sigma)
    if not blockers:
        return []
    if v in blockers:
        return None
    hull = _hull([a, b] + blockers)
    if len(hull) <= 2:
        return []
    ia, ib = hull.index(a), hull.index(b)
    n = len(hull)
    fwd = [hull[(ia + k) % n] for k in range(1, (ib - ia) % n)]
    bwd = [hull[(ia - k) % n] for k in range(1, (ia - ib) % n)]
    return fwd or bwd


def _tighten(points: list[Point], corners: CornerIndex, start: int = 1) -> list[Point]:
    """Sweep forward from ``start``, stepping back one vertex after every change."""
    limit = 64 * (len(points) + corners.table.shape[0] + 16) ** 2
    i = max(1, start)
    steps = 0
    while i < len(points) - 1:
        steps += 1
        if steps > limit:
            raise ShorteningError("shortening failed to converge")
        chain = _taut_chain(corners, points[i - 1], points[i], points[i + 1])
        if chain is None:
            i += 1
            continue
        points[i : i + 1] = chain
        if points[i - 1] == points[i]:
            del points[i]
        i = max(1, i - 1)
    return points


def taut(points: Sequence[Point], world: GridWorld, mask: str = CFREE_MASK) -> tuple[Point, ...]:
    """Taut representative of the homotopy class of ``points`` without validation."""
    pts = list(normalize(points))
    if len(pts) <= 2:
        return tuple(pts)
    return tuple(_tighten(pts, corner_index(world, mask)))


def shorten(p: Polyline | Sequence[Point], world: GridWorld, mask: str = CFREE_MASK) -> Polyline:
    """Locally shortest curve homotopic to ``p`` with the same endpoints, inside ``mask``."""
    points = p.points if isinstance(p, Polyline) else tuple(map(tuple, p))
    if not points:
        raise ValueError("cannot shorten an empty curve")
    for i in range(len(points) - 1):
        if not segment_clear(world, points[i], points[i + 1], mask):
            raise CurveCollisionError(f"segment {i} {points[i]}->{points[i + 1]} is not clear in mask {mask!r}")
    if len(points) == 1 and not world.is_free(points[0], mask):
        raise CurveCollisionError(f"point {points[0]} is not free in mask {mask!r}")
    return Polyline(taut(points, world, mask))


def extend_taut(tether: Sequence[Point], q: Point, world: GridWorld, mask: str = CFREE_MASK) -> tuple[Point, ...]:
    """Taut curve after the robot at the end of a taut ``tether`` moves straight to ``q``.

    Only the old endpoint can be slack, so the sweep starts there.
    """
    pts = list(tether)
    if pts[-1] == q:
        return tuple(pts)
    pts.append(q)
    return tuple(_tighten(pts, corner_index(world, mask), start=len(pts) - 2))


def taut_tether(base: Point, raw: Polyline, world: GridWorld) -> tuple[Polyline, float]:
    if raw.start != tuple(base):
        raise ValueError(f"tether must start at the base {base}, got {raw.start}")
    tether = shorten(raw, world, CFREE_MASK)
    return tether, tether.length


def _orient(a: Point, b: Point, c: Point) -> int:
    v = _cross(*a, *b, *c)
    return (v > 0) - (v < 0)


def _overlap_1d(a: Point, b: Point, c: Point, d: Point) -> bool:
    # collinear segments: positive-length overlap along the dominant axis
    k = 0 if a[0] != b[0] else 1
    lo1, hi1 = sorted((a[k], b[k]))
    lo2, hi2 = sorted((c[k], d[k]))
    return min(hi1, hi2) > max(lo1, lo2)


def segments_conflict(a: Point, b: Point, c: Point, d: Point) -> bool:
    """Proper crossing or collinear overlap of positive length."""
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    if o1 == 0 and o2 == 0:
        if a == b or c == d:
            return False
        return _overlap_1d(a, b, c, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    return o1 * o2 < 0 and o3 * o4 < 0


def _passes_interleave(p: tuple[Point, Point], q: tuple[Point, Point]) -> bool:
    """Do two passes through a common point cross there (directions relative to the point)?"""
    for r in p:
        for s in q:
            if _same_dir(r, s):
                return True
    ang = [math.atan2(d[1], d[0]) for d in (*p, *q)]
    span = (ang[1] - ang[0]) % math.tau
    return ((ang[2] - ang[0]) % math.tau < span) != ((ang[3] - ang[0]) % math.tau < span)


def is_self_crossing(p: Polyline | Sequence[Point]) -> bool:
    """True iff two non-adjacent segments properly intersect or overlap, or two passes
    of the curve through a shared point cross each other there.

    Touching without crossing (a tether resting on itself at a corner) is
    allowed, and so is touching at the curve's endpoints.
    """
    pts = p.points if isinstance(p, Polyline) else tuple(p)
    pts = [q for i, q in enumerate(pts) if i == 0 or q != pts[i - 1]]
    n = len(pts) - 1
    boxes = [
        (min(pts[i][0], pts[i + 1][0]), max(pts[i][0], pts[i + 1][0]), min(pts[i][1], pts[i + 1][1]), max(pts[i][1], pts[i + 1][1]))
        for i in range(n)
    ]
    touches: set[Point] = set()
    for i in range(n):
        x0, x1, y0, y1 = boxes[i]
        a, b = pts[i], pts[i + 1]
        for j in range(i + 2, n):
            u0, u1, v0, v1 = boxes[j]
            if u1 < x0 or u0 > x1 or v1 < y0 or v0 > y1:
                continue
            c, d = pts[j], pts[j + 1]
            if segments_conflict(a, b, c, d):
                return True
            for z, (e, f) in ((c, (a, b)), (d, (a, b)), (a, (c, d)), (b, (c, d))):
                if _orient(e, f, z) == 0 and _on_box(e, f, z):
                    touches.add(z)
    for z in touches:
        passes = []
        for k in range(1, n):
            if pts[k] == z:
                passes.append(((pts[k - 1][0] - z[0], pts[k - 1][1] - z[1]), (pts[k + 1][0] - z[0], pts[k + 1][1] - z[1])))
        for i in range(n):
            a, b = pts[i], pts[i + 1]
            if z != a and z != b and _orient(a, b, z) == 0 and _on_box(a, b, z):
                passes.append(((a[0] - z[0], a[1] - z[1]), (b[0] - z[0], b[1] - z[1])))
        for x in range(len(passes)):
            for y in range(x + 1, len(passes)):
                if _passes_interleave(passes[x], passes[y]):
                    return True
    return False


def _on_box(a: Point, b: Point, z: Point) -> bool:
    return min(a[0], b[0]) <= z[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= z[1] <= max(a[1], b[1])
