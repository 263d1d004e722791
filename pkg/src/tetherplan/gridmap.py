"""Occupancy grids, disk inflation and cell-level geometry.

Coordinates are ``(x, y)`` with ``x`` the column and ``y`` the row; row 0 is
the top line of an ASCII map. Masks are indexed ``mask[y, x]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import ndimage

Cell = tuple[int, int]

FREE_MASK = "free"
CFREE_MASK = "C"


class MapFormatError(ValueError):
    pass


class EmptyWorldError(ValueError):
    pass


@dataclass(frozen=True)
class ObstacleComponent:
    id: int
    cells: tuple[Cell, ...]
    representative: Cell


@dataclass(eq=False)
class GridWorld:
    """A bounded grid environment.

    ``free_mask`` is the obstacle-free set; ``cfree_mask`` is the set of
    cells where a disk robot of ``robot_radius`` fits. Treat instances as
    immutable: derived tables are cached on first use.
    """

    free_mask: np.ndarray
    cfree_mask: np.ndarray
    robot_radius: float | None = None
    obstacle_components: tuple[ObstacleComponent, ...] = field(default=())

    @property
    def width(self) -> int:
        return int(self.free_mask.shape[1])

    @property
    def height(self) -> int:
        return int(self.free_mask.shape[0])

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def mask(self, name: str) -> np.ndarray:
        if name == FREE_MASK:
            return self.free_mask
        if name == CFREE_MASK:
            return self.cfree_mask
        raise ValueError(f"unknown mask {name!r}; expected {FREE_MASK!r} or {CFREE_MASK!r}")

    def is_free(self, cell: Cell, mask: str = CFREE_MASK) -> bool:
        return self.in_bounds(cell) and bool(self.mask(mask)[cell[1], cell[0]])

    @cached_property
    def rays(self) -> tuple[tuple[int, int, int], ...]:
        """``(rx, ry, id)`` per obstacle component, the anchor of its upward ray."""
        return tuple((c.representative[0], c.representative[1], c.id) for c in self.obstacle_components)

    @cached_property
    def rays_by_column(self) -> dict[int, tuple[tuple[int, int], ...]]:
        cols: dict[int, list[tuple[int, int]]] = {}
        for rx, ry, cid in self.rays:
            cols.setdefault(rx, []).append((ry, cid))
        return {k: tuple(sorted(v, key=lambda t: t[1])) for k, v in cols.items()}

    @cached_property
    def _cache(self) -> dict:
        return {}

    def __repr__(self) -> str:
        return (
            f"GridWorld({self.width}x{self.height}, radius={self.robot_radius}, "
            f"components={len(self.obstacle_components)})"
        )


def _label_components(free_mask: np.ndarray) -> tuple[ObstacleComponent, ...]:
    blocked = ~free_mask
    labels, count = ndimage.label(blocked, structure=[[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    comps = []
    for lab in range(1, count + 1):
        ys, xs = np.nonzero(labels == lab)
        cells = sorted(zip(xs.tolist(), ys.tolist()))
        comps.append(cells)
    # ids follow the order of the representative (smallest x, then y)
    comps.sort(key=lambda cells: cells[0])
    return tuple(
        ObstacleComponent(id=i, cells=tuple(cells), representative=cells[0]) for i, cells in enumerate(comps)
    )


def world_from_mask(free_mask: np.ndarray) -> GridWorld:
    free_mask = np.ascontiguousarray(free_mask, dtype=bool)
    if free_mask.ndim != 2 or free_mask.size == 0:
        raise MapFormatError("map must be a non-empty 2-D grid")
    if not free_mask.any():
        raise EmptyWorldError("map has no free cells")
    free_mask.setflags(write=False)
    return GridWorld(
        free_mask=free_mask,
        cfree_mask=free_mask,
        robot_radius=None,
        obstacle_components=_label_components(free_mask),
    )


def parse_ascii(text: str) -> np.ndarray:
    rows = [line.rstrip("\r") for line in text.splitlines()]
    while rows and not rows[-1].strip():
        rows.pop()
    if not rows:
        raise MapFormatError("empty map")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise MapFormatError(f"ragged row {i}: length {len(row)} != {width}")
        bad = set(row) - {".", "#"}
        if bad:
            raise MapFormatError(f"row {i}: unexpected characters {sorted(bad)}")
    return np.array([[ch == "." for ch in row] for row in rows], dtype=bool)


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise MapFormatError("truncated PGM header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
                pos += 1
            tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def parse_pgm(data: bytes) -> np.ndarray:
    if data[:2] != b"P5":
        raise MapFormatError(f"unsupported magic number {data[:2]!r}; only binary PGM (P5) is supported")
    tokens, offset = _pgm_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise MapFormatError("malformed PGM header") from exc
    if width <= 0 or height <= 0 or not 0 < maxval < 65536:
        raise MapFormatError("invalid PGM dimensions or maxval")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    raster = data[offset : offset + expected]
    if len(raster) != expected:
        raise MapFormatError(f"PGM raster has {len(raster)} bytes, expected {expected}")
    pixels = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    if maxval > 255:
        pixels = pixels.astype(np.int64) * 255 // maxval
    return pixels >= 128


def load_map(source: str | bytes) -> GridWorld:
    """Parse ASCII ('.'/'#') or binary PGM map contents into a world with masks only."""
    if isinstance(source, bytes):
        if source[:1] == b"P":
            return world_from_mask(parse_pgm(source))
        source = source.decode("ascii")
    if source[:1] == "P":
        raise MapFormatError(f"unsupported magic number {source[:2]!r}")
    return world_from_mask(parse_ascii(source))


def load_map_file(path: str | Path) -> GridWorld:
    return load_map(Path(path).read_bytes())


def to_ascii(world: GridWorld) -> str:
    return "\n".join("".join("." if v else "#" for v in row) for row in world.free_mask) + "\n"


def to_pgm(world: GridWorld) -> bytes:
    header = f"P5\n{world.width} {world.height}\n255\n".encode()
    return header + np.where(world.free_mask, 255, 0).astype(np.uint8).tobytes()


def inflate(world: GridWorld, radius: float) -> GridWorld:
    """Populate ``cfree_mask`` for a disk robot; out-of-bounds counts as obstacle."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        cfree = world.free_mask
    else:
        pad = int(math.ceil(radius)) + 1
        padded = np.pad(world.free_mask, pad, constant_values=False)
        dist = ndimage.distance_transform_edt(padded)
        cfree = (dist > radius)[pad:-pad, pad:-pad] & world.free_mask
        cfree = np.ascontiguousarray(cfree)
        cfree.setflags(write=False)
    return replace(world, cfree_mask=cfree, robot_radius=radius)


def raster_segment(a: Cell, b: Cell) -> list[Cell]:
    """Midpoint (Bresenham) cells from ``a`` to ``b`` inclusive.

    Always rasterized from the lexicographically smaller endpoint, stepping
    along the major axis with exact half-way ties kept on the start side, so
    reversing the inputs reverses the output.
    """
    if b < a:
        return raster_segment(b, a)[::-1]
    x0, y0 = a
    x1, y1 = b
    steep = abs(y1 - y0) > abs(x1 - x0)
    if steep:
        x0, y0, x1, y1 = y0, x0, y1, x1
    major = abs(x1 - x0)
    minor = abs(y1 - y0)
    sx = 1 if x1 >= x0 else -1
    sy = 1 if y1 >= y0 else -1
    err = major // 2
    x, y = x0, y0
    cells = []
    for _ in range(major + 1):
        cells.append((y, x) if steep else (x, y))
        err -= minor
        if err < 0:
            y += sy
            err += major
        x += sx
    return cells


def segment_free(world: GridWorld, a: Cell, b: Cell, mask: str = CFREE_MASK) -> bool:
    m = world.mask(mask)
    return all(m[y, x] for x, y in raster_segment(a, b))


def random_rect_world(
    size: int | tuple[int, int],
    n_obstacles: int,
    seed: int,
    min_side: int = 2,
    max_side: int | None = None,
    density: tuple[float, float] | None = None,
    keep_free: tuple[Cell, ...] = (),
) -> GridWorld:
    """Seeded map of axis-aligned rectangular obstacles.

    With ``density`` given, rectangles keep being added until the blocked
    fraction falls in the range (``n_obstacles`` is then a lower bound).
    """
    w, h = (size, size) if isinstance(size, int) else size
    rng = np.random.default_rng(seed)
    max_side = max_side or max(min_side + 1, min(w, h) // 5)
    free = np.ones((h, w), dtype=bool)
    placed = 0
    for _ in range(10_000):
        frac = 1.0 - free.mean()
        if placed >= n_obstacles and (density is None or frac >= density[0]):
            break
        rw, rh = rng.integers(min_side, max_side + 1, size=2)
        x0 = int(rng.integers(1, max(2, w - rw - 1)))
        y0 = int(rng.integers(1, max(2, h - rh - 1)))
        trial = free.copy()
        trial[y0 : y0 + rh, x0 : x0 + rw] = False
        if density is not None and 1.0 - trial.mean() > density[1]:
            continue
        if any(not trial[y, x] for x, y in keep_free):
            continue
        free = trial
        placed += 1
    return world_from_mask(free)
