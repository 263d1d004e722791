"""H-signature words built from upward rays anchored in each obstacle component.

A letter is ``+(id + 1)`` for a left-to-right crossing of component ``id``'s
ray and ``-(id + 1)`` for right-to-left. Each ray leaves the representative
cell center vertically towards row 0, displaced by an infinitesimal
``+eps * (id + 1)`` in x so that rays never touch each other or a vertex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .curve import Point, Polyline
from .gridmap import FREE_MASK, GridWorld, segment_free


class CurveCollisionError(ValueError):
    pass


def reduce(word: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for letter in word:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


@dataclass(frozen=True, order=True)
class HSignature:
    word: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "word", reduce(self.word))

    def __bool__(self) -> bool:
        return bool(self.word)

    def __len__(self) -> int:
        return len(self.word)

    def to_json(self) -> list[list[int]]:
        return [[abs(l) - 1, 1 if l > 0 else -1] for l in self.word]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[int]]) -> "HSignature":
        return cls(tuple((int(cid) + 1) * (1 if int(sign) > 0 else -1) for cid, sign in data))


EMPTY = HSignature()


def compose(s1: HSignature, s2: HSignature) -> HSignature:
    return HSignature(s1.word + s2.word)


def invert(s: HSignature) -> HSignature:
    return HSignature(tuple(-l for l in reversed(s.word)))


def _crosses(x1: int, y1: int, x2: int, y2: int, rx: int, ry: int) -> bool:
    # height of the segment at x = rx (+eps) compared against the ray's base
    den = x2 - x1
    num = y1 * den + (rx - x1) * (y2 - y1) - ry * den
    s = num if den > 0 else -num
    if s != 0:
        return s < 0
    return (y2 - y1) * den < 0


def segment_crossings(
    a: Point, b: Point, rays: Sequence[tuple[int, int, int]]
) -> tuple[int, ...]:
    """Letters produced by the straight segment ``a -> b`` in traversal order."""
    x1, y1 = a
    x2, y2 = b
    if x1 == x2:
        return ()
    if x1 < x2:
        hits = [(rx, cid) for rx, ry, cid in rays if x1 <= rx < x2 and _crosses(x1, y1, x2, y2, rx, ry)]
        hits.sort()
        return tuple(cid + 1 for _, cid in hits)
    hits = [(rx, cid) for rx, ry, cid in rays if x2 <= rx < x1 and _crosses(x1, y1, x2, y2, rx, ry)]
    hits.sort(reverse=True)
    return tuple(-(cid + 1) for _, cid in hits)


def step_crossings(world: GridWorld, a: Point, b: Point) -> tuple[int, ...]:
    """Crossings of a unit grid move; cached per world."""
    cache = world._cache.setdefault("steps", {})
    key = (a, b)
    hit = cache.get(key)
    if hit is None:
        x1, x2 = a[0], b[0]
        if x1 == x2:
            hit = ()
        else:
            col = world.rays_by_column.get(min(x1, x2), ())
            rays = [(min(x1, x2), ry, cid) for ry, cid in col]
            hit = segment_crossings(a, b, rays)
        cache[key] = hit
    return hit


def polyline_word(points: Sequence[Point], world: GridWorld) -> tuple[int, ...]:
    rays = world.rays
    word: list[int] = []
    for i in range(len(points) - 1):
        word.extend(segment_crossings(points[i], points[i + 1], rays))
    return reduce(word)


def signature(p: Polyline | Sequence[Point], world: GridWorld, check: bool = True) -> HSignature:
    points = p.points if isinstance(p, Polyline) else tuple(p)
    if check:
        for i in range(len(points) - 1):
            if not (world.in_bounds(points[i]) and world.in_bounds(points[i + 1])):
                raise CurveCollisionError(f"segment {i} leaves the map")
            if not segment_free(world, points[i], points[i + 1], FREE_MASK):
                raise CurveCollisionError(f"segment {i} {points[i]}->{points[i + 1]} hits an obstacle")
        if len(points) == 1 and not world.is_free(points[0], FREE_MASK):
            raise CurveCollisionError(f"point {points[0]} is inside an obstacle")
    return HSignature(polyline_word(points, world))


def homotopic(p1: Polyline, p2: Polyline, world: GridWorld) -> bool:
    if p1.start != p2.start or p1.end != p2.end:
        raise ValueError("homotopy is only defined for curves with shared endpoints")
    return signature(p1, world) == signature(p2, world)
