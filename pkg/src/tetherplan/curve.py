"""Polylines through cell centers: length, concatenation, backtracking, prefixes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

Point = tuple[int, int]


@dataclass(frozen=True)
class Polyline:
    points: tuple[Point, ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError("a polyline needs at least one point")

    @classmethod
    def of(cls, points: Iterable[Sequence[int]]) -> "Polyline":
        return cls(tuple((int(p[0]), int(p[1])) for p in points))

    @property
    def start(self) -> Point:
        return self.points[0]

    @property
    def end(self) -> Point:
        return self.points[-1]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def length(self) -> float:
        return polyline_length(self.points)

    def to_list(self) -> list[list[int]]:
        return [list(p) for p in self.points]


def polyline_length(points: Sequence[Point]) -> float:
    return math.fsum(math.dist(points[i], points[i + 1]) for i in range(len(points) - 1))


def length(p: Polyline) -> float:
    return p.length


def normalize(points: Sequence[Point]) -> tuple[Point, ...]:
    """Drop repeated points and interior points lying strictly inside a straight run."""
    out: list[Point] = []
    for q in points:
        if out and out[-1] == q:
            continue
        if len(out) >= 2:
            a, v = out[-2], out[-1]
            cross = (v[0] - a[0]) * (q[1] - a[1]) - (v[1] - a[1]) * (q[0] - a[0])
            dot = (v[0] - a[0]) * (q[0] - v[0]) + (v[1] - a[1]) * (q[1] - v[1])
            if cross == 0 and dot > 0:
                out[-1] = q
                continue
        out.append(q)
    return tuple(out)


def normalized(p: Polyline) -> Polyline:
    return Polyline(normalize(p.points))


def concat(a: Polyline, b: Polyline) -> Polyline:
    if a.end != b.start:
        raise ValueError(f"cannot concatenate: {a.end} != {b.start}")
    return Polyline(a.points + b.points[1:])


def reverse(a: Polyline) -> Polyline:
    return Polyline(a.points[::-1])


def prefix(a: Polyline, s: int) -> Polyline:
    if not 0 <= s < len(a.points):
        raise IndexError(f"prefix index {s} outside 0..{len(a.points) - 1}")
    return Polyline(a.points[: s + 1])
