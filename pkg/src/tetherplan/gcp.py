"""Goal configuration pre-calculation.

A uniform-cost search over (cell, reduced word) states enumerates every
homotopy class that reaches a goal cell within the grid-cost budget; each
hit is tightened to its canonical tether and kept when the tether is short
enough and does not cross itself.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .curve import Point, Polyline
from .gridmap import CFREE_MASK, GridWorld
from .homotopy import EMPTY, HSignature, step_crossings
from .shorten import is_self_crossing, taut

log = logging.getLogger(__name__)

PRUNE_FACTOR = 1.1
LENGTH_TOL = 1e-9

_MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


class OutsideFreeSpaceError(ValueError):
    pass


@dataclass(frozen=True)
class Configuration:
    base: Point
    location: Point
    tether: Polyline
    tether_length: float
    signature: HSignature

    def to_json(self) -> dict:
        return {
            "location": list(self.location),
            "tether": self.tether.to_list(),
            "tether_length": self.tether_length,
            "signature": self.signature.to_json(),
        }


@dataclass(frozen=True, order=True)
class AugmentedState:
    cost: float
    cell: Point
    signature: HSignature


@dataclass
class GCPResult:
    """Per-goal configuration lists, each sorted by (tether_length, signature)."""

    goals: tuple[Point, ...]
    per_goal: list[list[Configuration]]
    unreachable: list[int] = field(default_factory=list)
    settled: int = 0

    @property
    def counts(self) -> list[int]:
        return [len(c) for c in self.per_goal]

    def __getitem__(self, i: int) -> list[Configuration]:
        return self.per_goal[i]

    def __len__(self) -> int:
        return len(self.per_goal)

    def __iter__(self):
        return iter(self.per_goal)


def home_configuration(base: Point, world: GridWorld | None = None) -> Configuration:
    base = (int(base[0]), int(base[1]))
    if world is not None and not world.is_free(base, CFREE_MASK):
        raise OutsideFreeSpaceError(f"base {base} is not in C")
    return Configuration(base, base, Polyline((base,)), 0.0, EMPTY)


def neighbours(world: GridWorld, cell: Point) -> list[tuple[Point, float, tuple[int, ...]]]:
    """8-connected moves inside C without corner cutting, with their crossing letters."""
    table = world._cache.setdefault("moves", {})
    hit = table.get(cell)
    if hit is not None:
        return hit
    m = world.cfree_mask
    w, h = world.width, world.height
    x, y = cell
    out = []
    for dx, dy in _MOVES:
        nx, ny = x + dx, y + dy
        if not (0 <= nx < w and 0 <= ny < h) or not m[ny, nx]:
            continue
        if dx and dy and not (m[y, nx] and m[ny, x]):
            continue
        out.append(((nx, ny), math.sqrt(2.0) if dx and dy else 1.0, step_crossings(world, cell, (nx, ny))))
    table[cell] = out
    return out


def extend_word(word: tuple[int, ...], letters: tuple[int, ...]) -> tuple[int, ...]:
    for letter in letters:
        if word and word[-1] == -letter:
            word = word[:-1]
        else:
            word = word + (letter,)
    return word


def _goal_distance(world: GridWorld, goals: Sequence[Point]) -> np.ndarray:
    ys, xs = np.mgrid[0 : world.height, 0 : world.width]
    best = np.full((world.height, world.width), np.inf)
    for gx, gy in set(goals):
        np.minimum(best, np.hypot(xs - gx, ys - gy), out=best)
    return best


def make_configuration(world: GridWorld, base: Point, raw: Sequence[Point], word: tuple[int, ...]) -> Configuration:
    tether = Polyline(taut(raw, world, CFREE_MASK))
    return Configuration(base, tether.end, tether, tether.length, HSignature(word))


def gcp(world: GridWorld, base: Point, goals: Sequence[Point], L: float) -> GCPResult:
    """All admissible configurations at each goal cell for maximum tether length ``L``."""
    base = (int(base[0]), int(base[1]))
    goals = tuple((int(g[0]), int(g[1])) for g in goals)
    if L < 0:
        raise ValueError("L must be >= 0")
    if not world.is_free(base, CFREE_MASK):
        raise OutsideFreeSpaceError(f"base {base} is not in C")
    valid = [world.is_free(g, CFREE_MASK) for g in goals]
    targets = {g for g, ok in zip(goals, valid) if ok}
    budget = PRUNE_FACTOR * L
    hits: dict[Point, list[tuple[tuple[int, ...], tuple]]] = {g: [] for g in targets}

    settled = 0
    if targets:
        h = _goal_distance(world, list(targets))
        start = (base, ())
        best = {start: 0.0}
        parent: dict = {start: None}
        tie = itertools.count()
        heap = [(0.0, next(tie), start)]
        while heap:
            cost, _, key = heapq.heappop(heap)
            if cost > best[key]:
                continue
            settled += 1
            cell, word = key
            if cell in targets:
                hits[cell].append((word, key))
            for nxt, step, letters in neighbours(world, cell):
                nc = cost + step
                if nc + h[nxt[1], nxt[0]] > budget + LENGTH_TOL:
                    continue
                nkey = (nxt, extend_word(word, letters) if letters else word)
                if nc < best.get(nkey, math.inf):
                    best[nkey] = nc
                    parent[nkey] = key
                    heapq.heappush(heap, (nc, next(tie), nkey))

    per_cell: dict[Point, list[Configuration]] = {}
    for cell, found in hits.items():
        confs = []
        for word, key in found:
            raw = []
            k = key
            while k is not None:
                raw.append(k[0])
                k = parent[k]
            c = make_configuration(world, base, raw[::-1], word)
            if c.tether_length <= L + LENGTH_TOL and not is_self_crossing(c.tether):
                confs.append(c)
        confs.sort(key=lambda c: (c.tether_length, c.signature))
        per_cell[cell] = confs

    per_goal = [list(per_cell.get(g, [])) if ok else [] for g, ok in zip(goals, valid)]
    unreachable = [i for i, confs in enumerate(per_goal) if not confs]
    log.info("gcp: settled %d states, counts %s", settled, [len(c) for c in per_goal])
    return GCPResult(goals, per_goal, unreachable, settled)
