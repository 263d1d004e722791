"""Brute-force workspace enumeration and empirical checks of the planners.

The workspace graph holds every admissible configuration reachable from
home through admissible configurations by 8-connected moves. Each node
keeps its canonical tether, grown incrementally from its parent's.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .curve import Point, Polyline
from .gcp import (
    AugmentedState,
    Configuration,
    OutsideFreeSpaceError,
    extend_word,
    gcp,
    neighbours,
)
from .gridmap import CFREE_MASK, GridWorld
from .homotopy import HSignature, homotopic
from .planner import induced_tether_profile, tr
from .shorten import extend_taut, is_self_crossing, taut

log = logging.getLogger(__name__)

NODE_CAP = 5_000_000
EPS_GRID = 2.0 * math.sqrt(2.0)
LENGTH_TOL = 1e-9


class BudgetExceeded(RuntimeError):
    pass


class GoalUnreachable(RuntimeError):
    pass


@dataclass
class WorkspaceGraph:
    world: GridWorld
    base: Point
    L: float
    index: dict[tuple[Point, tuple[int, ...]], int]
    cells: list[Point]
    words: list[tuple[int, ...]]
    tethers: list[tuple[Point, ...]]
    lengths: list[float]
    costs: list[float]
    build_ms: float = 0.0

    @property
    def node_count(self) -> int:
        return len(self.cells)

    def __len__(self) -> int:
        return len(self.cells)

    def node(self, i: int) -> AugmentedState:
        return AugmentedState(self.costs[i], self.cells[i], HSignature(self.words[i]))

    def configuration(self, i: int) -> Configuration:
        tether = Polyline(self.tethers[i])
        return Configuration(self.base, self.cells[i], tether, self.lengths[i], HSignature(self.words[i]))

    def find(self, c: Configuration) -> int | None:
        return self.index.get((c.location, c.signature.word))

    def neighbours(self, i: int):
        """Admissible neighbour nodes ``(j, step_cost)`` of node ``i``."""
        word = self.words[i]
        for nxt, step, letters in neighbours(self.world, self.cells[i]):
            j = self.index.get((nxt, extend_word(word, letters) if letters else word))
            if j is not None:
                yield j, step

    def goal_slice(self, goal: Point) -> list[Configuration]:
        goal = tuple(goal)
        out = [self.configuration(i) for i, c in enumerate(self.cells) if c == goal]
        out.sort(key=lambda c: (c.tether_length, c.signature))
        return out


def build_workspace(world: GridWorld, base: Point, L: float, node_cap: int = NODE_CAP) -> WorkspaceGraph:
    """Settle every admissible configuration reachable from home (uniform cost on grid moves)."""
    t0 = time.perf_counter()
    base = (int(base[0]), int(base[1]))
    if not world.is_free(base, CFREE_MASK):
        raise OutsideFreeSpaceError(f"base {base} is not in C")
    index = {(base, ()): 0}
    cells, words, tethers, lengths, costs = [base], [()], [(base,)], [0.0], [0.0]
    rejected: set = set()
    tie = itertools.count()
    heap = [(0.0, next(tie), 0)]
    done = set()
    while heap:
        cost, _, i = heapq.heappop(heap)
        if i in done:
            continue
        done.add(i)
        cell, word, tether = cells[i], words[i], tethers[i]
        for nxt, step, letters in neighbours(world, cell):
            key = (nxt, extend_word(word, letters) if letters else word)
            j = index.get(key)
            nc = cost + step
            if j is None:
                if key in rejected:
                    continue
                t = extend_taut(tether, nxt, world, CFREE_MASK)
                ln = Polyline(t).length
                if ln > L + LENGTH_TOL or is_self_crossing(t):
                    rejected.add(key)
                    continue
                j = len(cells)
                if j >= node_cap:
                    raise BudgetExceeded(f"workspace exceeds {node_cap} nodes")
                index[key] = j
                cells.append(nxt)
                words.append(key[1])
                tethers.append(t)
                lengths.append(ln)
                costs.append(nc)
                heapq.heappush(heap, (nc, next(tie), j))
            elif j not in done and nc < costs[j]:
                costs[j] = nc
                heapq.heappush(heap, (nc, next(tie), j))
    g = WorkspaceGraph(world, base, L, index, cells, words, tethers, lengths, costs, (time.perf_counter() - t0) * 1000)
    log.info("workspace: %d nodes in %.0f ms", g.node_count, g.build_ms)
    return g


def _dijkstra(g: WorkspaceGraph, src: int, stop=None):
    dist = {src: 0.0}
    parent = {src: None}
    tie = itertools.count()
    heap = [(0.0, next(tie), src)]
    done = set()
    while heap:
        d, _, i = heapq.heappop(heap)
        if i in done:
            continue
        done.add(i)
        if stop is not None and i == stop:
            break
        for j, step in g.neighbours(i):
            nd = d + step
            if nd < dist.get(j, math.inf):
                dist[j] = nd
                parent[j] = i
                heapq.heappush(heap, (nd, next(tie), j))
    return dist, parent, done


def _path(g: WorkspaceGraph, parent: dict, j: int) -> Polyline:
    out = []
    while j is not None:
        out.append(g.cells[j])
        j = parent[j]
    return Polyline(tuple(out[::-1]))


@dataclass
class OracleTPResult:
    raw: Polyline
    shortened: Polyline
    length: float
    grid_cost: float
    goal_configuration: Configuration
    candidates: int


def oracle_tp(g: WorkspaceGraph, start: Configuration, goal: Point) -> OracleTPResult:
    """Search the workspace graph from ``start`` to every node at ``goal``.

    Each goal node's grid path is shortened; the shortest result wins, ties
    by grid cost and then signature.
    """
    goal = (int(goal[0]), int(goal[1]))
    src = g.find(start)
    if src is None:
        raise ValueError(f"start configuration at {start.location} is not a workspace node")
    dist, parent, done = _dijkstra(g, src)
    best = None
    count = 0
    for j in sorted(done):
        if g.cells[j] != goal:
            continue
        count += 1
        raw = _path(g, parent, j)
        short = Polyline(taut(raw.points, g.world, CFREE_MASK))
        key = (short.length, dist[j], HSignature(g.words[j]))
        if best is None or key < best[0]:
            best = (key, raw, short, j)
    if best is None:
        raise GoalUnreachable(f"no workspace node at {goal}")
    (length, cost, _), raw, short, j = best
    return OracleTPResult(raw, short, length, cost, g.configuration(j), count)


@dataclass
class ConvexityReport:
    seed: int
    pairs: int
    violations: list[dict] = field(default_factory=list)
    max_excess: float = -math.inf
    pool: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))


def config_pool(world: GridWorld, base: Point, L: float, seed: int, goals: int = 12) -> list[Configuration]:
    """Admissible configurations at seeded random goal cells."""
    rng = _rng(seed)
    free = np.argwhere(world.cfree_mask)
    picks = free[rng.choice(len(free), size=min(goals, len(free)), replace=False)]
    cells = [(int(x), int(y)) for y, x in picks]
    res = gcp(world, base, cells, L)
    return [c for confs in res for c in confs]


def check_pair(world: GridWorld, c1: Configuration, c2: Configuration, L: float) -> tuple[float, dict | None]:
    """Peak excess of the induced tether over the endpoints, and a violation record if any."""
    path = tr(c1, c2, world)
    profile = induced_tether_profile(c1, path, world)
    peak = max(l for _, l in profile)
    bound = max(c1.tether_length, c2.tether_length)
    final = extend_chain(c1, path, world)
    record = {
        "c1": c1.to_json(),
        "c2": c2.to_json(),
        "path": path.to_list(),
        "peak": peak,
        "bound": bound,
    }
    if peak > bound + EPS_GRID or peak > 1.001 * L:
        record["kind"] = "length"
    elif final != c2.tether.points:
        record["kind"] = "endpoint"
    return peak - bound, (record if "kind" in record else None)


def extend_chain(c1: Configuration, path: Polyline, world: GridWorld) -> tuple[Point, ...]:
    t = c1.tether.points
    for q in path.points[1:]:
        t = extend_taut(t, q, world, CFREE_MASK)
    return t


def verify_convexity(
    world: GridWorld,
    base: Point,
    L: float,
    samples: int,
    seed: int,
    pool: list[Configuration] | None = None,
    workspace: WorkspaceGraph | None = None,
) -> ConvexityReport:
    """Sample configuration pairs, run ``tr`` and check the induced tether never exceeds the endpoints."""
    rng = _rng(seed)
    if pool is None:
        if workspace is not None:
            pool = [workspace.configuration(i) for i in range(workspace.node_count)]
        else:
            pool = config_pool(world, base, L, seed)
    report = ConvexityReport(seed=seed, pairs=0, pool=len(pool))
    if not pool:
        return report
    for _ in range(samples):
        i, j = (int(v) for v in rng.integers(len(pool), size=2))
        c1, c2 = pool[i], pool[j]
        excess, bad = check_pair(world, c1, c2, L)
        report.max_excess = max(report.max_excess, excess)
        report.pairs += 1
        if bad is not None:
            report.violations.append(bad)
    return report


@dataclass
class SimplyConnectedReport:
    seed: int
    pairs: int
    agreements: int
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_simply_connected(
    world: GridWorld,
    base: Point,
    L: float,
    samples: int,
    seed: int,
    workspace: WorkspaceGraph | None = None,
) -> SimplyConnectedReport:
    """Workspace-graph reconfigurations and ``tr`` outputs must be homotopic."""
    g = workspace if workspace is not None else build_workspace(world, base, L)
    rng = _rng(seed)
    report = SimplyConnectedReport(seed=seed, pairs=0, agreements=0)
    for _ in range(samples):
        i, j = (int(v) for v in rng.integers(g.node_count, size=2))
        c1, c2 = g.configuration(i), g.configuration(j)
        _, parent, done = _dijkstra(g, i, stop=j)
        report.pairs += 1
        if j not in done:
            report.failures.append({"c1": c1.to_json(), "c2": c2.to_json(), "kind": "disconnected"})
            continue
        raw = _path(g, parent, j)
        if homotopic(raw, tr(c1, c2, world), world):
            report.agreements += 1
        else:
            report.failures.append({"c1": c1.to_json(), "c2": c2.to_json(), "raw": raw.to_list(), "kind": "class"})
    return report


def oracle_reconfiguration(g: WorkspaceGraph, c1: Configuration, c2: Configuration) -> Polyline:
    """Shortest workspace-graph motion between two nodes, canonically shortened."""
    i, j = g.find(c1), g.find(c2)
    if i is None or j is None:
        raise ValueError("both configurations must be workspace nodes")
    _, parent, done = _dijkstra(g, i, stop=j)
    if j not in done:
        raise GoalUnreachable("configurations are not connected in the workspace graph")
    raw = _path(g, parent, j)
    return Polyline(taut(raw.points, g.world, CFREE_MASK))


def home_tree_path(g: WorkspaceGraph, c: Configuration) -> Polyline:
    """Grid path from home to ``c`` through the workspace (shortest grid cost)."""
    j = g.find(c)
    if j is None:
        raise ValueError("configuration is not a workspace node")
    _, parent, _ = _dijkstra(g, 0, stop=j)
    return _path(g, parent, j)


__all__ = [
    "BudgetExceeded",
    "ConvexityReport",
    "GoalUnreachable",
    "OracleTPResult",
    "SimplyConnectedReport",
    "WorkspaceGraph",
    "build_workspace",
    "check_pair",
    "config_pool",
    "home_tree_path",
    "oracle_reconfiguration",
    "oracle_tp",
    "verify_convexity",
    "verify_simply_connected",
]
