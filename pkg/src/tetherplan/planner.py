"""Tethered reconfiguration, classic planning, multi-goal visiting and tethered TSP.

All four reduce to untethered shortening between pre-calculated goal
configurations: the optimal reconfiguration from ``c1`` to ``c2`` is the taut
version of ``reverse(c1.tether) + c2.tether``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .curve import Point, Polyline, concat, reverse
from .gcp import Configuration, GCPResult, gcp, home_configuration
from .gridmap import CFREE_MASK, GridWorld
from .shorten import extend_taut, taut

log = logging.getLogger(__name__)


class UnreachableGoalError(RuntimeError):
    def __init__(self, goals: Sequence[Point]):
        self.goals = [tuple(g) for g in goals]
        super().__init__(f"unreachable goal(s): {self.goals}")


class InfeasibleError(RuntimeError):
    pass


@dataclass
class ReconfigTable:
    """Reconfiguration costs between configurations grouped in clusters.

    ``cost[u, v]`` is the length of ``path(u, v)``; pairs that were never
    built (same cluster, or non-consecutive stages) hold ``inf``.
    """

    configurations: list[Configuration]
    clusters: list[list[int]]
    cost: np.ndarray
    paths: dict[tuple[int, int], Polyline] = field(default_factory=dict)

    def path(self, u: int, v: int) -> Polyline:
        if u == v:
            return Polyline((self.configurations[u].location,))
        return self.paths[(u, v)]


@dataclass
class DPTable:
    """Per-stage best cost ``F_star[i][j]`` and predecessor index ``arg[i][j]``."""

    F_star: list[np.ndarray]
    arg: list[np.ndarray]


@dataclass
class Solution:
    path: Polyline
    total_length: float
    goals: list[Point]
    chosen: list[int | None]
    configurations: list[Configuration | None]
    counts: list[int]
    skipped: list[int]
    ups_call_count: int
    timings_ms: dict[str, float]
    order: list[int] = field(default_factory=list)
    objective: float = 0.0
    dp: DPTable | None = None
    table: ReconfigTable | None = None


def _ms(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


def _check_pair(c1: Configuration, c2: Configuration) -> None:
    if c1.base != c2.base:
        raise ValueError(f"configurations have different bases: {c1.base} != {c2.base}")


def tr(c1: Configuration, c2: Configuration, world: GridWorld, L: float | None = None) -> Polyline:
    """Optimal tethered reconfiguration motion from ``c1`` to ``c2``."""
    _check_pair(c1, c2)
    if L is not None:
        for c in (c1, c2):
            if c.tether_length > L + 1e-9:
                raise ValueError(f"configuration at {c.location} is not admissible for L={L}")
    loop = concat(reverse(c1.tether), c2.tether)
    return Polyline(taut(loop.points, world, CFREE_MASK))


def min_required_tether(c1: Configuration, c2: Configuration) -> float:
    _check_pair(c1, c2)
    return max(c1.tether_length, c2.tether_length)


def induced_tether_profile(c1: Configuration, motion: Polyline, world: GridWorld) -> list[tuple[int, float]]:
    """Tether length at each vertex of ``motion`` when the tether is dragged from ``c1``.

    Along a straight move the length is a convex function of the position,
    so the vertex samples bound the whole motion.
    """
    if motion.start != c1.location:
        raise ValueError(f"motion starts at {motion.start}, configuration is at {c1.location}")
    tether = c1.tether.points
    out = [(0, c1.tether_length)]
    for s in range(1, len(motion)):
        tether = extend_taut(tether, motion[s], world, CFREE_MASK)
        out.append((s, Polyline(tether).length))
    return out


def induced_tether(c1: Configuration, motion: Polyline, world: GridWorld) -> Polyline:
    tether = c1.tether.points
    for q in motion.points[1:]:
        tether = extend_taut(tether, q, world, CFREE_MASK)
    return Polyline(tether)


def tp(c1: Configuration, goal: Point, L: float, world: GridWorld, configs: GCPResult | None = None) -> Solution:
    """Shortest admissible motion from configuration ``c1`` to ``goal``."""
    t0 = time.perf_counter()
    goal = (int(goal[0]), int(goal[1]))
    if not world.in_bounds(goal):
        raise ValueError(f"goal {goal} is out of bounds")
    if configs is None:
        configs = gcp(world, c1.base, [goal], L)
    gcp_ms = _ms(t0)
    cands = configs[0]
    if not cands:
        raise UnreachableGoalError([goal])
    t1 = time.perf_counter()
    paths = [tr(c1, c, world) for c in cands]
    ups_ms = _ms(t1)
    t2 = time.perf_counter()
    lengths = [p.length for p in paths]
    j = int(np.argmin(lengths))
    comb_ms = _ms(t2)
    return Solution(
        path=paths[j],
        total_length=lengths[j],
        goals=[goal],
        chosen=[j],
        configurations=[cands[j]],
        counts=[len(cands)],
        skipped=[],
        ups_call_count=len(cands),
        timings_ms={"gcp_ms": gcp_ms, "ups_ms": ups_ms, "combinatorial_ms": comb_ms, "total_ms": _ms(t0)},
        objective=lengths[j],
    )


def _reachable(configs: GCPResult, on_unreachable: str) -> list[int]:
    if on_unreachable not in ("skip", "fail"):
        raise ValueError(f"on_unreachable must be 'skip' or 'fail', got {on_unreachable!r}")
    if configs.unreachable and on_unreachable == "fail":
        raise UnreachableGoalError([configs.goals[i] for i in configs.unreachable])
    return [i for i in range(len(configs)) if configs[i]]


def tmv_ups_count(counts: Sequence[int]) -> int:
    counts = [n for n in counts if n > 0]
    return sum(counts[i] * counts[i + 1] for i in range(len(counts) - 1))


def ttsp_ups_count(counts: Sequence[int]) -> int:
    return sum(counts) ** 2 - sum(n * n for n in counts)


def dp_solve(first: np.ndarray, legs: Sequence[np.ndarray], last: np.ndarray) -> tuple[float, list[int], DPTable]:
    """Min over one index per stage of ``first[j1] + sum legs[i][j_i, j_i+1] + last[j_N]``.

    Ties go to the smallest index.
    """
    F = [np.asarray(first, dtype=float)]
    arg = [np.zeros(len(first), dtype=int)]
    for leg in legs:
        total = F[-1][:, None] + leg
        k = np.argmin(total, axis=0)
        arg.append(k)
        F.append(total[k, np.arange(total.shape[1])])
    final = F[-1] + last
    j = int(np.argmin(final))
    F.append(np.array([final[j]]))
    arg.append(np.array([j]))
    choice = [j]
    for i in range(len(legs), 0, -1):
        choice.append(int(arg[i][choice[-1]]))
    choice.reverse()
    return float(final[j]), choice, DPTable(F, arg)


def _empty_solution(base: Point, goals, configs: GCPResult, skipped, gcp_ms, t0) -> Solution:
    return Solution(
        path=Polyline((base,)),
        total_length=0.0,
        goals=list(goals),
        chosen=[None] * len(goals),
        configurations=[None] * len(goals),
        counts=configs.counts,
        skipped=skipped,
        ups_call_count=0,
        timings_ms={"gcp_ms": gcp_ms, "ups_ms": 0.0, "combinatorial_ms": 0.0, "total_ms": _ms(t0)},
    )


def tmv(
    goals: Sequence[Point],
    L: float,
    world: GridWorld,
    on_unreachable: str = "skip",
    base: Point | None = None,
    configs: GCPResult | None = None,
) -> Solution:
    """Shortest home-to-home motion visiting ``goals`` in the given order."""
    if base is None:
        raise ValueError("tmv needs the base point")
    if not goals:
        raise ValueError("tmv needs at least one goal")
    t0 = time.perf_counter()
    base = (int(base[0]), int(base[1]))
    goals = [(int(g[0]), int(g[1])) for g in goals]
    if configs is None:
        configs = gcp(world, base, goals, L)
    gcp_ms = _ms(t0)
    keep = _reachable(configs, on_unreachable)
    skipped = [i for i in range(len(goals)) if i not in keep]
    if not keep:
        return _empty_solution(base, goals, configs, skipped, gcp_ms, t0)

    t1 = time.perf_counter()
    stages = [configs[i] for i in keep]
    offsets = np.cumsum([0] + [len(s) for s in stages])
    flat = [c for s in stages for c in s]
    cost = np.full((len(flat), len(flat)), np.inf)
    paths: dict[tuple[int, int], Polyline] = {}
    legs = []
    calls = 0
    for i in range(len(stages) - 1):
        leg = np.empty((len(stages[i]), len(stages[i + 1])))
        for k, ck in enumerate(stages[i]):
            for j, cj in enumerate(stages[i + 1]):
                p = tr(ck, cj, world)
                calls += 1
                leg[k, j] = p.length
                u, v = offsets[i] + k, offsets[i + 1] + j
                cost[u, v] = leg[k, j]
                paths[(u, v)] = p
        legs.append(leg)
    ups_ms = _ms(t1)

    t2 = time.perf_counter()
    first = np.array([c.tether_length for c in stages[0]])
    last = np.array([c.tether_length for c in stages[-1]])
    objective, choice, dp = dp_solve(first, legs, last)
    path = stages[0][choice[0]].tether
    for i in range(len(stages) - 1):
        path = concat(path, paths[(offsets[i] + choice[i], offsets[i + 1] + choice[i + 1])])
    path = concat(path, reverse(stages[-1][choice[-1]].tether))
    comb_ms = _ms(t2)

    chosen: list[int | None] = [None] * len(goals)
    chosen_cfg: list[Configuration | None] = [None] * len(goals)
    for i, j in zip(keep, choice):
        chosen[i] = j
        chosen_cfg[i] = configs[i][j]
    assert calls == tmv_ups_count(configs.counts)
    return Solution(
        path=path,
        total_length=path.length,
        goals=goals,
        chosen=chosen,
        configurations=chosen_cfg,
        counts=configs.counts,
        skipped=skipped,
        ups_call_count=calls,
        timings_ms={"gcp_ms": gcp_ms, "ups_ms": ups_ms, "combinatorial_ms": comb_ms, "total_ms": _ms(t0)},
        order=list(keep),
        objective=objective,
        dp=dp,
        table=ReconfigTable(flat, [list(range(offsets[i], offsets[i + 1])) for i in range(len(stages))], cost, paths),
    )


def gtsp_solve(blocks: ReconfigTable, start: int) -> list[int]:
    """Exact generalized TSP tour from ``start`` through one node of every other cluster and back.

    Subset dynamic programming over clusters; ties go to the smallest node id.
    """
    cost = blocks.cost
    home = next((k for k, cl in enumerate(blocks.clusters) if start in cl), None)
    if home is None:
        raise ValueError(f"start node {start} is in no cluster")
    others = [cl for k, cl in enumerate(blocks.clusters) if k != home]
    if any(not cl for cl in others):
        raise InfeasibleError("a cluster has no configuration")
    if not others:
        return [start, start]
    m = len(others)
    n = cost.shape[0]
    full = (1 << m) - 1
    dp = np.full((1 << m, n), np.inf)
    back = np.full((1 << m, n), -1, dtype=np.int64)
    for c, cl in enumerate(others):
        dp[1 << c, cl] = cost[start, cl]
        back[1 << c, cl] = start
    for mask in sorted(range(1, full + 1), key=lambda s: (bin(s).count("1"), s)):
        row = dp[mask]
        live = np.nonzero(np.isfinite(row))[0]
        if live.size == 0:
            continue
        for c, cl in enumerate(others):
            if mask & (1 << c):
                continue
            total = row[live][:, None] + cost[np.ix_(live, cl)]
            k = np.argmin(total, axis=0)
            best = total[k, np.arange(len(cl))]
            nm = mask | (1 << c)
            cur = dp[nm, cl]
            better = best < cur
            idx = np.asarray(cl)[better]
            dp[nm, idx] = best[better]
            back[nm, idx] = live[k[better]]
    final = dp[full] + cost[:, start]
    last = int(np.argmin(final))
    if not np.isfinite(final[last]):
        raise InfeasibleError("no finite tour")
    tour = [last]
    mask = full
    node = last
    while True:
        prev = int(back[mask, node])
        c = next(k for k, cl in enumerate(others) if node in cl)
        mask &= ~(1 << c)
        if mask == 0:
            break
        tour.append(prev)
        node = prev
    tour.reverse()
    return [start, *tour, start]


def ttsp(
    goals: Sequence[Point],
    L: float,
    world: GridWorld,
    on_unreachable: str = "skip",
    base: Point | None = None,
    configs: GCPResult | None = None,
) -> Solution:
    """Shortest home-to-home tour visiting every goal once, in any order."""
    if base is None:
        raise ValueError("ttsp needs the base point")
    if not goals:
        raise ValueError("ttsp needs at least one goal")
    t0 = time.perf_counter()
    base = (int(base[0]), int(base[1]))
    goals = [(int(g[0]), int(g[1])) for g in goals]
    if configs is None:
        configs = gcp(world, base, goals, L)
    gcp_ms = _ms(t0)
    keep = _reachable(configs, on_unreachable)
    skipped = [i for i in range(len(goals)) if i not in keep]
    if not keep:
        return _empty_solution(base, goals, configs, skipped, gcp_ms, t0)

    t1 = time.perf_counter()
    home = home_configuration(base)
    flat = [home]
    clusters = [[0]]
    owner = [None]
    for i in keep:
        clusters.append(list(range(len(flat), len(flat) + len(configs[i]))))
        flat.extend(configs[i])
        owner.extend([i] * len(configs[i]))
    n = len(flat)
    cost = np.full((n, n), np.inf)
    paths: dict[tuple[int, int], Polyline] = {}
    for u in range(1, n):
        paths[(0, u)] = flat[u].tether
        paths[(u, 0)] = reverse(flat[u].tether)
        cost[0, u] = cost[u, 0] = flat[u].tether_length
    calls = 0
    for u in range(1, n):
        for v in range(u + 1, n):
            if owner[u] == owner[v]:
                continue
            p = tr(flat[u], flat[v], world)
            calls += 1
            paths[(u, v)] = p
            paths[(v, u)] = reverse(p)
            cost[u, v] = cost[v, u] = p.length
    ups_ms = _ms(t1)

    t2 = time.perf_counter()
    table = ReconfigTable(flat, clusters, cost, paths)
    tour = gtsp_solve(table, 0)
    objective = float(sum(cost[tour[k], tour[k + 1]] for k in range(len(tour) - 1)))
    path = Polyline((base,))
    for k in range(len(tour) - 1):
        path = concat(path, table.path(tour[k], tour[k + 1]))
    comb_ms = _ms(t2)

    chosen: list[int | None] = [None] * len(goals)
    chosen_cfg: list[Configuration | None] = [None] * len(goals)
    order = []
    for node in tour[1:-1]:
        i = owner[node]
        order.append(i)
        chosen[i] = node - clusters[keep.index(i) + 1][0]
        chosen_cfg[i] = flat[node]
    counts = [configs.counts[i] for i in keep]
    log.info("ttsp: %d unique tr calls for %d ordered pairs", calls, ttsp_ups_count(counts))
    return Solution(
        path=path,
        total_length=path.length,
        goals=goals,
        chosen=chosen,
        configurations=chosen_cfg,
        counts=configs.counts,
        skipped=skipped,
        ups_call_count=ttsp_ups_count(counts),
        timings_ms={"gcp_ms": gcp_ms, "ups_ms": ups_ms, "combinatorial_ms": comb_ms, "total_ms": _ms(t0)},
        order=order,
        objective=objective,
        table=table,
    )
