"""``tetherplan`` command line: scenario JSON in, result JSON (and optional SVG) out.

Exit codes: 0 success, 1 usage or format error, 2 unreachable goal in strict
mode, 3 a verifier found violations.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .gcp import Configuration, OutsideFreeSpaceError, gcp, home_configuration
from .gridmap import EmptyWorldError, GridWorld, MapFormatError, inflate, load_map_file
from .homotopy import CurveCollisionError
from .oracle import build_workspace, oracle_tp, verify_convexity, verify_simply_connected
from .planner import Solution, UnreachableGoalError, tmv, tp, tr, ttsp
from .render import render_svg

log = logging.getLogger("tetherplan")

EXIT_OK, EXIT_USAGE, EXIT_UNREACHABLE, EXIT_VIOLATION = 0, 1, 2, 3
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    map_path: Path
    radius: float
    base: tuple[int, int]
    L: float
    goals: list[tuple[int, int]]
    on_unreachable: str = "skip"
    start: dict | None = None
    target: dict | None = None


def _cell(v, what: str) -> tuple[int, int]:
    if not (isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(c, int) for c in v)):
        raise ScenarioError(f"{what} must be [x, y] integers, got {v!r}")
    return (v[0], v[1])


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    missing = [k for k in ("map", "base", "tether_length") if k not in data]
    if missing:
        raise ScenarioError(f"scenario is missing {missing}")
    radius = float(data.get("radius", 0))
    L = float(data["tether_length"])
    if radius < 0 or not math.isfinite(radius):
        raise ScenarioError("radius must be >= 0")
    if L <= 0 or not math.isfinite(L):
        raise ScenarioError("tether_length must be > 0")
    mode = data.get("on_unreachable", "skip")
    if mode not in ("skip", "fail"):
        raise ScenarioError("on_unreachable must be 'skip' or 'fail'")
    return Scenario(
        map_path=(path.parent / data["map"]).resolve(),
        radius=radius,
        base=_cell(data["base"], "base"),
        L=L,
        goals=[_cell(g, "goal") for g in data.get("goals", [])],
        on_unreachable=mode,
        start=data.get("start"),
        target=data.get("target"),
    )


def load_world(sc: Scenario) -> GridWorld:
    world = inflate(load_map_file(sc.map_path), sc.radius)
    for c in [sc.base, *sc.goals]:
        if not world.in_bounds(c):
            raise ScenarioError(f"cell {list(c)} is outside the {world.width}x{world.height} map")
    return world


def _pick(world: GridWorld, sc: Scenario, choice: dict | None, what: str) -> Configuration:
    if choice is None:
        return home_configuration(sc.base, world)
    cell = _cell(choice.get("cell"), f"{what}.cell")
    index = int(choice.get("index", 0))
    confs = gcp(world, sc.base, [cell], sc.L)[0]
    if not confs:
        raise UnreachableGoalError([cell])
    if not 0 <= index < len(confs):
        raise ScenarioError(f"{what} index {index} out of range; {len(confs)} configurations at {list(cell)}")
    return confs[index]


def solution_result(sol: Solution, base, status: str = "ok") -> dict:
    per_goal = []
    for i, g in enumerate(sol.goals):
        c = sol.configurations[i]
        per_goal.append(
            {
                "goal": list(g),
                "n_configs": sol.counts[i],
                "chosen_index": sol.chosen[i],
                "tether_length": None if c is None else c.tether_length,
            }
        )
    return {
        "status": status,
        "total_length": sol.total_length,
        "path": sol.path.to_list(),
        "per_goal": per_goal,
        "skipped": [list(sol.goals[i]) for i in sol.skipped],
        "ups_calls": sol.ups_call_count,
        "timings_ms": {k: round(v, 3) for k, v in sol.timings_ms.items()},
        "base": list(base),
        "goals": [list(g) for g in sol.goals],
        "order": [int(i) for i in sol.order],
        "tethers": [c.tether.to_list() for c in sol.configurations if c is not None],
        "signatures": [None if c is None else c.signature.to_json() for c in sol.configurations],
    }


def _timings(t0: float, **parts: float) -> dict:
    out = {"gcp_ms": 0.0, "ups_ms": 0.0, "combinatorial_ms": 0.0}
    out.update(parts)
    out["total_ms"] = (time.perf_counter() - t0) * 1000.0
    return {k: round(v, 3) for k, v in out.items()}


def cmd_tp(world, sc, args) -> tuple[dict, int]:
    if not sc.goals:
        raise ScenarioError("tp needs one goal")
    start = _pick(world, sc, sc.start, "start")
    sol = tp(start, sc.goals[0], sc.L, world)
    res = solution_result(sol, sc.base)
    res["start"] = start.to_json()
    res["tethers"] = [start.tether.to_list(), *res["tethers"]]
    return res, EXIT_OK


def cmd_tmv(world, sc, args) -> tuple[dict, int]:
    sol = tmv(sc.goals, sc.L, world, args.on_unreachable or sc.on_unreachable, base=sc.base)
    return solution_result(sol, sc.base), EXIT_OK


def cmd_ttsp(world, sc, args) -> tuple[dict, int]:
    sol = ttsp(sc.goals, sc.L, world, args.on_unreachable or sc.on_unreachable, base=sc.base)
    return solution_result(sol, sc.base), EXIT_OK


def cmd_reconfigure(world, sc, args) -> tuple[dict, int]:
    t0 = time.perf_counter()
    c1 = _pick(world, sc, sc.start, "start")
    if sc.target is None:
        raise ScenarioError("reconfigure needs a 'target' {cell, index}")
    c2 = _pick(world, sc, sc.target, "target")
    gcp_ms = (time.perf_counter() - t0) * 1000.0
    t1 = time.perf_counter()
    path = tr(c1, c2, world)
    ups_ms = (time.perf_counter() - t1) * 1000.0
    return {
        "status": "ok",
        "total_length": path.length,
        "path": path.to_list(),
        "per_goal": [{"goal": list(c2.location), "n_configs": None, "chosen_index": (sc.target or {}).get("index", 0), "tether_length": c2.tether_length}],
        "skipped": [],
        "ups_calls": 1,
        "timings_ms": _timings(t0, gcp_ms=gcp_ms, ups_ms=ups_ms),
        "base": list(sc.base),
        "goals": [list(c2.location)],
        "tethers": [c1.tether.to_list(), c2.tether.to_list()],
        "signatures": [c1.signature.to_json(), c2.signature.to_json()],
        "min_required_tether": max(c1.tether_length, c2.tether_length),
    }, EXIT_OK


def cmd_verify_convexity(world, sc, args) -> tuple[dict, int]:
    t0 = time.perf_counter()
    rep = verify_convexity(world, sc.base, sc.L, args.samples, args.seed)
    res = {
        "status": "ok" if rep.ok else "violations",
        "seed": rep.seed,
        "pairs": rep.pairs,
        "pool": rep.pool,
        "max_excess": rep.max_excess if rep.pairs else None,
        "violations": rep.violations,
        "base": list(sc.base),
        "timings_ms": _timings(t0, ups_ms=(time.perf_counter() - t0) * 1000.0),
    }
    return res, EXIT_OK if rep.ok else EXIT_VIOLATION


def cmd_verify_oracle(world, sc, args) -> tuple[dict, int]:
    t0 = time.perf_counter()
    g = build_workspace(world, sc.base, sc.L)
    wp_ms = (time.perf_counter() - t0) * 1000.0
    start = _pick(world, sc, sc.start, "start")
    configs = gcp(world, sc.base, sc.goals, sc.L)
    checks = []
    ok = True
    for i, goal in enumerate(sc.goals):
        mine = [(c.signature.to_json(), c.tether_length) for c in configs[i]]
        theirs = [(c.signature.to_json(), c.tether_length) for c in g.goal_slice(goal)]
        same_sets = [m[0] for m in mine] == [t[0] for t in theirs] and all(
            abs(a[1] - b[1]) <= 1e-6 for a, b in zip(mine, theirs)
        )
        entry = {"goal": list(goal), "gcp_configs": len(mine), "workspace_configs": len(theirs), "sets_equal": same_sets}
        if configs[i]:
            sol = tp(start, goal, sc.L, world)
            o = oracle_tp(g, start, goal)
            entry.update(
                tp_length=sol.total_length,
                oracle_length=o.length,
                lengths_equal=abs(sol.total_length - o.length) <= 1e-6,
                same_class=sol.configurations[0].signature == o.goal_configuration.signature,
            )
            ok &= entry["lengths_equal"] and entry["same_class"]
        ok &= same_sets
        checks.append(entry)
    sc_rep = verify_simply_connected(world, sc.base, sc.L, min(args.samples, 50), args.seed, workspace=g)
    ok &= sc_rep.ok
    res = {
        "status": "ok" if ok else "violations",
        "seed": args.seed,
        "workspace_nodes": g.node_count,
        "goals": checks,
        "simply_connected": {"pairs": sc_rep.pairs, "agreements": sc_rep.agreements, "failures": sc_rep.failures},
        "base": list(sc.base),
        "timings_ms": _timings(t0, combinatorial_ms=wp_ms),
    }
    return res, EXIT_OK if ok else EXIT_VIOLATION


def cmd_workspace_stats(world, sc, args) -> tuple[dict, int]:
    t0 = time.perf_counter()
    g = build_workspace(world, sc.base, sc.L)
    return {
        "status": "ok",
        "workspace_nodes": g.node_count,
        "cfree_cells": int(world.cfree_mask.sum()),
        "obstacle_components": len(world.obstacle_components),
        "per_goal": [{"goal": list(goal), "n_configs": len(g.goal_slice(goal))} for goal in sc.goals],
        "base": list(sc.base),
        "timings_ms": _timings(t0, combinatorial_ms=g.build_ms),
    }, EXIT_OK


COMMANDS = {
    "tp": cmd_tp,
    "tmv": cmd_tmv,
    "ttsp": cmd_ttsp,
    "reconfigure": cmd_reconfigure,
    "verify-convexity": cmd_verify_convexity,
    "verify-oracle": cmd_verify_oracle,
    "workspace-stats": cmd_workspace_stats,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tetherplan", description="Tethered robot planning on occupancy grids.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", help="result JSON file (default: stdout)")
        p.add_argument("--svg", help="write an SVG rendering here")
        if name in ("tmv", "ttsp"):
            p.add_argument("--on-unreachable", choices=("skip", "fail"), default=None)
        if name.startswith("verify"):
            p.add_argument("--samples", type=int, default=1000)
            p.add_argument("--seed", type=int, default=0)
    render = sub.add_parser("render", help="re-render a saved result")
    render.add_argument("--scenario", required=True)
    render.add_argument("--result", required=True)
    render.add_argument("--svg", required=True)
    return parser


def _configure_logging() -> None:
    level = LOG_LEVELS.get(os.environ.get("TETHERPLAN_LOG", "error").lower(), logging.ERROR)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        sc = load_scenario(args.scenario)
        world = load_world(sc)
        if args.command == "render":
            result = json.loads(Path(args.result).read_text())
            Path(args.svg).write_text(render_svg(world, result))
            return EXIT_OK
        result, code = COMMANDS[args.command](world, sc, args)
    except UnreachableGoalError as exc:
        print(f"tetherplan: {exc}", file=sys.stderr)
        result = {"status": "unreachable", "unreachable": [list(g) for g in exc.goals]}
        code = EXIT_UNREACHABLE
        world = None
    except (ScenarioError, MapFormatError, EmptyWorldError, OutsideFreeSpaceError, CurveCollisionError, ValueError, OSError) as exc:
        print(f"tetherplan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = json.dumps(result, indent=2) + "\n"
    _write(args.out, text)
    if args.svg and world is not None:
        # render from the serialized result so a reloaded file gives the same bytes
        Path(args.svg).write_text(render_svg(world, json.loads(text)))
    return code


if __name__ == "__main__":
    sys.exit(main())
