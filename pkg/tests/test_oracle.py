import math

import numpy as np
import pytest

from frozen import CASES, SINGLE_GOALS
from tetherplan.gcp import gcp, home_configuration
from tetherplan.gridmap import inflate, load_map, random_rect_world
from tetherplan.homotopy import homotopic
from tetherplan.oracle import (
    BudgetExceeded,
    GoalUnreachable,
    build_workspace,
    config_pool,
    home_tree_path,
    oracle_reconfiguration,
    oracle_tp,
    verify_convexity,
    verify_simply_connected,
)
from tetherplan.planner import tp
from tetherplan.shorten import is_self_crossing

OPEN = load_map("\n".join(["." * 10] * 10))


def test_empty_map_every_cell_once():
    g = build_workspace(OPEN, (0, 0), 20)
    assert g.node_count == 100
    assert len(set(g.cells)) == 100


def test_zero_length_is_home_only():
    g = build_workspace(OPEN, (4, 4), 0)
    assert g.node_count == 1
    assert g.configuration(0) == home_configuration((4, 4))


def test_empty_map_disc():
    g = build_workspace(OPEN, (0, 0), 5)
    expected = sum(1 for x in range(10) for y in range(10) if math.hypot(x, y) <= 5 + 1e-9)
    assert g.node_count == expected


@pytest.mark.parametrize("name,base,goals,L,nodes,counts", CASES)
def test_frozen_node_counts(fixture_world, name, base, goals, L, nodes, counts):
    g = build_workspace(fixture_world(name), base, L)
    assert g.node_count == nodes
    assert [len(g.goal_slice(q)) for q in goals] == counts


def test_nodes_are_admissible(fixture_world):
    w = fixture_world("two_blocks_20.txt")
    g = build_workspace(w, (1, 1), 25)
    for i in range(0, g.node_count, 7):
        c = g.configuration(i)
        assert c.tether_length <= 25 + 1e-9
        assert not is_self_crossing(c.tether)
        assert g.find(c) == i


def test_monotone_in_L(fixture_world):
    w = fixture_world("two_blocks_20.txt")
    prev = None
    for L in (10, 25, 40):
        g = build_workspace(w, (1, 1), L)
        keys = {(g.cells[i], g.words[i]) for i in range(g.node_count)}
        if prev is not None:
            assert prev <= keys
        prev = keys


def test_budget_exceeded():
    with pytest.raises(BudgetExceeded):
        build_workspace(OPEN, (0, 0), 20, node_cap=10)


def test_oracle_tp_empty_map():
    g = build_workspace(OPEN, (0, 0), 20)
    home = home_configuration((0, 0))
    r = oracle_tp(g, home, (7, 3))
    assert r.shortened.points == ((0, 0), (7, 3))
    assert r.length == pytest.approx(math.hypot(7, 3))
    assert r.candidates == 1


def test_oracle_tp_unreachable_goal():
    w = load_map("...#...\n...#...\n...#...\n")
    g = build_workspace(w, (0, 0), 20)
    with pytest.raises(GoalUnreachable):
        oracle_tp(g, home_configuration((0, 0)), (6, 0))


def test_oracle_tp_agrees_with_tp(fixture_world):
    w = fixture_world("single_15.txt")
    L = 30
    g = build_workspace(w, (7, 1), L)
    confs = gcp(w, (7, 1), SINGLE_GOALS, L)
    start = confs[1][1]
    for goal in SINGLE_GOALS:
        mine = tp(start, goal, L, w)
        ref = oracle_tp(g, start, goal)
        assert mine.total_length == pytest.approx(ref.length, abs=1e-9)
        assert mine.configurations[0].signature == ref.goal_configuration.signature


def test_reconfiguration_and_home_path(fixture_world):
    w = fixture_world("single_15.txt")
    g = build_workspace(w, (7, 1), 30)
    a, b = g.goal_slice((1, 7))
    motion = oracle_reconfiguration(g, a, b)
    assert motion.start == (1, 7) and motion.end == (1, 7)
    assert not homotopic(motion, type(motion).of([(1, 7)]), w)
    assert homotopic(home_tree_path(g, a), a.tether, w)


def test_verify_convexity_fixture(fixture_world):
    w = fixture_world("four_blocks_20.txt")
    report = verify_convexity(w, (10, 1), 30, samples=150, seed=2)
    assert report.ok and report.pairs == 150 and report.pool > 10
    assert report.max_excess <= 0


@pytest.mark.parametrize("seed", range(4))
def test_verify_convexity_random(seed):
    w = inflate(random_rect_world(40, 6, seed, min_side=3, max_side=8), 1)
    cells = np.argwhere(w.cfree_mask)
    y, x = cells[len(cells) // 2]
    report = verify_convexity(w, (int(x), int(y)), 30, samples=100, seed=seed)
    assert report.ok


def test_verify_simply_connected(fixture_world):
    w = fixture_world("two_blocks_20.txt")
    report = verify_simply_connected(w, (1, 1), 25, samples=60, seed=1)
    assert report.ok and report.agreements == 60


def test_config_pool_is_seeded(fixture_world):
    w = fixture_world("four_blocks_20.txt")
    a = config_pool(w, (10, 1), 30, seed=9)
    b = config_pool(w, (10, 1), 30, seed=9)
    assert a == b and a
