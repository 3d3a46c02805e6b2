import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bfs_shortest, random_obstacle_grid, standable_cells
from voxagent.blocks import BEDROCK, STONE
from voxagent.pathfinding import Grid, neighbours, plan_path_astar


def corridor(length=10):
    b = np.zeros((length, 6, 3), dtype=np.uint8)
    b[:, 0, :] = BEDROCK
    b[:, 1, :] = STONE
    b[:, 2:, 0] = STONE
    b[:, 2:, 2] = STONE
    return b


def replay(blocks, start, path):
    """Walk the moves and check each one is legal from where the last ended."""
    grid = Grid(blocks)
    cell = tuple(start)
    for mv in path.moves:
        legal = {m.dest: m for m in neighbours(grid, cell, True)}
        assert mv.dest in legal and legal[mv.dest].kind == mv.kind
        cell = mv.dest
    return cell


def test_same_cell_gives_empty_path():
    b = corridor()
    p = plan_path_astar(Grid(b), (0, 2, 1), (0, 2, 1))
    assert p.moves == [] and p.complete


def test_flat_corridor_stops_one_short():
    b = corridor(10)
    p = plan_path_astar(Grid(b), (0, 2, 1), (9, 2, 1))
    assert p.complete and len(p) == 8
    assert bfs_shortest(b, (0, 2, 1), (9, 2, 1)) == 8
    assert replay(b, (0, 2, 1), p) == (8, 2, 1)


def open_column():
    b = np.zeros((5, 12, 5), dtype=np.uint8)
    b[:, 0, :] = BEDROCK
    b[:, 1, :] = STONE
    return b


def test_pillar_three_up_exact_target():
    b = open_column()
    p = plan_path_astar(Grid(b), (2, 2, 2), (2, 5, 2), tolerance=0, pillar_budget=3)
    assert [m.kind for m in p.moves] == ["pillar"] * 3
    assert p.cost == 6


def test_pillar_three_up_default_tolerance():
    # the goal region is any cell within distance 1, so two pillars suffice
    b = open_column()
    p = plan_path_astar(Grid(b), (2, 2, 2), (2, 5, 2), pillar_budget=3)
    assert [m.kind for m in p.moves] == ["pillar"] * 2


def test_pillar_needs_budget():
    b = open_column()
    assert plan_path_astar(Grid(b), (2, 2, 2), (2, 5, 2), tolerance=0, pillar_budget=0) is None


def test_step_up_and_fall_costs():
    b = np.zeros((6, 10, 3), dtype=np.uint8)
    b[:, 0, :] = BEDROCK
    b[:, 1, :] = STONE
    b[2, 2, :] = STONE  # a one-block step
    b[4, 1, :] = 0  # and a hole that is not deep enough to block
    p = plan_path_astar(Grid(b), (0, 2, 1), (5, 2, 1), tolerance=0)
    kinds = [m.kind for m in p.moves]
    assert "step_up" in kinds and "fall" in kinds
    assert p.cost == bfs_shortest(b, (0, 2, 1), (5, 2, 1), tolerance=0)


def test_deep_drop_is_not_taken():
    b = np.zeros((3, 12, 1), dtype=np.uint8)
    b[0, :7, 0] = STONE
    b[2, :7, 0] = STONE
    b[1, 0, 0] = BEDROCK
    # falling from y=7 into the shaft would drop 6 levels
    assert plan_path_astar(Grid(b), (0, 7, 0), (2, 7, 0), tolerance=0, radius=None) is None


def test_partial_path_towards_far_goal():
    b = np.zeros((60, 6, 3), dtype=np.uint8)
    b[:, 0, :] = BEDROCK
    b[:, 1, :] = STONE
    p = plan_path_astar(Grid(b), (0, 2, 1), (50, 2, 1))
    assert not p.complete
    assert p.end[0] == 10  # edge of the radius-10 window


def test_boxed_in_returns_none():
    b = np.full((5, 6, 5), STONE, dtype=np.uint8)
    b[2, 2:4, 2] = 0
    assert plan_path_astar(Grid(b), (2, 2, 2), (2, 2, 4), tolerance=0) is None


@pytest.mark.parametrize("seed", range(15))
def test_matches_bfs_oracle(seed):
    b = random_obstacle_grid(seed, n=16, density=0.35)
    cells = standable_cells(b)
    rng = np.random.default_rng(seed)
    for _ in range(4):
        s = cells[rng.integers(len(cells))]
        g = cells[rng.integers(len(cells))]
        budget = int(rng.integers(0, 3))
        expect = bfs_shortest(b, s, g, pillar_budget=budget)
        got = plan_path_astar(Grid(b), s, g, pillar_budget=budget, radius=None)
        if expect is None:
            assert got is None or not got.complete
        else:
            assert got.complete and got.cost == expect
            end = replay(b, s, got)
            assert max(abs(a - c) for a, c in zip(end, g)) <= 1


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), horizontal=st.booleans(), tol=st.integers(0, 2))
def test_window_agrees_with_full_grid(seed, horizontal, tol):
    b = random_obstacle_grid(seed, n=24, density=0.3)
    cells = standable_cells(b)
    rng = np.random.default_rng(seed)
    s = cells[rng.integers(len(cells))]
    g = cells[rng.integers(len(cells))]
    windowed = plan_path_astar(Grid(b), s, g, tolerance=tol, horizontal=horizontal, radius=6)
    expect = bfs_shortest(b, s, g, tolerance=tol, horizontal=horizontal, radius=6)
    if expect is not None:
        assert windowed.complete and windowed.cost == expect
    else:
        assert windowed is None or not windowed.complete


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_partial_paths_never_move_away(seed):
    b = random_obstacle_grid(seed, n=32, density=0.25)
    cells = standable_cells(b)
    rng = np.random.default_rng(seed)
    s = cells[rng.integers(len(cells))]
    g = (int(rng.integers(32)), int(rng.integers(32)), int(rng.integers(32)))
    p = plan_path_astar(Grid(b), s, g)
    if p is not None and p.moves:
        d = lambda c: max(abs(a - b_) for a, b_ in zip(c, g))  # noqa: E731
        assert d(p.end) < d(s)
        assert max(abs(a - b_) for a, b_ in zip(p.end, s)) <= 10
