"""A* over the agent's local voxel neighbourhood.

The agent occupies a feet cell and the head cell above it and always
stands on a solid cell.  Moves, with their costs:

* ``walk``    one cell N/S/E/W on the same level, cost 1
* ``step_up`` jump onto a block one level higher N/S/E/W, cost 1
* ``fall``    walk off an edge and drop ``k`` levels (k <= MAX_FALL), cost k
* ``pillar``  jump and place a block underneath, cost 2 (consumes one block)

The heuristic is the 3-D Chebyshev distance to the goal region, which
every move above decreases by at most its cost, so it is consistent.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from .blocks import AIR, NON_SOLID
from .lidar import PATCH_RADIUS

DIRS = ((0, 1), (1, 0), (0, -1), (-1, 0))
MAX_FALL = 3
PILLAR_COST = 2


@dataclass(frozen=True)
class Move:
    kind: str
    direction: tuple[int, int] | None
    dest: tuple[int, int, int]
    cost: int


@dataclass
class Path:
    moves: list[Move]
    complete: bool
    end: tuple[int, int, int]

    @property
    def cost(self) -> int:
        return sum(m.cost for m in self.moves)

    def __len__(self) -> int:
        return len(self.moves)


class Grid:
    """Occupancy queries over a block array, with optional entity obstacles."""

    def __init__(self, blocks, entity_grid=None):
        self.blocks = blocks
        self.entities = entity_grid
        self.shape = blocks.shape
        self._open: dict = {}
        self._solid: dict = {}

    def inside(self, c) -> bool:
        return all(0 <= v < n for v, n in zip(c, self.shape))

    def open(self, c) -> bool:
        r = self._open.get(c)
        if r is None:
            r = self.inside(c) and self.blocks[c] == AIR and (self.entities is None or self.entities[c] == 0)
            self._open[c] = r
        return r

    def solid(self, c) -> bool:
        r = self._solid.get(c)
        if r is None:
            r = (not self.inside(c)) or int(self.blocks[c]) not in NON_SOLID
            self._solid[c] = r
        return r

    def standable(self, c) -> bool:
        x, y, z = c
        return self.open(c) and self.open((x, y + 1, z)) and self.solid((x, y - 1, z))

    def window(self, center, radius: int) -> "Window":
        return Window(self, center, radius)


class Window:
    """Flat occupancy masks for every cell a radius-bounded search can query.

    Cells outside the world read as not open and solid, as in :class:`Grid`.
    """

    def __init__(self, grid: Grid, center, radius: int):
        mh, mv = radius + 2, radius + MAX_FALL + 3
        lo = [center[0] - mh, center[1] - mv, center[2] - mh]
        hi = [center[0] + mh + 1, center[1] + mv + 1, center[2] + mh + 1]
        self.origin = lo
        dims = [h - l for l, h in zip(lo, hi)]
        open_m = np.zeros(dims, dtype=bool)
        solid_m = np.ones(dims, dtype=bool)
        src = tuple(slice(max(l, 0), min(h, n)) for l, h, n in zip(lo, hi, grid.shape))
        dst = tuple(slice(sl.start - l, sl.stop - l) for sl, l in zip(src, lo))
        if all(sl.stop > sl.start for sl in src):
            b = grid.blocks[src]
            o = b == AIR
            if grid.entities is not None:
                o &= grid.entities[src] == 0
            open_m[dst] = o
            solid_m[dst] = ~np.isin(b, list(NON_SOLID))
        self.sy = dims[2]
        self.sx = dims[1] * dims[2]
        self._open = open_m.tobytes()
        self._solid = solid_m.tobytes()

    def _i(self, c) -> int:
        o = self.origin
        return (c[0] - o[0]) * self.sx + (c[1] - o[1]) * self.sy + (c[2] - o[2])

    def open(self, c) -> bool:
        return self._open[self._i(c)] == 1

    def solid(self, c) -> bool:
        return self._solid[self._i(c)] == 1


def neighbours(grid: Grid, cell, can_pillar: bool):
    x, y, z = cell
    head_clear = grid.open((x, y + 2, z))
    for dx, dz in DIRS:
        n = (x + dx, y, z + dz)
        if grid.open(n) and grid.open((n[0], y + 1, n[2])):
            k = 0
            while k <= MAX_FALL and not grid.solid((n[0], y - k - 1, n[2])):
                k += 1
            if k == 0:
                yield Move("walk", (dx, dz), n, 1)
            elif k <= MAX_FALL:
                yield Move("fall", (dx, dz), (n[0], y - k, n[2]), k)
        elif head_clear:
            up = (x + dx, y + 1, z + dz)
            if grid.solid(n) and grid.open(up) and grid.open((up[0], y + 2, up[2])):
                yield Move("step_up", (dx, dz), up, 1)
    if can_pillar and head_clear:
        yield Move("pillar", None, (x, y + 1, z), PILLAR_COST)


def _cheb(a, b, horizontal: bool) -> int:
    if horizontal:
        return max(abs(a[0] - b[0]), abs(a[2] - b[2]))
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]), abs(a[2] - b[2]))


def plan_path_astar(
    grid: Grid,
    start,
    goal,
    *,
    tolerance: int = 1,
    horizontal: bool = False,
    pillar_budget: int | None = 0,
    radius: int | None = PATCH_RADIUS,
    max_expansions: int = 200_000,
) -> Path | None:
    """Shortest move sequence from ``start`` into the goal region.

    The goal region is every standable cell within Chebyshev distance
    ``tolerance`` of ``goal`` (measured in x/z only when ``horizontal``).
    The search is confined to cells within ``radius`` of ``start``; if the
    region is not reached there, the path to the explored cell nearest the
    goal is returned with ``complete=False`` as long as it improves on the
    start.  ``pillar_budget=None`` means unlimited pillar blocks.

    Returns ``None`` when no move brings the agent closer.
    """
    start = tuple(int(v) for v in start)
    goal = tuple(int(v) for v in goal)
    if radius is not None and isinstance(grid, Grid):
        grid = grid.window(start, radius)

    def h(c):
        return max(0, _cheb(c, goal, horizontal) - tolerance)

    if h(start) == 0:
        return Path([], True, start)

    # no cell within the radius can get closer than this, so reaching it ends the search
    floor = max(0, _cheb(start, goal, horizontal) - radius - tolerance) if radius is not None else 0

    track_used = pillar_budget is not None and pillar_budget > 0
    counter = itertools.count()
    start_state = (start, 0)
    g_best = {start_state: 0}
    parent: dict = {start_state: None}
    closed_used: dict = {}
    heap = [(h(start), 0, next(counter), start_state)]
    best_state, best_key = start_state, (h(start), 0)
    expansions = 0

    while heap:
        f, g, _, state = heapq.heappop(heap)
        cell, used = state
        if g > g_best.get(state, g):
            continue
        prev_used = closed_used.get(cell)
        if prev_used is not None and prev_used <= used:
            continue
        closed_used[cell] = used
        hc = f - g
        if hc == 0:
            return Path(_unwind(parent, state), True, cell)
        if (hc, g) < best_key:
            best_state, best_key = state, (hc, g)
        if floor and hc == floor:
            break
        expansions += 1
        if expansions > max_expansions:
            break
        can_pillar = pillar_budget is None or used < pillar_budget
        for mv in neighbours(grid, cell, can_pillar):
            if radius is not None and _cheb(mv.dest, start, False) > radius:
                continue
            nu = used + 1 if (mv.kind == "pillar" and track_used) else used
            ns = (mv.dest, nu)
            ng = g + mv.cost
            if ng < g_best.get(ns, 1 << 60):
                pu = closed_used.get(mv.dest)
                if pu is not None and pu <= nu:
                    continue
                g_best[ns] = ng
                parent[ns] = (state, mv)
                heapq.heappush(heap, (ng + h(mv.dest), ng, next(counter), ns))

    if best_state == start_state:
        return None
    return Path(_unwind(parent, best_state), False, best_state[0])


def _unwind(parent, state) -> list[Move]:
    out = []
    while parent[state] is not None:
        state, mv = parent[state]
        out.append(mv)
    out.reverse()
    return out
