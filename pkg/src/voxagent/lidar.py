"""Voxel ray traversal and the LiDAR ray table.

All rays start from the agent's eye, which sits at the centre of the head
cell.  Because the fractional part of the eye position never changes, the
sequence of cells each LiDAR ray crosses can be computed once and reused
by offsetting it to the agent's current head cell.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

ANGLE_STEP = 5
YAWS = tuple(range(0, 360, ANGLE_STEP))
PITCHES = tuple(range(-90, 91, ANGLE_STEP))
N_RAYS = len(YAWS) * len(PITCHES)

LIDAR_RANGE = 30.0
PATCH_RADIUS = 10
EYE_OFFSET = (0.5, 1.5, 0.5)  # relative to the feet cell corner


def direction(yaw: float, pitch: float) -> tuple[float, float, float]:
    """Unit vector for a camera orientation (yaw 0 faces +z, yaw 90 faces +x)."""
    y, p = math.radians(yaw), math.radians(pitch)
    comps = (math.cos(p) * math.sin(y), math.sin(p), math.cos(p) * math.cos(y))
    return tuple(0.0 if abs(c) < 1e-12 else c for c in comps)


def traverse(origin, vec, max_dist: float) -> list[tuple[tuple[int, int, int], float]]:
    """Cells entered by a ray, with the distance at which each is entered.

    The starting cell is not included.  Ties between axes resolve x, y, z.
    """
    cell = [math.floor(c) for c in origin]
    step = [0, 0, 0]
    t_max = [math.inf] * 3
    t_delta = [math.inf] * 3
    for a in range(3):
        d = vec[a]
        if d > 0:
            step[a] = 1
            t_max[a] = (cell[a] + 1 - origin[a]) / d
            t_delta[a] = 1.0 / d
        elif d < 0:
            step[a] = -1
            t_max[a] = (cell[a] - origin[a]) / d
            t_delta[a] = -1.0 / d
    out = []
    while True:
        a = 0
        if t_max[1] < t_max[a]:
            a = 1
        if t_max[2] < t_max[a]:
            a = 2
        t = t_max[a]
        if t > max_dist:
            return out
        cell[a] += step[a]
        t_max[a] += t_delta[a]
        out.append(((cell[0], cell[1], cell[2]), t))


@lru_cache(maxsize=1)
def ray_table():
    """Padded per-ray cell offsets from the head cell, entry distances and validity."""
    origin = (0.5, 0.5, 0.5)
    rays = []
    yaws, pitches = [], []
    for yaw in YAWS:
        for pitch in PITCHES:
            rays.append(traverse(origin, direction(yaw, pitch), LIDAR_RANGE))
            yaws.append(yaw)
            pitches.append(pitch)
    k = max(len(r) for r in rays)
    offsets = np.zeros((N_RAYS, k, 3), dtype=np.int32)
    dist = np.full((N_RAYS, k), np.inf, dtype=np.float64)
    valid = np.zeros((N_RAYS, k), dtype=bool)
    for i, r in enumerate(rays):
        n = len(r)
        offsets[i, :n] = [c for c, _ in r]
        dist[i, :n] = [t for _, t in r]
        valid[i, :n] = True
    for arr in (offsets, dist, valid):
        arr.setflags(write=False)
    return (
        np.array(yaws, dtype=np.int32),
        np.array(pitches, dtype=np.int32),
        offsets,
        dist,
        valid,
    )


def cast_rays(blocks: np.ndarray, entity_grid: np.ndarray, head_cell, chunk: int = 4):
    """First non-air cell along every LiDAR ray.

    Returns ``(index, cell, kind, entity)`` arrays: ``index`` is the position
    along the ray (-1 for no hit), ``cell`` the hit cell, ``kind`` the block
    id, ``entity`` the entity id (-1 when the hit is a block).
    """
    _, _, offsets, _, valid = ray_table()
    dims = np.array(blocks.shape)
    # reshape would silently copy a non-contiguous grid on every call
    if not (blocks.flags.c_contiguous and entity_grid.flags.c_contiguous):
        raise ValueError("grids must be C-contiguous")
    flat_blocks = blocks.reshape(-1)
    flat_ents = entity_grid.reshape(-1)
    sy, sz = blocks.shape[1] * blocks.shape[2], blocks.shape[2]
    head = np.asarray(head_cell, dtype=np.int32)

    n_rays, k = valid.shape
    hit_index = np.full(n_rays, -1, dtype=np.int64)
    active = np.arange(n_rays)
    for start in range(0, k, chunk):
        if active.size == 0:
            break
        stop = min(start + chunk, k)
        cells = offsets[active, start:stop] + head  # (A, C, 3)
        ok = valid[active, start:stop]
        inside = np.all((cells >= 0) & (cells < dims), axis=2)
        idx = np.where(inside, cells[..., 0] * sy + cells[..., 1] * sz + cells[..., 2], 0)
        solid = (flat_blocks[idx] != 0) | (flat_ents[idx] != 0)
        stop_here = ok & (~inside | solid)
        any_stop = stop_here.any(axis=1)
        first = stop_here.argmax(axis=1)
        rows = active[any_stop]
        firsts = first[any_stop]
        hit_ok = inside[any_stop, firsts]
        hit_index[rows[hit_ok]] = start + firsts[hit_ok]
        # rays leaving the world or running past their last cell end here
        ended = any_stop | ~ok[:, -1]
        active = active[~ended]

    has = hit_index >= 0
    cell = np.zeros((n_rays, 3), dtype=np.int32)
    cell[has] = offsets[has, hit_index[has]] + head
    kind = np.full(n_rays, -1, dtype=np.int16)
    ent = np.full(n_rays, -1, dtype=np.int32)
    if has.any():
        c = cell[has]
        kind[has] = blocks[c[:, 0], c[:, 1], c[:, 2]]
        ent[has] = entity_grid[c[:, 0], c[:, 1], c[:, 2]].astype(np.int32) - 1
    return hit_index, cell, kind, ent


def hit_distances(hit_index: np.ndarray) -> np.ndarray:
    _, _, _, dist, _ = ray_table()
    out = np.full(hit_index.shape, LIDAR_RANGE)
    has = hit_index >= 0
    out[has] = dist[np.nonzero(has)[0], hit_index[has]]
    return out
