import numpy as np
import pytest

from voxagent.blocks import AIR, BEDROCK, BLOCK_ID, GRASS, STONE
from voxagent.knowledge import default_kb
from voxagent.world import AgentState, Env, World, WorldConfig


@pytest.fixture(scope="session")
def kb():
    return default_kb()


def make_world(blocks, seed: int = 0) -> World:
    blocks = np.ascontiguousarray(blocks, dtype=np.uint8)
    X, Y, Z = blocks.shape
    surface = np.zeros((X, Z), dtype=np.int16)
    for x in range(X):
        for z in range(Z):
            solid = np.nonzero(blocks[x, :, z] != AIR)[0]
            surface[x, z] = solid.max() if solid.size else 0
    cfg = WorldConfig(seed=seed, dims=(X, Y, Z), ore_bands={}, surface_y=int(min(max(4, surface.max()), Y - 3)))
    return World(cfg, blocks, np.zeros(blocks.shape, dtype=np.int16), {}, [],
                 np.zeros((X, Z), dtype=np.int8), surface, np.random.default_rng(seed), kb=default_kb())


def flat_blocks(dims=(32, 16, 32), ground: int = 4):
    """Bedrock floor, stone up to ``ground - 1`` and a grass top at ``ground``."""
    b = np.zeros(dims, dtype=np.uint8)
    b[:, 0, :] = BEDROCK
    b[:, 1:ground, :] = STONE
    b[:, ground, :] = GRASS
    return b


def flat_env(dims=(32, 16, 32), ground: int = 4, at=(16, 16), inventory=None, blocks=None):
    b = flat_blocks(dims, ground) if blocks is None else blocks
    w = make_world(b)
    agent = AgentState(position=(at[0] + 0.5, float(ground + 1), at[1] + 0.5), inventory=dict(inventory or {}))
    return Env(w, agent)


def put(world: World, cell, name: str) -> None:
    world.blocks[tuple(cell)] = BLOCK_ID[name]
