"""A first look at a generated world and what the agent can see from spawn.

Run:  python3 demos/01_world_and_sight.py [seed]
"""

import sys
from collections import Counter

import numpy as np

from voxagent import WorldConfig, generate_world, observe, spawn_agent
from voxagent.blocks import BLOCK_ID

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
world = generate_world(WorldConfig(seed=seed))
agent = spawn_agent(world)
print(f"world {world.dims} from seed {seed}; agent spawns at {agent.cell}")

# ores sit in depth bands; print where each one is densest
for ore in ("coal_ore", "iron_ore", "diamond_ore"):
    per_level = (world.blocks == BLOCK_ID[ore]).sum(axis=(0, 2))
    levels = np.nonzero(per_level)[0]
    print(f"  {ore:<12} levels {levels.min()}-{levels.max()}, densest at y={int(per_level.argmax())}")

# a LiDAR scan only reports surfaces with a clear line of sight
obs = observe(world, agent)
seen = Counter(obs.hit_name.tolist())
print(f"\n{len(obs.hit_name)} rays from the eye; the nearest hit of each kind:")
for name, n in seen.most_common():
    d = obs.hit_dist[obs.hit_name == name].min()
    print(f"  {name:<14}{n:>5} rays   nearest {d:5.1f} blocks")
