"""Deterministic voxel world: generation, primitive controls, ticks and sensing."""

from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import lidar
from .blocks import (
    AIR,
    BEDROCK,
    BLOCK_ID,
    BLOCK_NAMES,
    DIRT,
    ENTITY_DROPS,
    ENTITY_HEALTH,
    ENTITY_KINDS,
    GRASS,
    LAVA,
    LEAVES,
    LOG,
    NON_SOLID,
    PLACEABLE,
    SAND,
    STONE,
    UNBREAKABLE,
    WATER,
    attack_damage,
)
from .knowledge import KnowledgeBase, default_kb

REACH = 4.0
PICKUP_RADIUS = 1
WANDER_PROB = 0.05
SNAPSHOT_MAGIC = b"VOXW"
SNAPSHOT_VERSION = 1

DEFAULT_ORE_BANDS = {
    "coal_ore": (40, 56, 0.004),
    "iron_ore": (49, 57, 0.004),
    "lapis_ore": (14, 22, 0.0004),
    "gold_ore": (20, 30, 0.0005),
    "redstone_ore": (8, 16, 0.001),
    "diamond_ore": (10, 12, 0.0005),
}

DEFAULT_BIOMES = (
    {"name": "forest", "x": (0, 128), "z": (0, 128)},
    {"name": "plains", "x": (128, 256), "z": (0, 128)},
    {"name": "hills", "x": (0, 128), "z": (128, 256)},
    {"name": "forest", "x": (128, 256), "z": (128, 256)},
)

# per-column densities: trees, boulders, animals, ponds
BIOME_FEATURES = {
    "forest": (0.03, 0.002, 0.001, 0.0),
    "plains": (0.003, 0.002, 0.004, 0.0004),
    "hills": (0.008, 0.012, 0.002, 0.0),
}

CARDINALS = ((0, 1), (1, 0), (0, -1), (-1, 0))  # indexed by yaw // 90


class ConfigError(ValueError):
    pass


class TickBudgetExceeded(RuntimeError):
    """The episode tick budget ran out."""


@dataclass
class WorldConfig:
    seed: int = 0
    dims: tuple[int, int, int] = (256, 64, 256)
    ore_bands: dict = field(default_factory=lambda: dict(DEFAULT_ORE_BANDS))
    biome_layout: tuple = DEFAULT_BIOMES
    hazard_lava: bool = False
    surface_y: int = 57

    def validate(self) -> "WorldConfig":
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed: must be an unsigned integer, got {self.seed!r}")
        if len(self.dims) != 3 or any(int(d) <= 0 for d in self.dims):
            raise ConfigError(f"dims: all extents must be positive, got {self.dims!r}")
        ymax = self.dims[1]
        for name, band in self.ore_bands.items():
            if name not in BLOCK_ID:
                raise ConfigError(f"ore_bands.{name}: unknown block kind")
            lo, hi, density = band
            if not 0 <= lo <= hi < ymax:
                raise ConfigError(f"ore_bands.{name}: need 0 <= y_min <= y_max < {ymax}, got {band!r}")
            if not 0 < density <= 1:
                raise ConfigError(f"ore_bands.{name}: density must be in (0, 1], got {density!r}")
        if not 4 <= self.surface_y < ymax - 2:
            raise ConfigError(f"surface_y: must lie in [4, {ymax - 3}], got {self.surface_y}")
        for region in self.biome_layout:
            if region.get("name") not in BIOME_FEATURES:
                raise ConfigError(f"biome_layout: unknown biome {region.get('name')!r}")
        return self

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "dims": list(self.dims),
            "ore_bands": {k: list(v) for k, v in sorted(self.ore_bands.items())},
            "biome_layout": [
                {"name": r["name"], "x": list(r["x"]), "z": list(r["z"])} for r in self.biome_layout
            ],
            "hazard_lava": self.hazard_lava,
            "surface_y": self.surface_y,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "WorldConfig":
        known = {"seed", "dims", "ore_bands", "biome_layout", "hazard_lava", "surface_y"}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"{sorted(extra)[0]}: unknown config field")
        kwargs = dict(raw)
        if "dims" in kwargs:
            kwargs["dims"] = tuple(int(d) for d in kwargs["dims"])
        if "ore_bands" in kwargs:
            kwargs["ore_bands"] = {k: tuple(v) for k, v in kwargs["ore_bands"].items()}
        if "biome_layout" in kwargs:
            kwargs["biome_layout"] = tuple(
                {"name": r["name"], "x": tuple(r["x"]), "z": tuple(r["z"])} for r in kwargs["biome_layout"]
            )
        return cls(**kwargs).validate()

    @classmethod
    def load(cls, path: str | Path) -> "WorldConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))


@dataclass
class Entity:
    id: int
    kind: str
    pos: tuple[int, int, int]
    health: int
    sheared: bool = False


@dataclass
class World:
    config: WorldConfig
    blocks: np.ndarray
    entity_grid: np.ndarray
    entities: dict[int, Entity]
    item_drops: list[list]
    biome_map: np.ndarray
    surface: np.ndarray
    rng: np.random.Generator
    tick_count: int = 0
    next_entity_id: int = 0
    kb: KnowledgeBase = field(default_factory=default_kb, repr=False)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.blocks.shape

    def in_bounds(self, c) -> bool:
        x, y, z = c
        X, Y, Z = self.blocks.shape
        return 0 <= x < X and 0 <= y < Y and 0 <= z < Z

    def block(self, c) -> int:
        return int(self.blocks[c]) if self.in_bounds(c) else BEDROCK

    def is_open(self, c) -> bool:
        """Cell an agent body can occupy."""
        return self.in_bounds(c) and self.blocks[c] == AIR and self.entity_grid[c] == 0

    def is_solid(self, c) -> bool:
        return self.in_bounds(c) and int(self.blocks[c]) not in NON_SOLID

    def biome(self, x: int, z: int) -> str:
        X, _, Z = self.blocks.shape
        x = min(max(int(x), 0), X - 1)
        z = min(max(int(z), 0), Z - 1)
        return _BIOME_LIST[int(self.biome_map[x, z])]

    def add_entity(self, kind: str, pos) -> Entity:
        ent = Entity(self.next_entity_id, kind, tuple(int(v) for v in pos), ENTITY_HEALTH[kind])
        self.next_entity_id += 1
        self.entities[ent.id] = ent
        self.entity_grid[ent.pos] = ent.id + 1
        return ent

    def remove_entity(self, ent_id: int) -> None:
        ent = self.entities.pop(ent_id)
        self.entity_grid[ent.pos] = 0

    def spawn_drop(self, cell, item: str, count: int = 1) -> None:
        x, y, z = cell
        while y > 0 and not self.is_solid((x, y - 1, z)):
            y -= 1
        self.item_drops.append([int(x), int(y), int(z), item, int(count)])


_BIOME_LIST = tuple(BIOME_FEATURES)


@dataclass
class AgentState:
    position: tuple[float, float, float]
    yaw: float = 0.0
    pitch: float = 0.0
    health: int = 20
    inventory: dict[str, int] = field(default_factory=dict)
    equipped: str | None = None
    ground_status: str = "on_ground"
    dig_anchor: tuple[int, int, int] | None = None
    airborne: bool = False

    @property
    def cell(self) -> tuple[int, int, int]:
        x, y, z = self.position
        return (math.floor(x), int(round(y)), math.floor(z))

    @property
    def head_cell(self) -> tuple[int, int, int]:
        x, y, z = self.cell
        return (x, y + 1, z)

    @property
    def eye(self) -> tuple[float, float, float]:
        x, y, z = self.cell
        return (x + lidar.EYE_OFFSET[0], y + lidar.EYE_OFFSET[1], z + lidar.EYE_OFFSET[2])

    def move_to(self, cell) -> None:
        x, y, z = cell
        self.position = (x + 0.5, float(y), z + 0.5)

    def count(self, item: str) -> int:
        return self.inventory.get(item, 0)

    def add_item(self, item: str, n: int = 1) -> None:
        self.inventory[item] = self.inventory.get(item, 0) + n

    def remove_item(self, item: str, n: int = 1) -> bool:
        have = self.inventory.get(item, 0)
        if have < n:
            return False
        if have == n:
            del self.inventory[item]
            if self.equipped == item:
                self.equipped = None
        else:
            self.inventory[item] = have - n
        return True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["position"] = list(self.position)
        d["inventory"] = dict(sorted(self.inventory.items()))
        d["dig_anchor"] = list(self.dig_anchor) if self.dig_anchor else None
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "AgentState":
        raw = dict(raw)
        raw["position"] = tuple(raw["position"])
        if raw.get("dig_anchor") is not None:
            raw["dig_anchor"] = tuple(raw["dig_anchor"])
        return cls(**raw)


@dataclass
class Observation:
    ray_yaw: np.ndarray
    ray_pitch: np.ndarray
    hit_dist: np.ndarray
    hit_name: np.ndarray
    hit_cell: np.ndarray
    hit_entity: np.ndarray
    voxel_patch: np.ndarray
    patch_origin: tuple[int, int, int]
    inventory: dict[str, int]
    biome: str
    y_level: int
    ground_status: str

    @property
    def lidar_hits(self) -> list[tuple[int, int, float, str]]:
        return [
            (int(y), int(p), float(d), str(n))
            for y, p, d, n in zip(self.ray_yaw, self.ray_pitch, self.hit_dist, self.hit_name)
        ]

    def visible_names(self) -> set[str]:
        return set(self.hit_name.tolist()) - {"none"}

    def rays_matching(self, names) -> np.ndarray:
        return np.nonzero(np.isin(self.hit_name, list(names)))[0]

    def patch_labels(self) -> np.ndarray:
        names = np.array(("void",) + BLOCK_NAMES, dtype=object)
        return names[self.voxel_patch.astype(np.int64) + 1]


# -- generation ---------------------------------------------------------------


def _smooth_noise(rng: np.random.Generator, X: int, Z: int, cell: int) -> np.ndarray:
    gx, gz = X // cell + 2, Z // cell + 2
    grid = rng.uniform(-1.0, 1.0, size=(gx, gz))
    xs = np.arange(X) / cell
    zs = np.arange(Z) / cell
    x0 = np.floor(xs).astype(int)
    z0 = np.floor(zs).astype(int)
    fx = (xs - x0)[:, None]
    fz = (zs - z0)[None, :]
    a = grid[x0][:, z0]
    b = grid[x0 + 1][:, z0]
    c = grid[x0][:, z0 + 1]
    d = grid[x0 + 1][:, z0 + 1]
    return (a * (1 - fx) + b * fx) * (1 - fz) + (c * (1 - fx) + d * fx) * fz


def _place_tree(blocks: np.ndarray, x: int, s: int, z: int, height: int) -> None:
    X, Y, Z = blocks.shape
    top = s + height
    for dy, radius in ((height - 1, 2), (height, 2), (height + 1, 1), (height + 2, 0)):
        y = s + dy
        if y >= Y:
            continue
        x0, x1 = max(x - radius, 0), min(x + radius + 1, X)
        z0, z1 = max(z - radius, 0), min(z + radius + 1, Z)
        sl = blocks[x0:x1, y, z0:z1]
        sl[sl == AIR] = LEAVES
    blocks[x, s + 1 : min(top + 1, Y), z] = LOG


def generate_world(config: WorldConfig | None = None, kb: KnowledgeBase | None = None) -> World:
    """Build a world fully determined by ``config`` (and its seed)."""
    config = (config or WorldConfig()).validate()
    kb = kb or default_kb()
    rng = np.random.default_rng(config.seed)
    X, Y, Z = config.dims
    s0 = config.surface_y

    noise = _smooth_noise(rng, X, Z, 24) + 0.5 * _smooth_noise(rng, X, Z, 8)
    surface = np.clip(np.rint(s0 + 0.5 + 1.6 * noise), max(s0 - 1, 3), min(s0 + 2, Y - 3)).astype(np.int16)

    biome_map = np.zeros((X, Z), dtype=np.int8)
    biome_map[:] = _BIOME_LIST.index("plains")
    for region in config.biome_layout:
        (x0, x1), (z0, z1) = region["x"], region["z"]
        biome_map[max(x0, 0) : min(x1, X), max(z0, 0) : min(z1, Z)] = _BIOME_LIST.index(region["name"])

    ys = np.arange(Y)[None, :, None]
    s = surface[:, None, :]
    blocks = np.where(ys < s - 2, STONE, np.where(ys < s, DIRT, np.where(ys == s, GRASS, AIR)))
    blocks = np.ascontiguousarray(blocks, dtype=np.uint8)
    blocks[:, 0, :] = BEDROCK

    # ore veins, confined to their bands and to stone
    neighbours = np.array([(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)])
    for name in sorted(config.ore_bands):
        lo, hi, density = config.ore_bands[name]
        ore = BLOCK_ID[name]
        centre, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        for y in range(lo, hi + 1):
            p = density * (1.0 - abs(y - centre) / (half + 1.0))
            seeds = np.argwhere(rng.random((X, Z)) < p)
            if seeds.size == 0:
                continue
            cells = [np.column_stack([seeds[:, 0], np.full(len(seeds), y), seeds[:, 1]])]
            sizes = rng.integers(0, 4, size=len(seeds))
            prev = cells[0]
            for k in range(3):
                step = neighbours[rng.integers(0, 6, size=len(seeds))]
                nxt = prev + step
                nxt[:, 1] = np.clip(nxt[:, 1], lo, hi)
                cells.append(nxt[sizes > k])
                prev = nxt
            allc = np.concatenate(cells)
            allc[:, 0] = np.clip(allc[:, 0], 0, X - 1)
            allc[:, 2] = np.clip(allc[:, 2], 0, Z - 1)
            target = blocks[allc[:, 0], allc[:, 1], allc[:, 2]]
            keep = allc[target == STONE]
            blocks[keep[:, 0], keep[:, 1], keep[:, 2]] = ore

    if config.hazard_lava:
        pockets = np.argwhere(rng.random((X, Z)) < 0.002)
        for x, z in pockets:
            y = int(rng.integers(4, min(16, Y - 1)))
            blocks[x, y, z] = LAVA

    feats = np.array([BIOME_FEATURES[b] for b in _BIOME_LIST])[biome_map]  # (X, Z, 4)
    roll = rng.random((X, Z, 4))
    margin = np.zeros((X, Z), dtype=bool)
    margin[3 : X - 3, 3 : Z - 3] = True

    for x, z in np.argwhere((roll[..., 3] < feats[..., 3]) & margin):
        sy = int(surface[x, z])
        for dx in range(-3, 4):
            for dz in range(-3, 4):
                r2 = dx * dx + dz * dz
                cx, cz = x + dx, z + dz
                if r2 <= 4:
                    blocks[cx, sy, cz] = WATER
                    blocks[cx, sy + 1 :, cz] = AIR
                elif r2 <= 9 and blocks[cx, sy, cz] == GRASS:
                    blocks[cx, sy, cz] = SAND

    occupied = np.zeros((X, Z), dtype=bool)
    for x, z in np.argwhere((roll[..., 0] < feats[..., 0]) & margin):
        sy = int(surface[x, z])
        if blocks[x, sy, z] != GRASS or occupied[x - 2 : x + 3, z - 2 : z + 3].any():
            continue
        occupied[x, z] = True
        _place_tree(blocks, int(x), sy, int(z), 4 + int(rng.integers(0, 2)))

    for x, z in np.argwhere((roll[..., 1] < feats[..., 1]) & margin):
        sy = int(surface[x, z])
        if occupied[x - 1 : x + 2, z - 1 : z + 2].any() or sy + 3 >= Y:
            continue
        occupied[x : x + 2, z : z + 2] = True
        col = blocks[x : x + 2, sy + 1, z : z + 2]
        col[col == AIR] = STONE
        if blocks[x, sy + 2, z] == AIR:
            blocks[x, sy + 2, z] = STONE

    world = World(
        config=config,
        blocks=blocks,
        entity_grid=np.zeros(blocks.shape, dtype=np.int16),
        entities={},
        item_drops=[],
        biome_map=biome_map,
        surface=surface,
        rng=rng,
        kb=kb,
    )
    kinds = rng.integers(0, len(ENTITY_KINDS), size=(X, Z))
    for x, z in np.argwhere((roll[..., 2] < feats[..., 2]) & margin):
        sy = int(surface[x, z])
        c = (int(x), sy + 1, int(z))
        if blocks[x, sy, z] == GRASS and world.is_open(c):
            world.add_entity(ENTITY_KINDS[int(kinds[x, z])], c)
    return world


def spawn_agent(world: World, near: tuple[int, int] | None = None) -> AgentState:
    """Place an agent on the first standable surface column spiralling out from ``near``."""
    X, Y, Z = world.dims
    cx, cz = near if near is not None else (X // 2, Z // 2)
    for r in range(0, max(X, Z)):
        for dx in range(-r, r + 1):
            for dz in range(-r, r + 1):
                if max(abs(dx), abs(dz)) != r:
                    continue
                x, z = cx + dx, cz + dz
                if not (0 <= x < X and 0 <= z < Z):
                    continue
                sy = int(world.surface[x, z])
                feet = (x, sy + 1, z)
                if world.blocks[x, sy, z] == GRASS and world.is_open(feet) and world.is_open((x, sy + 2, z)):
                    agent = AgentState(position=(0.0, 0.0, 0.0))
                    agent.move_to(feet)
                    return agent
    raise RuntimeError("no standable surface cell")


# -- sensing ------------------------------------------------------------------


def observe(world: World, agent: AgentState) -> Observation:
    yaws, pitches, _, _, _ = lidar.ray_table()
    idx, cell, kind, ent = lidar.cast_rays(world.blocks, world.entity_grid, agent.head_cell)
    dist = lidar.hit_distances(idx)

    names = np.array(("none",) + BLOCK_NAMES, dtype=object)[kind.astype(np.int64) + 1]
    for i in np.nonzero(ent >= 0)[0]:
        names[i] = world.entities[int(ent[i])].kind

    R = lidar.PATCH_RADIUS
    x, y, z = agent.cell
    X, Y, Z = world.dims
    patch = np.full((2 * R + 1,) * 3, -1, dtype=np.int16)
    lo = (x - R, y - R, z - R)
    src = tuple(slice(max(c - R, 0), min(c + R + 1, n)) for c, n in zip((x, y, z), (X, Y, Z)))
    dst = tuple(slice(s.start - l, s.stop - l) for s, l in zip(src, lo))
    patch[dst] = world.blocks[src]

    return Observation(
        ray_yaw=yaws,
        ray_pitch=pitches,
        hit_dist=dist,
        hit_name=names,
        hit_cell=cell,
        hit_entity=ent,
        voxel_patch=patch,
        patch_origin=lo,
        inventory=dict(agent.inventory),
        biome=world.biome(x, z),
        y_level=y,
        ground_status=agent.ground_status,
    )


def camera_target(world: World, agent: AgentState, reach: float = REACH):
    """What the crosshair points at within ``reach``.

    Returns ``None`` or a tuple ``(kind, cell, previous_cell, distance, entity_id)``
    where kind is "block" or "entity".
    """
    eye = agent.eye
    prev = agent.head_cell
    for cell, t in lidar.traverse(eye, lidar.direction(agent.yaw, agent.pitch), reach):
        if not world.in_bounds(cell):
            return None
        eid = int(world.entity_grid[cell]) - 1
        if eid >= 0:
            return ("entity", cell, prev, t, eid)
        if world.blocks[cell] != AIR:
            return ("block", cell, prev, t, -1)
        prev = cell
    return None


# -- primitives ---------------------------------------------------------------


PRIMITIVE_KINDS = (
    "move_forward",
    "strafe_left",
    "strafe_right",
    "move_back",
    "jump",
    "turn",
    "attack_click",
    "use_click",
    "place_block",
    "select",
)


@dataclass(frozen=True)
class Primitive:
    kind: str
    dyaw: float = 0.0
    dpitch: float = 0.0
    item: str | None = None

    def __post_init__(self):
        if self.kind not in PRIMITIVE_KINDS:
            raise ValueError(f"unknown primitive {self.kind!r}")


def facing(yaw: float) -> tuple[int, int]:
    return CARDINALS[int(round(yaw / 90.0)) % 4]


def _body_cells(agent: AgentState):
    feet = agent.cell
    return (feet, (feet[0], feet[1] + 1, feet[2]))


def _settle(world: World, agent: AgentState) -> None:
    x, y, z = agent.cell
    while y > 0 and not world.is_solid((x, y - 1, z)):
        y -= 1
    agent.move_to((x, y, z))
    agent.airborne = False


def _move(world: World, agent: AgentState, d: tuple[int, int], events: list) -> None:
    x, y, z = agent.cell
    feet = (x + d[0], y, z + d[1])
    head = (feet[0], y + 1, feet[2])
    if world.is_open(feet) and world.is_open(head):
        agent.move_to(feet)
        events.append({"type": "moved", "to": list(feet)})
    else:
        events.append({"type": "noop", "reason": "blocked"})


def _attack(world: World, agent: AgentState, events: list) -> None:
    target = camera_target(world, agent)
    if target is None:
        events.append({"type": "noop", "reason": "nothing in reach"})
        return
    kind, cell, _, _, eid = target
    if kind == "entity":
        ent = world.entities[eid]
        ent.health -= attack_damage(agent.equipped)
        events.append({"type": "hit", "entity": eid, "health": ent.health})
        if ent.health <= 0:
            world.remove_entity(eid)
            for item, n in ENTITY_DROPS[ent.kind].items():
                if not (item == "wool" and ent.sheared):
                    world.spawn_drop(cell, item, n)
            events.append({"type": "killed", "entity": eid, "kind": ent.kind, "cell": list(cell)})
        return
    block = int(world.blocks[cell])
    name = BLOCK_NAMES[block]
    if block in UNBREAKABLE:
        events.append({"type": "noop", "reason": "unbreakable", "block": name})
        return
    need = world.kb.block_tiers.get(name, 0)
    have = world.kb.tool_tier(agent.equipped)
    if have < need:
        events.append({"type": "noop", "reason": "insufficient tool tier", "block": name})
        return
    world.blocks[cell] = AIR
    drop = world.kb.block_drops.get(name)
    if drop:
        world.spawn_drop(cell, drop)
    events.append({"type": "broken", "block": name, "cell": list(cell), "drop": drop})


def _use(world: World, agent: AgentState, events: list) -> None:
    target = camera_target(world, agent)
    item = agent.equipped
    if target is None or item is None:
        events.append({"type": "noop", "reason": "nothing to use"})
        return
    kind, cell, prev, _, eid = target
    if item == "bucket" and kind == "block" and world.blocks[cell] == WATER:
        world.blocks[cell] = AIR
        agent.remove_item("bucket")
        agent.add_item("water_bucket")
        events.append({"type": "used", "item": item, "result": "water_bucket"})
    elif item == "water_bucket" and kind == "block" and world.is_open(prev) and prev not in _body_cells(agent):
        world.blocks[prev] = WATER
        agent.remove_item("water_bucket")
        agent.add_item("bucket")
        events.append({"type": "used", "item": item, "result": "bucket"})
    elif item == "shears" and kind == "entity" and world.entities[eid].kind == "sheep":
        ent = world.entities[eid]
        if ent.sheared:
            events.append({"type": "noop", "reason": "already sheared"})
        else:
            ent.sheared = True
            world.spawn_drop(cell, "wool")
            events.append({"type": "used", "item": item, "result": "wool"})
    elif item == "shield":
        events.append({"type": "used", "item": item, "result": "blocking"})
    else:
        events.append({"type": "noop", "reason": f"{item} has no effect"})


def _place(world: World, agent: AgentState, item: str | None, events: list) -> None:
    if item is None or item not in PLACEABLE or agent.count(item) < 1:
        events.append({"type": "noop", "reason": "nothing to place"})
        return
    target = camera_target(world, agent)
    if target is None or target[0] != "block":
        events.append({"type": "noop", "reason": "no face to place against"})
        return
    prev = target[2]
    if not world.is_open(prev) or prev in _body_cells(agent):
        events.append({"type": "noop", "reason": "invalid placement"})
        return
    world.blocks[prev] = BLOCK_ID[item]
    agent.remove_item(item)
    events.append({"type": "placed", "item": item, "cell": list(prev)})


def apply_primitive(world: World, agent: AgentState, primitive: Primitive) -> list[dict]:
    """Apply one low-level control; invalid requests become ``noop`` events."""
    events: list[dict] = []
    k = primitive.kind
    if k in ("move_forward", "move_back", "strafe_left", "strafe_right"):
        turn = {"move_forward": 0, "strafe_right": 90, "move_back": 180, "strafe_left": 270}[k]
        _move(world, agent, facing(agent.yaw + turn), events)
    elif k == "jump":
        x, y, z = agent.cell
        grounded = world.is_solid((x, y - 1, z))
        if not agent.airborne and grounded and world.is_open((x, y + 2, z)):
            agent.move_to((x, y + 1, z))
            agent.airborne = True
            events.append({"type": "jumped"})
            return events
        events.append({"type": "noop", "reason": "cannot jump"})
    elif k == "turn":
        agent.yaw = (agent.yaw + primitive.dyaw) % 360.0
        agent.pitch = min(90.0, max(-90.0, agent.pitch + primitive.dpitch))
        events.append({"type": "turned", "yaw": agent.yaw, "pitch": agent.pitch})
    elif k == "attack_click":
        _attack(world, agent, events)
    elif k == "use_click":
        _use(world, agent, events)
    elif k == "place_block":
        _place(world, agent, primitive.item, events)
    elif k == "select":
        if primitive.item is None or agent.count(primitive.item) > 0:
            agent.equipped = primitive.item
            events.append({"type": "selected", "item": primitive.item})
        else:
            events.append({"type": "noop", "reason": "not in inventory"})
    _settle(world, agent)
    return events


def _wander(world: World) -> None:
    ents = list(world.entities.values())
    if not ents:
        return
    rolls = world.rng.random(len(ents))
    movers = [e for e, r in zip(ents, rolls) if r < WANDER_PROB]
    if not movers:
        return
    dirs = world.rng.integers(0, 4, size=len(movers))
    for ent, di in zip(movers, dirs):
        dx, dz = CARDINALS[int(di)]
        x, y, z = ent.pos
        for dy in (0, 1, -1):
            c = (x + dx, y + dy, z + dz)
            if world.is_open(c) and world.is_solid((c[0], c[1] - 1, c[2])):
                if dy == 1 and not world.is_open((x, y + 1, z)):
                    continue
                world.entity_grid[ent.pos] = 0
                ent.pos = c
                world.entity_grid[c] = ent.id + 1
                break


def _pickup(world: World, agent: AgentState) -> None:
    if not world.item_drops:
        return
    fx, fy, fz = agent.cell
    keep = []
    for drop in world.item_drops:
        x, y, z, item, n = drop
        if abs(x - fx) <= PICKUP_RADIUS and abs(z - fz) <= PICKUP_RADIUS and fy - PICKUP_RADIUS <= y <= fy + 1 + PICKUP_RADIUS:
            agent.add_item(item, n)
        else:
            keep.append(drop)
    world.item_drops[:] = keep


def tick(world: World, agent: AgentState | None = None) -> World:
    """Advance one step: entities wander, then nearby drops are picked up."""
    world.tick_count += 1
    _wander(world)
    if agent is not None:
        _pickup(world, agent)
    return world


# -- snapshots ----------------------------------------------------------------


def world_to_bytes(world: World) -> bytes:
    header = {
        "version": SNAPSHOT_VERSION,
        "config": world.config.to_dict(),
        "tick_count": world.tick_count,
        "next_entity_id": world.next_entity_id,
        "entities": [
            [e.id, e.kind, list(e.pos), e.health, e.sheared] for e in world.entities.values()
        ],
        "item_drops": world.item_drops,
        "rng": world.rng.bit_generator.state,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    body = zlib.compress(world.blocks.tobytes(), 6)
    extra = zlib.compress(world.biome_map.tobytes() + world.surface.tobytes(), 6)
    return SNAPSHOT_MAGIC + struct.pack("<III", len(head), len(body), len(extra)) + head + body + extra


def world_from_bytes(data: bytes, kb: KnowledgeBase | None = None) -> World:
    if data[:4] != SNAPSHOT_MAGIC:
        raise ValueError("not a world snapshot")
    nh, nb, ne = struct.unpack("<III", data[4:16])
    off = 16
    header = json.loads(data[off : off + nh])
    if header["version"] != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {header['version']}")
    config = WorldConfig.from_dict(header["config"])
    X, Y, Z = config.dims
    blocks = np.frombuffer(zlib.decompress(data[off + nh : off + nh + nb]), dtype=np.uint8).reshape(X, Y, Z).copy()
    extra = zlib.decompress(data[off + nh + nb : off + nh + nb + ne])
    biome_map = np.frombuffer(extra[: X * Z], dtype=np.int8).reshape(X, Z).copy()
    surface = np.frombuffer(extra[X * Z :], dtype=np.int16).reshape(X, Z).copy()
    rng = np.random.default_rng()
    rng.bit_generator.state = header["rng"]
    world = World(
        config=config,
        blocks=blocks,
        entity_grid=np.zeros(blocks.shape, dtype=np.int16),
        entities={},
        item_drops=[list(d) for d in header["item_drops"]],
        biome_map=biome_map,
        surface=surface,
        rng=rng,
        tick_count=header["tick_count"],
        next_entity_id=header["next_entity_id"],
        kb=kb or default_kb(),
    )
    for eid, kind, pos, health, sheared in header["entities"]:
        ent = Entity(eid, kind, tuple(pos), health, sheared)
        world.entities[eid] = ent
        world.entity_grid[ent.pos] = eid + 1
    return world


# -- episode environment --------------------------------------------------------


class Env:
    """A world, its agent and the episode tick budget."""

    def __init__(self, world: World, agent: AgentState, tick_limit: int | None = None):
        self.world = world
        self.agent = agent
        self.tick_limit = tick_limit
        self.milestones: dict[str, int] = {}
        self._note()

    @property
    def ticks_left(self) -> float:
        if self.tick_limit is None:
            return math.inf
        return self.tick_limit - self.world.tick_count

    def _note(self) -> None:
        for item, n in self.agent.inventory.items():
            if n > 0 and item not in self.milestones:
                self.milestones[item] = self.world.tick_count

    def _check_budget(self) -> None:
        if self.tick_limit is not None and self.world.tick_count >= self.tick_limit:
            raise TickBudgetExceeded(f"tick limit {self.tick_limit} reached")

    def step(self, primitive: Primitive) -> list[dict]:
        self._check_budget()
        events = apply_primitive(self.world, self.agent, primitive)
        tick(self.world, self.agent)
        self._note()
        return events

    def wait(self) -> None:
        """Spend one tick without acting (inventory-only operations)."""
        self._check_budget()
        tick(self.world, self.agent)
        self._note()

    def observe(self) -> Observation:
        return observe(self.world, self.agent)

    def state(self) -> dict:
        x, y, z = self.agent.cell
        return {
            "inventory": dict(sorted(self.agent.inventory.items())),
            "biome": self.world.biome(x, z),
            "y_level": y,
            "ground_status": self.agent.ground_status,
        }
