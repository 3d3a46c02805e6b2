"""Structured actions grounded into world primitives."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lidar
from .blocks import AIR, BLOCK_ID, BLOCK_NAMES, ENTITY_KINDS, PLACEABLE, TIER_NAMES, UNBREAKABLE, tier_of_pickaxe
from .knowledge import KnowledgeBase, craft_units
from .pathfinding import Grid, Move, plan_path_astar
from .world import REACH, Env, Observation, Primitive, facing

STEP_CAP = 10_000
NODE_SIZE = 20
BRANCH = 16
MAX_PILLAR_SEARCH = 8
BLUEPRINT_DIR = Path(__file__).parent / "data" / "blueprints"

ACTION_NAMES = (
    "equip",
    "explore",
    "approach",
    "mine",
    "attack",
    "dig_down",
    "go_up",
    "build",
    "craft",
    "smelt",
    "apply",
)
ALIASES = {"digdown": "dig_down", "go_back_to_ground": "go_up"}

REASONS = (
    "not_in_inventory",
    "not_visible",
    "no_path",
    "out_of_reach",
    "insufficient_materials",
    "insufficient_tool_tier",
    "step_cap_exceeded",
    "invalid_placement",
    "api_failure",
)

# argument name -> accepted python types; None in the tuple means nullable
SIGNATURES: dict[str, dict[str, tuple]] = {
    "equip": {"object": (str,)},
    "explore": {"object": (str,), "strategy": (str, None)},
    "approach": {"object": (str,)},
    "mine": {"object": (str, dict), "tool": (str, None)},
    "attack": {"object": (str,), "tool": (str, None)},
    "dig_down": {"ylevel": (int,), "tool": (str, None)},
    "go_up": {"tool": (str, None)},
    "build": {"blueprint": (str, list)},
    "craft": {"object": (str, dict), "materials": (dict, None), "tool": (str, None)},
    "smelt": {"object": (str, dict), "materials": (dict, None), "tool": (str, None)},
    "apply": {"object": (str,), "tool": (str,)},
}
OPTIONAL_ARGS = {"strategy", "tool", "materials"}


class ActionError(ValueError):
    """A structured action that does not match its signature."""


@dataclass(frozen=True)
class StructuredAction:
    name: str
    args: dict = field(default_factory=dict)
    expectation: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "args": self.args, "expectation": self.expectation}

    def short(self) -> str:
        inner = ", ".join(f"{k}={json.dumps(v)}" for k, v in self.args.items())
        return f"{self.name}({inner})"


def make_action(name, args=None, expectation: str = "") -> StructuredAction:
    """Validate ``name``/``args`` against the action signatures."""
    if not isinstance(name, str):
        raise ActionError(f"action name must be a string, got {type(name).__name__}")
    canon = ALIASES.get(name.strip(), name.strip())
    if canon not in SIGNATURES:
        raise ActionError(f"unknown action {name!r}; valid actions: {', '.join(ACTION_NAMES)}")
    if args is None:
        args = {}
    if not isinstance(args, dict):
        raise ActionError(f"{canon}: args must be an object, got {type(args).__name__}")
    args = dict(args)
    if canon == "dig_down" and "ylevel" not in args and "object" in args:
        args["ylevel"] = args.pop("object")
    sig = SIGNATURES[canon]
    extra = set(args) - set(sig)
    if extra:
        raise ActionError(f"{canon}: unexpected argument {sorted(extra)[0]!r}")
    out = {}
    for arg, types in sig.items():
        if arg not in args:
            if arg in OPTIONAL_ARGS:
                out[arg] = None
                continue
            raise ActionError(f"{canon}: missing argument {arg!r}")
        val = args[arg]
        if val is None:
            if None not in types:
                raise ActionError(f"{canon}: argument {arg!r} must not be null")
            out[arg] = None
            continue
        if isinstance(val, bool) or not isinstance(val, tuple(t for t in types if t is not None)):
            want = " or ".join("null" if t is None else t.__name__ for t in types)
            raise ActionError(f"{canon}: argument {arg!r} must be {want}, got {type(val).__name__}")
        if isinstance(val, str) and not val.strip() and arg != "strategy":
            raise ActionError(f"{canon}: argument {arg!r} must not be empty")
        if isinstance(val, dict):
            for k, v in val.items():
                if not isinstance(k, str) or not k.strip() or isinstance(v, bool) or not isinstance(v, int) or v < 1:
                    raise ActionError(f"{canon}: argument {arg!r} must map names to positive integers")
            if arg == "object" and len(val) != 1:
                raise ActionError(f"{canon}: argument 'object' must name exactly one item")
        if isinstance(val, list) and arg == "blueprint":
            _blueprint_records(val)
        out[arg] = val
    if not isinstance(expectation, str):
        raise ActionError(f"{canon}: expectation must be a string")
    return StructuredAction(canon, out, expectation)


@dataclass
class ActionResult:
    status: str
    reason: str | None = None
    message: str = ""
    inventory_delta: dict[str, int] = field(default_factory=dict)
    state: dict = field(default_factory=dict)
    steps: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "success"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "reason": self.reason,
            "message": self.message,
            "inventory_delta": dict(sorted(self.inventory_delta.items())),
            "state": self.state,
            "steps": self.steps,
        }


class _Fail(Exception):
    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason
        self.message = message


# -- blueprints ---------------------------------------------------------------


@dataclass(frozen=True)
class Blueprint:
    name: str
    records: tuple[tuple[tuple[int, int, int], str], ...]

    def materials(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for _, block in self.records:
            out[block] = out.get(block, 0) + 1
        return out


def _blueprint_records(raw) -> tuple:
    if not isinstance(raw, list) or not raw:
        raise ActionError("blueprint must be a non-empty list of records")
    recs = []
    for i, r in enumerate(raw):
        try:
            off = (int(r["dx"]), int(r["dy"]), int(r["dz"]))
            block = str(r["block"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ActionError(f"blueprint record {i}: expected dx, dy, dz, block") from exc
        if block not in PLACEABLE:
            raise ActionError(f"blueprint record {i}: {block!r} cannot be placed")
        recs.append((off, block))
    # stable sort keeps in-layer order
    return tuple(sorted(recs, key=lambda r: r[0][1]))


def load_blueprint(source) -> Blueprint:
    """A blueprint from a bundled name, a JSON file path, or a record list."""
    if isinstance(source, list):
        return Blueprint("inline", _blueprint_records(source))
    path = Path(source)
    if not path.suffix:
        path = BLUEPRINT_DIR / f"{source}.json"
    if not path.exists():
        raise ActionError(f"unknown blueprint {source!r}")
    return Blueprint(path.stem, _blueprint_records(json.loads(path.read_text())))


# -- execution context ----------------------------------------------------------


YAW_OF = {(0, 1): 0.0, (1, 0): 90.0, (0, -1): 180.0, (-1, 0): 270.0}
FEET_PITCH = -40.0


def _left(d):
    # right is yaw + 90, matching strafe_right
    return {(0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0), (1, 0): (0, 1)}[d]


def _right(d):
    return (-_left(d)[0], -_left(d)[1])


class Runner:
    """Per-action primitive counter and helpers shared by the action bodies."""

    def __init__(self, env: Env, cap: int = STEP_CAP):
        self.env = env
        self.world = env.world
        self.agent = env.agent
        self.kb: KnowledgeBase = env.world.kb
        self.cap = cap
        self.steps = 0
        self.observations = 0
        self.targets: list = []  # every (kind, cell) an action aimed at

    # primitives
    def step(self, prim: Primitive) -> list[dict]:
        if self.steps >= self.cap:
            raise _Fail("step_cap_exceeded", f"exceeded the preset {self.cap} steps")
        self.steps += 1
        return self.env.step(prim)

    def observe(self) -> Observation:
        self.observations += 1
        return self.env.observe()

    def look(self, yaw: float, pitch: float) -> None:
        a = self.agent
        dyaw = (yaw - a.yaw) % 360.0
        dpitch = pitch - a.pitch
        if dyaw or dpitch:
            self.step(Primitive("turn", dyaw=dyaw, dpitch=dpitch))

    def equip(self, item: str | None) -> None:
        if self.agent.equipped != item:
            self.step(Primitive("select", item=item))

    # names
    def target_names(self, obj: str) -> set[str]:
        """LiDAR hit names that count as an instance of ``obj``."""
        item = self.kb.resolve(obj)
        names = set()
        if item in BLOCK_ID or item in ENTITY_KINDS:
            names.add(item)
        fact = self.kb.facts.get(item)
        if fact is not None:
            names.update(fact.hints.get("blocks", ()))
            if fact.hints.get("mob"):
                names.add(fact.hints["mob"])
            if fact.hints.get("target"):
                names.add(fact.hints["target"])
        return names

    def visible(self, obs: Observation, names) -> np.ndarray:
        rays = obs.rays_matching(names)
        if rays.size:
            below = np.array(self.agent.cell) - (0, 1, 0)
            rays = rays[~np.all(obs.hit_cell[rays] == below, axis=1)]
        return rays

    # movement
    def do_move(self, mv: Move) -> bool:
        if mv.kind == "pillar":
            if self.agent.count("dirt") < 1:
                raise _Fail("insufficient_materials", "no dirt to pillar with")
            self.look(self.agent.yaw, -90.0)
            self.step(Primitive("jump"))
            self.step(Primitive("place_block", item="dirt"))
        else:
            self.look(YAW_OF[mv.direction], self.agent.pitch if abs(self.agent.pitch) < 90 else 0.0)
            if mv.kind == "step_up":
                self.step(Primitive("jump"))
            self.step(Primitive("move_forward"))
        return self.agent.cell == mv.dest

    def navigate(self, goal, *, tolerance: int = 1, horizontal: bool = False, pillars: bool = True,
                 refresh=None, max_rounds: int = 200) -> None:
        """Iterated A* within the local patch until the goal region is reached."""
        for _ in range(max_rounds):
            budget = min(self.agent.count("dirt"), MAX_PILLAR_SEARCH) if pillars else 0
            grid = Grid(self.world.blocks, self.world.entity_grid)
            path = plan_path_astar(grid, self.agent.cell, goal, tolerance=tolerance,
                                   horizontal=horizontal, pillar_budget=budget)
            if path is None:
                raise _Fail("no_path", "no path can be found to walk close to the object")
            if not path.moves:
                return
            for mv in path.moves:
                if not self.do_move(mv):
                    break
            if refresh is not None:
                goal = refresh()
        raise _Fail("no_path", "could not get close to the object")

    def collect_drops(self, near, item: str | None) -> None:
        """Walk to drops of ``item`` that landed near ``near``."""
        for _ in range(4):
            drops = [
                d for d in self.world.item_drops
                if (item is None or d[3] == item) and max(abs(d[0] - near[0]), abs(d[2] - near[2])) <= 2
            ]
            if not drops:
                return
            d = min(drops, key=lambda d: (abs(d[0] - near[0]) + abs(d[1] - near[1]) + abs(d[2] - near[2])))
            try:
                self.navigate((d[0], d[1], d[2]), tolerance=1, max_rounds=5)
            except _Fail:
                if not self.tunnel_to(d[:3]):
                    return
            if d in self.world.item_drops:
                return

    def tunnel_to(self, cell, limit: int = 8) -> bool:
        """Carve straight toward ``cell`` until a drop there would be picked up."""
        if self.kb.tool_tier(self.agent.equipped) < 1:
            return False
        for _ in range(limit):
            x, _, z = self.agent.cell
            if abs(cell[0] - x) <= 1 and abs(cell[2] - z) <= 1:
                return True
            if abs(cell[0] - x) > 1:
                d = (int(np.sign(cell[0] - x)), 0)
            else:
                d = (0, int(np.sign(cell[2] - z)))
            if not advance(self, d):
                return False
        return False

    def break_cell(self, cell) -> str:
        """Aim at an adjacent ``cell`` and break it; returns the outcome kind."""
        yaw, pitch = _aim_adjacent(self.agent, cell)
        self.look(yaw, pitch)
        for ev in self.step(Primitive("attack_click")):
            if ev["type"] == "broken":
                return "broken"
            if ev.get("reason") == "insufficient tool tier":
                return "tier"
        return "blocked"

    def state(self) -> dict:
        return self.env.state()


def _aim_adjacent(agent, cell) -> tuple[float, float]:
    fx, fy, fz = agent.cell
    dx, dy, dz = cell[0] - fx, cell[1] - fy, cell[2] - fz
    if dx == 0 and dz == 0:
        return agent.yaw, (-90.0 if dy < 1 else 90.0)
    yaw = YAW_OF[(int(np.sign(dx)), int(np.sign(dz)))] if dx == 0 or dz == 0 else agent.yaw
    return yaw, (0.0 if dy >= 1 else FEET_PITCH)


# -- action bodies ----------------------------------------------------------------


def _required(r: Runner, item: str | None) -> None:
    if item is not None and r.agent.count(item) < 1:
        raise _Fail("not_in_inventory", f"{item} not in inventory")


def _act_equip(r: Runner, a: StructuredAction) -> str:
    item = r.kb.resolve(a.args["object"])
    _required(r, item)
    r.equip(item)
    return f"equipped {item}"


def _strategy(r: Runner, text: str | None) -> str:
    t = (text or "").lower()
    if "dfs" in t or "under" in t or "tunnel" in t:
        return "dfs"
    if "bfs" in t or "ground" in t or "surface" in t:
        return "bfs"
    return "dfs" if r.agent.ground_status == "underground" else "bfs"


def _act_explore(r: Runner, a: StructuredAction) -> str:
    obj = a.args["object"]
    names = r.target_names(obj)
    if _strategy(r, a.args.get("strategy")) == "dfs":
        dfs_mine_explore(r, names, None)
    else:
        bfs_explore(r, names)
    return f"{obj} is visible"


def bfs_nodes(start_cell, dims, node: int = NODE_SIZE):
    """Chessboard node centres in breadth-first ring order from the start node."""
    X, _, Z = dims
    nx, nz = (X + node - 1) // node, (Z + node - 1) // node
    i0, j0 = start_cell[0] // node, start_cell[2] // node
    out = []
    for ring in range(max(nx, nz)):
        ring_nodes = []
        for i in range(i0 - ring, i0 + ring + 1):
            for j in range(j0 - ring, j0 + ring + 1):
                if max(abs(i - i0), abs(j - j0)) != ring or not (0 <= i < nx and 0 <= j < nz):
                    continue
                c = (min(i * node + node // 2, X - 1), min(j * node + node // 2, Z - 1))
                d = (c[0] - start_cell[0]) ** 2 + (c[1] - start_cell[2]) ** 2
                ring_nodes.append((d, i, j, c))
        out.extend(c for _, _, _, c in sorted(ring_nodes))
    return out


def bfs_explore(r: Runner, names) -> int:
    """Visit chessboard nodes until a ``names`` object is LiDAR-visible.

    Returns the number of node transitions.
    """
    if r.visible(r.observe(), names).size:
        return 0
    transitions = 0
    for cx, cz in bfs_nodes(r.agent.cell, r.world.dims):
        transitions += 1
        goal = (cx, r.agent.cell[1], cz)
        for _ in range(60):
            budget = min(r.agent.count("dirt"), MAX_PILLAR_SEARCH)
            grid = Grid(r.world.blocks, r.world.entity_grid)
            path = plan_path_astar(grid, r.agent.cell, goal, tolerance=1, horizontal=True, pillar_budget=budget)
            if path is None or not path.moves:
                break
            for mv in path.moves:
                if not r.do_move(mv):
                    break
            if r.visible(r.observe(), names).size:
                return transitions
        if r.visible(r.observe(), names).size:
            return transitions
    raise _Fail("step_cap_exceeded", "explored the whole map without finding the object")


def best_pickaxe(r: Runner) -> str | None:
    for tier in reversed(TIER_NAMES[1:]):
        tool = tier_of_pickaxe(tier)
        if r.agent.count(tool):
            return tool
    return None


def advance(r: Runner, d) -> bool:
    """Carve (if needed) the 1x2 tunnel cell ahead in direction ``d`` and step in."""
    x, y, z = r.agent.cell
    feet = (x + d[0], y, z + d[1])
    head = (feet[0], y + 1, feet[2])
    if not r.world.in_bounds(feet) or feet[0] in (0, r.world.dims[0] - 1) or feet[2] in (0, r.world.dims[2] - 1):
        return False
    for cell, pitch in ((head, 0.0), (feet, FEET_PITCH)):
        if r.world.blocks[cell] != AIR:
            if int(r.world.blocks[cell]) in UNBREAKABLE:
                return False
            r.look(YAW_OF[d], pitch)
            r.step(Primitive("attack_click"))
            if r.world.blocks[cell] != AIR:
                return False
    if r.world.entity_grid[feet] or r.world.entity_grid[head]:
        return False
    r.look(YAW_OF[d], r.agent.pitch)
    r.step(Primitive("move_forward"))
    return r.agent.cell[0] == feet[0] and r.agent.cell[2] == feet[2]


def dfs_mine_explore(r: Runner, names, tool: str | None) -> int:
    """Depth-first tunnel lattice at the current level until ``names`` is visible.

    Returns the number of tunnel cells advanced.
    """
    tool = tool or best_pickaxe(r)
    if tool is None:
        raise _Fail("not_in_inventory", "no pickaxe in inventory")
    _required(r, tool)
    r.equip(tool)
    if r.visible(r.observe(), names).size:
        return 0
    advanced = 0
    origin = r.agent.cell
    heading = facing(r.agent.yaw)
    visited = {(0, 0)}

    def walk(d) -> bool:
        nonlocal advanced
        for _ in range(BRANCH):
            if not advance(r, d):
                return False
            advanced += 1
            if r.visible(r.observe(), names).size:
                raise _Found
        return True

    def node_of() -> tuple[int, int]:
        x, _, z = r.agent.cell
        return (round((x - origin[0]) / BRANCH), round((z - origin[2]) / BRANCH))

    def visit(node, d):
        for nd in (_left(d), d, _right(d), (-d[0], -d[1])):
            nxt = (node[0] + nd[0], node[1] + nd[1])
            if nxt in visited:
                continue
            visited.add(nxt)
            ok = walk(nd)
            if ok and node_of() == nxt:
                visit(nxt, nd)
            # return along the tunnel just carved
            back = (-nd[0], -nd[1])
            here = r.agent.cell
            steps_back = abs(here[0] - (origin[0] + node[0] * BRANCH)) + abs(here[2] - (origin[2] + node[1] * BRANCH))
            for _ in range(steps_back):
                if not advance(r, back):
                    break

    try:
        visit((0, 0), heading)
    except _Found:
        return advanced
    raise _Fail("step_cap_exceeded", "tunnel network exhausted without finding the object")


class _Found(Exception):
    pass


def _nearest(r: Runner, obs: Observation, rays: np.ndarray) -> int:
    cells = obs.hit_cell[rays] + 0.5
    eye = np.array(r.agent.eye)
    d = np.linalg.norm(cells - eye, axis=1)
    return int(rays[int(np.argmin(d))])


def _in_reach(r: Runner, cell) -> bool:
    return float(np.linalg.norm(np.asarray(cell) + 0.5 - np.asarray(r.agent.eye))) <= REACH


APPROACH_TRIES = 3


def _act_approach(r: Runner, a: StructuredAction) -> str:
    obj = a.args["object"]
    names = r.target_names(obj)
    obs = r.observe()
    rays = r.visible(obs, names)
    if rays.size == 0:
        raise _Fail("not_visible", f"there is no visible {obj}")
    eid = int(obs.hit_entity[_nearest(r, obs, rays)])
    if eid >= 0:
        ray = _nearest(r, obs, rays)
        cell = tuple(int(v) for v in obs.hit_cell[ray])
        r.targets.append((str(obs.hit_name[ray]), cell))

        def refresh():
            ent = r.world.entities.get(eid)
            return ent.pos if ent else cell

        r.navigate(cell, tolerance=1, refresh=refresh)
        return f"approached {obj}"

    # blocks: rank by distance, penalising cells high above the feet
    cells = obs.hit_cell[rays]
    feet = r.agent.cell[1]
    score = np.linalg.norm(cells + 0.5 - np.asarray(r.agent.eye), axis=1) + 2.0 * np.maximum(0, cells[:, 1] - feet - 2)
    seen = []
    for i in np.argsort(score, kind="stable"):
        cell = tuple(int(v) for v in cells[i])
        if cell not in seen:
            seen.append(cell)
        if len(seen) == APPROACH_TRIES:
            break
    for cell in seen:
        if _in_reach(r, cell):
            r.targets.append((BLOCK_NAMES[r.world.block(cell)], cell))
            return f"approached {obj}"
        try:
            r.navigate(cell, tolerance=1, horizontal=True)
        except _Fail:
            continue
        if _in_reach(r, cell):
            r.targets.append((BLOCK_NAMES[r.world.block(cell)], cell))
            return f"approached {obj}"
    raise _Fail("no_path", "no path can be found to walk close to the object")


def _mine_item(r: Runner, obj) -> tuple[str, int]:
    if isinstance(obj, dict):
        (name, count), = obj.items()
        return r.kb.resolve(name), count
    return r.kb.resolve(obj), 1


def _act_mine(r: Runner, a: StructuredAction) -> str:
    item, count = _mine_item(r, a.args["object"])
    names = {n for n in r.target_names(item) if n in BLOCK_ID}
    if not names:
        raise _Fail("api_failure", f"{item} is not a block that can be mined")
    tool = a.args.get("tool")
    tool = r.kb.resolve(tool) if tool else None
    _required(r, tool)
    have = r.kb.tool_tier(tool) if tool else r.kb.tool_tier(r.agent.equipped)
    need = min(r.kb.block_tiers.get(n, 0) for n in names)
    if have < need:
        raise _Fail("insufficient_tool_tier", f"{item} cannot be mined with {tool or 'bare hands'}; a {TIER_NAMES[need]} pickaxe or better is needed")
    if tool:
        r.equip(tool)
    drop_names = {r.kb.block_drops.get(n) for n in names}
    drop_item = item if item in drop_names else next(iter(sorted(d for d in drop_names if d)), item)
    start = r.agent.count(drop_item)
    broken = 0
    while r.agent.count(drop_item) - start < count and broken < 3 * count:
        obs = r.observe()
        rays = r.visible(obs, names)
        if rays.size == 0:
            if broken:
                raise _Fail("not_visible", f"mined {broken} {item}, but there is no more visible {item}")
            raise _Fail("not_visible", f"there is no visible {item}")
        reach = rays[obs.hit_dist[rays] <= REACH]
        reach = reach[[r.kb.block_tiers.get(str(obs.hit_name[i]), 0) <= r.kb.tool_tier(r.agent.equipped) for i in reach]] if reach.size else reach
        if reach.size == 0:
            if broken:
                raise _Fail("out_of_reach", f"mined {broken} {item}, the remaining visible {item} is out of reach")
            raise _Fail("out_of_reach", f"the visible {item} is out of reach")
        ray = int(reach[np.argmin(obs.hit_dist[reach])])
        cell = tuple(int(v) for v in obs.hit_cell[ray])
        r.targets.append((str(obs.hit_name[ray]), cell))
        r.look(float(obs.ray_yaw[ray]), float(obs.ray_pitch[ray]))
        events = r.step(Primitive("attack_click"))
        if not any(ev["type"] == "broken" for ev in events):
            raise _Fail("api_failure", f"failed to break {item}: {events[0].get('reason', 'unknown')}")
        broken += 1
        r.collect_drops(cell, drop_item)
    return f"mined {broken} {item}"


def _act_attack(r: Runner, a: StructuredAction) -> str:
    obj = r.kb.resolve(a.args["object"])
    names = {n for n in r.target_names(obj) if n in ENTITY_KINDS}
    if not names:
        raise _Fail("api_failure", f"{obj} is not a creature that can be attacked")
    tool = a.args.get("tool")
    tool = r.kb.resolve(tool) if tool else None
    _required(r, tool)
    if tool:
        r.equip(tool)
    obs = r.observe()
    rays = r.visible(obs, names)
    if rays.size == 0:
        raise _Fail("not_visible", f"there is no visible {obj}")
    eid = int(obs.hit_entity[_nearest(r, obs, rays)])
    while True:
        ent = r.world.entities.get(eid)
        if ent is None:
            break
        obs = r.observe()
        hits = np.nonzero((obs.hit_entity == eid) & (obs.hit_dist <= REACH))[0]
        if hits.size == 0:
            if not np.any(obs.hit_entity == eid):
                raise _Fail("not_visible", f"lost sight of the {ent.kind}")
            r.navigate(ent.pos, tolerance=1, max_rounds=3, refresh=lambda: r.world.entities[eid].pos if eid in r.world.entities else ent.pos)
            continue
        ray = int(hits[np.argmin(obs.hit_dist[hits])])
        r.targets.append((ent.kind, ent.pos))
        r.look(float(obs.ray_yaw[ray]), float(obs.ray_pitch[ray]))
        last = ent.pos
        r.step(Primitive("attack_click"))
        if eid not in r.world.entities:
            r.collect_drops(last, None)
            break
    return f"killed the {obj}"


def _act_dig_down(r: Runner, a: StructuredAction) -> str:
    target = int(a.args["ylevel"])
    tool = a.args.get("tool")
    tool = r.kb.resolve(tool) if tool else None
    _required(r, tool)
    if tool:
        r.equip(tool)
    ag = r.agent
    if ag.cell[1] <= target:
        return f"already at y-level {ag.cell[1]}"
    if ag.ground_status == "on_ground":
        ag.dig_anchor = ag.cell
    ag.ground_status = "underground"
    while ag.cell[1] > target:
        x, y, z = ag.cell
        below = (x, y - 1, z)
        block = r.world.block(below)
        if block in UNBREAKABLE:
            raise _Fail("api_failure", f"cannot dig through {BLOCK_NAMES[block]} at y-level {y - 1}")
        if r.break_cell(below) == "tier":
            raise _Fail("insufficient_tool_tier", f"{BLOCK_NAMES[block]} cannot be dug with {tool or 'bare hands'}")
        r.collect_drops(below, None)
    return f"reached y-level {ag.cell[1]}"


def _act_go_up(r: Runner, a: StructuredAction) -> str:
    ag = r.agent
    tool = a.args.get("tool")
    tool = r.kb.resolve(tool) if tool else None
    _required(r, tool)
    if ag.ground_status == "on_ground":
        return "already on the ground"
    anchor = ag.dig_anchor
    if anchor is None:
        raise _Fail("api_failure", "no stored location to go back to")
    need = anchor[1] - ag.cell[1]
    if ag.count("dirt") < need:
        raise _Fail("insufficient_materials", f"need {need} dirt to go up, have {ag.count('dirt')}")
    if tool:
        r.equip(tool)
    for axis in (0, 2):
        while ag.cell[axis] != anchor[axis]:
            d = (int(np.sign(anchor[0] - ag.cell[0])), 0) if axis == 0 else (0, int(np.sign(anchor[2] - ag.cell[2])))
            if not advance(r, d):
                raise _Fail("no_path", "the way back to the stored location is blocked")
    while ag.cell[1] < anchor[1]:
        x, y, z = ag.cell
        above = (x, y + 2, z)
        if r.world.block(above) != AIR:
            if r.break_cell(above) != "broken":
                raise _Fail("no_path", "the way up is blocked")
        if ag.count("dirt") < 1:
            raise _Fail("insufficient_materials", "ran out of dirt while going up")
        r.look(ag.yaw, -90.0)
        r.step(Primitive("jump"))
        r.step(Primitive("place_block", item="dirt"))
        if ag.cell[1] != y + 1:
            raise _Fail("api_failure", "failed to pillar up")
    ag.ground_status = "on_ground"
    ag.dig_anchor = None
    return f"back on the ground at y-level {ag.cell[1]}"


def _place_rays(r: Runner, target) -> np.ndarray:
    """Ray indices whose crosshair would place a block into ``target``."""
    _, _, offsets, dist, _ = lidar.ray_table()
    idx, cell, kind, ent = lidar.cast_rays(r.world.blocks, r.world.entity_grid, r.agent.head_cell)
    ok = (idx >= 1) & (ent < 0)
    rows = np.nonzero(ok)[0]
    prev = offsets[rows, idx[rows] - 1] + np.array(r.agent.head_cell)
    hit_d = dist[rows, idx[rows]]
    good = np.all(prev == np.array(target), axis=1) & (hit_d <= REACH)
    return rows[good]


def _act_build(r: Runner, a: StructuredAction) -> str:
    try:
        bp = load_blueprint(a.args["blueprint"])
    except ActionError as exc:
        raise _Fail("api_failure", str(exc)) from exc
    anchor = r.agent.cell
    yaws, pitches, _, _, _ = lidar.ray_table()
    placed = 0

    def try_place(target, block) -> bool:
        rays = _place_rays(r, target)
        if rays.size == 0:
            try:
                r.navigate(target, tolerance=2, pillars=False, max_rounds=5)
            except _Fail:
                pass
            rays = _place_rays(r, target)
        if rays.size == 0:
            return False
        ray = int(rays[0])
        r.look(float(yaws[ray]), float(pitches[ray]))
        return r.step(Primitive("place_block", item=block))[0]["type"] == "placed"

    layers: dict[int, list] = {}
    for off, block in bp.records:
        layers.setdefault(off[1], []).append((off, block))
    for dy in sorted(layers):
        # outermost first: corners get hidden once both of their neighbours are down
        pending = sorted(layers[dy], key=lambda rec: -(rec[0][0] ** 2 + rec[0][2] ** 2))
        while pending:
            deferred = []
            for (dx, _, dz), block in pending:
                target = (anchor[0] + dx, anchor[1] + dy, anchor[2] + dz)
                if not r.world.in_bounds(target):
                    raise _Fail("invalid_placement", f"{block} at {target} is outside the world")
                current = int(r.world.blocks[target])
                if current == BLOCK_ID[block]:
                    continue
                if r.agent.count(block) < 1:
                    raise _Fail("insufficient_materials", f"placed {placed} blocks, no {block} left in inventory")
                if current != AIR or target in (r.agent.cell, r.agent.head_cell):
                    raise _Fail("invalid_placement", f"cannot place {block} at {target}")
                if try_place(target, block):
                    placed += 1
                else:
                    deferred.append(((dx, dy, dz), block))
            if len(deferred) == len(pending):
                (dx, _, dz), block = deferred[0]
                target = (anchor[0] + dx, anchor[1] + dy, anchor[2] + dz)
                raise _Fail("invalid_placement", f"no face to place {block} against at {target}")
            pending = deferred
    return f"built {bp.name} with {placed} blocks"


def _act_craft(r: Runner, a: StructuredAction) -> str:
    item, count = _mine_item(r, a.args["object"])
    rec = r.kb.recipes.get(item)
    if rec is None:
        raise _Fail("api_failure", f"there is no recipe for {item}")
    if rec.station != a.name:
        raise _Fail("api_failure", f"{item} must be obtained by {rec.station}, not {a.name}")
    if rec.tool:
        _required(r, rec.tool)
    made = 0
    for _ in range(craft_units(rec, count)):
        missing = {m: n - r.agent.count(m) for m, n in rec.materials.items() if r.agent.count(m) < n}
        if missing:
            lack = ", ".join(f"{n} {m}" for m, n in sorted(missing.items()))
            got = f"; crafted {made} {item} before running out" if made else ""
            raise _Fail("insufficient_materials", f"not enough materials, need {lack} more{got}")
        for m, n in rec.materials.items():
            r.agent.remove_item(m, n)
        r.agent.add_item(item, rec.output_count)
        made += rec.output_count
        r.steps += 1
        r.env.wait()
    return f"{'smelted' if a.name == 'smelt' else 'crafted'} {made} {item}"


def _act_apply(r: Runner, a: StructuredAction) -> str:
    obj = r.kb.resolve(a.args["object"])
    tool = r.kb.resolve(a.args["tool"])
    _required(r, tool)
    r.equip(tool)
    names = r.target_names(obj)
    obs = r.observe()
    rays = r.visible(obs, names)
    if rays.size == 0:
        raise _Fail("not_visible", f"there is no visible {obj}")
    near = rays[obs.hit_dist[rays] <= REACH]
    if near.size == 0:
        ray = _nearest(r, obs, rays)
        r.navigate(tuple(int(v) for v in obs.hit_cell[ray]), tolerance=1)
        obs = r.observe()
        rays = r.visible(obs, names)
        near = rays[obs.hit_dist[rays] <= REACH] if rays.size else rays
        if near.size == 0:
            raise _Fail("out_of_reach", f"the visible {obj} is out of reach")
    ray = int(near[np.argmin(obs.hit_dist[near])])
    r.targets.append((str(obs.hit_name[ray]), tuple(int(v) for v in obs.hit_cell[ray])))
    r.look(float(obs.ray_yaw[ray]), float(obs.ray_pitch[ray]))
    events = r.step(Primitive("use_click"))
    if events[0]["type"] != "used":
        raise _Fail("api_failure", f"applying {tool} on {obj} failed: {events[0].get('reason', '')}")
    r.collect_drops(tuple(int(v) for v in obs.hit_cell[ray]), None)
    return f"applied {tool} on {obj}"


HANDLERS = {
    "equip": _act_equip,
    "explore": _act_explore,
    "approach": _act_approach,
    "mine": _act_mine,
    "attack": _act_attack,
    "dig_down": _act_dig_down,
    "go_up": _act_go_up,
    "build": _act_build,
    "craft": _act_craft,
    "smelt": _act_craft,
    "apply": _act_apply,
}


def execute(env: Env, action: StructuredAction, *, cap: int = STEP_CAP, runner: Runner | None = None) -> ActionResult:
    """Run one structured action to completion and report the outcome.

    ``TickBudgetExceeded`` from the environment propagates to the caller.
    """
    r = runner or Runner(env, cap)
    before = dict(env.agent.inventory)
    try:
        message = HANDLERS[action.name](r, action)
        status, reason = "success", None
    except _Fail as f:
        status, reason, message = "failure", f.reason, f.message
    after = env.agent.inventory
    delta = {k: after.get(k, 0) - before.get(k, 0) for k in set(before) | set(after)}
    delta = {k: v for k, v in sorted(delta.items()) if v}
    return ActionResult(status, reason, message, delta, env.state(), r.steps)
