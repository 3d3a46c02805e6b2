import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import flat_blocks, flat_env, put
from voxagent import actions
from voxagent.actions import (ActionError, Runner, bfs_explore, dfs_mine_explore, execute, load_blueprint,
                              make_action)
from voxagent.blocks import BLOCK_ID


def run(env, name, args=None, **kw):
    return execute(env, make_action(name, args), **kw)


# -- validation ---------------------------------------------------------------------


def test_aliases_and_defaults():
    a = make_action("digdown", {"ylevel": 11})
    assert a.name == "dig_down" and a.args == {"ylevel": 11, "tool": None}
    assert make_action("go_back_to_ground").name == "go_up"
    assert make_action("mine", {"object": {"log": 3}}).args["tool"] is None


@pytest.mark.parametrize("name, args", [
    ("fly", {}),
    ("mine", {}),
    ("mine", {"object": "log", "colour": "red"}),
    ("dig_down", {"ylevel": "deep"}),
    ("dig_down", {"ylevel": True}),
    ("craft", {"object": {"planks": 0}}),
    ("craft", {"object": {"planks": 1, "stick": 1}}),
    ("equip", {"object": " "}),
    ("mine", "log"),
])
def test_bad_actions_are_rejected(name, args):
    with pytest.raises(ActionError):
        make_action(name, args)


# -- equip / craft ----------------------------------------------------------------


def test_equip_and_missing_item():
    env = flat_env(inventory={"stone_pickaxe": 1})
    res = run(env, "equip", {"object": "stone_pickaxe"})
    assert res.ok and env.agent.equipped == "stone_pickaxe" and res.inventory_delta == {}
    res = run(env, "equip", {"object": "iron_pickaxe"})
    assert res.reason == "not_in_inventory"


def test_craft_wooden_pickaxe_deltas():
    env = flat_env(inventory={"planks": 5, "stick": 4, "crafting_table": 1})
    res = run(env, "craft", {"object": "wooden_pickaxe", "materials": {"planks": 3, "stick": 2},
                             "tool": "crafting_table"})
    assert res.ok
    assert res.inventory_delta == {"planks": -3, "stick": -2, "wooden_pickaxe": 1}
    assert env.agent.count("crafting_table") == 1


def test_craft_rounds_up_to_whole_units():
    env = flat_env(inventory={"log": 2})
    res = run(env, "craft", {"object": {"planks": 5}})
    assert res.ok and res.inventory_delta == {"log": -2, "planks": 8}


def test_craft_without_materials():
    env = flat_env(inventory={"planks": 1, "crafting_table": 1})
    res = run(env, "craft", {"object": "wooden_pickaxe"})
    assert res.reason == "insufficient_materials" and res.inventory_delta == {}


def test_craft_needs_table():
    env = flat_env(inventory={"planks": 3, "stick": 2})
    assert run(env, "craft", {"object": "wooden_pickaxe"}).reason == "not_in_inventory"


def test_smelt_requires_smelt():
    env = flat_env(inventory={"iron_ore": 3, "furnace": 1})
    assert run(env, "craft", {"object": "iron_ingot"}).reason == "api_failure"
    res = run(env, "smelt", {"object": {"iron_ingot": 3}})
    assert res.ok and res.inventory_delta == {"iron_ingot": 3, "iron_ore": -3}


# -- mining ---------------------------------------------------------------------------


def test_mine_diamond_needs_iron_tier():
    env = flat_env(inventory={"stone_pickaxe": 1})
    put(env.world, (16, 6, 17), "diamond_ore")
    res = run(env, "mine", {"object": "diamond", "tool": "stone_pickaxe"})
    assert res.reason == "insufficient_tool_tier"
    assert env.world.block((16, 6, 17)) == BLOCK_ID["diamond_ore"]


def test_mine_diamond_with_iron_pickaxe():
    env = flat_env(inventory={"iron_pickaxe": 1})
    put(env.world, (16, 6, 17), "diamond_ore")
    res = run(env, "mine", {"object": "diamond", "tool": "iron_pickaxe"})
    assert res.ok and res.inventory_delta == {"diamond": 1}


def test_mine_requires_visibility():
    env = flat_env(dims=(20, 12, 20), ground=8, at=(10, 10), inventory={"iron_pickaxe": 1})
    put(env.world, (10, 4, 12), "diamond_ore")  # buried in stone
    res = run(env, "mine", {"object": "diamond", "tool": "iron_pickaxe"})
    assert res.reason == "not_visible" and res.inventory_delta == {}


def test_mine_far_block_is_out_of_reach_then_approach_fixes_it():
    env = flat_env()
    put(env.world, (16, 5, 26), "log")
    put(env.world, (16, 6, 26), "log")
    assert run(env, "mine", {"object": "log"}).reason == "out_of_reach"
    assert run(env, "approach", {"object": "log"}).ok
    res = run(env, "mine", {"object": "log"})
    assert res.ok and res.inventory_delta == {"log": 1}


def test_mine_counted():
    env = flat_env()
    for y in (5, 6, 7):
        put(env.world, (16, y, 18), "log")
    res = run(env, "mine", {"object": {"log": 2}})
    assert res.ok and res.inventory_delta == {"log": 2}


def test_attack_and_apply():
    env = flat_env(inventory={"shears": 1, "bucket": 1})
    env.world.add_entity("pig", (16, 5, 18))
    res = run(env, "attack", {"object": "pig"})
    assert res.ok and res.inventory_delta.get("porkchop", 0) >= 1
    put(env.world, (17, 4, 16), "water")
    res = run(env, "apply", {"object": "water", "tool": "bucket"})
    assert res.ok and res.inventory_delta == {"bucket": -1, "water_bucket": 1}


# -- exploration ----------------------------------------------------------------------


def test_bfs_visible_at_start_is_zero_transitions():
    env = flat_env()
    put(env.world, (19, 5, 16), "log")
    r = Runner(env)
    assert bfs_explore(r, {"log"}) == 0 and r.steps == 0


def test_bfs_finds_a_distant_log():
    env = flat_env(dims=(96, 12, 96), at=(8, 8))
    put(env.world, (88, 5, 88), "log")
    r = Runner(env)
    assert bfs_explore(r, {"log"}) >= 1
    assert r.visible(env.observe(), {"log"}).size > 0


def test_explore_absent_target_hits_the_cap():
    env = flat_env(dims=(40, 12, 40), at=(20, 20))
    res = run(env, "explore", {"object": "log"})
    assert not res.ok and res.reason == "step_cap_exceeded"


def test_step_cap_is_enforced():
    env = flat_env(dims=(96, 12, 96), at=(8, 8))
    res = run(env, "explore", {"object": "log"}, cap=25)
    assert res.reason == "step_cap_exceeded" and res.steps == 25


def _seam_env(ahead):
    b = flat_blocks((40, 16, 40), ground=12)
    env = flat_env(dims=(40, 16, 40), ground=12, at=(20, 20), blocks=b, inventory={"iron_pickaxe": 1})
    for y in (5, 6):
        put(env.world, (20, y, 20), "air")
    env.agent.move_to((20, 5, 20))
    env.agent.ground_status = "underground"
    env.agent.yaw = 0.0
    d = actions._left((0, 1))  # the first branch dug is to the left
    cell = (20 + d[0] * ahead, 6, 20 + d[1] * ahead)
    put(env.world, cell, "diamond_ore")
    return env, cell


def test_dfs_finds_diamond_four_ahead():
    env, cell = _seam_env(4)
    before = env.world.blocks.copy()
    r = Runner(env)
    dfs_mine_explore(r, {"diamond_ore"}, "iron_pickaxe")
    breaks = int(np.sum((before != 0) & (env.world.blocks == 0)))
    assert breaks <= 8
    assert env.world.block(cell) == BLOCK_ID["diamond_ore"]


def test_dfs_needs_a_pickaxe():
    env, _ = _seam_env(4)
    env.agent.inventory.clear()
    env.agent.equipped = None
    assert run(env, "explore", {"object": "diamond", "strategy": "dfs"}).reason == "not_in_inventory"


def test_dfs_explore_then_mine():
    env, _ = _seam_env(9)
    assert run(env, "explore", {"object": "diamond"}).ok
    assert run(env, "mine", {"object": "diamond", "tool": "iron_pickaxe"}).inventory_delta == {"diamond": 1}


# -- vertical moves and building ---------------------------------------------------------


def test_dig_down_then_go_up_returns_to_the_start():
    env = flat_env(dims=(32, 16, 32), ground=12, inventory={"stone_pickaxe": 1, "dirt": 16})
    start = env.agent.cell
    res = run(env, "dig_down", {"ylevel": 6, "tool": "stone_pickaxe"})
    assert res.ok and env.agent.cell == (16, 6, 16) and env.agent.ground_status == "underground"
    res = run(env, "go_up")
    assert res.ok and env.agent.cell == start and env.agent.ground_status == "on_ground"


def test_go_up_needs_dirt():
    env = flat_env(dims=(32, 16, 32), ground=12, inventory={"stone_pickaxe": 1})
    run(env, "dig_down", {"ylevel": 6, "tool": "stone_pickaxe"})
    env.agent.inventory.pop("dirt", None)
    assert run(env, "go_up").reason == "insufficient_materials"


def test_dig_down_stops_at_bedrock():
    env = flat_env(inventory={"iron_pickaxe": 1})
    res = run(env, "dig_down", {"ylevel": 0, "tool": "iron_pickaxe"})
    assert res.reason == "api_failure" and env.agent.cell[1] == 1


def test_build_shelter_walls():
    walls = [{"dx": dx, "dy": dy, "dz": dz, "block": b}
             for (dx, dy, dz), b in load_blueprint("shelter").records if dy < 2]
    bp = load_blueprint(walls)
    env = flat_env(inventory=bp.materials())
    res = run(env, "build", {"blueprint": walls})
    assert res.ok
    anchor = (16, 5, 16)
    for (dx, dy, dz), block in bp.records:
        assert env.world.block((anchor[0] + dx, anchor[1] + dy, anchor[2] + dz)) == BLOCK_ID[block]
    assert res.inventory_delta == {k: -v for k, v in bp.materials().items()}


def test_roof_above_eye_level_is_invalid_placement():
    # a roof cell has no face the agent can aim at from below; the walls stay in place
    bp = load_blueprint("shelter")
    env = flat_env(inventory=bp.materials())
    res = run(env, "build", {"blueprint": "shelter"})
    assert res.reason == "invalid_placement"
    assert res.inventory_delta == {"dirt": -14}


def test_build_short_of_blocks():
    env = flat_env(inventory={"dirt": 2})
    res = run(env, "build", {"blueprint": "shelter"})
    assert res.reason == "insufficient_materials"


def test_build_inline_blueprint_onto_occupied_cell():
    env = flat_env(inventory={"dirt": 1})
    put(env.world, (17, 5, 16), "stone")
    res = run(env, "build", {"blueprint": [{"dx": 1, "dy": 0, "dz": 0, "block": "dirt"}]})
    assert res.reason == "invalid_placement"


# -- properties --------------------------------------------------------------------------


class WatchingRunner(Runner):
    """Remembers every cell the agent has seen through a LiDAR scan."""

    def __init__(self, env, cap=actions.STEP_CAP):
        super().__init__(env, cap)
        self.seen = set()

    def observe(self):
        obs = super().observe()
        hit = obs.hit_entity < 0
        self.seen.update(map(tuple, obs.hit_cell[hit].tolist()))
        return obs


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), action=st.sampled_from(["mine", "approach", "explore"]))
def test_targets_were_seen_first(seed, action):
    rng = np.random.default_rng(seed)
    env = flat_env(dims=(24, 12, 24), ground=6, at=(12, 12), inventory={"iron_pickaxe": 1, "dirt": 4})
    for _ in range(30):
        c = (int(rng.integers(2, 22)), int(rng.integers(2, 9)), int(rng.integers(2, 22)))
        if (c[0], c[2]) != (12, 12):
            put(env.world, c, str(rng.choice(["iron_ore", "diamond_ore", "coal_ore"])))
    r = WatchingRunner(env, cap=400)
    execute(env, make_action(action, {"object": "iron_ore"}), runner=r)
    for _, cell in r.targets:
        assert tuple(cell) in r.seen


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), name=st.sampled_from(["mine", "craft", "dig_down", "build"]))
def test_inventory_delta_matches_before_and_after(seed, name):
    rng = np.random.default_rng(seed)
    inv = {k: int(rng.integers(0, 6)) for k in ("log", "planks", "stick", "dirt", "stone_pickaxe")}
    env = flat_env(inventory={k: v for k, v in inv.items() if v})
    for _ in range(6):
        put(env.world, (int(rng.integers(12, 20)), int(rng.integers(5, 8)), int(rng.integers(12, 20))), "log")
    args = {"mine": {"object": "log"}, "craft": {"object": "planks"}, "dig_down": {"ylevel": 2},
            "build": {"blueprint": "shelter"}}[name]
    before = dict(env.agent.inventory)
    res = run(env, name, args)
    after = env.agent.inventory
    for k in set(before) | set(after):
        assert after.get(k, 0) - before.get(k, 0) == res.inventory_delta.get(k, 0)
    assert all(v != 0 for v in res.inventory_delta.values())
