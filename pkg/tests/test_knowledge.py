import json

import pytest

from oracles import raw_kb
from voxagent.knowledge import (Goal, KnowledgeError, UnknownItemError, build_kb, craft_units, load_kb,
                                lookup_info, make_goal)


def test_default_kb_covers_the_diamond_chain(kb):
    assert 30 <= len(kb.items) <= 60
    for item in ("log", "planks", "stick", "crafting_table", "wooden_pickaxe", "cobblestone", "stone_pickaxe",
                 "iron_ore", "furnace", "iron_ingot", "iron_pickaxe", "diamond"):
        assert item in kb.items


def test_every_item_reachable_from_diamond_has_a_source(kb):
    seen, stack = set(), ["diamond"]
    while stack:
        item = stack.pop()
        if item in seen:
            continue
        seen.add(item)
        fact = kb.facts.get(item)
        assert item in kb.recipes or (fact and fact.source in ("mine", "mob", "plant", "apply"))
        stack.extend(kb.dependencies(item))


def test_ores_have_info(kb):
    for item, fact in kb.facts.items():
        if fact.source == "mine" and fact.hints.get("min_tool_tier"):
            assert fact.info_text.strip()
            assert fact.info_text.count(".") <= 3


@pytest.mark.parametrize("item, needle", [("diamond", "levels 10~12"), ("iron_ore", "level 53")])
def test_lookup_info(kb, item, needle):
    assert needle in lookup_info(kb, item)


def test_lookup_info_alias_and_unknown(kb):
    assert lookup_info(kb, "diamonds") == lookup_info(kb, "diamond")
    assert lookup_info(kb, "mithril") == ""


def test_resolve_is_idempotent(kb):
    for item in kb.items:
        assert kb.resolve(item) == item
        assert kb.resolve(kb.resolve(item)) == item


def test_make_goal_examples(kb):
    g = make_goal(kb, "wooden_pickaxe", 1)
    assert dict(g.material) == {"planks": 3, "stick": 2} and g.tool == "crafting_table"
    g = make_goal(kb, "iron_ore", 1)
    assert g.material is None and g.tool == "stone_pickaxe"
    g = make_goal(kb, "log", 1)
    assert g.material is None and g.tool is None


def test_make_goal_is_pure(kb):
    assert make_goal(kb, "iron_pickaxe", 2) == make_goal(kb, "iron_pickaxe", 2)


def test_make_goal_errors(kb):
    with pytest.raises(UnknownItemError):
        make_goal(kb, "mithril", 1)
    with pytest.raises(ValueError):
        make_goal(kb, "log", 0)
    with pytest.raises(ValueError):
        Goal("log", 0)


def test_goal_material_none_iff_no_prerequisites(kb):
    for item in kb.items:
        g = make_goal(kb, item, 1)
        deps = kb.dependencies(item)
        assert (g.material is None and g.tool is None) == (not deps)


def test_describe():
    g = Goal("wooden_pickaxe", 1, {"planks": 3, "stick": 2}, "crafting_table", "Made at a table.")
    assert g.describe() == (
        "obtain 1 wooden_pickaxe, given material 3 planks, 2 stick and tool crafting_table. "
        "Extra info: Made at a table."
    )


def test_craft_units(kb):
    planks = kb.recipes["planks"]
    assert [craft_units(planks, n) for n in (1, 4, 5, 8, 9)] == [1, 1, 2, 2, 3]


def test_tools_are_not_materials(kb):
    rec = kb.recipes["iron_ingot"]
    assert rec.tool == "furnace" and "furnace" not in rec.materials and rec.station == "smelt"


def _write(tmp_path, recipes, facts):
    (tmp_path / "recipes.json").write_text(json.dumps(recipes))
    (tmp_path / "facts.json").write_text(json.dumps(facts))
    return tmp_path


def test_cycle_is_rejected(tmp_path):
    recipes = [
        {"output": "a", "output_count": 1, "materials": {"b": 1}},
        {"output": "b", "output_count": 1, "materials": {"a": 1}},
    ]
    with pytest.raises(KnowledgeError, match="cycle"):
        load_kb(_write(tmp_path, recipes, []))


def test_unknown_material_is_rejected(tmp_path):
    recipes = [{"output": "sword", "output_count": 1, "materials": {"mithril": 2}}]
    with pytest.raises(KnowledgeError, match="mithril"):
        load_kb(_write(tmp_path, recipes, []))


@pytest.mark.parametrize("bad", [
    {"output": "x", "output_count": 0, "materials": {"log": 1}},
    {"output": "x", "output_count": 1, "materials": {"log": 0}},
    {"output": "log", "output_count": 1, "materials": {"log": 1}},
    {"output_count": 1, "materials": {}},
    {"output": "x", "output_count": 1, "materials": {"log": 1}, "station": "forge"},
])
def test_malformed_recipe_is_rejected(bad):
    facts = [{"item": "log", "info_text": "Chop trees.", "hints": {"source": "mine", "blocks": ["log"]}}]
    with pytest.raises(KnowledgeError):
        build_kb([bad], facts)


def test_malformed_json(tmp_path):
    (tmp_path / "recipes.json").write_text("[{")
    (tmp_path / "facts.json").write_text("[]")
    with pytest.raises(KnowledgeError):
        load_kb(tmp_path)


def test_bundled_json_matches_loaded_kb(kb):
    recipes, facts = raw_kb()
    assert set(recipes) == set(kb.recipes)
    assert set(facts) == set(kb.facts)
