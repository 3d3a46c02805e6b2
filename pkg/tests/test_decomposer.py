from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import closure_multiset, simulate_schedule
from voxagent.decomposer import DecompositionError, decompose, schedule
from voxagent.knowledge import make_goal


def _tree(kb, item, count=1, **kw):
    return decompose(kb, make_goal(kb, item, count), **kw)


def test_leaf_goal_is_a_single_node(kb):
    t = _tree(kb, "log", 3)
    assert t.children == [] and [g.object for g in schedule(t)] == ["log"]


def test_wooden_pickaxe_schedule(kb):
    order = [(g.object, g.count) for g in schedule(_tree(kb, "wooden_pickaxe"))]
    assert order[-1] == ("wooden_pickaxe", 1)
    assert ("planks", 3) in order and ("stick", 2) in order and ("crafting_table", 1) in order
    assert order.index(("log", 1)) < order.index(("planks", 3))


@pytest.mark.parametrize("item, count", [("diamond", 1), ("iron_pickaxe", 1), ("stone_pickaxe", 2), ("stick", 9)])
def test_tree_matches_closure_oracle(kb, item, count):
    got = Counter((n.goal.object, n.goal.count) for n in _tree(kb, item, count).nodes())
    assert got == closure_multiset(item, count)


def test_every_item_decomposes_in_topological_order(kb):
    for item in kb.items:
        tree = _tree(kb, item)
        order = schedule(tree)
        assert order[-1].object == item

        def check(node):
            pos = order.index(node.goal)
            for c in node.children:
                assert order.index(c.goal) <= pos or c.goal == node.goal
                check(c)

        check(tree)


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_schedule_is_executable(kb, data):
    item = data.draw(st.sampled_from(sorted(kb.items)))
    count = data.draw(st.integers(1, 4))
    order = [(g.object, g.count) for g in schedule(_tree(kb, item, count))]
    inv = simulate_schedule(order)
    assert inv[item] >= count


def test_depth_cap(kb):
    assert _tree(kb, "diamond").depth() > 3
    with pytest.raises(DecompositionError):
        _tree(kb, "diamond", max_depth=3)


def test_text_and_dot(kb):
    t = _tree(kb, "wooden_pickaxe")
    text = t.to_text()
    assert text.splitlines()[0] == "wooden_pickaxe x1"
    assert "  planks x3" in text
    dot = t.to_dot()
    assert dot.startswith("digraph") and dot.count("->") == sum(1 for _ in t.nodes()) - 1
