import json

import pytest

from voxagent.harness import (DEFAULT_SEEDS, MILESTONES, EpisodeReport, TaskSpec, episode_tree, live_schedule,
                              prerequisites, run_episode, run_suite, warmup)
from voxagent.knowledge import make_goal
from voxagent.memory import MemoryStore
from voxagent.planner import Flags, ProviderError, RuleProvider
from voxagent.decomposer import schedule


def test_task_spec_validation():
    with pytest.raises(ValueError):
        TaskSpec("diamond", 0)
    with pytest.raises(ValueError):
        TaskSpec("diamond", tick_limit=0)
    assert TaskSpec("diamond", flags=Flags(no_info=True, no_memory=True)).to_dict()["flags"] == ["no_info", "no_memory"]


def test_default_protocol():
    t = TaskSpec("diamond")
    assert (t.tick_limit, t.query_limit) == (12_000, 30)
    assert DEFAULT_SEEDS == tuple(range(1000, 1040))


def test_no_decompose_schedules_only_the_root(kb):
    tree = episode_tree(kb, TaskSpec("diamond", flags=Flags(no_decompose=True)))
    assert [g.object for g in schedule(tree)] == ["diamond"]


def test_no_info_blanks_every_goal(kb):
    tree = episode_tree(kb, TaskSpec("diamond", flags=Flags(no_info=True)))
    assert all(n.goal.info == "" for n in tree.nodes())
    assert any(n.goal.info for n in episode_tree(kb, TaskSpec("diamond")).nodes())


def test_live_schedule_skips_satisfied_subtrees(kb):
    tree = episode_tree(kb, TaskSpec("wooden_pickaxe"))
    full = [g.object for g in live_schedule(tree, {})]
    assert full == [g.object for g in schedule(tree)]
    inv = {"planks": 3, "stick": 2, "crafting_table": 1}
    assert [g.object for g in live_schedule(tree, inv)] == ["wooden_pickaxe"]


def test_live_schedule_sees_progress(kb):
    tree = episode_tree(kb, TaskSpec("stick", 4))
    inv = {}
    seen = []
    for goal in live_schedule(tree, inv):
        seen.append(goal.object)
        if goal.object == "planks":
            inv["planks"] = 8  # a lucky craft covers the sibling branch too
    assert "planks" in seen


def test_prerequisites(kb):
    assert prerequisites(kb, make_goal(kb, "wooden_pickaxe", 1)) == {"planks": 3, "stick": 2, "crafting_table": 1}
    assert prerequisites(kb, make_goal(kb, "stick", 5)) == {"planks": 4}
    assert prerequisites(kb, make_goal(kb, "log", 1)) == {}


@pytest.fixture(scope="module")
def diamond_run():
    from voxagent.knowledge import default_kb
    kb = default_kb()
    return [run_episode(TaskSpec("diamond"), 1000, RuleProvider(kb), MemoryStore(), kb=kb) for _ in range(2)]


def test_diamond_episode_milestones_in_order(diamond_run):
    rep = diamond_run[0]
    assert rep.success and rep.failure is None
    names = [m for m, _ in rep.milestones]
    assert [m for m in names if m in MILESTONES] == list(MILESTONES)
    ticks = [t for _, t in rep.milestones]
    assert ticks == sorted(ticks)
    assert rep.ticks_used <= 12_000
    assert all(sg["queries"] <= 30 for sg in rep.subgoals)


def test_episodes_are_deterministic(diamond_run):
    a, b = diamond_run
    assert a.to_json() == b.to_json()


def test_episode_transcript(tmp_path, kb):
    rep = run_episode(TaskSpec("planks"), 1001, RuleProvider(kb), kb=kb, transcript_dir=tmp_path)
    assert rep.success
    lines = [json.loads(x) for x in open(rep.transcript)]
    ex = [r for r in lines if r["kind"] == "execution"]
    assert ex and all("result" in r and "action" in r for r in ex)
    assert sum(r["kind"] == "query" for r in lines) == rep.queries_used


def test_tiny_tick_budget_fails_with_step_limit(kb):
    rep = run_episode(TaskSpec("stone_pickaxe", tick_limit=5), 1000, RuleProvider(kb), kb=kb)
    assert not rep.success and rep.failure.endswith(": step_limit") and rep.ticks_used <= 5


class _Down:
    def complete(self, messages, context=None):
        raise ProviderError("endpoint down")


def test_provider_outage_is_an_infra_error(kb):
    rep = run_episode(TaskSpec("log"), 1000, _Down(), kb=kb)
    assert not rep.success and rep.infra_error == "endpoint down" and rep.failure is None


# -- suites with a fake runner ----------------------------------------------------------------


def fake_runner(successful_offsets, first=1000, infra=()):
    played = []

    def runner(task, seed):
        played.append(seed)
        off = seed - first
        return EpisodeReport(task, seed, off in successful_offsets, 10, 1,
                             [("diamond", 5)] if off in successful_offsets else [],
                             infra_error="x" if off in infra else None)

    runner.played = played
    return runner


def test_incremental_stops_at_twenty():
    r = fake_runner(set(range(15)))
    res = run_suite([TaskSpec("diamond")], r, incremental=True).results[0]
    assert (res.games, res.successes, res.rate) == (20, 15, 75.0)


def test_incremental_escalates_to_one_hundred():
    r = fake_runner({30, 70})
    res = run_suite([TaskSpec("diamond")], r, incremental=True).results[0]
    assert res.games == 100 and res.rate == pytest.approx(2.0)
    assert r.played == list(range(1000, 1100))  # seeds reused cumulatively, each played once


def test_incremental_caps_at_two_hundred():
    res = run_suite([TaskSpec("diamond")], fake_runner(set()), incremental=True).results[0]
    assert res.games == 200 and res.rate == 0.0


def test_fixed_trials():
    report = run_suite([TaskSpec("diamond"), TaskSpec("log")], fake_runner({0, 1}), trials=40)
    assert [r.games for r in report.results] == [40, 40]
    assert report.results[0].milestone_rates["diamond"] == 5.0
    assert "diamond" in report.table()


def test_infra_errors_are_excluded_from_rates():
    res = run_suite([TaskSpec("diamond")], fake_runner({0, 1}, infra={2, 3}), trials=10).results[0]
    assert res.infra_errors == 2 and res.rate == pytest.approx(25.0)


def test_parallel_suite_matches_serial():
    a = run_suite([TaskSpec("diamond")], fake_runner({1, 4, 9}), trials=12)
    b = run_suite([TaskSpec("diamond")], fake_runner({1, 4, 9}), trials=12, workers=4)
    assert [e.seed for e in a.results[0].episodes] == [e.seed for e in b.results[0].episodes]
    assert a.results[0].to_dict() == b.results[0].to_dict()


def test_suite_rejects_zero_trials():
    with pytest.raises(ValueError):
        run_suite([TaskSpec("log")], fake_runner(set()), trials=0)


def test_warmup_builds_a_summary(kb):
    mem = MemoryStore()
    done = warmup([make_goal(kb, "planks", 1), make_goal(kb, "planks", 4)], RuleProvider(kb), mem, kb=kb)
    assert done == {"planks": 5}
    assert mem.has_summary("planks")
