"""Episodes, incremental suites and memory warmup."""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .decomposer import SubGoalTree, decompose
from .knowledge import Goal, KnowledgeBase, craft_units, default_kb, make_goal
from .memory import MemoryStore, goal_key
from .planner.loop import Flags, Limits, Transcript, goal_satisfied, run_subgoal
from .planner.providers import ProviderError
from .world import Env, WorldConfig, generate_world, spawn_agent

TICK_LIMIT = 12_000
QUERY_LIMIT = 30
DEFAULT_SEEDS = tuple(range(1000, 1040))
TIERS = (20, 50, 100, 200)
MILESTONES = ("crafting_table", "wooden_pickaxe", "stone_pickaxe", "iron_pickaxe", "diamond")


@dataclass(frozen=True)
class TaskSpec:
    target: str
    count: int = 1
    tick_limit: int = TICK_LIMIT
    query_limit: int = QUERY_LIMIT
    flags: Flags = Flags()

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.tick_limit < 1 or self.query_limit < 1:
            raise ValueError("tick_limit and query_limit must be positive")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["flags"] = sorted(k for k, v in d["flags"].items() if v)
        return d


@dataclass
class EpisodeReport:
    task: TaskSpec
    seed: int
    success: bool
    ticks_used: int
    queries_used: int
    milestones: list[tuple[str, int]]
    subgoals: list[dict] = field(default_factory=list)
    failure: str | None = None
    infra_error: str | None = None
    transcript: str | None = None

    def to_dict(self) -> dict:
        return {
            "task": self.task.to_dict(),
            "seed": self.seed,
            "success": self.success,
            "ticks_used": self.ticks_used,
            "queries_used": self.queries_used,
            "milestones": [list(m) for m in self.milestones],
            "subgoals": self.subgoals,
            "failure": self.failure,
            "infra_error": self.infra_error,
            "transcript": self.transcript,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def episode_tree(kb: KnowledgeBase, task: TaskSpec) -> SubGoalTree:
    root = make_goal(kb, task.target, task.count)
    tree = SubGoalTree(root) if task.flags.no_decompose else decompose(kb, root)
    if task.flags.no_info:
        for node in tree.nodes():
            node.goal = dataclasses.replace(node.goal, info="")
    return tree


def live_schedule(tree: SubGoalTree, inventory: dict) -> Iterator[Goal]:
    """Post-order walk that drops a whole subtree once its goal already holds.

    The check happens when the walk reaches the subtree, so it sees whatever
    earlier siblings produced.
    """
    if goal_satisfied(tree.goal, inventory):
        return
    for child in tree.children:
        yield from live_schedule(child, inventory)
    yield tree.goal


def run_episode(task: TaskSpec, seed: int, provider, memory: MemoryStore | None = None, *,
                kb: KnowledgeBase | None = None, transcript_dir: str | Path | None = None,
                world_config: WorldConfig | None = None) -> EpisodeReport:
    kb = kb or default_kb()
    cfg = dataclasses.replace(world_config, seed=seed) if world_config else WorldConfig(seed=seed)
    world = generate_world(cfg, kb)
    agent = spawn_agent(world)
    env = Env(world, agent, task.tick_limit)
    path = Path(transcript_dir) / f"{task.target}-{seed}.jsonl" if transcript_dir else None
    log = Transcript(path)
    limits = Limits(task.query_limit)
    mem = None if task.flags.no_memory else memory

    queries = 0
    subgoals = []
    failure = infra = None
    for goal in live_schedule(episode_tree(kb, task), agent.inventory):
        try:
            out = run_subgoal(goal, env, provider, mem, limits, task.flags, log)
        except ProviderError as exc:
            infra = str(exc)
            break
        queries += out.queries
        subgoals.append({"object": goal.object, "count": goal.count, "achieved": out.achieved,
                         "queries": out.queries, "reason": out.reason})
        if not out.achieved:
            failure = f"{goal.object}: {out.reason}"
            break

    success = infra is None and goal_satisfied(Goal(task.target, task.count), agent.inventory)
    milestones = sorted(env.milestones.items(), key=lambda kv: (kv[1], kv[0]))
    return EpisodeReport(task, seed, success, min(world.tick_count, task.tick_limit), queries,
                         milestones, subgoals, None if success else failure, infra,
                         str(path) if path else None)


@dataclass
class TaskResult:
    task: TaskSpec
    games: int
    successes: int
    infra_errors: int
    milestone_rates: dict[str, float]
    episodes: list[EpisodeReport] = field(default_factory=list)

    @property
    def rate(self) -> float:
        valid = self.games - self.infra_errors
        return 100.0 * self.successes / valid if valid else 0.0

    def to_dict(self) -> dict:
        return {
            "task": self.task.to_dict(),
            "games": self.games,
            "successes": self.successes,
            "infra_errors": self.infra_errors,
            "rate": self.rate,
            "milestone_rates": self.milestone_rates,
            "episodes": [e.to_dict() for e in self.episodes],
        }


@dataclass
class SuiteReport:
    results: list[TaskResult]
    runtime: float

    def to_dict(self) -> dict:
        return {"results": [r.to_dict() for r in self.results], "runtime": self.runtime}

    def table(self) -> str:
        head = f"{'task':<18}{'games':>6}{'ok':>5}{'rate':>8}  milestones"
        lines = [head, "-" * len(head)]
        for r in self.results:
            ms = " ".join(f"{k}={v:.0f}%" for k, v in r.milestone_rates.items())
            lines.append(f"{r.task.target:<18}{r.games:>6}{r.successes:>5}{r.rate:>7.1f}%  {ms}")
        lines.append(f"runtime {self.runtime:.1f}s")
        return "\n".join(lines)


EpisodeRunner = Callable[[TaskSpec, int], EpisodeReport]


def _summarize(task: TaskSpec, reports: list[EpisodeReport]) -> TaskResult:
    valid = [r for r in reports if r.infra_error is None]
    rates = {}
    for m in MILESTONES:
        hits = sum(1 for r in valid if any(name == m for name, _ in r.milestones))
        rates[m] = 100.0 * hits / len(valid) if valid else 0.0
    return TaskResult(task, len(reports), sum(r.success for r in valid), len(reports) - len(valid), rates, reports)


def run_suite(tasks: Iterable[TaskSpec], runner: EpisodeRunner, *, trials: int = 40, incremental: bool = False,
              first_seed: int = DEFAULT_SEEDS[0], workers: int = 1) -> SuiteReport:
    """Run every task over consecutive seeds.

    In incremental mode a task plays 20 games and escalates to 50, 100 and 200
    (seeds reused cumulatively) while it has at most one success.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    start = time.perf_counter()

    def play(task, seeds):
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                return list(pool.map(lambda s: runner(task, s), seeds))
        return [runner(task, s) for s in seeds]

    results = []
    for task in tasks:
        if not incremental:
            reports = play(task, range(first_seed, first_seed + trials))
        else:
            reports = []
            for tier in TIERS:
                reports += play(task, range(first_seed + len(reports), first_seed + tier))
                if sum(r.success for r in reports) > 1:
                    break
        results.append(_summarize(task, reports))
    return SuiteReport(results, time.perf_counter() - start)


def prerequisites(kb: KnowledgeBase, goal: Goal) -> dict[str, int]:
    """Items granted before studying ``goal`` on its own."""
    grant: dict[str, int] = {}
    rec = kb.recipes.get(goal.object)
    units = craft_units(rec, goal.count) if rec else 1
    for mat, n in (goal.material or {}).items():
        grant[mat] = grant.get(mat, 0) + units * n
    if goal.tool:
        grant[goal.tool] = max(grant.get(goal.tool, 0), 1)
    return grant


def warmup(goals: Iterable[Goal], provider, memory: MemoryStore, *, kb: KnowledgeBase | None = None,
           successes: int = 5, max_attempts: int = 15, first_seed: int = 5000,
           tick_limit: int = TICK_LIMIT, query_limit: int = QUERY_LIMIT) -> dict[str, int]:
    """Study each distinct sub-goal alone, with its prerequisites granted.

    Stops per goal after ``successes`` achievements (enough to trigger a
    summary) or ``max_attempts`` fresh worlds.  Returns successes per key.
    """
    kb = kb or default_kb()
    done: dict[str, int] = {}
    seed = first_seed
    for goal in goals:
        key = goal_key(goal)
        if key in done:
            continue
        done[key] = 0
        for _ in range(max_attempts):
            if done[key] >= successes:
                break
            world = generate_world(WorldConfig(seed=seed), kb)
            seed += 1
            agent = spawn_agent(world)
            for item, n in prerequisites(kb, goal).items():
                agent.add_item(item, n)
            env = Env(world, agent, tick_limit)
            out = run_subgoal(goal, env, provider, memory, Limits(query_limit))
            if out.achieved and out.executed:
                done[key] += 1
    return done
