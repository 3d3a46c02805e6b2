"""Command-line entry point: run, suite, warmup, dump-tree."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .decomposer import decompose
from .harness import (DEFAULT_SEEDS, QUERY_LIMIT, TICK_LIMIT, TaskSpec, _summarize, run_episode,
                      run_suite, warmup)
from .knowledge import UnknownItemError, default_kb, make_goal
from .memory import LLMSummarizer, MemoryStore
from .planner.loop import Flags
from .planner.providers import ProviderError, RemoteProvider
from .planner.rule import RuleProvider


def _provider(name: str, kb):
    if name == "rule":
        return RuleProvider(kb)
    return RemoteProvider.from_env()


def _flags(ns) -> Flags:
    return Flags(ns.no_decompose, ns.no_feedback, ns.no_info, ns.no_memory)


def _memory(ns, provider):
    if not ns.memory:
        return MemoryStore()
    summarizer = LLMSummarizer(provider) if ns.provider == "remote" else None
    kwargs = {"summarizer": summarizer} if summarizer else {}
    return MemoryStore.load(ns.memory, **kwargs)


def _write_report(out: Path, data: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(data, indent=1, sort_keys=True))


def _load_lines(path: str) -> list[tuple[str, int]]:
    """Parse ``item [count]`` lines; blank lines and ``#`` comments are skipped."""
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        out.append((parts[0], int(parts[1]) if len(parts) > 1 else 1))
    return out


def cmd_run(ns) -> int:
    kb = default_kb()
    provider = _provider(ns.provider, kb)
    memory = _memory(ns, provider)
    task = TaskSpec(ns.task, ns.count, ns.tick_limit, ns.query_limit, _flags(ns))
    out = Path(ns.out)
    rep = run_episode(task, ns.seed, provider, memory, kb=kb, transcript_dir=out / "transcripts")
    result = _summarize(task, [rep])
    print(f"{'sub-goal':<18}{'count':>6}{'queries':>9}  outcome")
    for sg in rep.subgoals:
        print(f"{sg['object']:<18}{sg['count']:>6}{sg['queries']:>9}  {'ok' if sg['achieved'] else sg['reason']}")
    print(f"\n{task.target} x{task.count} seed {ns.seed}: {'SUCCESS' if rep.success else 'FAILURE'}"
          f" ticks={rep.ticks_used} queries={rep.queries_used}")
    if rep.infra_error:
        print(f"infrastructure error: {rep.infra_error}")
    _write_report(out, result.to_dict())
    return 0 if rep.success else 1


def cmd_suite(ns) -> int:
    kb = default_kb()
    provider = _provider(ns.provider, kb)
    memory = _memory(ns, provider)
    tasks = [TaskSpec(item, n, ns.tick_limit, ns.query_limit, _flags(ns)) for item, n in _load_lines(ns.tasks)]
    out = Path(ns.out)

    def runner(task, seed):
        return run_episode(task, seed, provider, memory, kb=kb, transcript_dir=out / "transcripts")

    rep = run_suite(tasks, runner, trials=ns.trials, incremental=ns.incremental, first_seed=ns.first_seed,
                    workers=ns.workers)
    print(rep.table())
    _write_report(out, rep.to_dict())
    return 0


def cmd_warmup(ns) -> int:
    kb = default_kb()
    provider = _provider(ns.provider, kb)
    memory = _memory(ns, provider)
    goals = []
    for item, n in _load_lines(ns.goals):
        tree = decompose(kb, make_goal(kb, item, n))
        goals.extend(node.goal for node in reversed(list(tree.nodes())))
    done = warmup(goals, provider, memory, kb=kb, successes=ns.successes)
    for key, n in done.items():
        print(f"{key:<18}{n:>3} successes  {'summarized' if memory.has_summary(key) else ''}")
    if ns.memory:
        memory.save(ns.memory)
    return 0


def cmd_dump_tree(ns) -> int:
    kb = default_kb()
    tree = decompose(kb, make_goal(kb, ns.item, ns.count))
    print(tree.to_dot() if ns.dot else tree.to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="voxagent", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, limits=True):
        sp.add_argument("--provider", choices=("rule", "remote"), default="rule")
        sp.add_argument("--memory", help="memory JSON file to load and update")
        if limits:
            sp.add_argument("--no-decompose", action="store_true")
            sp.add_argument("--no-feedback", action="store_true")
            sp.add_argument("--no-info", action="store_true")
            sp.add_argument("--no-memory", action="store_true")
            sp.add_argument("--tick-limit", type=int, default=TICK_LIMIT)
            sp.add_argument("--query-limit", type=int, default=QUERY_LIMIT)
            sp.add_argument("--out", default="runs", help="directory for report.json and transcripts")

    run = sub.add_parser("run", help="play one episode")
    run.add_argument("--task", required=True)
    run.add_argument("--count", type=int, default=1)
    run.add_argument("--seed", type=int, default=DEFAULT_SEEDS[0])
    common(run)
    run.set_defaults(func=cmd_run)

    suite = sub.add_parser("suite", help="play many episodes per task")
    suite.add_argument("--tasks", required=True, help="file with one 'item [count]' per line")
    suite.add_argument("--trials", type=int, default=len(DEFAULT_SEEDS))
    suite.add_argument("--incremental", action="store_true")
    suite.add_argument("--first-seed", type=int, default=DEFAULT_SEEDS[0])
    suite.add_argument("--workers", type=int, default=1)
    common(suite)
    suite.set_defaults(func=cmd_suite)

    wu = sub.add_parser("warmup", help="study sub-goals one at a time to fill memory")
    wu.add_argument("--goals", required=True, help="file with one 'item [count]' per line")
    wu.add_argument("--successes", type=int, default=5)
    common(wu, limits=False)
    wu.set_defaults(func=cmd_warmup)

    dt = sub.add_parser("dump-tree", help="print the prerequisite tree of an item")
    dt.add_argument("item")
    dt.add_argument("--count", type=int, default=1)
    dt.add_argument("--dot", action="store_true", help="Graphviz output")
    dt.set_defaults(func=cmd_dump_tree)
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except (UnknownItemError, ProviderError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
