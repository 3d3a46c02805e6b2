"""Memory turns repeated successes into a reference plan.

Each sub-goal on the diamond chain is studied alone until five successes are
recorded; those five are folded into one summary that later queries quote
as a reference.  The episode that follows needs fewer queries per sub-goal.

Run:  python3 demos/04_memory.py
"""

import statistics

from voxagent import MemoryStore, TaskSpec, decompose, default_kb, make_goal, run_episode, warmup
from voxagent.planner import Flags, RuleProvider

kb = default_kb()
provider = RuleProvider(kb)
tree = decompose(kb, make_goal(kb, "diamond", 1))
goals = [n.goal for n in reversed(list(tree.nodes()))]

memory = MemoryStore()
done = warmup(goals, provider, memory, kb=kb)
print("studied sub-goals:")
for key, n in done.items():
    steps = " -> ".join(a.name for a in memory.retrieve(key).actions)
    print(f"  {key:<16} {n} successes   {steps}")


def queries(mem, flags, seeds=range(2000, 2005)):
    qs = []
    for seed in seeds:
        rep = run_episode(TaskSpec("diamond", flags=flags), seed, provider, mem, kb=kb)
        qs += [s["queries"] for s in rep.subgoals if s["achieved"] and s["queries"]]
    return statistics.mean(qs)


print(f"\nmean queries per sub-goal with memory:    {queries(memory, Flags()):.3f}")
print(f"mean queries per sub-goal without memory: {queries(None, Flags(no_memory=True)):.3f}")
