"""One full diamond episode with the deterministic rule planner.

The planner sees the same text queries a language model would; swap in
``RemoteProvider.from_env()`` to drive it from a chat endpoint instead.

Run:  python3 demos/03_diamond_episode.py [seed]
"""

import sys
import time

from voxagent import MemoryStore, TaskSpec, default_kb, run_episode
from voxagent.planner import RuleProvider

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
kb = default_kb()
t = time.perf_counter()
rep = run_episode(TaskSpec("diamond"), seed, RuleProvider(kb), MemoryStore(), kb=kb)

print(f"seed {seed}: {'success' if rep.success else 'failure: ' + str(rep.failure)} "
      f"in {rep.ticks_used} ticks, {rep.queries_used} queries, {time.perf_counter() - t:.1f}s\n")
print(f"{'sub-goal':<18}{'count':>6}{'queries':>9}")
for sg in rep.subgoals:
    print(f"{sg['object']:<18}{sg['count']:>6}{sg['queries']:>9}")
print("\nfirst time each item entered the inventory:")
for item, tick in rep.milestones:
    print(f"  tick {tick:>6}  {item}")
