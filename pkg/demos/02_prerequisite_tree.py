"""From one goal item to an ordered list of sub-goals.

Run:  python3 demos/02_prerequisite_tree.py [item] [count]
"""

import sys

from voxagent import decompose, default_kb, make_goal, schedule

item = sys.argv[1] if len(sys.argv) > 1 else "diamond"
count = int(sys.argv[2]) if len(sys.argv) > 2 else 1
kb = default_kb()

goal = make_goal(kb, item, count)
print("goal:", goal.describe(), "\n")

tree = decompose(kb, goal)
print(tree.to_text(), "\n")

# children come before parents, so every step finds its inputs ready
for i, g in enumerate(schedule(tree), 1):
    needs = ", ".join(f"{n} {m}" for m, n in (g.material or {}).items())
    extra = f" using {g.tool}" if g.tool else ""
    print(f"{i:>3}. {g.object} x{g.count}" + (f"  from {needs}" if needs else "") + extra)
