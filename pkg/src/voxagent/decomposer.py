"""Recursive prerequisite trees and their post-order schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

from .knowledge import Goal, KnowledgeBase, craft_units, make_goal

MAX_DEPTH = 32


class DecompositionError(RuntimeError):
    pass


@dataclass
class SubGoalTree:
    goal: Goal
    children: list["SubGoalTree"] = field(default_factory=list)

    def nodes(self):
        """Pre-order iteration over every node."""
        yield self
        for child in self.children:
            yield from child.nodes()

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)

    def to_text(self, indent: str = "  ") -> str:
        lines = []

        def walk(node: SubGoalTree, level: int):
            g = node.goal
            lines.append(f"{indent * level}{g.object} x{g.count}")
            for c in node.children:
                walk(c, level + 1)

        walk(self, 0)
        return "\n".join(lines)

    def to_dot(self) -> str:
        lines = ["digraph subgoals {", "  node [shape=box];"]
        ids = {}
        for i, node in enumerate(self.nodes()):
            ids[id(node)] = f"n{i}"
            lines.append(f'  n{i} [label="{node.goal.object} x{node.goal.count}"];')
        for node in self.nodes():
            for c in node.children:
                lines.append(f"  {ids[id(c)]} -> {ids[id(node)]};")
        lines.append("}")
        return "\n".join(lines)


def decompose(kb: KnowledgeBase, root: Goal, max_depth: int = MAX_DEPTH) -> SubGoalTree:
    """Expand ``root`` until every leaf has neither materials nor a tool."""

    def build(goal: Goal, depth: int) -> SubGoalTree:
        if depth > max_depth:
            raise DecompositionError(f"depth cap {max_depth} exceeded at {goal.object!r}")
        node = SubGoalTree(goal)
        rec = kb.recipes.get(goal.object)
        units = craft_units(rec, goal.count) if rec else 1
        for mat, per_unit in (goal.material or {}).items():
            node.children.append(build(make_goal(kb, mat, units * per_unit), depth + 1))
        if goal.tool:
            node.children.append(build(make_goal(kb, goal.tool, 1), depth + 1))
        return node

    return build(root, 1)


def schedule(tree: SubGoalTree) -> list[Goal]:
    """Post-order linearisation: children before parents, root last."""
    out: list[Goal] = []

    def walk(node: SubGoalTree):
        for c in node.children:
            walk(c)
        out.append(node.goal)

    walk(tree)
    return out
