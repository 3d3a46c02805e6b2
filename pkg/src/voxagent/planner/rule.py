"""Deterministic stand-in for a language-model planner.

Plans are built in stages.  Without a reference plan only the first
outstanding stage is emitted per query and later stages follow once the
state shows the earlier ones are done; a reference plan from memory lets
the whole known sequence go out in one reply.
"""

from __future__ import annotations

import json
import re

from ..actions import StructuredAction, make_action
from ..blocks import TIER, TIER_NAMES, tier_of_pickaxe
from ..knowledge import KnowledgeBase, craft_units
from .prompts import QueryContext

SUBPLAN_DEPTH = 2
FALLBACK_DEPTH = 8

_RANGE = re.compile(r"levels?\s+(\d+)\s*(?:~|∼|-|to|and)\s*(\d+)", re.I)
_SINGLE = re.compile(r"levels?\s+(\d+)", re.I)


def target_level(info: str) -> int | None:
    """The y-level suggested by free-text item knowledge, if any."""
    m = _RANGE.search(info or "")
    if m:
        return (int(m.group(1)) + int(m.group(2))) // 2
    m = _SINGLE.search(info or "")
    return int(m.group(1)) if m else None


def _act(name, expectation="", **args) -> StructuredAction:
    return make_action(name, args, expectation)


class _Planner:
    def __init__(self, kb: KnowledgeBase, ctx: QueryContext):
        self.kb = kb
        self.ctx = ctx
        self.inv = dict(ctx.state.get("inventory", {}))
        self.y = int(ctx.state.get("y_level", 0))
        self.underground = ctx.state.get("ground_status") == "underground"

    def best_pickaxe(self, min_tier: int) -> str | None:
        for tier in range(len(TIER_NAMES) - 1, max(min_tier, 1) - 1, -1):
            tool = tier_of_pickaxe(TIER_NAMES[tier])
            if self.inv.get(tool, 0) > 0:
                return tool
        return None

    def plan(self, item: str, count: int, depth: int, info: str | None = None) -> list[list[StructuredAction]]:
        """Stages that obtain ``count`` more ``item``; may be empty if unknown."""
        rec = self.kb.recipes.get(item)
        if rec is not None:
            return self.plan_recipe(item, count, depth)
        fact = self.kb.facts.get(item)
        if fact is None:
            return []
        info = fact.info_text if info is None else info
        src = fact.source
        if src in ("mine", "plant"):
            return self.plan_mine(item, count, depth, fact, info)
        if src == "mob":
            mob = fact.hints["mob"]
            stages = [[_act("explore", f"{mob} is visible", object=mob, strategy="bfs"),
                       _act("attack", f"{item} dropped", object=mob, tool=None)]]
            if self.underground:
                stages.insert(0, [_act("go_up", "back on the surface", tool=None)])
            return stages
        if src == "apply":
            tool, target = fact.hints["tool"], fact.hints["target"]
            stages = []
            if self.inv.get(tool, 0) < 1:
                if depth >= SUBPLAN_DEPTH:
                    return []
                stages = self.plan(tool, 1, depth + 1)
                if not stages:
                    return []
            stages.append([_act("explore", f"{target} is visible", object=target, strategy="bfs"),
                           _act("apply", f"{item} obtained", object=target, tool=tool)])
            return stages
        return []

    def plan_recipe(self, item: str, count: int, depth: int) -> list[list[StructuredAction]]:
        rec = self.kb.recipes[item]
        units = craft_units(rec, count)
        stages: list[list[StructuredAction]] = []
        needs = [(m, units * n) for m, n in rec.materials.items()]
        if rec.tool:
            needs.append((rec.tool, 1))
        for mat, n in needs:
            missing = n - self.inv.get(mat, 0)
            if missing > 0 and depth < SUBPLAN_DEPTH:
                sub = self.plan(mat, missing, depth + 1)
                stages = _merge(stages, sub)
                self.inv[mat] = self.inv.get(mat, 0) + missing
        for mat, n in rec.materials.items():
            self.inv[mat] = self.inv.get(mat, 0) - units * n
        self.inv[item] = self.inv.get(item, 0) + units * rec.output_count
        act = _act(rec.station, f"{units * rec.output_count} {item} in inventory",
                   object={item: units * rec.output_count}, materials={m: units * n for m, n in rec.materials.items()},
                   tool=rec.tool)
        if stages:
            stages[-1].append(act)
        else:
            stages = [[act]]
        return stages

    def plan_mine(self, item, count, depth, fact, info) -> list[list[StructuredAction]]:
        min_tier = TIER.get(fact.hints.get("min_tool_tier", "hand"), 0)
        stages: list[list[StructuredAction]] = []
        tool = None
        if min_tier > 0:
            tool = self.best_pickaxe(min_tier)
            if tool is None:
                if depth >= SUBPLAN_DEPTH:
                    return []
                tool = tier_of_pickaxe(TIER_NAMES[min_tier])
                stages = self.plan(tool, 1, depth + 1)
                if not stages:
                    return []
                self.inv[tool] = 1
        if min_tier == 0:
            # surface material
            if self.underground:
                stages.append([_act("go_up", "back on the surface", tool=None)])
            stages.append([
                _act("explore", f"{item} is visible", object=item, strategy="bfs"),
                _act("approach", f"next to {item}", object=item),
                _act("mine", f"{count} {item} obtained", object={item: count}, tool=None),
            ])
            return stages
        level = target_level(info)
        if level is None:
            level = self.y if self.underground else self.y - FALLBACK_DEPTH
        if not self.underground or self.y > level + 1:
            stages.append([_act("dig_down", f"at y-level {level}", ylevel=level, tool=tool)])
        stages.append([
            _act("explore", f"{item} is visible", object=item, strategy="dfs"),
            _act("approach", f"next to {item}", object=item),
            _act("mine", f"{count} {item} obtained", object={item: count}, tool=tool),
        ])
        return stages

    def react(self, item: str, count: int) -> list[list[StructuredAction]] | None:
        """Feedback-driven adjustments to the default plan."""
        fb = self.ctx.feedback
        if fb is None or fb.outcome != "failed" or fb.action is None:
            return None
        name = fb.action.name
        if name == "mine" and fb.reason == "out_of_reach":
            return [[_act("approach", f"next to {item}", object=item), fb.action]]
        if name == "explore" and self.underground and fb.reason == "step_cap_exceeded":
            # this level looks barren; go a few levels deeper and try again
            tool = self.best_pickaxe(1)
            return [[_act("dig_down", "a fresh level", ylevel=max(self.y - 3, 2), tool=tool), fb.action,
                     _act("approach", f"next to {item}", object=item),
                     _act("mine", f"{count} {item} obtained", object={item: count}, tool=tool)]]
        return None


def _merge(a, b):
    """Concatenate stage lists, fusing the boundary so crafting chains stay one stage."""
    if not a:
        return [list(s) for s in b]
    if not b:
        return a
    return a[:-1] + [a[-1] + b[0]] + [list(s) for s in b[1:]]


def rule_plan(ctx: QueryContext, kb: KnowledgeBase) -> str:
    """Plan text for ``ctx`` in the standard response envelope."""
    goal = ctx.goal
    item = kb.resolve(goal.object)
    explanation = None
    if ctx.feedback is not None and ctx.feedback.outcome == "failed":
        explanation = ctx.feedback.detail
    if item not in kb.items:
        return _envelope(explanation, f"I do not know how to obtain {goal.object}.", [])
    p = _Planner(kb, ctx)
    missing = goal.count - p.inv.get(item, 0)
    if missing <= 0:
        return _envelope(explanation, f"{item} is already in the inventory.", [])
    stages = p.react(item, missing)
    if stages is None:
        p = _Planner(kb, ctx)
        stages = p.plan(item, missing, 0, info=goal.info)
    if not stages:
        return _envelope(explanation, f"No known way to obtain {item} from here.", [])
    emitted = list(stages[0])
    if ctx.reference_plan:
        known = {a.name for a in ctx.reference_plan}
        for stage in stages[1:]:
            if all(a.name in known for a in stage):
                emitted.extend(stage)
            else:
                break
    thoughts = f"Obtain {missing} {item}: " + ", then ".join(a.name for a in emitted) + "."
    return _envelope(explanation, thoughts, emitted)


def _envelope(explanation, thoughts, actions) -> str:
    return json.dumps({
        "explanation": explanation,
        "thoughts": thoughts,
        "action_list": [a.to_dict() for a in actions],
    })


class RuleProvider:
    """Plan provider backed by :func:`rule_plan`."""

    def __init__(self, kb: KnowledgeBase):
        self.kb = kb

    def complete(self, messages, context: QueryContext | None = None) -> str:
        if context is None:
            raise ValueError("the rule provider needs the structured query context")
        return rule_plan(context, self.kb)
