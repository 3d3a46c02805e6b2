"""Instruction and query text for plan providers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..actions import StructuredAction
from ..knowledge import Goal

ACTION_HELP = """\
explore(object: str, strategy: str)
    Wander until the object shows up in view. strategy is "bfs" for walking on
    the surface or "dfs" for tunnelling at the current level underground.
approach(object: str)
    Walk next to the nearest visible instance of the object.
mine(object: str | {name: count}, tool: str | null)
    Break blocks of the object that are within reach and pick up the drops.
attack(object: str, tool: str | null)
    Chase and hit a creature until it dies, then pick up the drops.
equip(object: str)
    Hold an item from the inventory.
dig_down(ylevel: int, tool: str | null)
    Break the block underfoot repeatedly until standing at the given level.
go_up(tool: str | null)
    Return to where digging started and stack dirt underneath to reach the surface.
build(blueprint: str)
    Place blocks layer by layer following a named blueprint.
craft(object: {name: count}, materials: {name: count}, tool: str | null)
smelt(object: {name: count}, materials: {name: count}, tool: str | null)
    Turn inventory materials into the object. Stations such as crafting_table
    or furnace are used straight from the inventory and are not consumed.
apply(object: str, tool: str)
    Use a tool on a visible target, e.g. a bucket on water or shears on a sheep."""

RESPONSE_FORMAT = """\
{
  "explanation": "why the previous action failed, or null on the first query",
  "thoughts": "the reasoning behind the plan",
  "action_list": [
    {"name": "action name", "args": {"arg name": "value"}, "expectation": "expected result"}
  ]
}"""

INSTRUCTION = f"""\
You are planning for an agent inside a block-building survival game.
Each request names a goal item. Reply with a plan built only from these actions:

{ACTION_HELP}

The inventory is always at hand: materials and tools are taken from it and
results go into it. Anything missing from the inventory must be obtained first.
Each request reports the inventory and the surroundings (biome, y-level, and
whether the agent is on the ground or underground).

Reply with a single JSON object, optionally wrapped in ``` fences:

{RESPONSE_FORMAT}

Actions run in order. Execution halts at the first action that fails and the
failure is reported back; the next plan should pick up from that point."""

SUMMARY_INSTRUCTION = f"""\
Several action sequences below each reached the same goal. Merge them into one
sequence that should work in general. Keep every step needed to reach the
goal, even if a lucky run skipped it; drop retries, detours and steps that do
not serve the goal. Actions come from this set:

{ACTION_HELP}

Answer with a line "Thoughts: ..." followed by the merged sequence as a JSON
list of {{"name", "args", "expectation"}} objects."""


@dataclass
class FeedbackMessage:
    outcome: str  # "succeeded" | "failed"
    action: StructuredAction | None
    detail: str
    state: dict = field(default_factory=dict)
    reason: str | None = None

    def __post_init__(self):
        if self.outcome == "failed" and not self.detail:
            raise ValueError("failure feedback needs a detail message")


@dataclass
class QueryContext:
    goal: Goal
    state: dict
    feedback: FeedbackMessage | None = None
    reference_plan: list[StructuredAction] | None = None


def render_state(state: dict) -> str:
    inv = json.dumps(state.get("inventory", {}), sort_keys=True)
    where = "on the ground" if state.get("ground_status") == "on_ground" else "underground"
    env = f"biome {state.get('biome', 'unknown')}, y-level {state.get('y_level')}, {where}"
    return f"- inventory: {inv}\n- environment: {env}"


def render_plan(plan) -> str:
    return json.dumps([a.to_dict() for a in plan])


def _goal_text(goal: Goal) -> str:
    return goal.describe().rstrip(". ")


def render_query(ctx: QueryContext) -> str:
    fb = ctx.feedback
    if fb is not None:
        name = fb.action.name if fb.action is not None else "planning"
        if fb.outcome == "failed":
            head = f"Action {name} failed, because {fb.detail}. Plan again starting from the failed action."
        else:
            head = f"Action {name} succeeded, and {fb.detail}. Carry on from here without repeating it."
        return (
            f"{head}\nMy current state:\n{render_state(ctx.state)}\n"
            f"The goal is to {_goal_text(ctx.goal)}.\nRemember to follow the response format."
        )
    parts = [f"My current state:\n{render_state(ctx.state)}", f"The goal is to {_goal_text(ctx.goal)}."]
    if ctx.reference_plan:
        parts.append(f"Here is one plan to achieve similar goal for reference: {render_plan(ctx.reference_plan)}.")
    parts.append("Begin your plan. Remember to follow the response format.")
    return "\n".join(parts)
