"""Closed-loop planning for one sub-goal: query, parse, execute, feed back."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..actions import StructuredAction, execute
from ..knowledge import Goal
from ..memory import ActionSequence, MemoryStore, goal_key
from ..world import Env, TickBudgetExceeded
from .parsing import ParseError, parse_response
from .prompts import INSTRUCTION, FeedbackMessage, QueryContext, render_query

MAX_QUERIES = 30


@dataclass(frozen=True)
class Limits:
    max_queries: int = MAX_QUERIES

    def __post_init__(self):
        if self.max_queries < 1:
            raise ValueError("max_queries must be positive")


@dataclass(frozen=True)
class Flags:
    no_decompose: bool = False
    no_feedback: bool = False
    no_info: bool = False
    no_memory: bool = False


@dataclass
class SubgoalOutcome:
    goal: Goal
    achieved: bool
    reason: str | None = None  # None | "query_limit" | "step_limit"
    queries: int = 0
    executed: list[StructuredAction] = field(default_factory=list)


class Transcript:
    """JSON-lines log of queries, responses and executions.

    With no path the records are only kept in memory.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.records: list[dict] = []
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("")

    def write(self, kind: str, **data) -> None:
        rec = {"kind": kind, **data}
        self.records.append(rec)
        if self.path:
            with self.path.open("a") as fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def goal_satisfied(goal: Goal, inventory: dict) -> bool:
    return inventory.get(goal.object, 0) >= goal.count


def run_subgoal(goal: Goal, env: Env, provider, memory: MemoryStore | None = None,
                limits: Limits = Limits(), flags: Flags = Flags(),
                transcript: Transcript | None = None) -> SubgoalOutcome:
    """Plan and act until ``goal`` holds, the query limit is hit or ticks run out.

    Provider transport errors propagate to the caller.
    """
    log = transcript or Transcript()
    out = SubgoalOutcome(goal, False)
    if goal_satisfied(goal, env.agent.inventory):
        log.write("skip", goal=goal.object, count=goal.count)
        out.achieved = True
        return out

    use_memory = memory is not None and not flags.no_memory
    key = goal_key(goal)
    ref = memory.retrieve(key) if use_memory else None
    reference = list(ref.actions) if ref else None
    messages = [{"role": "system", "content": INSTRUCTION}]
    feedback: FeedbackMessage | None = None

    while out.queries < limits.max_queries:
        if env.ticks_left <= 0:
            out.reason = "step_limit"
            return out
        ctx = QueryContext(goal, env.state(), None if flags.no_feedback else feedback, reference)
        query = render_query(ctx)
        messages.append({"role": "user", "content": query})
        out.queries += 1
        log.write("query", goal=goal.object, n=out.queries, content=query)
        text = provider.complete(list(messages), ctx)
        messages.append({"role": "assistant", "content": text})
        log.write("response", goal=goal.object, n=out.queries, content=text)

        try:
            plan = parse_response(text).action_list
        except ParseError as exc:
            feedback = FeedbackMessage("failed", None, f"the response could not be parsed: {exc.description}",
                                       reason="parse_error")
            continue
        if not plan:
            feedback = FeedbackMessage("failed", None, "the plan contained no actions", reason="empty_plan")
            continue

        feedback = None
        for action in plan:
            try:
                res = execute(env, action)
            except TickBudgetExceeded:
                log.write("execution", goal=goal.object, n=out.queries, action=action.to_dict(),
                          result={"status": "failure", "reason": "step_limit"})
                out.reason = "step_limit"
                return out
            log.write("execution", goal=goal.object, n=out.queries, action=action.to_dict(), result=res.to_dict())
            if not res.ok:
                feedback = FeedbackMessage("failed", action, res.message, res.state, res.reason)
                break
            out.executed.append(action)
            feedback = FeedbackMessage("succeeded", action, res.message or "it finished", res.state)
            if goal_satisfied(goal, env.agent.inventory):
                break

        if goal_satisfied(goal, env.agent.inventory):
            out.achieved = True
            if use_memory and out.executed:
                memory.record(key, ActionSequence(tuple(out.executed)))
            log.write("achieved", goal=goal.object, queries=out.queries)
            return out

    out.reason = "query_limit"
    log.write("failed", goal=goal.object, reason=out.reason, queries=out.queries)
    return out
