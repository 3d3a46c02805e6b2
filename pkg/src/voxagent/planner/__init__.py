from .loop import Flags, Limits, SubgoalOutcome, Transcript, goal_satisfied, run_subgoal
from .parsing import ParseError, PlanResponse, parse_response
from .prompts import INSTRUCTION, FeedbackMessage, QueryContext, render_query
from .providers import PlanProvider, ProviderError, RemoteProvider, ScriptedProvider
from .rule import RuleProvider, rule_plan

__all__ = [
    "Flags", "Limits", "SubgoalOutcome", "Transcript", "goal_satisfied", "run_subgoal",
    "ParseError", "PlanResponse", "parse_response",
    "INSTRUCTION", "FeedbackMessage", "QueryContext", "render_query",
    "PlanProvider", "ProviderError", "RemoteProvider", "ScriptedProvider",
    "RuleProvider", "rule_plan",
]
