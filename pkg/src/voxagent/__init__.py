"""Text-planned agent for a voxel survival sandbox."""

from .actions import ActionResult, StructuredAction, execute, make_action
from .decomposer import SubGoalTree, decompose, schedule
from .harness import EpisodeReport, SuiteReport, TaskSpec, run_episode, run_suite, warmup
from .knowledge import Goal, KnowledgeBase, default_kb, make_goal
from .memory import ActionSequence, MemoryStore, goal_key, heuristic_summarize
from .world import Env, World, WorldConfig, generate_world, observe, spawn_agent

__version__ = "0.1.0"

__all__ = [
    "ActionResult", "StructuredAction", "execute", "make_action",
    "SubGoalTree", "decompose", "schedule",
    "EpisodeReport", "SuiteReport", "TaskSpec", "run_episode", "run_suite", "warmup",
    "Goal", "KnowledgeBase", "default_kb", "make_goal",
    "ActionSequence", "MemoryStore", "goal_key", "heuristic_summarize",
    "Env", "World", "WorldConfig", "generate_world", "observe", "spawn_agent",
]
