"""Per-sub-goal memory of successful action sequences."""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

from .actions import StructuredAction, make_action
from .knowledge import Goal

SUMMARIZE_EVERY = 5
EXACT_LCS_LIMIT = 2_000_000


@dataclass(frozen=True)
class ActionSequence:
    actions: tuple[StructuredAction, ...]
    episode: str = ""
    seed: int | None = None
    summary: bool = False
    warning: bool = False

    def __post_init__(self):
        if not self.actions:
            raise ValueError("an action sequence cannot be empty")

    def to_dict(self) -> dict:
        return {
            "actions": [a.to_dict() for a in self.actions],
            "episode": self.episode,
            "seed": self.seed,
            "warning": self.warning,
        }

    @classmethod
    def from_dict(cls, raw: dict, summary: bool = False) -> "ActionSequence":
        acts = tuple(make_action(a["name"], a.get("args"), a.get("expectation", "")) for a in raw["actions"])
        return cls(acts, raw.get("episode", ""), raw.get("seed"), summary, raw.get("warning", False))


def goal_key(goal: Goal | str) -> str:
    return goal if isinstance(goal, str) else goal.object


def _token(a: StructuredAction) -> tuple[str, str]:
    obj = a.args.get("object")
    if isinstance(obj, dict):
        obj = next(iter(obj), None)
    return (a.name, "" if obj is None else str(obj))


def _lcs_exact(seqs: list[list]) -> list[int]:
    """Indices into seqs[0] of a longest common subsequence of all ``seqs``."""
    k = len(seqs)

    @lru_cache(maxsize=None)
    def best(pos: tuple[int, ...]) -> int:
        if any(p == len(s) for p, s in zip(pos, seqs)):
            return 0
        head = seqs[0][pos[0]]
        # either skip seqs[0][pos0], or match it at the first occurrence in each other sequence
        out = best((pos[0] + 1,) + pos[1:])
        nxt = [pos[0] + 1]
        for i in range(1, k):
            try:
                nxt.append(seqs[i].index(head, pos[i]) + 1)
            except ValueError:
                return out
        return max(out, 1 + best(tuple(nxt)))

    picks = []
    pos = (0,) * k
    while best(pos):
        head = seqs[0][pos[0]]
        nxt = [pos[0] + 1]
        ok = True
        for i in range(1, k):
            try:
                nxt.append(seqs[i].index(head, pos[i]) + 1)
            except ValueError:
                ok = False
                break
        if ok and 1 + best(tuple(nxt)) == best(pos):
            picks.append(pos[0])
            pos = tuple(nxt)
        else:
            pos = (pos[0] + 1,) + pos[1:]
    best.cache_clear()
    return picks


def _lcs_pair(a: list, b: list) -> list[int]:
    """Indices into ``a`` of an LCS of ``a`` and ``b``."""
    n, m = len(a), len(b)
    t = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            t[i][j] = t[i + 1][j + 1] + 1 if a[i] == b[j] else max(t[i + 1][j], t[i][j + 1])
    i = j = 0
    out = []
    while i < n and j < m:
        if a[i] == b[j] and t[i][j] == t[i + 1][j + 1] + 1:
            out.append(i)
            i, j = i + 1, j + 1
        elif t[i + 1][j] >= t[i][j + 1]:
            i += 1
        else:
            j += 1
    return out


def common_core(token_seqs: list[list]) -> list[int]:
    size = 1
    for s in token_seqs:
        size *= len(s) + 1
    if size <= EXACT_LCS_LIMIT:
        return _lcs_exact(token_seqs)
    # too large for the exact table: fold pairwise (still a common subsequence)
    idx = list(range(len(token_seqs[0])))
    for other in token_seqs[1:]:
        keep = _lcs_pair([token_seqs[0][i] for i in idx], other)
        idx = [idx[i] for i in keep]
    return idx


def heuristic_summarize(seqs: Sequence[ActionSequence]) -> ActionSequence:
    """Keep the (name, object) steps shared in order by every sequence.

    Arguments come from the first sequence.  If nothing is shared, the first
    sequence is returned with ``warning`` set.
    """
    if len(seqs) < 2:
        raise ValueError("summarizing needs at least two sequences")
    tokens = [[_token(a) for a in s.actions] for s in seqs]
    picks = common_core(tokens)
    if not picks:
        return ActionSequence(seqs[0].actions, seqs[0].episode, seqs[0].seed, True, True)
    return ActionSequence(tuple(seqs[0].actions[i] for i in picks), "summary", None, True, False)


Summarizer = Callable[[Sequence[ActionSequence]], ActionSequence]


class LLMSummarizer:
    """Asks a plan provider to merge sequences; falls back to the heuristic."""

    def __init__(self, provider, fallback: Summarizer = heuristic_summarize):
        self.provider = provider
        self.fallback = fallback
        self.failures = 0

    def __call__(self, seqs: Sequence[ActionSequence]) -> ActionSequence:
        from .planner.parsing import ParseError, parse_actions
        from .planner.prompts import SUMMARY_INSTRUCTION, render_plan
        from .planner.providers import ProviderError

        body = "\n".join(f"Sequence {i + 1}: {render_plan(s.actions)}" for i, s in enumerate(seqs))
        messages = [{"role": "system", "content": SUMMARY_INSTRUCTION}, {"role": "user", "content": body}]
        try:
            text = self.provider.complete(messages, None)
            start, end = text.find("["), text.rfind("]")
            if start < 0 or end <= start:
                raise ParseError("no action list in the summary")
            acts = parse_actions(json.loads(text[start : end + 1]), "summary")
            if not acts:
                raise ParseError("empty summary")
            return ActionSequence(tuple(acts), "summary", None, True, False)
        except (ProviderError, ParseError, ValueError):
            self.failures += 1
            return self.fallback(seqs)


@dataclass
class MemoryStore:
    entries: dict[str, list[ActionSequence]] = field(default_factory=dict)
    path: Path | None = None
    summarizer: Summarizer = heuristic_summarize
    every: int = SUMMARIZE_EVERY

    def __post_init__(self):
        self._lock = threading.RLock()

    def record(self, key: str, seq: ActionSequence) -> "MemoryStore":
        with self._lock:
            old = list(self.entries.get(key, []))
            items = old + [seq]
            head = items[:1] if items[0].summary else []
            fresh = items[len(head):]
            if len(fresh) >= self.every:
                # the new summary replaces any earlier one
                merged = self.summarizer(fresh)
                if not merged.summary:
                    merged = ActionSequence(merged.actions, merged.episode, merged.seed, True, merged.warning)
                items = [merged]
            self.entries[key] = items
            if self.path is not None:
                try:
                    self.save()
                except OSError:
                    if old:
                        self.entries[key] = old
                    else:
                        del self.entries[key]
                    raise
        return self

    def retrieve(self, key: str) -> ActionSequence | None:
        with self._lock:
            items = self.entries.get(key)
            return items[0] if items else None

    def has_summary(self, key: str) -> bool:
        with self._lock:
            items = self.entries.get(key)
            return bool(items) and items[0].summary

    def to_dict(self) -> dict:
        with self._lock:
            out = {}
            for key in sorted(self.entries):
                items = self.entries[key]
                summary = items[0] if items and items[0].summary else None
                rest = items[1:] if summary else items
                out[key] = {
                    "summary": summary.to_dict() if summary else None,
                    "recordings": [s.to_dict() for s in rest],
                }
            return out

    def save(self, path: str | Path | None = None) -> None:
        target = Path(path or self.path)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".memory-")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise

    @classmethod
    def from_dict(cls, raw: dict, **kwargs) -> "MemoryStore":
        entries = {}
        for key, val in raw.items():
            items = []
            if val.get("summary"):
                items.append(ActionSequence.from_dict(val["summary"], summary=True))
            items.extend(ActionSequence.from_dict(r) for r in val.get("recordings", []))
            if items:
                entries[key] = items
        return cls(entries, **kwargs)

    @classmethod
    def load(cls, path: str | Path, **kwargs) -> "MemoryStore":
        p = Path(path)
        if not p.exists():
            return cls(path=p, **kwargs)
        return cls.from_dict(json.loads(p.read_text()), path=p, **kwargs)

    def __eq__(self, other) -> bool:
        return isinstance(other, MemoryStore) and self.to_dict() == other.to_dict()
