"""Parse provider replies into validated plans."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from ..actions import ActionError, StructuredAction, make_action

_FENCE = re.compile(r"^\s*```[a-zA-Z]*\s*|\s*```\s*$")


class ParseError(ValueError):
    """A reply that is not a usable plan; the message is fed back to the provider."""

    def __init__(self, description: str):
        super().__init__(description or "unparseable response")
        self.description = str(self)


@dataclass
class PlanResponse:
    explanation: str | None
    thoughts: str
    action_list: list[StructuredAction] = field(default_factory=list)


def _load_json(text: str):
    body = _FENCE.sub("", text.strip())
    try:
        return json.loads(body)
    except (json.JSONDecodeError, RecursionError):
        pass
    start, end = body.find("{"), body.rfind("}")
    if start < 0 or end <= start:
        raise ParseError("no JSON object found in the response")
    try:
        return json.loads(body[start : end + 1])
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg} at position {exc.pos}") from None
    except RecursionError:
        raise ParseError("invalid JSON: nesting too deep") from None


def parse_actions(raw, where: str = "action_list") -> list[StructuredAction]:
    if not isinstance(raw, list):
        raise ParseError(f"{where} must be a list")
    out = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ParseError(f"{where}[{i}] must be an object with name and args")
        if "name" not in item:
            raise ParseError(f"{where}[{i}] has no name")
        extra = set(item) - {"name", "args", "expectation"}
        if extra:
            raise ParseError(f"{where}[{i}] has unexpected field {sorted(extra)[0]!r}")
        try:
            out.append(make_action(item["name"], item.get("args"), item.get("expectation") or ""))
        except ActionError as exc:
            raise ParseError(f"{where}[{i}]: {exc}") from None
    return out


def parse_response(text) -> PlanResponse:
    if not isinstance(text, str):
        raise ParseError(f"response must be text, got {type(text).__name__}")
    data = _load_json(text)
    if not isinstance(data, dict):
        raise ParseError("the response must be a JSON object")
    if "action_list" not in data:
        raise ParseError("the response has no action_list")
    explanation = data.get("explanation")
    if explanation is not None and not isinstance(explanation, str):
        raise ParseError("explanation must be a string or null")
    thoughts = data.get("thoughts", "")
    if thoughts is None:
        thoughts = ""
    if not isinstance(thoughts, str):
        raise ParseError("thoughts must be a string")
    return PlanResponse(explanation, thoughts, parse_actions(data["action_list"]))
