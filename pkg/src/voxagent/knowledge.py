"""Crafting/smelting recipes, item facts, and goal construction.

The bundled knowledge base lives in ``data/recipes.json`` and
``data/facts.json``.

``recipes.json`` is a list of records::

    {"output": "stick", "output_count": 4, "materials": {"planks": 2},
     "tool": null, "station": "craft"}

``facts.json`` is a list of records::

    {"item": "iron_ore", "info_text": "...", "aliases": ["..."],
     "hints": {"source": "mine", "blocks": ["iron_ore"],
               "min_tool_tier": "stone", "y_band": [49, 57]}}

Recognised hint keys: ``source`` (mine | mob | plant | apply), ``blocks``
(block kinds that drop the item), ``mob`` (entity kind that drops it),
``tool``/``target`` for ``apply`` sources, ``min_tool_tier`` (hand,
wooden, stone, iron, diamond), ``y_band`` ([min, max]) and ``tool_tier``
for pickaxes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping

from .blocks import BLOCK_ID, TIER, tier_of_pickaxe

DATA_DIR = Path(__file__).parent / "data"

SOURCES = ("mine", "mob", "plant", "apply", "craft")
STATIONS = ("craft", "smelt")


class KnowledgeError(ValueError):
    """Raised when a knowledge base file is malformed or inconsistent."""


class UnknownItemError(KeyError):
    pass


@dataclass(frozen=True)
class Recipe:
    output: str
    output_count: int
    materials: Mapping[str, int]
    tool: str | None = None
    station: str = "craft"


@dataclass(frozen=True)
class FactEntry:
    item: str
    info_text: str
    hints: Mapping[str, object] = field(default_factory=dict)
    aliases: tuple[str, ...] = ()

    @property
    def y_band(self) -> tuple[int, int] | None:
        band = self.hints.get("y_band")
        return (int(band[0]), int(band[1])) if band else None

    @property
    def source(self) -> str:
        return str(self.hints.get("source", "craft"))


@dataclass(frozen=True)
class Goal:
    """Target of decomposition and planning: (object, count, material, tool, info)."""

    object: str
    count: int = 1
    material: Mapping[str, int] | None = None
    tool: str | None = None
    info: str = ""

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"goal count must be >= 1, got {self.count}")

    def describe(self) -> str:
        text = f"obtain {self.count} {self.object}"
        given = []
        if self.material:
            given.append("material " + ", ".join(f"{v} {k}" for k, v in self.material.items()))
        if self.tool:
            given.append(f"tool {self.tool}")
        if given:
            text += ", given " + " and ".join(given)
        if self.info:
            text += f". Extra info: {self.info}"
        return text

    def to_dict(self) -> dict:
        return {
            "object": self.object,
            "count": self.count,
            "material": dict(self.material) if self.material else None,
            "tool": self.tool,
            "info": self.info,
        }


@dataclass
class KnowledgeBase:
    recipes: dict[str, Recipe]
    facts: dict[str, FactEntry]
    aliases: dict[str, str]
    block_tiers: dict[str, int]
    block_drops: dict[str, str]
    # swappable text retriever; keyed lookup by default
    retriever: Callable[["KnowledgeBase", str], str] | None = None

    @property
    def items(self) -> set[str]:
        out = set(self.facts) | set(self.recipes)
        for rec in self.recipes.values():
            out.update(rec.materials)
            if rec.tool:
                out.add(rec.tool)
        return out

    def resolve(self, name: str) -> str:
        """Canonical item name for ``name``; unknown names are returned unchanged."""
        key = name.strip().lower().replace(" ", "_")
        if key in self.facts or key in self.recipes:
            return key
        return self.aliases.get(key, key)

    def knows(self, name: str) -> bool:
        return self.resolve(name) in self.items

    def tool_tier(self, item: str | None) -> int:
        if item is None or item not in self.facts:
            return 0
        tier = self.facts[item].hints.get("tool_tier")
        return TIER[tier] if tier else 0

    def dependencies(self, item: str) -> list[str]:
        rec = self.recipes.get(item)
        if rec is not None:
            deps = list(rec.materials)
            if rec.tool:
                deps.append(rec.tool)
            return deps
        fact = self.facts.get(item)
        if fact is None:
            return []
        tool = fact.hints.get("tool") or tier_of_pickaxe(fact.hints.get("min_tool_tier"))
        return [tool] if tool else []


def _parse_recipe(raw: dict, idx: int) -> Recipe:
    try:
        output = raw["output"]
        count = int(raw.get("output_count", 1))
        materials = {str(k): int(v) for k, v in raw["materials"].items()}
        tool = raw.get("tool")
        station = raw.get("station", "craft")
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise KnowledgeError(f"recipe #{idx}: malformed entry ({exc!r})") from exc
    if count < 1:
        raise KnowledgeError(f"recipe {output!r}: output_count must be >= 1")
    if station not in STATIONS:
        raise KnowledgeError(f"recipe {output!r}: unknown station {station!r}")
    for mat, n in materials.items():
        if n < 1:
            raise KnowledgeError(f"recipe {output!r}: material {mat!r} count must be >= 1")
    if output in materials:
        raise KnowledgeError(f"recipe {output!r}: output listed among its own materials")
    return Recipe(output, count, materials, tool, station)


def _parse_fact(raw: dict, idx: int) -> FactEntry:
    try:
        item = raw["item"]
        text = str(raw.get("info_text", ""))
        hints = dict(raw.get("hints") or {})
        aliases = tuple(raw.get("aliases") or ())
    except (KeyError, TypeError, ValueError) as exc:
        raise KnowledgeError(f"fact #{idx}: malformed entry ({exc!r})") from exc
    source = hints.get("source")
    if source is not None and source not in SOURCES:
        raise KnowledgeError(f"fact {item!r}: unknown source {source!r}")
    tier = hints.get("min_tool_tier")
    if tier is not None and tier not in TIER:
        raise KnowledgeError(f"fact {item!r}: unknown tool tier {tier!r}")
    band = hints.get("y_band")
    if band is not None and (len(band) != 2 or band[0] > band[1]):
        raise KnowledgeError(f"fact {item!r}: bad y_band {band!r}")
    if source == "mine" and not text.strip():
        raise KnowledgeError(f"fact {item!r}: mineable item needs info_text")
    return FactEntry(item, text, hints, aliases)


def _check_acyclic(kb: KnowledgeBase) -> list[str]:
    """Topologically sort the dependency graph; raise on a cycle."""
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(node: str, path: list[str]):
        mark = state.get(node)
        if mark == 2:
            return
        if mark == 1:
            cycle = path[path.index(node):] + [node]
            raise KnowledgeError("recipe cycle: " + " -> ".join(cycle))
        state[node] = 1
        path.append(node)
        for dep in kb.dependencies(node):
            visit(dep, path)
        path.pop()
        state[node] = 2
        order.append(node)

    for item in sorted(kb.items):
        visit(item, [])
    return order


def build_kb(recipes: list[dict], facts: list[dict]) -> KnowledgeBase:
    """Validate raw records and assemble a :class:`KnowledgeBase`."""
    recs: dict[str, Recipe] = {}
    for i, raw in enumerate(recipes):
        rec = _parse_recipe(raw, i)
        # first-listed recipe wins
        recs.setdefault(rec.output, rec)
    fs: dict[str, FactEntry] = {}
    for i, raw in enumerate(facts):
        fact = _parse_fact(raw, i)
        fs[fact.item] = fact

    known = set(recs) | set(fs)
    for rec in recs.values():
        for name in [*rec.materials, *([rec.tool] if rec.tool else [])]:
            if name not in known:
                raise KnowledgeError(f"recipe {rec.output!r}: unknown item {name!r}")

    aliases: dict[str, str] = {}
    block_tiers: dict[str, int] = {}
    block_drops: dict[str, str] = {}
    for fact in fs.values():
        for alias in fact.aliases:
            aliases[alias] = fact.item
        tier = TIER[fact.hints.get("min_tool_tier", "hand")]
        for block in fact.hints.get("blocks", ()):
            if block not in BLOCK_ID:
                raise KnowledgeError(f"fact {fact.item!r}: unknown block kind {block!r}")
            block_tiers[block] = tier
            block_drops.setdefault(block, fact.item)
        mob = fact.hints.get("mob")
        if mob is not None and not isinstance(mob, str):
            raise KnowledgeError(f"fact {fact.item!r}: mob must be a name")
    for item in recs:
        # placed crafted blocks drop themselves and break by hand
        if item in BLOCK_ID:
            block_drops.setdefault(item, item)

    kb = KnowledgeBase(recs, fs, aliases, block_tiers, block_drops)
    for item in kb.items:
        if item not in recs and item not in fs:
            raise KnowledgeError(f"item {item!r} has neither a recipe nor a fact entry")
    _check_acyclic(kb)
    return kb


def load_kb(path: str | Path | None = None) -> KnowledgeBase:
    """Load a knowledge base from a directory holding recipes.json and facts.json."""
    root = Path(path) if path is not None else DATA_DIR
    try:
        recipes = json.loads((root / "recipes.json").read_text())
        facts = json.loads((root / "facts.json").read_text())
    except json.JSONDecodeError as exc:
        raise KnowledgeError(f"{root}: invalid JSON ({exc})") from exc
    if not isinstance(recipes, list) or not isinstance(facts, list):
        raise KnowledgeError(f"{root}: recipes.json and facts.json must hold JSON arrays")
    return build_kb(recipes, facts)


@lru_cache(maxsize=1)
def default_kb() -> KnowledgeBase:
    return load_kb()


def keyed_lookup(kb: KnowledgeBase, item: str) -> str:
    fact = kb.facts.get(kb.resolve(item))
    return fact.info_text if fact else ""


def lookup_info(kb: KnowledgeBase, item: str) -> str:
    """Text knowledge for ``item`` (exact or alias match); empty if absent."""
    retriever = kb.retriever or keyed_lookup
    return retriever(kb, item)


def make_goal(kb: KnowledgeBase, object: str, count: int = 1) -> Goal:
    item = kb.resolve(object)
    if item not in kb.items:
        raise UnknownItemError(object)
    if count < 1:
        raise ValueError(f"goal count must be >= 1, got {count}")
    rec = kb.recipes.get(item)
    if rec is not None:
        material = dict(rec.materials) or None
        tool = rec.tool
    else:
        deps = kb.dependencies(item)
        material = None
        tool = deps[0] if deps else None
    return Goal(item, count, material, tool, lookup_info(kb, item))


def craft_units(recipe: Recipe, count: int) -> int:
    return math.ceil(count / recipe.output_count)
