"""Block kinds, item/block correspondences and tool tiers."""

from __future__ import annotations

BLOCK_NAMES = (
    "air",
    "bedrock",
    "stone",
    "dirt",
    "grass",
    "log",
    "leaves",
    "water",
    "lava",
    "sand",
    "coal_ore",
    "iron_ore",
    "gold_ore",
    "diamond_ore",
    "redstone_ore",
    "lapis_ore",
    "cobblestone",
    "planks",
    "crafting_table",
    "furnace",
    "obsidian",
    "glass",
)
BLOCK_ID = {name: i for i, name in enumerate(BLOCK_NAMES)}

AIR = BLOCK_ID["air"]
BEDROCK = BLOCK_ID["bedrock"]
STONE = BLOCK_ID["stone"]
DIRT = BLOCK_ID["dirt"]
GRASS = BLOCK_ID["grass"]
LOG = BLOCK_ID["log"]
LEAVES = BLOCK_ID["leaves"]
WATER = BLOCK_ID["water"]
LAVA = BLOCK_ID["lava"]
SAND = BLOCK_ID["sand"]

# never breakable by attack_click
UNBREAKABLE = frozenset({BEDROCK, WATER, LAVA})
# not solid for standing / movement purposes
NON_SOLID = frozenset({AIR, WATER, LAVA})

# items that can be placed back into the world as a block of the same name
PLACEABLE = frozenset(
    {"dirt", "cobblestone", "planks", "log", "sand", "crafting_table", "furnace", "glass", "obsidian"}
)

TIER_NAMES = ("hand", "wooden", "stone", "iron", "diamond")
TIER = {name: i for i, name in enumerate(TIER_NAMES)}

ENTITY_KINDS = ("cow", "sheep", "pig", "chicken")
ENTITY_HEALTH = {"cow": 10, "sheep": 8, "pig": 10, "chicken": 4}
ENTITY_DROPS = {
    "cow": {"beef": 1, "leather": 1},
    "sheep": {"mutton": 1, "wool": 1},
    "pig": {"porkchop": 1},
    "chicken": {"chicken": 1, "feather": 1},
}

WEAPON_DAMAGE = {
    "wooden_sword": 4,
    "stone_sword": 5,
    "iron_sword": 6,
    "diamond_sword": 7,
}


def tier_of_pickaxe(tier: str | int | None) -> str | None:
    """Name of the cheapest pickaxe able to break blocks of ``tier``."""
    if tier is None:
        return None
    level = TIER[tier] if isinstance(tier, str) else int(tier)
    if level <= 0:
        return None
    return f"{TIER_NAMES[level]}_pickaxe"


def attack_damage(item: str | None) -> int:
    if item is None:
        return 1
    if item in WEAPON_DAMAGE:
        return WEAPON_DAMAGE[item]
    if item.endswith(("_axe", "_pickaxe", "_shovel")):
        return 2
    return 1
