"""Step-ordering heuristics for the extraction search.

A strategy turns the list of enabled steps of a node into the order in
which the engine will try them.  Orderings are total preorders; ties keep
the canonical enumeration order (process name, then constructor), so every
strategy is fully deterministic given its seed.

The two halves of a conditional (its then and else steps) always travel
together: they receive identical sort keys and random shuffles permute
whole units, never separating a pair.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import sp
from .semantics import (
    AnnotatedNetwork,
    ComAction,
    ElseAction,
    SelAction,
    Step,
    ThenAction,
    process_names_of,
)

STRATEGY_NAMES = (
    "Random",
    "LongestFirst",
    "ShortestFirst",
    "InteractionsFirst",
    "ConditionalsFirst",
    "UnmarkedFirst",
    "UnmarkedThenInteractions",
    "UnmarkedThenSelections",
    "UnmarkedThenConditionals",
    "UnmarkedThenRandom",
)


@dataclass(frozen=True)
class Strategy:
    name: str = "InteractionsFirst"
    seed: int = 0

    def __post_init__(self):
        if self.name not in STRATEGY_NAMES:
            raise ValueError(
                f"unknown strategy {self.name!r}; choose from {', '.join(STRATEGY_NAMES)}"
            )


def group_units(steps: list) -> list:
    """Group steps into schedulable units, pairing Then with Else.

    Returns a list of tuples of steps: singletons for interactions, pairs
    for conditionals (then first).
    """
    units = []
    pending = {}
    for step in steps:
        match step.label:
            case ThenAction(p, e):
                pending[(p, e)] = len(units)
                units.append([step])
            case ElseAction(p, e):
                units[pending[(p, e)]].append(step)
            case _:
                units.append([step])
    return [tuple(u) for u in units]


def _is_interaction(step: Step) -> bool:
    return isinstance(step.label, (ComAction, SelAction))


def _largest_main(step: Step, an: AnnotatedNetwork) -> int:
    return max(
        an.net[p].main.size for p in process_names_of(step.label)
    )


def _touches_unmarked(step: Step, an: AnnotatedNetwork) -> bool:
    return bool(process_names_of(step.label) - an.marked)


def _secondary_selections(step: Step) -> int:
    match step.label:
        case SelAction():
            return 0
        case ComAction():
            return 1
    return 2


def order_steps(steps: list, strategy: Strategy, an: AnnotatedNetwork, rng=None) -> list:
    """Permutation of `steps` in the order the strategy wants them tried."""
    units = group_units(steps)
    name = strategy.name

    if name in ("Random", "UnmarkedThenRandom"):
        if rng is None:
            rng = random.Random(f"{strategy.seed}:orphan")
        rng.shuffle(units)

    def head(unit):
        return unit[0]

    if name == "LongestFirst":
        units.sort(key=lambda u: -_largest_main(head(u), an))
    elif name == "ShortestFirst":
        units.sort(key=lambda u: _largest_main(head(u), an))
    elif name == "InteractionsFirst":
        units.sort(key=lambda u: 0 if _is_interaction(head(u)) else 1)
    elif name == "ConditionalsFirst":
        units.sort(key=lambda u: 1 if _is_interaction(head(u)) else 0)
    elif name == "UnmarkedFirst":
        units.sort(key=lambda u: 0 if _touches_unmarked(head(u), an) else 1)
    elif name == "UnmarkedThenInteractions":
        units.sort(
            key=lambda u: (
                0 if _touches_unmarked(head(u), an) else 1,
                0 if _is_interaction(head(u)) else 1,
            )
        )
    elif name == "UnmarkedThenSelections":
        units.sort(
            key=lambda u: (
                0 if _touches_unmarked(head(u), an) else 1,
                _secondary_selections(head(u)),
            )
        )
    elif name == "UnmarkedThenConditionals":
        units.sort(
            key=lambda u: (
                0 if _touches_unmarked(head(u), an) else 1,
                1 if _is_interaction(head(u)) else 0,
            )
        )
    elif name == "UnmarkedThenRandom":
        units.sort(key=lambda u: 0 if _touches_unmarked(head(u), an) else 1)
    # Random: already shuffled; anything else: canonical order as given.

    return [step for unit in units for step in unit]
