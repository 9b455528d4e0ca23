"""Parametric timed game data model."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .zones import Constraint, EQ, Space, Zone, intersect, is_subset

GAME, CONTROLLER, PRODUCT = "game", "controller", "product"


class ModelError(ValueError):
    """Invalid model; ``line``/``column`` are set when the error has a source position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class Location:
    name: str
    invariant: Zone
    urgent: bool = False


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    guard: Zone
    label: str
    resets: frozenset = frozenset()
    controllable: bool = True
    index: int = 0

    def __str__(self) -> str:
        return f"{self.source} -{self.label}-> {self.target}"


@dataclass(frozen=True)
class PTG:
    """A parametric timed game.

    ``kind`` is ``game`` for user models; controllers and products may reuse a
    label on several transitions, games may not.
    """

    clocks: tuple
    params: tuple
    actions: tuple  # (label, controllable) pairs
    locations: tuple
    transitions: tuple
    initial: str
    goal: frozenset = frozenset()
    kind: str = GAME
    name: str = ""

    @cached_property
    def space(self) -> Space:
        return Space(self.clocks, self.params)

    @cached_property
    def action_table(self) -> dict:
        return dict(self.actions)

    @cached_property
    def _locations(self) -> dict:
        return {loc.name: loc for loc in self.locations}

    @cached_property
    def _outgoing(self) -> dict:
        out: dict = {loc.name: [] for loc in self.locations}
        for t in self.transitions:
            out.setdefault(t.source, []).append(t)
        return {k: tuple(v) for k, v in out.items()}

    def location(self, name: str) -> Location:
        return self._locations[name]

    def has_location(self, name: str) -> bool:
        return name in self._locations

    def invariant(self, name: str) -> Zone:
        return self._locations[name].invariant

    def is_urgent(self, name: str) -> bool:
        return self._locations[name].urgent

    def outgoing(self, name: str) -> tuple:
        return self._outgoing.get(name, ())

    def transition_by_label(self, label: str) -> Transition:
        found = [t for t in self.transitions if t.label == label]
        if len(found) != 1:
            raise KeyError(f"label {label!r} names {len(found)} transitions")
        return found[0]


@dataclass(frozen=True)
class SymbolicState:
    location: str
    zone: Zone


def initial_symbolic_state(g: PTG) -> SymbolicState:
    """All clocks zero, intersected with the initial invariant."""
    zeros = [Constraint.make({x: 1}, 0, EQ) for x in g.clocks]
    return SymbolicState(g.initial, intersect(Zone.make(g.space, zeros), g.invariant(g.initial)))


def build_ptg(clocks, params, actions, locations, transitions, initial, goal,
              kind: str = GAME, name: str = "") -> PTG:
    """Assemble and validate a game, numbering transitions in order."""
    numbered = tuple(
        Transition(t.source, t.target, t.guard, t.label, frozenset(t.resets), t.controllable, i)
        for i, t in enumerate(transitions)
    )
    g = PTG(tuple(clocks), tuple(params), tuple(actions), tuple(locations), numbered,
            initial, frozenset(goal), kind, name)
    validate(g)
    return g


def validate(g: PTG) -> None:
    names = [loc.name for loc in g.locations]
    if len(set(names)) != len(names):
        raise ModelError("duplicate location name")
    if set(g.clocks) & set(g.params):
        raise ModelError(f"names used both as clock and parameter: {sorted(set(g.clocks) & set(g.params))}")
    known = set(names)
    if not g.initial:
        raise ModelError("missing init")
    if g.initial not in known:
        raise ModelError(f"unknown initial location {g.initial!r}")
    for loc_name in g.goal:
        if loc_name not in known:
            raise ModelError(f"unknown goal location {loc_name!r}")
    labels = [a for a, _ in g.actions]
    if len(set(labels)) != len(labels):
        raise ModelError("duplicate action declaration")
    table = g.action_table
    used: dict = {}
    for loc in g.locations:
        if loc.invariant.space != g.space:
            raise ModelError(f"invariant of {loc.name} has the wrong dimensions")
    for t in g.transitions:
        if t.source not in known or t.target not in known:
            raise ModelError(f"transition {t} has an unknown endpoint")
        if t.label not in table:
            raise ModelError(f"undeclared action {t.label!r}")
        if table[t.label] != t.controllable:
            raise ModelError(f"controllability of {t.label!r} disagrees with its declaration")
        bad = set(t.resets) - set(g.clocks)
        if bad:
            raise ModelError(f"reset of undeclared clock {sorted(bad)[0]!r}")
        if t.guard.space != g.space:
            raise ModelError(f"guard of {t} has the wrong dimensions")
        used[t.label] = used.get(t.label, 0) + 1
    if g.kind == GAME:
        for label, count in used.items():
            if count > 1:
                raise ModelError(f"duplicate label {label!r}: used on {count} transitions")


def models_equivalent(a: PTG, b: PTG) -> bool:
    """Structural equality with zones compared semantically."""
    if (a.clocks, a.params, a.initial, a.goal) != (b.clocks, b.params, b.initial, b.goal):
        return False
    if a.action_table != b.action_table:
        return False
    if [l.name for l in a.locations] != [l.name for l in b.locations]:
        return False
    for la, lb in zip(a.locations, b.locations):
        if la.urgent != lb.urgent or not _same(la.invariant, lb.invariant):
            return False
    if len(a.transitions) != len(b.transitions):
        return False
    for ta, tb in zip(a.transitions, b.transitions):
        if (ta.source, ta.target, ta.label, ta.resets, ta.controllable) != (
                tb.source, tb.target, tb.label, tb.resets, tb.controllable):
            return False
        if not _same(ta.guard, tb.guard):
            return False
    return True


def _same(x: Zone, y: Zone) -> bool:
    return is_subset(x, y) and is_subset(y, x)
