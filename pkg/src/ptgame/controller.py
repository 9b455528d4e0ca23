"""Controller synthesis from a strategy specification.

The controller has one urgent *mirror* location per game location it visits
and one *instruction* location per (epsilon-processed) instruction.  From a
mirror the controller moves, without letting time pass, to the instruction
location whose source holds; there it waits inside the temporal predecessors
of the instruction target and fires the synchronised controllable action.
Environment actions are accepted from every instruction location.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from .model import CONTROLLER, PTG, Location, ModelError, Transition, build_ptg
from .strategy import StrategySpecification, add_epsilon_bounds, model_digest
from .syntax import parse_model, serialize_model
from .zones import (
    Constraint, LE, Zone, has_upper, intersect, is_empty, is_subset, normalize, time_elapse,
    time_past,
)

URGENCY_CLOCK = "u_urg"


@dataclass(frozen=True)
class Owner:
    """What a controller location stands for: a game location and, for instruction locations, an instruction."""

    game_location: str
    instruction: int | None = None  # index in the epsilon-processed specification

    @property
    def is_mirror(self) -> bool:
        return self.instruction is None


@dataclass(frozen=True)
class Controller:
    ptg: PTG
    owners: dict = field(hash=False)
    epsilon: str = "eps"
    spec: StrategySpecification | None = field(default=None, hash=False, compare=False)

    def owner(self, location: str) -> Owner:
        return self.owners[location]

    def mirror(self, game_location: str) -> str | None:
        for name, o in self.owners.items():
            if o.is_mirror and o.game_location == game_location:
                return name
        return None

    def instruction_locations(self) -> list:
        return [name for name, o in self.owners.items() if not o.is_mirror]


def select_label(index: int) -> str:
    return f"__sel_{index}"


def synthesize_controller(g: PTG, spec: StrategySpecification, eps: str = "eps",
                          skip_goal_waits: bool = True, prune_env: bool = True,
                          keep_included: bool = True) -> Controller:
    """Build the controller automaton for ``spec``.

    ``skip_goal_waits`` drops Wait instructions at goal locations: once the
    game is in a goal location the controller has nothing left to do.
    ``prune_env`` omits environment edges whose guard can never hold while the
    controller sits in the instruction location.
    """
    for inst in spec.instructions:
        t = inst.transition
        if t is not None and (t.index >= len(g.transitions) or g.transitions[t.index] != t):
            raise ModelError(f"instruction {inst.index} refers to an unknown transition")
        if not g.has_location(inst.location):
            raise ModelError(f"instruction {inst.index} refers to an unknown location")
    processed = add_epsilon_bounds(spec, eps, keep_included=keep_included)
    space = processed.space
    taken = {loc.name for loc in g.locations}
    locations: dict = {}
    owners: dict = {}
    transitions: list = []
    actions = list(g.actions)

    def mirror(loc: str) -> str:
        if loc not in locations:
            locations[loc] = Location(loc, Zone.top(space), True)
            owners[loc] = Owner(loc)
        return loc

    def fresh(base: str) -> str:
        name = base
        while name in taken or name in locations:
            name += "_"
        return name

    mirror(g.initial)
    for inst in processed.instructions:
        loc = inst.location
        if skip_goal_waits and inst.is_wait and loc in g.goal:
            continue
        src = mirror(loc)
        q = fresh(f"{loc}_i{inst.index}")
        label = select_label(inst.index)
        actions.append((label, True))
        xi1 = inst.source.zone
        transitions.append(Transition(src, q, xi1, label))
        if inst.is_wait:
            invariant, urgent = Zone.top(space), False
        else:
            xi2 = inst.target.zone
            invariant = normalize(time_past(xi2))
            urgent = is_subset(xi1, xi2) and not has_upper(xi2)
            t = inst.transition
            transitions.append(Transition(q, mirror(t.target), xi2, t.label))
        locations[q] = Location(q, invariant, urgent)
        owners[q] = Owner(loc, inst.index)
        reach = xi1 if urgent else intersect(intersect(time_elapse(xi1), invariant),
                                            g.invariant(loc).extend(space))
        for tu in g.outgoing(loc):
            if tu.controllable:
                continue
            if prune_env and is_empty(intersect(reach, tu.guard.extend(space))):
                continue
            transitions.append(Transition(q, mirror(tu.target), Zone.top(space), tu.label, frozenset(), False))
    ptg = build_ptg(g.clocks, space.params, actions, tuple(locations.values()), transitions,
                    g.initial, frozenset(), kind=CONTROLLER, name=f"controller of {g.name}".strip())
    return Controller(ptg, owners, eps, processed)


# ---------------------------------------------------------------------------
# Export


def strategy_digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def encode_urgency(c: PTG) -> PTG:
    """Replace urgency flags by a fresh clock reset on entry and bounded by zero."""
    if URGENCY_CLOCK in c.clocks or URGENCY_CLOCK in c.params:
        raise ModelError(f"name {URGENCY_CLOCK!r} is already used")
    space = c.space.with_clocks(URGENCY_CLOCK)
    bound = Constraint.make({URGENCY_CLOCK: 1}, 0, LE)
    urgent = {loc.name for loc in c.locations if loc.urgent}
    locations = []
    for loc in c.locations:
        inv = loc.invariant.extend(space)
        if loc.urgent:
            inv = inv.conj(bound)
        locations.append(Location(loc.name, inv, False))
    transitions = [
        Transition(t.source, t.target, t.guard.extend(space), t.label,
                   t.resets | ({URGENCY_CLOCK} if t.target in urgent else set()), t.controllable)
        for t in c.transitions
    ]
    return build_ptg(space.clocks, space.params, c.actions, locations, transitions,
                     c.initial, c.goal, kind=c.kind, name=c.name)


def export_controller(c: Controller, model_hash: str = "", strategy_hash: str = "",
                      encode: bool = False) -> str:
    """Model-language text of the controller preceded by a manifest comment block."""
    header = ["controller", f"model-sha256: {model_hash}", f"strategy-sha256: {strategy_hash}",
              f"epsilon: {c.epsilon}"]
    for name, o in c.owners.items():
        header.append(f"owner {name}: {o.game_location}" + ("" if o.is_mirror else f" {o.instruction}"))
    ptg = encode_urgency(c.ptg) if encode else c.ptg
    return serialize_model(ptg, "\n".join(header))


_OWNER = re.compile(r"#\s*owner\s+(\S+):\s*(\S+)(?:\s+(\d+))?\s*$")


def read_manifest(text: str) -> dict:
    out = {"owners": {}}
    for line in text.splitlines():
        line = line.strip()
        if not line.startswith("#"):
            continue
        m = _OWNER.match(line)
        if m:
            name, loc, idx = m.groups()
            out["owners"][name] = Owner(loc, None if idx is None else int(idx))
            continue
        key, sep, value = line[1:].partition(":")
        if sep and key.strip() in ("model-sha256", "strategy-sha256", "epsilon"):
            out[key.strip()] = value.strip()
    return out


def parse_controller(text: str) -> Controller:
    ptg = parse_model(text)
    manifest = read_manifest(text)
    owners = manifest["owners"] or {loc.name: Owner(loc.name) for loc in ptg.locations}
    return Controller(ptg, owners, manifest.get("epsilon", "eps"))


def controller_from_text(g_text: str, spec_text: str, g: PTG, spec: StrategySpecification,
                         eps: str = "eps", encode: bool = False) -> str:
    return export_controller(synthesize_controller(g, spec, eps), model_digest(g_text),
                             strategy_digest(spec_text), encode)
