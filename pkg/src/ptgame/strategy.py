"""Strategy specifications: ordered instructions, epsilon splitting, and file I/O.

An instruction ``(source, target, t)`` tells the controller: from a state in
``source``, wait until the state lies in ``target`` and fire ``t``.  A Wait
instruction has no target and no transition.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

from .model import PTG, ModelError, SymbolicState, Transition
from .syntax import parse_zone
from .zones import (
    Space, Zone, epsilon_lower_bounds, format_zone, has_upper, intersect, is_empty,
    is_subset, normalize, time_past,
)


@dataclass(frozen=True)
class Instruction:
    source: SymbolicState
    target: SymbolicState | None
    transition: Transition | None
    index: int
    origin: int | None = None  # index of the instruction this one was split from

    @property
    def is_wait(self) -> bool:
        return self.transition is None

    @property
    def location(self) -> str:
        return self.source.location


@dataclass(frozen=True)
class StrategySpecification:
    instructions: tuple
    space: Space

    def __iter__(self):
        return iter(self.instructions)

    def __len__(self) -> int:
        return len(self.instructions)

    def at(self, location: str) -> list:
        return [i for i in self.instructions if i.location == location]

    def matching(self, location: str, valuation) -> list:
        return [i for i in self.instructions
                if i.location == location and i.source.zone.contains(valuation)]


def check_disjoint(spec: StrategySpecification) -> list:
    """Pairs of instruction indices at the same location whose sources overlap."""
    clashes = []
    items = list(spec.instructions)
    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            i, j = items[a], items[b]
            if i.location == j.location and not is_empty(intersect(i.source.zone, j.source.zone)):
                clashes.append((i.index, j.index))
    return clashes


def add_epsilon_bounds(spec: StrategySpecification, eps: str,
                       keep_included: bool = True) -> StrategySpecification:
    """Replace time-unbounded targets by slabs of width ``eps`` above their lower bounds.

    With ``keep_included`` an instruction whose source already lies in its target
    is copied unchanged instead of being split.
    """
    if eps in spec.space.params or eps in spec.space.clocks:
        raise ValueError(f"epsilon name {eps!r} is already used")
    space = spec.space.with_params(eps)
    out = []

    def emit(src: Zone, tgt: Zone | None, inst: Instruction):
        target = None if tgt is None else SymbolicState(inst.location, tgt)
        out.append(Instruction(SymbolicState(inst.location, src), target, inst.transition,
                               len(out), inst.index))

    for inst in spec.instructions:
        src = inst.source.zone.extend(space)
        if inst.is_wait:
            emit(src, None, inst)
            continue
        tgt = normalize(inst.target.zone)
        if has_upper(tgt) or (keep_included and is_subset(inst.source.zone, tgt)):
            emit(src, tgt.extend(space), inst)
            continue
        for piece in epsilon_lower_bounds(tgt, eps):
            branch = intersect(src, time_past(piece))
            if not is_empty(branch):
                emit(normalize(branch), normalize(piece), inst)
        immediate = intersect(src, tgt.extend(space))
        if not is_empty(immediate):
            emit(normalize(immediate), tgt.extend(space), inst)
    return StrategySpecification(tuple(out), space)


# ---------------------------------------------------------------------------
# File format


def model_digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _decision_name(g: PTG, t: Transition) -> str:
    if sum(1 for u in g.transitions if u.label == t.label) == 1:
        return t.label
    return f"{t.label}#{t.index}"


def serialize_strategy(spec: StrategySpecification, g: PTG, model_hash: str = "") -> str:
    lines = ["# strategy specification"]
    if model_hash:
        lines.append(f"# model-sha256: {model_hash}")
    for inst in spec.instructions:
        head = f"instr {inst.index} @ {inst.location} : when ({format_zone(inst.source.zone)})"
        if inst.is_wait:
            lines.append(f"{head} wait;")
        else:
            lines.append(f"{head} until ({format_zone(inst.target.zone)}) "
                         f"do {_decision_name(g, inst.transition)};")
    return "\n".join(lines) + "\n"


_RECORD = re.compile(
    r"^instr\s+(\d+)\s*@\s*(\S+)\s*:\s*when\s*\((.*?)\)\s*"
    r"(?:wait|until\s*\((.*?)\)\s*do\s+(\S+?))\s*;\s*$"
)


def strategy_model_hash(text: str) -> str | None:
    for line in text.splitlines():
        m = re.match(r"#\s*model-sha256:\s*([0-9a-f]+)", line.strip())
        if m:
            return m.group(1)
    return None


def parse_strategy(text: str, g: PTG) -> StrategySpecification:
    """Parse a strategy file written for game ``g``."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _RECORD.match(line)
        if not m:
            raise ModelError("malformed strategy record", lineno, 1)
        index, loc, src, tgt, decision = m.groups()
        if not g.has_location(loc):
            raise ModelError(f"unknown location {loc!r}", lineno, 1)
        try:
            source = parse_zone(src, g.space)
            target = parse_zone(tgt, g.space) if tgt is not None else None
        except ModelError as e:
            raise ModelError(f"in strategy record: {e.message}", lineno, 1) from None
        t = None
        if decision is not None:
            t = _resolve(g, decision, lineno)
            if t.source != loc:
                raise ModelError(f"transition {decision!r} does not leave {loc}", lineno, 1)
        out.append(Instruction(SymbolicState(loc, source),
                               None if target is None else SymbolicState(loc, target), t, int(index)))
    indices = [i.index for i in out]
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise ModelError("instruction indices must increase")
    spec = StrategySpecification(tuple(out), g.space)
    clashes = check_disjoint(spec)
    if clashes:
        raise ModelError(f"overlapping instruction sources {clashes[0]}")
    return spec


def _resolve(g: PTG, name: str, lineno: int) -> Transition:
    if "#" in name:
        label, idx = name.split("#", 1)
        if not idx.isdigit() or int(idx) >= len(g.transitions) or g.transitions[int(idx)].label != label:
            raise ModelError(f"unknown transition {name!r}", lineno, 1)
        return g.transitions[int(idx)]
    found = [t for t in g.transitions if t.label == name]
    if len(found) != 1:
        raise ModelError(f"unknown or ambiguous transition {name!r}", lineno, 1)
    return found[0]
