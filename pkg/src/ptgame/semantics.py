"""Symbolic and concrete semantics of parametric timed games.

Runs are finite lists of ``(delay, transition)`` steps with exact rational
delays.  A concrete valuation is one mapping holding both clock and parameter
values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .model import PTG, ModelError, SymbolicState, Transition
from .strategy import Instruction, StrategySpecification
from .zones import (
    Interval, Zone, ZoneUnion, as_fraction, as_union, delay_interval, format_number, intersect, reset,
    time_elapse, unreset,
)

COMPLETED, ONGOING = "completed", "ongoing"


# ---------------------------------------------------------------------------
# Symbolic


def discrete_succ(g: PTG, s: SymbolicState, t: Transition) -> SymbolicState:
    z = reset(intersect(s.zone, t.guard), t.resets)
    return SymbolicState(t.target, intersect(z, g.invariant(t.target)))


def temp_succ(g: PTG, s: SymbolicState) -> SymbolicState:
    if g.is_urgent(s.location):
        return s
    return SymbolicState(s.location, intersect(time_elapse(s.zone), g.invariant(s.location)))


def discrete_pred(g: PTG, t: Transition, target) -> ZoneUnion:
    target = as_union(target)
    base = intersect(t.guard, g.invariant(t.source))
    return ZoneUnion.make(g.space, [intersect(base, unreset(p, t.resets)) for p in target.pieces])


def enabling_zone(g: PTG, t: Transition) -> Zone:
    """Valuations from which ``t`` can fire: guard holds and the target invariant holds after reset."""
    return intersect(t.guard, unreset(g.invariant(t.target), t.resets))


# ---------------------------------------------------------------------------
# Concrete


@dataclass(frozen=True)
class ConcreteState:
    location: str
    valuation: dict = field(hash=False)

    def clocks(self, g: PTG) -> dict:
        return {x: self.valuation[x] for x in g.clocks}


@dataclass(frozen=True)
class Step:
    delay: Fraction
    transition: int


@dataclass(frozen=True)
class Run:
    params: dict
    steps: tuple = ()
    ends: str = ONGOING


class RunError(ValueError):
    def __init__(self, message: str, step: int):
        super().__init__(f"step {step}: {message}")
        self.step = step


def initial_state(g: PTG, params) -> ConcreteState:
    v = {p: as_fraction(params[p]) for p in g.params}
    v.update({x: Fraction(0) for x in g.clocks})
    return ConcreteState(g.initial, v)


def delayed(g: PTG, s: ConcreteState, d) -> ConcreteState:
    d = as_fraction(d)
    v = dict(s.valuation)
    for x in g.clocks:
        v[x] = v[x] + d
    return ConcreteState(s.location, v)


def fire(g: PTG, s: ConcreteState, t: Transition) -> ConcreteState:
    v = dict(s.valuation)
    for x in t.resets:
        v[x] = Fraction(0)
    return ConcreteState(t.target, v)


def invariant_delays(g: PTG, s: ConcreteState) -> Interval | None:
    """Delays allowed from ``s`` by the invariant (and urgency) of its location."""
    iv = delay_interval(g.invariant(s.location), s.valuation)
    if iv is None or not g.is_urgent(s.location):
        return iv
    return iv.intersect(Interval(Fraction(0), False, Fraction(0), False))


def fire_delays(g: PTG, s: ConcreteState, t: Transition) -> Interval | None:
    """Delays after which ``t`` can fire from ``s`` without leaving the invariant."""
    inv = invariant_delays(g, s)
    if inv is None:
        return None
    iv = delay_interval(enabling_zone(g, t), s.valuation)
    return None if iv is None else inv.intersect(iv)


def replay(g: PTG, run: Run) -> list:
    """States reached after each step, starting with the initial state."""
    s = initial_state(g, run.params)
    if not g.invariant(s.location).contains(s.valuation):
        raise RunError("initial state violates the invariant", 0)
    states = [s]
    for i, step in enumerate(run.steps):
        t = g.transitions[step.transition]
        if t.source != s.location:
            raise RunError(f"{t} does not leave {s.location}", i)
        iv = invariant_delays(g, s)
        if iv is None or not iv.contains(step.delay):
            raise RunError(f"delay {step.delay} leaves the invariant of {s.location}", i)
        s = delayed(g, s, step.delay)
        if not t.guard.contains(s.valuation):
            raise RunError(f"guard of {t} does not hold", i)
        s = fire(g, s, t)
        if not g.invariant(s.location).contains(s.valuation):
            raise RunError(f"target invariant of {t} does not hold", i)
        states.append(s)
    return states


# ---------------------------------------------------------------------------
# Strategy decisions


@dataclass(frozen=True)
class Decision:
    """Fire ``transition`` after any delay in ``delays``; ``transition`` None means wait forever."""

    delays: Interval | None
    transition: Transition | None

    @property
    def is_infinite(self) -> bool:
        return self.transition is None

    def allows_env_delay(self, d) -> bool:
        """Whether an environment move after ``d`` does not come later than this decision."""
        if self.is_infinite or self.delays.hi is None:
            return True
        d = as_fraction(d)
        return d < self.delays.hi or (d == self.delays.hi and not self.delays.hi_strict)


INFINITY = Decision(None, None)


def decisions(inst: Instruction, s: ConcreteState) -> list:
    if s.location != inst.location or not inst.source.zone.contains(s.valuation):
        raise ValueError(f"state does not match instruction {inst.index}")
    if inst.is_wait:
        return [INFINITY]
    iv = delay_interval(inst.target.zone, s.valuation)
    return [] if iv is None else [Decision(iv, inst.transition)]


def strategy_decision(spec: StrategySpecification, s: ConcreteState) -> list:
    matched = spec.matching(s.location, s.valuation)
    if not matched:
        return [INFINITY]
    out = []
    for inst in matched:
        out.extend(decisions(inst, s))
    return out


def matched_index(spec: StrategySpecification, s: ConcreteState) -> int | None:
    matched = spec.matching(s.location, s.valuation)
    return matched[0].index if matched else None


def check_coherent(g: PTG, spec: StrategySpecification, run: Run):
    """(True, None) if the run follows the strategy, else (False, first bad step)."""
    states = replay(g, run)
    for i, step in enumerate(run.steps):
        ds = strategy_decision(spec, states[i])
        t = g.transitions[step.transition]
        if t.controllable:
            ok = any(not d.is_infinite and d.transition.index == t.index and d.delays.contains(step.delay)
                     for d in ds)
        else:
            ok = any(d.allows_env_delay(step.delay) for d in ds)
        if not ok:
            return False, i
    if run.ends == COMPLETED:
        if not any(d.is_infinite for d in strategy_decision(spec, states[-1])):
            return False, len(run.steps)
    return True, None


def _left_neighbourhood(iv: Interval | None, sup: Fraction) -> bool:
    """Whether ``iv`` contains some interval ``(sup - eta, sup)``."""
    if iv is None:
        return False
    return iv.lo < sup and (iv.hi is None or iv.hi >= sup)


def may_stop(g: PTG, s: ConcreteState) -> bool:
    """Whether a run may end in ``s`` under the forced-transition constraint.

    Either time can pass forever, or at the last instant allowed by the
    invariant a controllable action is available or no uncontrollable one is.
    For a strict invariant the last instant is approached from the left and
    availability means availability on a left neighbourhood.
    """
    inv = invariant_delays(g, s)
    if inv is None:
        return True
    if inv.hi is None:
        return True
    sup = inv.hi
    ctrl = [t for t in g.outgoing(s.location) if t.controllable]
    unctrl = [t for t in g.outgoing(s.location) if not t.controllable]
    if not inv.hi_strict:
        w = delayed(g, s, sup).valuation
        bad = any(enabling_zone(g, t).contains(w) for t in unctrl) and \
            not any(enabling_zone(g, t).contains(w) for t in ctrl)
    else:
        def near(t):
            return _left_neighbourhood(delay_interval(enabling_zone(g, t), s.valuation), sup)
        bad = any(near(t) for t in unctrl) and not any(near(t) for t in ctrl)
    return not bad


def check_forced_constraint(g: PTG, run: Run) -> bool:
    return may_stop(g, replay(g, run)[-1])


# ---------------------------------------------------------------------------
# Run files


def format_run(g: PTG, run: Run) -> str:
    binds = ", ".join(f"{p}={format_number(as_fraction(run.params[p]))}" for p in g.params)
    lines = [f"params: {binds}"]
    for step in run.steps:
        t = g.transitions[step.transition]
        lines.append(f"delay {format_number(as_fraction(step.delay))} ; fire {t.label}")
    if run.ends == COMPLETED:
        lines.append("end completed")
    return "\n".join(lines) + "\n"


def parse_params(text: str) -> dict:
    out = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, value = item.partition("=")
        if not _:
            raise ValueError(f"malformed binding {item!r}")
        out[name.strip()] = as_fraction(value)
    return out


def parse_run(text: str, g: PTG) -> Run:
    params, steps, ends = None, [], ONGOING
    s = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("params:"):
            params = parse_params(line[len("params:"):])
            s = initial_state(g, params)
            continue
        if line == "end completed":
            ends = COMPLETED
            continue
        if s is None:
            raise ModelError("run file must start with a params header", lineno, 1)
        parts = [p.strip() for p in line.split(";")]
        if len(parts) != 2 or not parts[0].startswith("delay ") or not parts[1].startswith("fire "):
            raise ModelError("expected 'delay <rational> ; fire <label>'", lineno, 1)
        d = as_fraction(parts[0][6:])
        label = parts[1][5:].strip()
        w = delayed(g, s, d)
        cands = [t for t in g.outgoing(s.location) if t.label == label and t.guard.contains(w.valuation)]
        if len(cands) != 1:
            raise ModelError(f"cannot resolve transition {label!r} from {s.location}", lineno, 1)
        steps.append(Step(d, cands[0].index))
        s = fire(g, w, cands[0])
    if params is None:
        raise ModelError("missing params header")
    return Run(params, tuple(steps), ends)
