"""Seeded random-adversary simulation.

Two drivers share one stepping loop:

* a game driven by a strategy specification, where the controller picks one of
  the strategy's decisions and the environment may interrupt it;
* a closed-loop product of a controller and its game, where the controller
  picks among its enabled controllable transitions.

Delays are drawn from a grid of step 1/8 inside the admissible interval, with a
25% bias towards closed interval endpoints.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .compose import Product, product
from .controller import Controller
from .model import PTG
from .semantics import (
    COMPLETED, ONGOING, ConcreteState, Run, Step, check_coherent, delayed, fire, fire_delays,
    initial_state, invariant_delays, matched_index, may_stop, strategy_decision,
)
from .strategy import StrategySpecification
from .zones import Interval

GRID = Fraction(1, 8)
ENDPOINT_BIAS = 0.25
HORIZON = Fraction(4)  # how far past its lower end an unbounded interval is sampled

GOAL, STOPPED, BLOCKED, BUDGET = "goal", "stopped", "blocked", "budget"


def sample_delay(rng: random.Random, iv: Interval, horizon: Fraction = HORIZON) -> Fraction:
    hi = iv.hi if iv.hi is not None else iv.lo + horizon
    closed_hi = iv.hi is None or not iv.hi_strict
    ends = []
    if not iv.lo_strict:
        ends.append(iv.lo)
    if closed_hi and hi not in ends:
        ends.append(hi)
    if ends and rng.random() < ENDPOINT_BIAS:
        return rng.choice(ends)
    first, last = math.ceil(iv.lo / GRID), math.floor(hi / GRID)
    grid = [k * GRID for k in range(first, last + 1)
            if iv.contains(k * GRID) and (closed_hi or k * GRID < hi)]
    if grid:
        return rng.choice(grid)
    if ends:
        return rng.choice(ends)
    return (iv.lo + hi) / 2


@dataclass
class Episode:
    run: Run
    outcome: str
    states: list = field(repr=False, default_factory=list)
    violations: list = field(default_factory=list)

    @property
    def reached(self) -> bool:
        return self.outcome == GOAL

    def fired(self, g: PTG) -> Counter:
        return Counter(g.transitions[s.transition].label for s in self.run.steps)


@dataclass
class SimulationReport:
    episodes: list = field(repr=False)
    label_source: PTG = field(repr=False)

    @property
    def count(self) -> int:
        return len(self.episodes)

    @property
    def reached(self) -> int:
        return sum(e.reached for e in self.episodes)

    @property
    def max_steps(self) -> int:
        return max((len(e.run.steps) for e in self.episodes), default=0)

    def violations(self, kind: str | None = None) -> int:
        return sum(1 for e in self.episodes for v in e.violations if kind is None or v.startswith(kind))

    def max_fired(self) -> dict:
        out: dict = {}
        for e in self.episodes:
            for label, n in e.fired(self.label_source).items():
                out[label] = max(out.get(label, 0), n)
        return dict(sorted(out.items()))

    def to_dict(self) -> dict:
        return {
            "episodes": self.count,
            "goal_reached": self.reached,
            "goal_rate": self.reached / self.count if self.count else 0.0,
            "max_steps": self.max_steps,
            "coherence_violations": self.violations("coherence"),
            "index_violations": self.violations("index"),
            "other_violations": self.violations() - self.violations("coherence") - self.violations("index"),
            "max_fired_per_episode": self.max_fired(),
            "outcomes": dict(sorted(Counter(e.outcome for e in self.episodes).items())),
        }

    def format(self) -> str:
        return "\n".join(f"{k}: {v}" for k, v in self.to_dict().items()) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# ---------------------------------------------------------------------------
# Core loop


def _env_moves(g: PTG, s: ConcreteState, limit: Fraction | None) -> list:
    """Uncontrollable transitions with their firing delays, capped at ``limit``."""
    out = []
    cap = None if limit is None else Interval(Fraction(0), False, limit, False)
    for t in g.outgoing(s.location):
        if t.controllable:
            continue
        iv = fire_delays(g, s, t)
        if iv is not None and cap is not None:
            iv = iv.intersect(cap)
        if iv is not None:
            out.append((t, iv))
    return out


def _step(g: PTG, rng: random.Random, s: ConcreteState, plan):
    """One discrete step; ``plan`` is (transition, delay) or None for waiting forever."""
    inv = invariant_delays(g, s)
    if plan is None:
        limit = inv.hi if inv is not None else Fraction(0)
        env = _env_moves(g, s, limit)
        if not env:
            return None
        if inv is not None and inv.hi is None and rng.random() < 0.5:
            return None  # the environment may also let time run forever
        t, iv = rng.choice(env)
        return t, sample_delay(rng, iv)
    t_c, d_c = plan
    env = _env_moves(g, s, d_c)
    if env and rng.random() < 0.5:
        t, iv = rng.choice(env)
        return t, sample_delay(rng, iv)
    return t_c, d_c


def _advance(g: PTG, s: ConcreteState, t, d) -> ConcreteState:
    return fire(g, delayed(g, s, d), t)


# ---------------------------------------------------------------------------
# Strategy-driven game


def _strategy_plan(g: PTG, spec: StrategySpecification, s: ConcreteState, rng: random.Random):
    options = []
    for dec in strategy_decision(spec, s):
        if dec.is_infinite:
            options.append(None)
            continue
        allowed = fire_delays(g, s, dec.transition)
        iv = None if allowed is None else dec.delays.intersect(allowed)
        if iv is not None:
            options.append((dec.transition, iv))
    if not options:
        return "none"
    pick = rng.choice(options)
    if pick is None:
        return None
    t, iv = pick
    return t, sample_delay(rng, iv)


def simulate_strategy(g: PTG, spec: StrategySpecification, params: dict, seed: int = 0,
                      max_steps: int = 100) -> Episode:
    rng = random.Random(seed)
    s = initial_state(g, params)
    states, steps = [s], []
    outcome = BUDGET
    while len(steps) < max_steps:
        if s.location in g.goal:
            outcome = GOAL
            break
        plan = _strategy_plan(g, spec, s, rng)
        if plan == "none":
            outcome = BLOCKED
            break
        move = _step(g, rng, s, plan)
        if move is None:
            outcome = STOPPED if may_stop(g, s) else BLOCKED
            break
        t, d = move
        steps.append(Step(d, t.index))
        s = _advance(g, s, t, d)
        states.append(s)
    ends = COMPLETED if outcome in (GOAL, STOPPED) else ONGOING
    run = Run(dict(params), tuple(steps), ends)
    ep = Episode(run, outcome, states)
    ok, bad = check_coherent(g, spec, run)
    if not ok:
        ep.violations.append(f"coherence: step {bad}")
    indices = [matched_index(spec, st) for st in states]
    for i in range(1, len(states)):
        if states[i - 1].location in g.goal:
            break
        a, b = indices[i - 1], indices[i]
        if a is None or b is None or b >= a:
            ep.violations.append(f"index: step {i - 1} goes from {a} to {b}")
            break
    return ep


def run_strategy(g: PTG, spec: StrategySpecification, params: dict, count: int, seed: int = 0,
                 max_steps: int = 100) -> SimulationReport:
    eps = [simulate_strategy(g, spec, params, seed * 1_000_003 + i, max_steps) for i in range(count)]
    return SimulationReport(eps, g)


# ---------------------------------------------------------------------------
# Closed loop


def _controller_plan(p: PTG, s: ConcreteState, rng: random.Random):
    options = []
    for t in p.outgoing(s.location):
        if not t.controllable:
            continue
        iv = fire_delays(p, s, t)
        if iv is not None:
            options.append((t, iv))
    if not options:
        return None
    t, iv = rng.choice(options)
    return t, sample_delay(rng, iv)


def _enabled_env_labels(g: PTG, location: str, valuation: dict) -> set:
    s = ConcreteState(location, valuation)
    out = set()
    for t in g.outgoing(location):
        if t.controllable:
            continue
        iv = fire_delays(g, s, t)
        if iv is not None and iv.contains(0):
            out.add(t.label)
    return out


def simulate_closed_loop(c: Controller, g: PTG, params: dict, seed: int = 0,
                         prod: Product | None = None, max_steps: int | None = None) -> Episode:
    prod = prod or product(c.ptg, g)
    p = prod.ptg
    budget = max_steps if max_steps is not None else 10 * len(p.locations)
    rng = random.Random(seed)
    s = initial_state(p, params)
    states, steps, violations = [s], [], []
    outcome = BUDGET
    env_labels = {a for a, ctrl in g.actions if not ctrl}

    def check(st: ConcreteState, where: str):
        qc, lg = prod.split(st.location)
        owner = c.owners.get(qc)
        if owner is None or owner.game_location != lg:
            violations.append(f"mirror: {where} controller at {qc} while game at {lg}")
            return
        if owner.is_mirror:
            return
        alone = _enabled_env_labels(g, lg, {k: st.valuation[k] for k in g.clocks + g.params})
        composed = {lab for lab in _enabled_env_labels(p, st.location, st.valuation) if lab in env_labels}
        if alone != composed:
            violations.append(f"enabledness: {where} game allows {sorted(alone)}, loop allows {sorted(composed)}")

    check(s, "start")
    while len(steps) < budget:
        if p.location(s.location).name in p.goal:
            outcome = GOAL
            break
        move = _step(p, rng, s, _controller_plan(p, s, rng))
        if move is None:
            outcome = STOPPED if may_stop(p, s) else BLOCKED
            break
        t, d = move
        mid = delayed(p, s, d)
        check(mid, f"step {len(steps)}")
        steps.append(Step(d, t.index))
        s = fire(p, mid, t)
        states.append(s)
        check(s, f"after step {len(steps) - 1}")
    ends = COMPLETED if outcome in (GOAL, STOPPED) else ONGOING
    return Episode(Run(dict(params), tuple(steps), ends), outcome, states, violations)


def run_closed_loop(c: Controller, g: PTG, params: dict, count: int, seed: int = 0) -> SimulationReport:
    prod = product(c.ptg, g)
    eps = [simulate_closed_loop(c, g, params, seed * 1_000_003 + i, prod) for i in range(count)]
    return SimulationReport(eps, prod.ptg)
