"""Parallel composition of a controller with its game, and closed-loop verification.

The product is built syntactically over reachable location pairs.  Shared
labels synchronise (guards conjoined, resets merged); other labels
interleave.  Verification re-solves the product as a game in which every
transition is uncontrollable, so the winning parameters are those for which
every run of the closed loop reaches the goal.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .model import PRODUCT, PTG, Location, ModelError, Transition, build_ptg
from .solver import DEFAULT_BUDGET, UPDATE_FIRST, solve
from .syntax import format_params
from .zones import (
    Constraint, LT, Space, Zone, ZoneUnion, intersect, intersect_union, is_empty, is_subset,
    reduce,
)

MATCH = "match"
SUPERSET = "computed⊃expected"
SUBSET = "computed⊂expected"
INCOMPARABLE = "incomparable"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Product:
    ptg: PTG
    pairs: dict = field(hash=False)  # product location -> (controller location, game location)
    shared: frozenset = frozenset()

    def split(self, location: str) -> tuple:
        return self.pairs[location]


def pair_name(qc: str, lg: str) -> str:
    return f"{qc}__{lg}"


def product(c: PTG, g: PTG, all_uncontrollable: bool = False) -> Product:
    """Reachable part of ``c ∥ g``; the goal is every pair whose game location is a goal."""
    ctab, gtab = c.action_table, g.action_table
    shared = frozenset(ctab) & frozenset(gtab)
    for label in sorted(shared):
        if ctab[label] != gtab[label]:
            raise ModelError(f"action {label!r} is controllable in one component only")
    clocks = tuple(g.clocks) + tuple(x for x in c.clocks if x not in g.clocks)
    params = tuple(g.params) + tuple(p for p in c.params if p not in g.params)
    clash = set(clocks) & set(params)
    if clash:
        raise ModelError(f"names used both as clock and parameter: {sorted(clash)}")
    space = Space(clocks, params)
    actions, seen = [], set()
    for label, ctrl in list(g.actions) + list(c.actions):
        if label not in seen:
            seen.add(label)
            actions.append((label, False if all_uncontrollable else ctrl))

    def ext(z: Zone) -> Zone:
        return z.extend(space)

    def flag(ctrl: bool) -> bool:
        return False if all_uncontrollable else ctrl

    pairs: dict = {}
    locations: list = []
    transitions: list = []
    start = (c.initial, g.initial)
    queue = deque([start])
    visited = {start}

    def visit(pair) -> str:
        if pair not in visited:
            visited.add(pair)
            queue.append(pair)
        return pair_name(*pair)

    while queue:
        qc, lg = queue.popleft()
        name = pair_name(qc, lg)
        inv = intersect(ext(c.invariant(qc)), ext(g.invariant(lg)))
        pairs[name] = (qc, lg)
        locations.append(Location(name, inv, c.is_urgent(qc) or g.is_urgent(lg)))
        for tc in c.outgoing(qc):
            if tc.label in shared:
                continue
            guard = ext(tc.guard)
            if not is_empty(intersect(guard, inv)):
                transitions.append(Transition(name, visit((tc.target, lg)), guard, tc.label,
                                              tc.resets, flag(tc.controllable)))
        for tg in g.outgoing(lg):
            if tg.label in shared:
                continue
            guard = ext(tg.guard)
            if not is_empty(intersect(guard, inv)):
                transitions.append(Transition(name, visit((qc, tg.target)), guard, tg.label,
                                              tg.resets, flag(tg.controllable)))
        for tc in c.outgoing(qc):
            if tc.label not in shared:
                continue
            for tg in g.outgoing(lg):
                if tg.label != tc.label:
                    continue
                guard = intersect(ext(tc.guard), ext(tg.guard))
                if is_empty(intersect(guard, inv)):
                    continue
                transitions.append(Transition(name, visit((tc.target, tg.target)), guard, tc.label,
                                              tc.resets | tg.resets, flag(tg.controllable)))
    goal = frozenset(n for n, (_, lg) in pairs.items() if lg in g.goal)
    ptg = build_ptg(clocks, params, actions, locations, transitions, pair_name(*start), goal,
                    kind=PRODUCT, name=f"{c.name} || {g.name}".strip(" |"))
    return Product(ptg, pairs, shared)


# ---------------------------------------------------------------------------
# Verification


@dataclass
class VerifyReport:
    computed: ZoneUnion  # restricted to a positive epsilon
    computed_raw: ZoneUnion
    expected: ZoneUnion  # conjoined with a positive epsilon
    verdict: str
    explored: int
    iterations: int
    product_locations: int

    @property
    def ok(self) -> bool:
        return self.verdict == MATCH

    def to_dict(self) -> dict:
        return {
            "computed": format_params(self.computed),
            "computed_raw": format_params(self.computed_raw),
            "expected": format_params(self.expected),
            "verdict": self.verdict,
            "explored": self.explored,
            "iterations": self.iterations,
            "product_locations": self.product_locations,
        }

    def format(self) -> str:
        d = self.to_dict()
        lines = [f"{k}: {v}" for k, v in d.items()]
        if self.verdict not in (MATCH, INCONCLUSIVE):
            diff_more = format_params(reduce(self.computed - self.expected))
            diff_less = format_params(reduce(self.expected - self.computed))
            lines.append(f"computed-not-expected: {diff_more}")
            lines.append(f"expected-not-computed: {diff_less}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)


def compare(computed: ZoneUnion, expected: ZoneUnion) -> str:
    sub, sup = is_subset(computed, expected), is_subset(expected, computed)
    if sub and sup:
        return MATCH
    if sup:
        return SUPERSET
    if sub:
        return SUBSET
    return INCOMPARABLE


def verify(c: PTG, g: PTG, expected: ZoneUnion, eps: str = "eps", budget: int = DEFAULT_BUDGET,
           policy: str = UPDATE_FIRST) -> VerifyReport:
    """Solve ``c ∥ g`` with every transition uncontrollable and compare against ``expected``.

    Both sides are compared for a positive ``eps`` only; the raw result is kept
    in the report.
    """
    prod = product(c, g, all_uncontrollable=True)
    report = solve(prod.ptg, budget=budget, policy=policy)
    pspace = report.winning_param.space
    raw = report.winning_param
    positive = Zone.make(pspace, [Constraint.make({eps: -1}, 0, LT)]) if eps in pspace.params \
        else Zone.top(pspace)
    computed = reduce(intersect_union(raw, positive))
    wanted = reduce(intersect_union(expected.extend(pspace), positive))
    verdict = INCONCLUSIVE if report.exhausted else compare(computed, wanted)
    return VerifyReport(computed, raw, wanted, verdict, report.explored, report.iterations,
                        len(prod.ptg.locations))
