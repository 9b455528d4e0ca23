"""On-the-fly forward exploration with backward propagation of winning states.

Symbolic states are explored forwards from the initial state.  Whenever the
winning part of a state grows, its predecessors are queued for an update, which
recomputes the states from which the controller can safely wait and then either
fire a controllable transition into winning states or be sure the environment
is forced to move into winning states.  Each newly won region is recorded as a
strategy instruction.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

from .model import PTG, SymbolicState, initial_symbolic_state
from .semantics import discrete_pred, discrete_succ, enabling_zone, temp_succ
from .strategy import Instruction, StrategySpecification, check_disjoint
from .zones import (
    UPPER, Zone, ZoneUnion, difference, intersect, intersect_union, is_empty, is_subset,
    normalize, project_params, reduce, safe_time_pred, temporal_closure, union, utemp_split,
)

log = logging.getLogger(__name__)

UPDATE_FIRST, EXPLORE_FIRST = "update-first", "explore-first"
DEFAULT_BUDGET = 100_000


class InvariantViolation(AssertionError):
    pass


@dataclass
class SolveReport:
    winning_param: ZoneUnion
    strategy: StrategySpecification
    iterations: int
    exhausted: bool
    explored: int
    state: "SolverState" = field(repr=False, default=None)


class _Queue:
    """FIFO queue that ignores items already waiting."""

    def __init__(self):
        self.items = deque()
        self.members = set()

    def push(self, item) -> None:
        if item not in self.members:
            self.members.add(item)
            self.items.append(item)

    def pop(self):
        item = self.items.popleft()
        self.members.discard(item)
        return item

    def __bool__(self) -> bool:
        return bool(self.items)

    def __len__(self) -> int:
        return len(self.items)


class SolverState:
    def __init__(self, g: PTG, check: bool = False):
        self.g = g
        self.check = check
        self.explored: set = set()
        self.waiting_explore = _Queue()
        self.waiting_update = _Queue()
        self.win: dict = {}
        self.depends: dict = {}
        self.forced_moves: dict = {}
        self.instructions: list = []
        self.sources: dict = {}  # location -> list of source zones
        self.successors: dict = {}  # (state, transition index) -> state or None
        self._by_location: dict = {}
        self._by_key: dict = {}
        init = initial_symbolic_state(g)
        self.initial_zone = init.zone
        self.winning_param = ZoneUnion.empty(project_params(init.zone).space)
        start = temp_succ(g, init)
        if not is_empty(start.zone):
            self.waiting_explore.push(self.intern(start))

    # symbolic-state identity is semantic equality within a location
    def intern(self, s: SymbolicState) -> SymbolicState:
        s = SymbolicState(s.location, normalize(s.zone))
        hit = self._by_key.get(s)
        if hit is not None:
            return hit
        for other in self._by_location.get(s.location, ()):
            if is_subset(s.zone, other.zone) and is_subset(other.zone, s.zone):
                self._by_key[s] = other
                return other
        self._by_location.setdefault(s.location, []).append(s)
        self._by_key[s] = s
        self.depends[s] = []
        return s

    @property
    def states(self) -> list:
        return [s for group in self._by_location.values() for s in group]

    def win_of(self, s: SymbolicState) -> ZoneUnion:
        return self.win.get(s) or ZoneUnion.empty(self.g.space)

    def successor(self, s: SymbolicState, t) -> SymbolicState | None:
        key = (s, t.index)
        if key not in self.successors:
            nxt = temp_succ(self.g, discrete_succ(self.g, s, t))
            self.successors[key] = None if is_empty(nxt.zone) else self.intern(nxt)
        return self.successors[key]

    def solved(self, location: str) -> ZoneUnion:
        return ZoneUnion(self.g.space, tuple(self.sources.get(location, ())))

    def append(self, source: Zone, target: SymbolicState | None, t) -> None:
        loc = source_loc = self._current.location
        inst = Instruction(SymbolicState(source_loc, source), target, t, len(self.instructions))
        if self.check:
            for other in self.sources.get(loc, ()):
                if not is_empty(intersect(other, source)):
                    raise InvariantViolation(f"instruction {inst.index} overlaps an earlier source")
        self.instructions.append(inst)
        self.sources.setdefault(loc, []).append(source)

    def add_instructions(self, region: ZoneUnion, target, t) -> None:
        fresh = reduce(difference(region, self.solved(self._current.location)))
        for piece in fresh.pieces:
            self.append(normalize(piece), target, t)

    # ------------------------------------------------------------------
    def explore(self, s: SymbolicState) -> None:
        g = self.g
        self._current = s
        for t in g.outgoing(s.location):
            nxt = self.successor(s, t)
            if nxt is None:
                continue
            if s not in self.depends[nxt]:
                self.depends[nxt].append(s)
            if nxt not in self.explored:
                self.waiting_explore.push(nxt)
        if s.location in g.goal:
            self.win[s] = ZoneUnion.of(s.zone)
            for p in self.depends[s]:
                self.waiting_update.push(p)
            self.add_instructions(ZoneUnion.of(s.zone), None, None)
            self._refresh_param(s)
        self.forced_moves[s] = self._forced_moves(s.location)
        self.waiting_update.push(s)
        self.explored.add(s)

    def _forced_moves(self, location: str) -> ZoneUnion:
        g = self.g
        space = g.space
        out = [t for t in g.outgoing(location)]
        unctrl = ZoneUnion.make(space, [enabling_zone(g, t) for t in out if not t.controllable])
        if unctrl.is_empty():
            return ZoneUnion.empty(space)
        ctrl = ZoneUnion.make(space, [enabling_zone(g, t) for t in out if t.controllable])
        inside, outside = utemp_split(g.invariant(location), g.is_urgent(location))
        forced = difference(intersect_union(inside, unctrl), ctrl)
        if not outside.is_empty():
            cl_unctrl = unctrl.map(lambda z: temporal_closure(z, UPPER))
            cl_ctrl = ctrl.map(lambda z: temporal_closure(z, UPPER))
            forced = union(forced, difference(intersect_union(outside, cl_unctrl), cl_ctrl))
        return forced

    def update(self, s: SymbolicState) -> None:
        g = self.g
        self._current = s
        space = g.space
        # successor Win sets are read before anything changes in this update
        unctrl_parts = []
        for t in g.outgoing(s.location):
            if t.controllable:
                continue
            nxt = self.successor(s, t)
            if nxt is None:
                continue
            losing = difference(nxt.zone, self.win_of(nxt))
            unctrl_parts.extend(discrete_pred(g, t, losing).pieces)
        unctrl = ZoneUnion(space, tuple(unctrl_parts))
        snapshot = {t.index: self.win_of(self.successor(s, t)) if self.successor(s, t) else None
                    for t in g.outgoing(s.location) if t.controllable}
        new_win: list = []

        def safe(piece):
            if g.is_urgent(s.location):
                reach = difference(piece, unctrl)
            else:
                reach = safe_time_pred(piece, unctrl)
            return reduce(ZoneUnion.make(space, [intersect(z, s.zone) for z in reach]))

        for t in g.outgoing(s.location):
            if not t.controllable:
                continue
            target_win = snapshot[t.index]
            if target_win is None or target_win.is_empty():
                continue
            moves = difference(discrete_pred(g, t, target_win), unctrl)
            for piece in moves.pieces:
                piece = normalize(piece)
                region = safe(piece)
                if region.is_empty():
                    continue
                new_win.extend(region.pieces)
                self.add_instructions(region, SymbolicState(s.location, piece), t)
        for piece in self.forced_moves.get(s, ZoneUnion.empty(space)).pieces:
            region = safe(piece)
            if region.is_empty():
                continue
            new_win.extend(region.pieces)
            self.add_instructions(region, None, None)
        grown = ZoneUnion(space, tuple(new_win))
        old = self.win_of(s)
        if not is_subset(grown, old):
            self.win[s] = reduce(union(old, difference(grown, old)))
            for p in self.depends[s]:
                self.waiting_update.push(p)
            self._refresh_param(s)
            if self.check and not is_subset(old, self.win[s]):
                raise InvariantViolation("Win shrank")

    def _refresh_param(self, s: SymbolicState) -> None:
        if s.location != self.g.initial:
            return
        pieces = []
        for other in self._by_location.get(self.g.initial, ()):
            for z in self.win_of(other).pieces:
                inter = intersect(z, self.initial_zone)
                if not is_empty(inter):
                    pieces.append(project_params(inter))
        space = self.winning_param.space
        self.winning_param = reduce(ZoneUnion.make(space, pieces))

    # ------------------------------------------------------------------
    def strategy(self) -> StrategySpecification:
        return StrategySpecification(tuple(self.instructions), self.g.space)

    def check_coverage(self) -> None:
        for s, w in self.win.items():
            if not is_subset(w, self.solved(s.location)):
                raise InvariantViolation(f"Win of a state at {s.location} is not covered by instructions")

    def check_sources(self) -> None:
        clashes = check_disjoint(self.strategy())
        if clashes:
            raise InvariantViolation(f"overlapping instruction sources {clashes[0]}")


def solve(g: PTG, budget: int = DEFAULT_BUDGET, policy: str = UPDATE_FIRST,
          check: bool = False) -> SolveReport:
    """Compute winning parameter valuations and a strategy specification."""
    if policy not in (UPDATE_FIRST, EXPLORE_FIRST):
        raise ValueError(f"unknown exploration policy {policy!r}")
    st = SolverState(g, check=check)
    iterations = 0
    while st.waiting_explore or st.waiting_update:
        if iterations >= budget:
            log.info("budget of %d iterations exhausted", budget)
            return SolveReport(st.winning_param, st.strategy(), iterations, True, len(st.explored), st)
        iterations += 1
        if policy == UPDATE_FIRST:
            if st.waiting_update:
                st.update(st.waiting_update.pop())
            else:
                st.explore(st.waiting_explore.pop())
        else:
            if st.waiting_explore:
                st.explore(st.waiting_explore.pop())
            else:
                st.update(st.waiting_update.pop())
    if check:
        st.check_coverage()
        st.check_sources()
    log.debug("fixpoint after %d iterations, %d states", iterations, len(st.explored))
    return SolveReport(st.winning_param, st.strategy(), iterations, False, len(st.explored), st)
