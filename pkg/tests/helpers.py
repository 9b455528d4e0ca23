"""Shared checks for the controller and acceptance tests."""

from ptgame.syntax import parse_zone
from ptgame.zones import Constraint, LT, Zone, equals, intersect


def positive_eps(space, eps="eps"):
    return Zone.make(space, [Constraint.make({eps: -1}, 0, LT)])


def fig5_problems(c) -> list:
    """Differences between a synthesized fig3 controller and its reference structure, up to renaming.

    Expected: seven locations; three urgent mirrors (L0, L1, Win); an urgent
    immediate L1 branch; an urgent immediate L0 branch; two waiting L0 branches
    whose invariants are ``x <= 1+eps && p <= 1+eps`` and ``x <= p+eps && p > 1-eps``
    (compared for eps > 0).
    """
    ptg = c.ptg
    sp = ptg.space
    pos = positive_eps(sp, c.epsilon)
    problems = []
    if len(ptg.locations) != 7:
        problems.append(f"{len(ptg.locations)} locations instead of 7")
    mirrors = sorted(o.game_location for o in c.owners.values() if o.is_mirror)
    if mirrors != ["L0", "L1", "Win"]:
        problems.append(f"mirrors {mirrors}")
    for name, o in c.owners.items():
        if o.is_mirror and not ptg.is_urgent(name):
            problems.append(f"mirror {name} is not urgent")
    branches = {}
    for name in c.instruction_locations():
        branches.setdefault(c.owner(name).game_location, []).append(name)
    l1 = branches.get("L1", [])
    if len(l1) != 1 or not ptg.is_urgent(l1[0]):
        problems.append(f"L1 branches {l1}")
    l0 = branches.get("L0", [])
    urgent = [n for n in l0 if ptg.is_urgent(n)]
    waiting = [n for n in l0 if not ptg.is_urgent(n)]
    if len(urgent) != 1 or len(waiting) != 2:
        problems.append(f"L0 branches urgent={urgent} waiting={waiting}")
    wanted = [parse_zone("x <= 1 + eps && p <= 1 + eps", sp), parse_zone("x <= p + eps && p > 1 - eps", sp)]
    for w in wanted:
        hits = [n for n in waiting if equals(intersect(ptg.invariant(n), pos), intersect(w, pos))]
        if len(hits) != 1:
            problems.append(f"no waiting L0 branch with invariant {w}")
    for t in ptg.transitions:
        if t.resets:
            problems.append(f"{t} resets clocks")
    return problems
