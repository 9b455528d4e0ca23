from fractions import Fraction as F

import pytest

from conftest import WINNING_POINTS
from helpers import positive_eps
from ptgame import ModelError, parse_model, product, synthesize_controller, verify
from ptgame.compose import INCONCLUSIVE, MATCH, SUBSET, SUPERSET, compare, pair_name
from ptgame.controller import export_controller, parse_controller
from ptgame.simulate import run_closed_loop
from ptgame.strategy import StrategySpecification
from ptgame.syntax import parse_union, parse_zone
from ptgame.zones import Space, equals, intersect


@pytest.fixture(scope="module")
def controllers(models, solved):
    return {name: synthesize_controller(g, solved[name].strategy) for name, g in models.items()}


def test_synchronised_guard_is_the_conjunction(models, controllers):
    g, c = models["fig3"], controllers["fig3"]
    prod = product(c.ptg, g)
    sp = prod.ptg.space
    (branch,) = [n for n in c.instruction_locations()
                 if equals(c.ptg.invariant(n), parse_zone("x <= p + eps && p > 1 - eps", c.ptg.space))]
    (edge,) = [t for t in prod.ptg.transitions if t.source == pair_name(branch, "L0") and t.label == "c1"]
    want = parse_zone("x > 1 && p <= x && x <= p + eps && x > 1", sp)
    assert equals(edge.guard, want)
    assert edge.target == pair_name("L1", "L1")


def test_internal_only_controller_leaves_the_game_unrestricted(models):
    g = models["fig1"]
    idle = parse_model("""clocks: x; parameters: ;
actions: tick controllable;
location Q { }
transition Q -> Q { action: tick; guard: true; reset: {}; }
init: Q; goal: { };""")
    prod = product(idle, g)
    assert prod.shared == frozenset()
    assert sorted(lg for _, lg in prod.pairs.values()) == sorted(l.name for l in g.locations)
    game_edges = sorted((t.source, t.label, t.target) for t in g.transitions)
    got = sorted((prod.pairs[t.source][1], t.label, prod.pairs[t.target][1])
                 for t in prod.ptg.transitions if t.label != "tick")
    assert got == game_edges


def test_empty_strategy_controller_blocks_every_game_action(models):
    g = models["fig1"]
    c = synthesize_controller(g, StrategySpecification((), g.space))
    prod = product(c.ptg, g)
    assert [lg for _, lg in prod.pairs.values()] == [g.initial]


def test_goal_pairs_and_all_uncontrollable(models, controllers):
    g, c = models["fig3"], controllers["fig3"]
    prod = product(c.ptg, g, all_uncontrollable=True)
    assert prod.ptg.goal == {n for n, (_, lg) in prod.pairs.items() if lg in g.goal}
    assert prod.ptg.goal
    assert not any(t.controllable for t in prod.ptg.transitions)


def test_product_invariants_are_conjoined(models, controllers):
    g, c = models["fig3"], controllers["fig3"]
    prod = product(c.ptg, g)
    for name, (qc, lg) in prod.pairs.items():
        want = intersect(c.ptg.invariant(qc).extend(prod.ptg.space), g.invariant(lg).extend(prod.ptg.space))
        assert equals(prod.ptg.invariant(name), want)
        assert prod.ptg.is_urgent(name) == (c.ptg.is_urgent(qc) or g.is_urgent(lg))


def test_controllability_conflict(models):
    g = models["fig3"]
    other = parse_model("""clocks: x; parameters: ;
actions: c1 uncontrollable;
location A { }
transition A -> A { action: c1; guard: true; reset: {}; }
init: A; goal: { };""")
    with pytest.raises(ModelError, match="controllable"):
        product(other, g)


def test_fig3_closed_loop(models, controllers, solved):
    report = verify(controllers["fig3"].ptg, models["fig3"], solved["fig3"].winning_param)
    sp = report.computed.space
    assert report.verdict == MATCH
    assert equals(report.computed, parse_zone("p >= 0 && eps > 0", sp))


def test_fig1_closed_loop_only_needs_positive_epsilon(models, controllers, solved):
    report = verify(controllers["fig1"].ptg, models["fig1"], solved["fig1"].winning_param)
    assert report.ok
    assert report.computed.space.params == ("eps",)
    assert equals(report.computed, parse_zone("eps > 0", report.computed.space))


def test_raw_result_keeps_the_epsilon_zero_corner(models, controllers, solved):
    report = verify(controllers["fig3"].ptg, models["fig3"], solved["fig3"].winning_param)
    sp = report.computed_raw.space
    assert report.computed_raw.contains({"p": F(2), "eps": F(0)})
    assert not report.computed.contains({"p": F(2), "eps": F(0)})
    assert equals(report.computed, intersect(parse_zone("p >= 0", sp), positive_eps(sp)))


def corrupt(text):
    out = []
    for line in text.splitlines():
        if line.startswith("transition") and "action: c1;" in line:
            head, _, rest = line.partition("guard: ")
            _, _, tail = rest.partition(";")
            line = f"{head}guard: x > 2;{tail}"
        out.append(line)
    return "\n".join(out) + "\n"


def test_corrupted_controller_is_a_mismatch(models, controllers, solved):
    bad = parse_controller(corrupt(export_controller(controllers["fig3"])))
    report = verify(bad.ptg, models["fig3"], solved["fig3"].winning_param)
    assert report.verdict == SUBSET
    assert "expected-not-computed" in report.format()


def test_verdict_vocabulary():
    sp = Space((), ("p",))
    a, b = parse_union("p >= 1", sp), parse_union("p >= 0", sp)
    assert compare(a, a) == MATCH
    assert compare(a, b) == SUBSET
    assert compare(b, a) == SUPERSET


def test_budget_gives_inconclusive(models, controllers, solved):
    report = verify(controllers["fig3"].ptg, models["fig3"], solved["fig3"].winning_param, budget=2)
    assert report.verdict == INCONCLUSIVE


def test_report_json(models, controllers, solved):
    import json
    report = verify(controllers["fig3"].ptg, models["fig3"], solved["fig3"].winning_param)
    data = json.loads(report.to_json())
    assert data["verdict"] == "match" and data["product_locations"] > 0


CASES = [(name, p, eps) for name, points in WINNING_POINTS.items() for p in points
         for eps in (F(1, 4), F(1))]


@pytest.mark.parametrize("name,point,eps", CASES, ids=[f"{n}-{p}-eps{e}" for n, p, e in CASES])
def test_closed_loop_reaches_the_goal(models, controllers, name, point, eps):
    g, c = models[name], controllers[name]
    report = run_closed_loop(c, g, dict(point, eps=eps), 500, seed=17)
    assert report.reached == report.count == 500
    assert report.violations() == 0
    assert report.max_steps <= 10 * len(product(c.ptg, g).ptg.locations)


def test_fig4b_has_no_winning_point(solved):
    assert WINNING_POINTS["fig4b"] == [] and solved["fig4b"].winning_param.is_empty()
