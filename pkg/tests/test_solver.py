import random
from fractions import Fraction as F
from pathlib import Path

import pytest

import oracles
from ptgame import BUNDLED_MODELS, parse_model, solve
from ptgame.model import initial_symbolic_state
from ptgame.semantics import ConcreteState, may_stop
from ptgame.solver import EXPLORE_FIRST, UPDATE_FIRST, SolverState
from ptgame.strategy import check_disjoint
from ptgame.syntax import parse_union, parse_zone
from ptgame.zones import Space, Zone, ZoneUnion, equals, intersect, intersect_union, is_empty, is_subset

DATA = Path(__file__).parent / "data"
P = Space((), ("p",))


def params(text):
    return parse_union(text, P)


def test_fig3_winning_parameters(solved):
    assert equals(solved["fig3"].winning_param, params("p >= 0"))
    assert not solved["fig3"].exhausted


def test_fig3_strategy_rows(models, solved):
    g, spec = models["fig3"], solved["fig3"].strategy
    rows = [i for i in spec if not i.is_wait]
    assert [(i.location, i.transition.label) for i in rows] == [("L1", "c2"), ("L0", "c1")]
    fig3b = parse_zone("0 <= p && p <= x && 1 < x", g.space)
    l1, l0 = rows
    assert equals(l1.source.zone, fig3b) and equals(l1.target.zone, fig3b)
    assert equals(l0.target.zone, fig3b)
    assert equals(l0.source.zone, Zone.top(g.space))


def test_fig4a_and_fig4b(solved):
    assert equals(solved["fig4a"].winning_param, params("p >= 0"))
    assert solved["fig4b"].winning_param.is_empty()


def initial_forced_moves(g, report):
    st = report.state
    (init,) = [s for s in st.states if s.location == g.initial]
    assert is_subset(initial_symbolic_state(g).zone, init.zone)
    return st.forced_moves[init]


def test_fig4a_forced_moves(models, solved):
    g = models["fig4a"]
    want = parse_zone("x == p && y >= p", g.space)
    assert equals(initial_forced_moves(g, solved["fig4a"]), want)


def test_fig4b_forced_moves(models, solved):
    # the upper closure of the strict invariant adds x > 0 and y > 0, which only
    # matters at p = 0 where the invariant x < p is empty anyway
    g = models["fig4b"]
    got = initial_forced_moves(g, solved["fig4b"])
    want = parse_zone("x == p && y > p", g.space)
    positive = parse_zone("p > 0", g.space)
    assert equals(intersect_union(got, positive), intersect(want, positive))
    assert is_subset(got, want)


def test_fig1_is_winning_with_disjoint_sources(solved):
    r = solved["fig1"]
    assert not r.winning_param.is_empty()
    assert check_disjoint(r.strategy) == []


def test_fig4_forced_wait_instruction(models, solved):
    g, spec = models["fig4a"], solved["fig4a"].strategy
    (wait,) = [i for i in spec if i.location == "L0"]
    assert wait.is_wait
    assert equals(wait.source.zone, parse_zone("x - y == 0 && x <= p", g.space))


@pytest.mark.parametrize("name", BUNDLED_MODELS)
def test_policy_independence(models, solved, name):
    other = solve(models[name], policy=EXPLORE_FIRST)
    assert equals(other.winning_param, solved[name].winning_param)


def test_unknown_policy(models):
    with pytest.raises(ValueError):
        solve(models["fig3"], policy="random")


@pytest.mark.parametrize("name", BUNDLED_MODELS)
def test_coverage_and_disjointness(models, solved, name):
    st = solved[name].state
    st.check_coverage()
    st.check_sources()
    spec = solved[name].strategy
    for s in st.states:
        covered = [i.source.zone for i in spec.at(s.location)]
        for piece in st.win_of(s).pieces:
            assert is_subset(piece, ZoneUnion.make(s.zone.space, covered))


def test_win_sets_stay_inside_their_states(solved):
    for report in solved.values():
        st = report.state
        for s in st.states:
            assert is_subset(st.win_of(s), s.zone)


def test_win_never_shrinks(models):
    st = SolverState(models["fig1"], check=True)
    seen = {}
    while st.waiting_explore or st.waiting_update:
        if st.waiting_update:
            st.update(st.waiting_update.pop())
        else:
            st.explore(st.waiting_explore.pop())
        for s in st.states:
            w = st.win_of(s)
            if s in seen:
                assert is_subset(seen[s], w)
            seen[s] = w


def test_fig1_agrees_with_region_oracle(models, solved):
    assert oracles.region_solve(models["fig1"], {}) is True


def test_fig3_agrees_with_region_oracle_on_parameter_grid(models, solved):
    for k in range(0, 9):
        p = {"p": F(k, 2)}
        assert oracles.region_solve(models["fig3"], p) == solved["fig3"].winning_param.contains(p)


def test_prodcell_agrees_with_region_style_grid(models, solved):
    # two clocks, so sample concrete parameter values against the expected threshold
    for k in range(0, 9):
        p = F(k, 2)
        assert solved["prodcell"].winning_param.contains({"p": p}) == (p > 1)


@pytest.mark.parametrize("name", ["fig4a", "fig4b"])
def test_fig4_brute_force_over_parameter_grid(models, solved, name):
    # the controller has no moves; it wins iff no state along the only time line may stop
    g = models[name]
    for k in range(1, 9):
        p = F(k, 2)
        states = [ConcreteState("L0", {"x": d, "y": d, "p": p}) for d in (F(j, 4) for j in range(0, 4 * k + 1))]
        states = [s for s in states if g.invariant("L0").contains(s.valuation)]
        loses = any(may_stop(g, s) for s in states)
        assert solved[name].winning_param.contains({"p": p}) == (not loses)


def test_random_games_agree_with_region_oracle():
    rng = random.Random(2024)
    checked = 0
    for i in range(150):
        parametric = i % 2 == 1
        text = oracles.random_game_text(rng, parametric)
        g = parse_model(text)
        r = solve(g, budget=5000, check=True)
        assert not r.exhausted
        points = [{"p": F(k, 2)} for k in range(0, 9)] if parametric else [{}]
        for v in points:
            assert r.winning_param.contains(v) == oracles.region_solve(g, v), text
            checked += 1
    assert checked > 600


def test_budget_exhaustion():
    g = parse_model((DATA / "loop.ptg").read_text())
    r = solve(g, budget=10)
    assert r.exhausted and r.iterations == 10


def test_goal_initial_wins_immediately():
    g = parse_model("clocks: x; parameters: p; actions: ; location A { } init: A; goal: { A };")
    r = solve(g)
    assert equals(r.winning_param, params("p >= 0"))
    assert [i.is_wait for i in r.strategy] == [True]


def test_update_first_is_default(models):
    r = solve(models["fig3"], policy=UPDATE_FIRST)
    assert r.iterations > 0 and not is_empty(r.winning_param.pieces[0])
