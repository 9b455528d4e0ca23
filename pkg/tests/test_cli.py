import json
from pathlib import Path

import pytest

from ptgame import bundled_model
from ptgame.cli import main

DATA = Path(__file__).parent / "data"


@pytest.fixture
def workdir(tmp_path):
    for name in ("fig1", "fig3", "fig4b"):
        (tmp_path / f"{name}.ptg").write_text(bundled_model(name))
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def solve_to(capsys, workdir, name):
    code, out, _ = run(capsys, "solve", workdir / f"{name}.ptg", "-o", workdir)
    assert code == 0
    return out


def test_solve_fig3(capsys, workdir):
    out = solve_to(capsys, workdir, "fig3")
    assert "winning_param: p >= 0" in out
    assert (workdir / "fig3.params").read_text().strip() == "p >= 0"
    assert (workdir / "fig3.strategy").read_text().startswith("#")


def test_solve_fig4b_is_false(capsys, workdir):
    code, out, _ = run(capsys, "solve", workdir / "fig4b.ptg", "-o", workdir, "--json")
    assert code == 0
    assert json.loads(out)["winning_param"] == "false"


def test_solve_budget_exhaustion(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", DATA / "loop.ptg", "-o", tmp_path, "--max-iterations", 10)
    assert code == 3
    assert "exhausted: True" in out


def test_solve_bad_model(capsys, tmp_path):
    bad = tmp_path / "bad.ptg"
    bad.write_text("clocks: x;\nlocation A { }\n")
    code, _, err = run(capsys, "solve", bad, "-o", tmp_path)
    assert code == 2 and err.startswith("error:")


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "solve", tmp_path / "nope.ptg")
    assert code == 2 and "cannot read" in err


def test_controller_fig3(capsys, workdir):
    solve_to(capsys, workdir, "fig3")
    code, _, _ = run(capsys, "controller", workdir / "fig3.ptg", workdir / "fig3.strategy",
                     "-o", workdir / "fig3.ctrl")
    assert code == 0
    text = (workdir / "fig3.ctrl").read_text()
    assert sum(line.startswith("location ") for line in text.splitlines()) == 7


def test_controller_rejects_stale_strategy(capsys, workdir):
    solve_to(capsys, workdir, "fig3")
    changed = workdir / "fig3b.ptg"
    changed.write_text(bundled_model("fig3") + "\n# edited\n")
    code, _, err = run(capsys, "controller", changed, workdir / "fig3.strategy")
    assert code == 2 and "hash mismatch" in err


def test_controller_from_empty_strategy(capsys, workdir):
    empty = workdir / "empty.strategy"
    empty.write_text("# no instructions\n")
    code, out, _ = run(capsys, "controller", workdir / "fig3.ptg", empty)
    assert code == 0
    assert [line.split()[1] for line in out.splitlines() if line.startswith("location ")] == ["L0"]


def test_controller_encode_urgency(capsys, workdir):
    solve_to(capsys, workdir, "fig3")
    code, out, _ = run(capsys, "controller", workdir / "fig3.ptg", workdir / "fig3.strategy", "--encode-urgency")
    assert code == 0
    assert "urgent: true" not in out


def controller_for(capsys, workdir, name):
    solve_to(capsys, workdir, name)
    path = workdir / f"{name}.ctrl"
    assert run(capsys, "controller", workdir / f"{name}.ptg", workdir / f"{name}.strategy", "-o", path)[0] == 0
    return path


def test_verify_match(capsys, workdir):
    ctrl = controller_for(capsys, workdir, "fig3")
    code, out, _ = run(capsys, "verify", workdir / "fig3.ptg", ctrl, workdir / "fig3.params")
    assert code == 0
    assert "match" in out


def test_verify_mismatch(capsys, workdir):
    ctrl = controller_for(capsys, workdir, "fig3")
    lines = []
    for line in ctrl.read_text().splitlines():
        if line.startswith("transition") and "action: c1;" in line:
            head, _, rest = line.partition("guard: ")
            line = f"{head}guard: x > 2;{rest.partition(';')[2]}"
        lines.append(line)
    ctrl.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "verify", workdir / "fig3.ptg", ctrl, workdir / "fig3.params")
    assert code == 1
    assert "expected-not-computed" in out


def test_verify_json(capsys, workdir):
    ctrl = controller_for(capsys, workdir, "fig3")
    code, out, _ = run(capsys, "verify", workdir / "fig3.ptg", ctrl, workdir / "fig3.params", "--json")
    assert code == 0 and json.loads(out)["verdict"] == "match"


def test_verify_missing_params_file(capsys, workdir):
    ctrl = controller_for(capsys, workdir, "fig3")
    code, _, err = run(capsys, "verify", workdir / "fig3.ptg", ctrl, workdir / "none.params")
    assert code == 2 and "cannot read" in err


def test_simulate_fig1_strategy(capsys, workdir):
    solve_to(capsys, workdir, "fig1")
    code, out, _ = run(capsys, "simulate", workdir / "fig1.ptg", "--strategy", workdir / "fig1.strategy",
                       "--count", 500, "--seed", 3, "--json")
    assert code == 0
    data = json.loads(out)
    assert data["goal_rate"] == 1.0
    assert data["coherence_violations"] == data["index_violations"] == 0
    assert data["max_fired_per_episode"].get("u2", 0) <= 1


def test_simulate_closed_loop(capsys, workdir):
    ctrl = controller_for(capsys, workdir, "fig3")
    code, out, _ = run(capsys, "simulate", workdir / "fig3.ptg", "--controller", ctrl,
                       "--param", "p=1", "--param", "eps=1/4", "--count", 200)
    assert code == 0
    assert "goal_rate: 1.0" in out


def test_simulate_is_deterministic(capsys, workdir):
    solve_to(capsys, workdir, "fig3")
    argv = ("simulate", workdir / "fig3.ptg", "--strategy", workdir / "fig3.strategy",
            "--param", "p=1/2", "--count", 50, "--seed", 9)
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_simulate_needs_bindings(capsys, workdir):
    solve_to(capsys, workdir, "fig3")
    code, _, err = run(capsys, "simulate", workdir / "fig3.ptg", "--strategy", workdir / "fig3.strategy")
    assert code == 2 and "p" in err


def test_simulate_needs_a_plan(capsys, workdir):
    code, _, err = run(capsys, "simulate", workdir / "fig3.ptg", "--param", "p=1")
    assert code == 2 and "--strategy" in err
