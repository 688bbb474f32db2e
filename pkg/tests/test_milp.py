import numpy as np
import pytest

from coevrp.exact import solve_subproblem
from coevrp.milp import (
    build_milp,
    export_milp,
    import_solution,
    read_lp,
    read_values,
    solution_values,
    values_to_solution,
    write_values,
)
from coevrp.model import EvMode, TwMode
from instances import random_small, with_baseline_thresholds

scipy_opt = pytest.importorskip("scipy.optimize")


def solve_with_highs(model):
    names = sorted(model.variables)
    idx = {v: i for i, v in enumerate(names)}
    c = np.zeros(len(names))
    for v, a in model.objective.items():
        c[idx[v]] = a
    A = np.zeros((len(model.rows), len(names)))
    lo, hi = [], []
    for r, (coefs, sense, rhs) in enumerate(model.rows.values()):
        for v, a in coefs.items():
            A[r, idx[v]] = a
        lo.append(rhs if sense in (">=", "=") else -np.inf)
        hi.append(rhs if sense in ("<=", "=") else np.inf)
    lb, ub = np.zeros(len(names)), np.full(len(names), np.inf)
    for v, (l, h) in model.bounds.items():
        lb[idx[v]], ub[idx[v]] = l, h
    integrality = np.zeros(len(names))
    for v in model.binaries:
        integrality[idx[v]], ub[idx[v]] = 1, min(ub[idx[v]], 1.0)
    return scipy_opt.milp(
        c,
        constraints=scipy_opt.LinearConstraint(A, lo, hi),
        bounds=scipy_opt.Bounds(lb, ub),
        integrality=integrality,
        options={"time_limit": 120},
    )


def exported(inst, m, tmp_path):
    path = export_milp(inst, m, tmp_path / "model.lp")
    return read_lp(path)


def test_arc_and_row_counts(tmp_path):
    inst = random_small(4, 1, n_meet=1)
    model = exported(inst, inst.meet_points[0], tmp_path)
    q = len(inst.customers) + 1
    x = [v for v in model.binaries if v.startswith("x_")]
    assert len(x) == 2 * q * (q + 1)
    fam = model.row_families()
    assert fam["timing"] == fam["battery"] == len(x)
    assert fam["visit"] == len(inst.customers)
    assert fam["samemeet"] == fam["synchi"] == fam["synclo"] == 1


def test_conventional_model_drops_battery(tmp_path):
    inst = random_small(4, 1, n_meet=1).with_modes(EvMode.CONVENTIONAL, TwMode.IGNORED)
    fam = exported(inst, inst.meet_points[0], tmp_path).row_families()
    assert "battery" not in fam and "chargecap" not in fam and "twlo" not in fam


def test_writer_and_reader_agree(tmp_path):
    inst = random_small(5, 3)
    w = build_milp(inst, inst.meet_points[0])
    model = exported(inst, inst.meet_points[0], tmp_path)
    assert set(model.rows) == {name for name, *_ in w.rows}
    for name, coefs, sense, rhs in w.rows:
        got = model.rows[name]
        assert got[1] == sense and got[2] == pytest.approx(rhs)
        assert got[0] == pytest.approx(coefs)


@pytest.mark.parametrize("seed", [2, 7, 13])
def test_highs_matches_branch_and_bound(seed, tmp_path):
    inst = random_small(4, seed, n_meet=1)
    th = with_baseline_thresholds(inst)
    for case in (inst, th) if th is not None else (inst,):
        m = case.meet_points[0]
        br = solve_subproblem(case, m)
        res = solve_with_highs(exported(case, m, tmp_path))
        if br.best_solution is None:
            assert res.status != 0
        else:
            assert res.status == 0
            assert res.fun == pytest.approx(br.best_solution.total_cost, abs=1e-4)


def test_exact_solution_satisfies_every_row(tmp_path):
    inst = random_small(5, 9, n_meet=1)
    m = inst.meet_points[0]
    sol = solve_subproblem(inst, m).best_solution
    model = exported(inst, m, tmp_path)
    values = solution_values(inst, sol)
    assert model.violations(values) == []
    assert sum(model.objective.get(v, 0.0) * x for v, x in values.items()) == pytest.approx(sol.total_cost)
    back = values_to_solution(inst, values)
    assert back.feasible and back.total_cost == pytest.approx(sol.total_cost)


def test_value_file_round_trip(tmp_path):
    inst = random_small(5, 9, n_meet=1)
    sol = solve_subproblem(inst, inst.meet_points[0]).best_solution
    values = solution_values(inst, sol)
    path = write_values(values, tmp_path / "vals.txt")
    assert read_values(path) == pytest.approx(values)
    imported = import_solution(inst, path)
    assert [r.nodes for r in imported.routes] == [r.nodes for r in sol.routes]


def test_broken_values_are_caught(tmp_path):
    inst = random_small(5, 9, n_meet=1)
    m = inst.meet_points[0]
    sol = solve_subproblem(inst, m).best_solution
    model = exported(inst, m, tmp_path)
    values = solution_values(inst, sol)
    s_key = next(v for v in values if v.startswith("s_1_") and values[v] > 0)
    values[s_key] += 500.0
    assert model.violations(values)
