import pytest
from hypothesis import given
from hypothesis import strategies as st

from coevrp.brute import enumerate_collaborative, enumerate_noncollab
from coevrp.charging_lp import Infeasible
from coevrp.evaluator import validate
from coevrp.exact import BEST_EFFORT, ExactConfig, solve_exact, solve_noncollab_exact, solve_subproblem
from coevrp.model import NO_FEASIBLE
from instances import random_small, with_baseline_thresholds


def cost(sol):
    return sol.total_cost if getattr(sol, "feasible", False) else None


@given(st.integers(3, 6), st.integers(0, 100_000), st.booleans(), st.booleans(), st.integers(1, 2))
def test_exact_equals_enumeration(n, seed, tw, electric, n_meet):
    inst = random_small(n, seed, tw=tw, electric=electric, n_meet=n_meet)
    a, b = solve_exact(inst), enumerate_collaborative(inst)
    ca, cb = cost(a), cost(b)
    assert (ca is None) == (cb is None)
    if ca is not None:
        assert ca == pytest.approx(cb, abs=1e-6)
        assert validate(inst, a).feasible


@given(st.integers(2, 6), st.integers(0, 100_000), st.integers(1, 2))
def test_noncollab_equals_enumeration(n, seed, k):
    inst = random_small(n, seed)
    a, b = solve_noncollab_exact(inst, k), enumerate_noncollab(inst, k)
    assert (cost(a) is None) == (cost(b) is None)
    if cost(a) is not None:
        assert cost(a) == pytest.approx(cost(b), abs=1e-6)


@given(st.integers(4, 6), st.integers(0, 100_000))
def test_threshold_never_lowers_cost(n, seed):
    inst = random_small(n, seed, n_meet=1)
    th = with_baseline_thresholds(inst)
    if th is None:
        return
    free, capped = solve_exact(inst), solve_exact(th)
    if cost(capped) is not None:
        assert cost(free) is not None and cost(free) <= cost(capped) + 1e-9
        for k in (1, 2):
            assert capped.profits[k] >= th.thresholds[k - 1] - 1e-6


def test_best_branch_wins():
    inst = random_small(5, 21, n_meet=2)
    full = solve_exact(inst)
    branches = [solve_subproblem(inst, m) for m in inst.meet_points]
    best = min(b.best_solution.total_cost for b in branches if b.best_solution is not None)
    assert full.total_cost == pytest.approx(best)
    assert all(b.proven_optimal for b in branches)


def test_size_limit():
    inst = random_small(8, 1)
    with pytest.raises(ValueError):
        solve_exact(inst, ExactConfig(max_customers=5))
    with pytest.raises(ValueError):
        solve_subproblem(inst, 0)


def test_time_limit_gives_best_effort():
    inst = random_small(11, 4)
    sol = solve_exact(inst, ExactConfig(time_limit=0.2))
    if isinstance(sol, Infeasible):
        assert sol.reason in (BEST_EFFORT, NO_FEASIBLE)
    else:
        assert sol.status in (BEST_EFFORT, "feasible")
        assert validate(inst, sol).feasible


def test_config_validation():
    with pytest.raises(ValueError):
        ExactConfig(max_customers=0)
