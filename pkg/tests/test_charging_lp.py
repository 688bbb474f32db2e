import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coevrp import charging_lp as cl
from coevrp.evaluator import simulate_battery
from coevrp.model import EvMode
from instances import random_routes, random_small

ROUTES = random_routes(100)


def check_against_grid(inst, route, k):
    rlp = cl.build_route_lp(inst, route, k)
    lp = cl.solve_charging(rlp)
    grid = cl.grid_oracle(rlp, resolution=0.1)
    if isinstance(lp, cl.Infeasible):
        assert isinstance(grid, cl.Infeasible)
        return None
    assert lp.T == pytest.approx(lp.start[-1])
    if not isinstance(grid, cl.Infeasible):
        rates = [r for r in rlp.rates if r]
        slack = 60.0 * 0.1 / min(rates) if rates else 0.0
        assert lp.T <= grid.T + 1e-7
        assert grid.T - lp.T <= slack + 1e-7
    return rlp, lp


def replay_violations(inst, route, k, lp):
    trace = simulate_battery(inst, route, lp.delta, k)
    out = list(trace.violations)
    tt = inst.tt(k)
    for p in range(len(route) - 1):
        a, b = route[p], route[p + 1]
        dwell = inst.nodes[a].service_time
        if lp.delta[p] > 0:
            dwell += 60.0 * lp.delta[p] / inst.charge_rate(a)
        if lp.start[p + 1] < lp.start[p] + dwell + tt[a, b] - 1e-6:
            out.append(("timing", p))
    for p, node in enumerate(route):
        e, l = inst.window(node)
        if not e - 1e-6 <= lp.start[p] <= l + 1e-6:
            out.append(("window", p))
    return out


@pytest.mark.parametrize("case", range(0, 100, 7))
def test_lp_matches_grid_oracle(case):
    inst, route, k = ROUTES[case]
    res = check_against_grid(inst, route, k)
    if res is not None:
        assert not replay_violations(inst, route, k, res[1])


@given(st.integers(0, 99))
def test_lp_matches_grid_oracle_property(case):
    inst, route, k = ROUTES[case]
    check_against_grid(inst, route, k)


@given(st.integers(3, 6), st.integers(0, 5_000), st.integers(0, 3))
def test_plan_is_minimal_completion(n, seed, extra):
    inst = random_small(n, seed, battery=40.0)
    route = (0, *inst.customers_of(1)[: 1 + extra], inst.meet_points[0], 0)
    rlp = cl.build_route_lp(inst, route, 1)
    lp = cl.solve_charging(rlp)
    if isinstance(lp, cl.Infeasible):
        return
    # no schedule can end before the zero-charge earliest times
    assert lp.T >= cl.earliest_times(rlp)[-1] - 1e-9
    assert np.all(lp.delta >= -1e-9)
    b = cl.arrival_battery(rlp, lp.delta)
    assert np.all(b >= rlp.battery_min - 1e-6)
    assert np.all(b + lp.delta <= rlp.battery_capacity + 1e-6)


def test_conventional_never_charges():
    inst = random_small(5, 11).with_modes(EvMode.CONVENTIONAL)
    route = (0, *inst.customers, 0)
    lp = cl.solve_charging(cl.build_route_lp(inst, route, 1))
    if not isinstance(lp, cl.Infeasible):
        assert np.allclose(lp.delta, 0.0)


def test_forbidden_arc_raises():
    inst = random_small(4, 3)
    dist = inst.distance.copy()
    dist[0, 2] = np.inf
    inst = inst.replace(distance=dist)
    with pytest.raises(cl.ForbiddenArcError):
        cl.build_route_lp(inst, (0, 2, 0), 1)


def test_joint_respects_sync():
    inst = random_small(6, 5)
    m = inst.meet_points[0]
    r1 = (0, inst.customers_of(1)[0], m, 0)
    r2 = (1, m, inst.customers_of(2)[0], 1)
    plans = cl.solve_joint([cl.build_route_lp(inst, r1, 1), cl.build_route_lp(inst, r2, 2)], [2, 1],
                           inst.costs.max_wait)
    if isinstance(plans, cl.Infeasible):
        pytest.skip("pair not synchronisable")
    assert abs(plans[0].start[2] - plans[1].start[1]) <= inst.costs.max_wait + 1e-6


def test_battery_infeasible_route():
    inst = random_small(6, 2, battery=13.0)
    route = (0, *inst.customers, 0)
    inst = inst.replace(nodes=tuple(
        n if not n.is_customer else n.__class__(**{**n.__dict__, "charge_rate": None}) for n in inst.nodes))
    res = cl.solve_charging(cl.build_route_lp(inst, route, 1))
    assert isinstance(res, cl.Infeasible)
