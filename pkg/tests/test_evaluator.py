import dataclasses
import math
from functools import lru_cache

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coevrp import evaluator as ev
from coevrp.exact import solve_exact, solve_noncollab_exact
from coevrp.model import VehicleParams, VehicleRoute
from instances import random_small


@lru_cache(maxsize=None)
def base_case():
    """Exact solution with an exchange, a reserved customer, charging and two meet points."""
    inst = random_small(6, 0, n_meet=2)
    sol = solve_exact(inst)
    assert sol.feasible
    return inst, sol


def _replace_route(sol, company, route):
    routes = tuple(route if r.company == company else r for r in sol.routes)
    return dataclasses.replace(sol, routes=routes)


def _edit(route, **fields):
    return dataclasses.replace(route, **{k: tuple(v) for k, v in fields.items()})


def _drop(route, pos):
    def cut(seq):
        return tuple(seq[:pos]) + tuple(seq[pos + 1:]) if seq else seq

    return VehicleRoute(route.company, cut(route.nodes), cut(route.charge), cut(route.start), cut(route.battery))


def _insert(route, pos, node, start):
    def put(seq, v):
        return tuple(seq[:pos]) + (v,) + tuple(seq[pos:]) if seq else seq

    battery = put(route.battery, route.battery[pos - 1]) if route.battery else ()
    return VehicleRoute(route.company, put(route.nodes, node), put(route.charge, 0.0), put(route.start, start), battery)


def _charged_position(route):
    return next(p for p, c in enumerate(route.charge) if c > 1e-6)


def _exchanged(inst, sol):
    return next((r.company, r.position(j), j) for r in sol.routes for j in r.customers
                if inst.nodes[j].is_customer and inst.owner(j) != r.company)


def _mutations():
    """(constraint id, mutation) pairs; a mutation maps (instance, solution) to a broken pair."""

    def eq2(inst, sol):
        return inst.with_thresholds([sol.profits[1] + 1.0, sol.profits[2]]), sol

    def eq5(inst, sol):
        r = sol.route_of(1)
        b = list(r.battery)
        b[2] = inst.vehicle(1).battery_min - 1.0
        return inst, _replace_route(sol, 1, _edit(r, battery=b))

    def eq6(inst, sol):
        r = sol.route_of(1)
        b = list(r.battery)
        b[2] += 3.0
        return inst, _replace_route(sol, 1, _edit(r, battery=b))

    def eq7(inst, sol):
        r = sol.route_of(1)
        c = list(r.charge)
        c[0] = 5.0  # the vehicle leaves the depot full
        return inst, _replace_route(sol, 1, _edit(r, charge=c))

    def eq8(inst, sol):
        vehicles = tuple(dataclasses.replace(v, capacity=1.0) for v in inst.vehicles)
        return inst.replace(vehicles=vehicles), sol

    def eq9(inst, sol):
        m = sol.meet_point
        k = 2
        r = sol.route_of(k)
        shift = inst.costs.max_wait + 10.0
        p = r.position(m)
        s = [t + shift if q >= p else t for q, t in enumerate(r.start)]
        return inst.with_windows({}), _replace_route(sol, k, _edit(r, start=s))

    def eq10(inst, sol):
        k, pos, j = _exchanged(inst, sol)
        r = _drop(sol.route_of(k), pos)
        r = _insert(r, 1, j, r.start[0] + 1.0)
        return inst, _replace_route(sol, k, r)

    def eq14(inst, sol):
        r = sol.route_of(1)
        p = next(q for q, j in enumerate(r.nodes) if inst.nodes[j].is_customer)
        s = list(r.start)
        s[p] = inst.window(r.nodes[p])[1] + 10.0
        return inst, _replace_route(sol, 1, _edit(r, start=s))

    def eq15(inst, sol):
        r = sol.route_of(1)
        p = next(q for q, j in enumerate(r.nodes) if inst.nodes[j].is_customer)
        return inst, _replace_route(sol, 1, _drop(r, p))

    def eq16(inst, sol):
        r = sol.route_of(2)
        return inst, _replace_route(sol, 2, _drop(r, r.position(sol.meet_point)))

    def eq17(inst, sol):
        other = next(m for m in inst.meet_points if m != sol.meet_point)
        r = sol.route_of(2)
        nodes = [other if j == sol.meet_point else j for j in r.nodes]
        return inst, _replace_route(sol, 2, _edit(r, nodes=nodes))

    def eq20(inst, sol):
        j = next(j for j in inst.customers_of(1) if not inst.nodes[j].shared)
        r1 = sol.route_of(1)
        r1 = _drop(r1, r1.position(j))
        r2 = sol.route_of(2)
        p = r2.position(sol.meet_point) + 1
        r2 = _insert(r2, p, j, r2.start[p - 1] + 60.0)
        return inst, _replace_route(_replace_route(sol, 1, r1), 2, r2)

    return [
        (ev.EQ2, eq2), (ev.EQ5, eq5), (ev.EQ6, eq6), (ev.EQ7, eq7), (ev.EQ8, eq8), (ev.EQ9, eq9),
        (ev.EQ10, eq10), (ev.EQ14, eq14), (ev.EQ15, eq15), (ev.EQ16, eq16), (ev.EQ17, eq17), (ev.EQ20, eq20),
    ]


MUTATIONS = _mutations()


def test_unmutated_exact_solution_is_clean():
    inst, sol = base_case()
    rep = ev.validate(inst, sol)
    assert rep.feasible and not rep.violations
    assert rep.total_cost == pytest.approx(sol.total_cost, abs=1e-9)


def test_twelve_distinct_families():
    assert len({cid for cid, _ in MUTATIONS}) == 12


@pytest.mark.parametrize("cid, mutate", MUTATIONS, ids=[c for c, _ in MUTATIONS])
def test_mutation_flagged(cid, mutate):
    inst, sol = mutate(*base_case())
    rep = ev.validate(inst, sol)
    assert not rep.feasible
    assert cid in rep.violated_ids, rep.violated_ids


@given(st.integers(4, 7), st.integers(0, 500))
def test_revenue_conservation(n, seed):
    inst = random_small(n, seed, n_meet=1)
    sol = solve_exact(inst)
    if not sol.feasible:
        return
    prices = sum(inst.nodes[j].price for j in inst.customers)
    assert sol.profits[1] + sol.profits[2] + sol.total_cost == pytest.approx(prices, abs=1e-6)
    for k in (1, 2):
        base = solve_noncollab_exact(inst, k)
        own = sum(inst.nodes[j].price for j in inst.customers_of(k))
        assert base.profits[k] + base.total_cost == pytest.approx(own, abs=1e-6)


def test_profit_ratio_is_distance_share():
    inst, _ = base_case()
    m = inst.meet_points[0]
    j = inst.customers_of(2)[0]
    d_om = inst.distance[inst.depot(2), m]
    d_mj = inst.distance[m, j]
    assert ev.profit_ratio(inst, 2, m, j) == pytest.approx(d_om / (d_om + d_mj))
    with pytest.raises(ev.ProfitRatioError):
        ev.profit_ratio(inst, 1, m, j)


def test_simulate_battery_tracks_consumption():
    inst, sol = base_case()
    r = sol.route_of(1)
    trace = ev.simulate_battery(inst, r.nodes, r.charge, 1)
    assert not trace.violations
    assert trace.arrival == pytest.approx(r.battery)
    drained = ev.simulate_battery(inst, r.nodes, [0.0] * len(r.nodes), 1)
    assert ev.EQ5 in {v.constraint_id for v in drained.violations}


def test_objective_splits_energy_and_labor():
    inst, sol = base_case()
    c = ev.objective(inst, sol)
    dist = sum(ev.route_distance(inst, r.nodes) for r in sol.routes)
    assert c.energy_cost == pytest.approx(inst.c_d * dist)
    assert c.labor_cost == pytest.approx(inst.c_t * sum(r.arrival for r in sol.routes))
    assert c.total_cost == pytest.approx(c.energy_cost + c.labor_cost)


def test_capacity_load_counts_swap():
    inst, sol = base_case()
    routes = {r.company: r.nodes for r in sol.routes}
    own = len(inst.customers_of(1))
    incoming = sum(1 for j in routes[1] if inst.nodes[j].is_customer and inst.owner(j) == 2)
    # the meet point comes first on this route, so the exchange is picked up before any delivery
    assert routes[1][1] == sol.meet_point
    assert ev.capacity_load(inst, routes, 1) == own + incoming
    assert ev.capacity_excess(inst, routes) == 0.0
    assert math.isclose(
        ev.capacity_excess(inst.replace(vehicles=tuple(
            dataclasses.replace(v, capacity=1.0) for v in inst.vehicles)), routes),
        sum(max(0.0, ev.capacity_load(inst, routes, k) - 1.0) for k in (1, 2)),
    )
