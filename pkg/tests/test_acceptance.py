"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Solutions produced along the way are collected and re-checked by the revenue
conservation criterion at the end.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from coevrp import charging_lp as cl
from coevrp.alns import AlnsConfig, solve_alns, solve_noncollab
from coevrp.brute import enumerate_collaborative
from coevrp.evaluator import simulate_battery, validate
from coevrp.exact import solve_exact, solve_noncollab_exact
from coevrp.model import EvMode, TwMode, builtin_gothenburg, generate_instance
from conftest import record
from instances import oracle_suite, random_routes

SEEDS = range(10)
SOLUTIONS: list = []  # (instance, solution) pairs for the conservation check
_EXACT: dict[int, object] = {}


def _keep(inst, sol):
    if getattr(sol, "feasible", False):
        SOLUTIONS.append((inst, sol))
    return sol


def _cost(sol):
    return sol.total_cost if getattr(sol, "feasible", False) else None


def _within(value, target, rel):
    return value is not None and abs(value - target) <= rel * target


def _best_noncollab(inst, seeds=SEEDS):
    """Best-of-seeds ALNS baseline for both companies: (total, {k: solution})."""
    best = {}
    for seed in seeds:
        for k in (1, 2):
            sol = _keep(inst, solve_noncollab(inst, k, AlnsConfig(seed=seed)))
            if _cost(sol) is not None and (k not in best or sol.total_cost < best[k].total_cost - 1e-9):
                best[k] = sol
    if len(best) < 2:
        return None, best
    return best[1].total_cost + best[2].total_cost, best


def _best_collab(inst, seeds=SEEDS):
    best = None
    for seed in seeds:
        sol = _keep(inst, solve_alns(inst, AlnsConfig(seed=seed)))
        if _cost(sol) is not None and (best is None or sol.total_cost < best.total_cost - 1e-9):
            best = sol
    return best


# -- Gothenburg ------------------------------------------------------------------------


@pytest.mark.slow
def test_gothenburg_reproduction():
    checks = []
    ev = builtin_gothenburg(EvMode.ELECTRIC, TwMode.ENFORCED)

    t0 = time.monotonic()
    base_tc, base = _best_noncollab(ev)
    secs = time.monotonic() - t0
    checks.append((
        "EVRPTW",
        _within(base_tc, 1277.7, 0.02) and secs < 60.0,
        f"TC {base_tc:.1f} vs 1277.7, profits {base[1].profits[1]:.1f}/{base[2].profits[2]:.1f}, {secs:.0f}s",
    ))

    thresholds = [base[1].profits[1], base[2].profits[2]]
    co = _best_collab(ev.with_thresholds(thresholds))
    phi_ok = co is not None and all(co.profits[k] >= thresholds[k - 1] for k in (1, 2))
    checks.append((
        "CoEVRPMP-TW+thresholds",
        _within(_cost(co), 818.8, 0.03) and phi_ok,
        f"TC {_cost(co):.1f} vs 818.8, profits {co.profits[1]:.1f}/{co.profits[2]:.1f}" if co else "none found",
    ))

    vrp = builtin_gothenburg(EvMode.CONVENTIONAL, TwMode.IGNORED)
    vrp_tc, _ = _best_noncollab(vrp)
    checks.append(("VRP", _within(vrp_tc, 1223.1, 0.03), f"TC {vrp_tc:.1f} vs 1223.1"))
    co_vrp = _best_collab(vrp)
    checks.append(("CoVRPMP", _within(_cost(co_vrp), 1095.5, 0.03), f"TC {_cost(co_vrp):.1f} vs 1095.5"))

    narrow = builtin_gothenburg(EvMode.ELECTRIC, TwMode.ENFORCED, shared=[3, 12])
    co_narrow = _best_collab(narrow, range(3))
    capped = _best_collab(narrow.with_thresholds(thresholds), range(3))
    sign_ok = co_narrow is not None and co_narrow.total_cost > base_tc
    checks.append((
        "shared {3,12}",
        sign_ok and capped is None,
        f"TC {_cost(co_narrow):.1f} vs baseline {base_tc:.1f}, with thresholds "
        + ("no feasible solution" if capped is None else f"TC {capped.total_cost:.1f}"),
    ))

    passed = all(ok for _, ok, _ in checks)
    detail = "; ".join(f"{name} {'ok' if ok else 'MISS'} ({d})" for name, ok, d in checks)
    record("Gothenburg reproduction", passed, detail)
    assert passed, detail


# -- oracle suite --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def suite():
    return oracle_suite(200)


def _exact_costs(suite):
    if len(_EXACT) < len(suite):
        for i, inst in enumerate(suite):
            if i not in _EXACT:
                _EXACT[i] = _keep(inst, solve_exact(inst))
    return [_cost(_EXACT[i]) for i in range(len(suite))]


@pytest.mark.slow
def test_exact_matches_enumeration(suite):
    t0 = time.monotonic()
    exact = _exact_costs(suite)
    mismatches = []
    for i, inst in enumerate(suite):
        ref = _cost(enumerate_collaborative(inst))
        got = exact[i]
        if (ref is None) != (got is None) or (ref is not None and abs(ref - got) > 1e-6):
            mismatches.append((i, got, ref))
    secs = time.monotonic() - t0
    passed = not mismatches and secs < 600.0
    feasible = sum(c is not None for c in exact)
    line = record(
        "Exact solver vs enumeration",
        passed,
        f"{len(suite) - len(mismatches)}/{len(suite)} equal ({feasible} feasible), {secs:.0f}s (limit 600s)",
    )
    assert passed, line + f" {mismatches[:5]}"


@pytest.mark.slow
def test_alns_matches_exact(suite):
    exact = _exact_costs(suite)
    matches, gaps = 0, []
    for i, inst in enumerate(suite):
        got = _cost(_keep(inst, solve_alns(inst, AlnsConfig())))
        ref = exact[i]
        if (ref is None and got is None) or (ref is not None and got is not None and abs(got - ref) <= 1e-6):
            matches += 1
        else:
            gap = (got - ref) / ref if ref is not None and got is not None else float("inf")
            gaps.append((i, gap))
    worst = max((g for _, g in gaps), default=0.0)
    passed = matches >= 0.9 * len(suite) and worst <= 0.02
    line = record(
        "ALNS vs exact gap",
        passed,
        f"{matches}/{len(suite)} optimal (need 180), worst gap {100 * worst:.2f}% (limit 2%)",
    )
    assert passed, line + f" {gaps}"


# -- charging LP ----------------------------------------------------------------------------


def test_charging_lp_vs_grid():
    routes = random_routes(100)
    bad, charged, feasible = [], 0, 0
    for n, (inst, route, k) in enumerate(routes):
        rlp = cl.build_route_lp(inst, route, k)
        lp, grid = cl.solve_charging(rlp), cl.grid_oracle(rlp, resolution=0.1)
        if isinstance(lp, cl.Infeasible):
            if not isinstance(grid, cl.Infeasible):
                bad.append((n, "lp infeasible"))
            continue
        feasible += 1
        charged += bool(lp.delta.sum() > 1e-9)
        if not isinstance(grid, cl.Infeasible):
            rates = [r for r in rlp.rates if r]
            slack = 60.0 * 0.1 / min(rates) if rates else 0.0
            if lp.T > grid.T + 1e-7 or grid.T - lp.T > slack + 1e-7:
                bad.append((n, lp.T, grid.T))
        if simulate_battery(inst, route, lp.delta, k).violations:
            bad.append((n, "battery replay"))
    passed = not bad
    line = record(
        "Charging LP vs grid oracle",
        passed,
        f"{100 - len(bad)}/100 routes agree ({feasible} feasible, {charged} need charging)",
    )
    assert passed, line + f" {bad}"


# -- validator ------------------------------------------------------------------------------


def test_validator_mutations():
    from test_evaluator import MUTATIONS, base_case

    inst, sol = base_case()
    clean = validate(inst, sol).feasible
    missed = []
    for cid, mutate in MUTATIONS:
        rep = validate(*mutate(inst, sol))
        if rep.feasible or cid not in rep.violated_ids:
            missed.append(cid)
    passed = clean and not missed and len(MUTATIONS) == 12
    line = record(
        "Validator mutation suite",
        passed,
        f"{len(MUTATIONS) - len(missed)}/{len(MUTATIONS)} mutations flagged, unmutated clean: {clean}",
    )
    assert passed, line + f" missed {missed}"


# -- large scale --------------------------------------------------------------------------------


@pytest.mark.slow
def test_large_scale():
    wins, rows = 0, []
    t_big = None
    for seed in SEEDS:
        inst = generate_instance(100, seed=seed)
        cfg = AlnsConfig(seed=seed)
        co = _keep(inst, solve_alns(inst, cfg))
        nc = [_keep(inst, solve_noncollab(inst, k, cfg)) for k in (1, 2)]
        if _cost(co) is not None and all(_cost(s) is not None for s in nc):
            total = nc[0].total_cost + nc[1].total_cost
            wins += co.total_cost < total
            rows.append(f"{co.total_cost:.0f}/{total:.0f}")
    big = generate_instance(500, seed=0)
    t0 = time.monotonic()
    sol = _keep(big, solve_alns(big, AlnsConfig(seed=0)))
    t_big = time.monotonic() - t0
    big_ok = _cost(sol) is not None and t_big < 3600.0
    passed = wins >= 8 and big_ok
    line = record(
        "Large-scale property check",
        passed,
        f"collaboration cheaper on {wins}/10 seeds (need 8) [{', '.join(rows)}]; "
        f"500 customers {'feasible' if _cost(sol) is not None else 'no solution'} in {t_big:.0f}s (limit 3600s)",
    )
    assert passed, line


# -- conservation ----------------------------------------------------------------------------------


def test_revenue_conservation():
    pool = list(SOLUTIONS)
    if not pool:
        # run on its own: collect a small sample
        for inst in oracle_suite(30):
            _keep(inst, solve_exact(inst))
            for k in (1, 2):
                _keep(inst, solve_noncollab_exact(inst, k))
        pool = list(SOLUTIONS)
    worst = 0.0
    for inst, sol in pool:
        if sol.collaborative:
            prices = sum(inst.nodes[j].price for j in inst.customers)
            phi = sol.profits[1] + sol.profits[2]
        else:
            (k,) = [r.company for r in sol.routes]
            prices = sum(inst.nodes[j].price for j in inst.customers_of(k))
            phi = sol.profits[k]
        worst = max(worst, abs(phi + sol.total_cost - prices))
    passed = worst <= 1e-6
    line = record("Revenue conservation", passed, f"{len(pool)} feasible solutions, max residual {worst:.2e} SEK")
    assert passed, line
