"""Exhaustive enumeration reference solver for small instances.

Enumerates every route each vehicle could drive (all customer subsets it may
serve, all orders, every meet-point position), pairs routes whose customer
sets partition the instance, and prices each pair with the charging LP.
Pairs are visited cheapest-bound first, so the scan stops once no remaining
pair can beat the incumbent; bounds only skip pairs, never change prices.
"""

from __future__ import annotations

import heapq
import math
from collections import defaultdict
from typing import Optional, Union

from .charging_lp import Infeasible
from .model import FEASIBLE, NO_FEASIBLE, Instance, Solution
from .schedule import schedule

TOL = 1e-9


def _routes_for(instance: Instance, k: int, m: Optional[int]) -> dict[frozenset, list[tuple[float, tuple]]]:
    """All time-window-feasible routes of vehicle ``k`` grouped by customer set.

    Each entry carries a lower bound: energy cost plus labor at the
    zero-charge earliest completion time.
    """
    depot = instance.depot(k)
    tt = instance.tt(k)
    D = instance.distance
    own = set(instance.customers_of(k))
    reserved = set(instance.reserved_of(k))
    foreign = set(instance.shared_of(3 - k)) if m is not None else set()
    cd, ct = instance.c_d, instance.c_t
    svc = [n.service_time for n in instance.nodes]
    win = [instance.window(i) for i in range(instance.n_nodes)]
    out: dict[frozenset, list] = defaultdict(list)
    need_meet = m is not None

    def rec(route: list, t: float, d: float, used: set, met: bool) -> None:
        last = route[-1]
        if (met or not need_meet) and reserved <= used:
            arc = D[last, depot]
            if math.isfinite(arc):
                T = max(t + svc[last] + tt[last, depot], win[depot][0])
                if T <= win[depot][1] + TOL:
                    out[frozenset(used)].append((cd * (d + arc) + ct * T, tuple(route) + (depot,)))
        cands = [j for j in own if j not in used]
        if met:
            cands += [j for j in foreign if j not in used]
        if need_meet and not met:
            cands.append(m)
        for j in cands:
            arc = D[last, j]
            if not math.isfinite(arc):
                continue
            s = max(t + svc[last] + tt[last, j], win[j][0])
            if s > win[j][1] + TOL:
                continue
            route.append(j)
            if j == m:
                rec(route, s, d + arc, used, True)
            else:
                used.add(j)
                rec(route, s, d + arc, used, met)
                used.discard(j)
            route.pop()

    rec([depot], win[depot][0], 0.0, set(), False)
    for lst in out.values():
        lst.sort()
    return out


def enumerate_collaborative(instance: Instance) -> Union[Solution, Infeasible]:
    """Optimal collaborative solution by exhaustive enumeration."""
    customers = frozenset(instance.customers)
    best: Optional[Solution] = None
    for m in instance.meet_points:
        r1 = _routes_for(instance, 1, m)
        r2 = _routes_for(instance, 2, m)
        parts = []
        for s1, lst1 in r1.items():
            lst2 = r2.get(customers - s1)
            if lst2:
                parts.append((lst1[0][0] + lst2[0][0], s1))
        parts.sort(key=lambda p: p[0])
        for lb, s1 in parts:
            if best is not None and lb > best.total_cost + TOL:
                break
            best = _scan_pairs(instance, m, r1[s1], r2[customers - s1], best)
    if best is None:
        return Infeasible(NO_FEASIBLE)
    return _finish(best)


def _scan_pairs(instance, m, lst1, lst2, best):
    heap = [(lst1[0][0] + lst2[0][0], 0, 0)]
    seen = {(0, 0)}
    while heap:
        lb, i, j = heapq.heappop(heap)
        if best is not None and lb > best.total_cost + TOL:
            break
        sol = schedule(instance, {1: lst1[i][1], 2: lst2[j][1]}, m, method="enumeration")
        if not isinstance(sol, Infeasible) and (best is None or sol.total_cost < best.total_cost - TOL):
            best = sol
        for a, b in ((i + 1, j), (i, j + 1)):
            if a < len(lst1) and b < len(lst2) and (a, b) not in seen:
                seen.add((a, b))
                heapq.heappush(heap, (lst1[a][0] + lst2[b][0], a, b))
    return best


def enumerate_noncollab(instance: Instance, company: int) -> Union[Solution, Infeasible]:
    """Optimal single-company route by exhaustive enumeration."""
    routes = _routes_for(instance, company, None).get(frozenset(instance.customers_of(company)), [])
    best: Optional[Solution] = None
    for lb, r in routes:
        if best is not None and lb > best.total_cost + TOL:
            break
        sol = schedule(instance, {company: r}, None, method="enumeration")
        if not isinstance(sol, Infeasible) and (best is None or sol.total_cost < best.total_cost - TOL):
            best = sol
    if best is None:
        return Infeasible(NO_FEASIBLE)
    return _finish(best)


def _finish(sol: Solution) -> Solution:
    return Solution(
        routes=sol.routes,
        meet_point=sol.meet_point,
        profits=sol.profits,
        total_cost=sol.total_cost,
        energy_cost=sol.energy_cost,
        labor_cost=sol.labor_cost,
        status=FEASIBLE,
        method="enumeration",
    )
