"""Turn fixed visit sequences into a timed, charged solution.

Shared by the exact search, the enumeration oracle and the metaheuristic so
that every method prices a given pair of routes identically.
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence, Union

from .charging_lp import (
    THRESHOLD_INFEASIBLE,
    Infeasible,
    build_route_lp,
    solve_charging,
    solve_joint,
)
from .evaluator import assemble_solution, capacity_excess, revenues, route_distance
from .model import Instance, Solution


CAPACITY_INFEASIBLE = "capacity-infeasible"


def capacity_may_bind(instance: Instance) -> bool:
    """False when every vehicle could carry all goods at once."""
    total = sum(instance.nodes[j].demand for j in instance.customers)
    return total > min(v.capacity for v in instance.vehicles) + 1e-9


def threshold_caps(
    instance: Instance, routes: Mapping[int, Sequence[int]], meet_point: int
) -> Optional[list[float]]:
    """Latest completion time per vehicle that keeps each company above its threshold."""
    th = instance.thresholds
    if th is None:
        return None
    rev = revenues(instance, routes, meet_point)
    caps = []
    for k in sorted(routes):
        slack = rev[k] - instance.c_d * route_distance(instance, routes[k]) - th[k - 1]
        caps.append(slack / instance.c_t)
    return caps


def schedule(
    instance: Instance,
    routes: Mapping[int, Sequence[int]],
    meet_point: Optional[int],
    method: str = "",
) -> Union[Solution, Infeasible]:
    """Optimal charging and timing for fixed routes.

    With one route and no meet point this is the single-company baseline;
    with two routes the meet-point service starts are synchronised and the
    profit thresholds (if any) are enforced.
    """
    ks = sorted(routes)
    if capacity_may_bind(instance) and capacity_excess(instance, routes) > 1e-9:
        return Infeasible(CAPACITY_INFEASIBLE)
    rlps = [build_route_lp(instance, routes[k], k) for k in ks]
    if meet_point is None:
        plans = [solve_charging(r) for r in rlps]
        for p in plans:
            if not p.feasible:
                return p
    else:
        caps = threshold_caps(instance, routes, meet_point)
        if caps is not None and any(c < 0 for c in caps):
            return Infeasible(THRESHOLD_INFEASIBLE)
        pos = [list(routes[k]).index(meet_point) for k in ks]
        plans = solve_joint(rlps, pos, instance.costs.max_wait, caps)
        if isinstance(plans, Infeasible):
            return plans
    return assemble_solution(instance, routes, meet_point, dict(zip(ks, plans)), method=method)
