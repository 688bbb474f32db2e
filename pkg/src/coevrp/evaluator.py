"""Cost, profit sharing, battery simulation and constraint checking.

The validator works on visit sequences and reported schedules directly: it
checks each logical constraint without any big-M encoding, and names every
violation with a stable id keyed to the model's constraint families.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np

from .model import (
    COMPANIES,
    FEASIBLE,
    Instance,
    MultiVehicleSolution,
    NodeKind,
    Solution,
    VehicleRoute,
)

TIME_TOL = 1e-6
ENERGY_TOL = 1e-6
MONEY_TOL = 1e-6

# stable violation ids
EQ2 = "eq2_profit_threshold"
EQ5 = "eq5_battery_bounds"
EQ6 = "eq6_battery_update"
EQ7 = "eq7_charge_limit"
EQ8 = "eq8_capacity"
EQ9 = "eq9_sync_wait"
EQ10 = "eq10_exchange_after_meet"
EQ11 = "eq11_service_timing"
EQ13 = "eq13_arrival_time"
EQ14 = "eq14_time_window"
EQ15 = "eq15_visit_once"
EQ16 = "eq16_one_meet_point"
EQ17 = "eq17_same_meet_point"
EQ18 = "eq18_depot_start"
EQ19 = "eq19_depot_end"
EQ20 = "eq20_reserved_own"
FORBIDDEN = "forbidden_arc"
STRUCTURE = "structure"
# multi-vehicle extension
MV_TRANSFER_ONCE = "mv_transfer_once"
MV_ONE_MEET = "mv_one_meet_point"
MV_PAIRING = "mv_pairing"
MV_SAME_MEET = "mv_same_meet_point"
MV_TRANSFER_SERVICE = "mv_transfer_service"
MV_PAIR_NEEDS_TRANSFER = "mv_pair_needs_transfer"
MV_TRANSFER_AT_PAIR = "mv_transfer_at_pairing"
MV_SYNC_WAIT = "mv_sync_wait"
MV_EXCHANGE_AFTER_MEET = "mv_exchange_after_meet"


@dataclass(frozen=True)
class Violation:
    constraint_id: str
    context: str
    magnitude: float = 0.0


@dataclass
class EvalReport:
    feasible: bool
    violations: list[Violation]
    total_cost: float
    energy_cost: float
    labor_cost: float
    profits: dict[int, float]
    threshold_ok: dict[int, bool]

    @property
    def violated_ids(self) -> set[str]:
        return {v.constraint_id for v in self.violations}

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["profits"] = {str(k): v for k, v in self.profits.items()}
        d["threshold_ok"] = {str(k): v for k, v in self.threshold_ok.items()}
        return d


@dataclass(frozen=True)
class Costs:
    total_cost: float
    energy_cost: float
    labor_cost: float


@dataclass
class BatteryTrace:
    arrival: np.ndarray
    charge: np.ndarray
    departure: np.ndarray
    violations: list[Violation] = field(default_factory=list)


class ProfitRatioError(ValueError):
    pass


def profit_ratio(instance: Instance, company: int, meet_point: int, customer: int) -> float:
    """Share of customer ``customer``'s fee kept by its owner when exchanged at ``meet_point``.

    The owner carries the goods depot -> meet point, the collaborator meet
    point -> customer; the fee is split in proportion to those distances.
    """
    if instance.owner(customer) != company:
        raise ProfitRatioError(f"customer {customer} does not belong to company {company}")
    d_om = instance.distance[instance.depot(company), meet_point]
    d_mj = instance.distance[meet_point, customer]
    if not (math.isfinite(d_om) and math.isfinite(d_mj)):
        raise ProfitRatioError("ratio undefined over a forbidden arc")
    if d_om + d_mj == 0:
        raise ProfitRatioError("ratio undefined: both distances are zero")
    return float(d_om / (d_om + d_mj))


def route_distance(instance: Instance, nodes: Sequence[int]) -> float:
    d = 0.0
    for a, b in zip(nodes, nodes[1:]):
        arc = instance.distance[a, b]
        if not math.isfinite(arc):
            from .charging_lp import ForbiddenArcError

            raise ForbiddenArcError(f"forbidden arc {instance.nodes[a].label}->{instance.nodes[b].label}")
        d += arc
    return float(d)


def route_cost(instance: Instance, route: VehicleRoute) -> float:
    return instance.c_d * route_distance(instance, route.nodes) + instance.c_t * route.arrival


def objective(instance: Instance, solution: Solution) -> Costs:
    energy = sum(instance.c_d * route_distance(instance, r.nodes) for r in solution.routes)
    labor = sum(instance.c_t * r.arrival for r in solution.routes)
    return Costs(energy + labor, energy, labor)


def revenues(
    instance: Instance, routes: Mapping[int, Sequence[int]], meet_point: Optional[int]
) -> dict[int, float]:
    """Fee income per company given which vehicle delivers each customer."""
    rev = {k: 0.0 for k in routes}
    for k, nodes in routes.items():
        for j in nodes:
            node = instance.nodes[j]
            if node.kind is not NodeKind.CUSTOMER:
                continue
            owner = node.company
            if owner == k:
                rev[k] += node.price
            else:
                a = profit_ratio(instance, owner, meet_point, j)
                rev[k] += node.price * (1.0 - a)
                if owner in rev:
                    rev[owner] += node.price * a
    return rev


def company_profit(instance: Instance, solution: Solution, company: int) -> float:
    routes = {r.company: r.nodes for r in solution.routes}
    rev = revenues(instance, routes, solution.meet_point).get(company, 0.0)
    cost = sum(route_cost(instance, r) for r in solution.routes if r.company == company)
    return rev - cost


def simulate_battery(
    instance: Instance, route: Sequence[int], charges: Sequence[float], company: int = 1
) -> BatteryTrace:
    """Replay a route from a full battery; report bound and charger violations."""
    v = instance.vehicle(company)
    n = len(route)
    charges = np.asarray(charges, dtype=float) if len(charges) else np.zeros(n)
    arrival = np.empty(n)
    departure = np.empty(n)
    viol: list[Violation] = []
    b = v.battery_capacity
    for p, node in enumerate(route):
        if p:
            b = departure[p - 1] - v.consumption * instance.distance[route[p - 1], node]
        arrival[p] = b
        d = charges[p]
        label = instance.nodes[node].label
        if b < v.battery_min - ENERGY_TOL or b > v.battery_capacity + ENERGY_TOL:
            gap = max(v.battery_min - b, b - v.battery_capacity)
            viol.append(Violation(EQ5, f"vehicle {company} arrival at {label} (pos {p})", gap))
        if d < -ENERGY_TOL:
            viol.append(Violation(EQ7, f"negative charge at {label} (pos {p})", -d))
        if d > ENERGY_TOL and not instance.charge_rate(node):
            viol.append(Violation(EQ7, f"charging without charger at {label} (pos {p})", d))
        if d > v.battery_capacity - b + ENERGY_TOL:
            viol.append(Violation(EQ7, f"overcharge at {label} (pos {p})", d - (v.battery_capacity - b)))
        departure[p] = b + d
    return BatteryTrace(arrival, charges, departure, viol)


# -- validation --------------------------------------------------------------


def _check_route_structure(instance: Instance, r: VehicleRoute, viol: list[Violation]) -> bool:
    depot = instance.depot(r.company)
    ok = True
    if not r.nodes or r.nodes[0] != depot:
        viol.append(Violation(EQ18, f"vehicle {r.company} must start at its depot"))
        ok = False
    if len(r.nodes) < 2 or r.nodes[-1] != depot:
        viol.append(Violation(EQ19, f"vehicle {r.company} must end at its depot"))
        ok = False
    if any(instance.nodes[i].kind is NodeKind.DEPOT for i in r.nodes[1:-1]):
        viol.append(Violation(STRUCTURE, f"vehicle {r.company} passes a depot mid-route"))
    for a, b in zip(r.nodes, r.nodes[1:]):
        if not math.isfinite(instance.distance[a, b]):
            viol.append(
                Violation(FORBIDDEN, f"vehicle {r.company} {instance.nodes[a].label}->{instance.nodes[b].label}")
            )
            ok = False
    n = len(r.nodes)
    if len(r.start) != n or len(r.charge) not in (0, n) or len(r.battery) not in (0, n):
        viol.append(Violation(STRUCTURE, f"vehicle {r.company} schedule length mismatch"))
        ok = False
    return ok


def _check_route_timing(instance: Instance, r: VehicleRoute, viol: list[Violation]) -> None:
    tt = instance.tt(r.company)
    charge = r.charge if r.charge else (0.0,) * len(r.nodes)
    for p, (a, b) in enumerate(zip(r.nodes, r.nodes[1:])):
        dwell = instance.nodes[a].service_time
        rate = instance.charge_rate(a)
        if charge[p] > 0 and rate:
            dwell += 60.0 * charge[p] / rate
        need = r.start[p] + dwell + tt[a, b]
        if r.start[p + 1] < need - TIME_TOL:
            viol.append(
                Violation(
                    EQ11,
                    f"vehicle {r.company} {instance.nodes[a].label}->{instance.nodes[b].label}",
                    need - r.start[p + 1],
                )
            )
    for p, node in enumerate(r.nodes):
        e, l = instance.window(node)
        s = r.start[p]
        if s < e - TIME_TOL or s > l + TIME_TOL:
            viol.append(
                Violation(EQ14, f"vehicle {r.company} at {instance.nodes[node].label}", max(e - s, s - l))
            )


def _check_route_battery(instance: Instance, r: VehicleRoute, viol: list[Violation]) -> None:
    if not instance.electric:
        if any(abs(c) > ENERGY_TOL for c in r.charge):
            viol.append(Violation(EQ7, f"vehicle {r.company} charges a conventional vehicle"))
        return
    trace = simulate_battery(instance, r.nodes, r.charge, r.company)
    viol.extend(trace.violations)
    if not r.battery:
        return
    v = instance.vehicle(r.company)
    if abs(r.battery[0] - v.battery_capacity) > ENERGY_TOL:
        viol.append(Violation(EQ6, f"vehicle {r.company} must leave fully charged", abs(r.battery[0] - v.battery_capacity)))
    charge = r.charge if r.charge else (0.0,) * len(r.nodes)
    for p, (a, b) in enumerate(zip(r.nodes, r.nodes[1:])):
        bound = r.battery[p] + charge[p] - v.consumption * instance.distance[a, b]
        if r.battery[p + 1] > bound + ENERGY_TOL:
            viol.append(
                Violation(EQ6, f"vehicle {r.company} arrival at {instance.nodes[b].label}", r.battery[p + 1] - bound)
            )
        if r.battery[p + 1] < v.battery_min - ENERGY_TOL:
            viol.append(Violation(EQ5, f"vehicle {r.company} reported battery at {instance.nodes[b].label}"))


def capacity_load(instance: Instance, routes: Mapping[int, Sequence[int]], company: int) -> float:
    """Peak on-board load of one vehicle: all own goods at the depot, swapped at the meet point."""
    nodes = routes[company]
    served = {j: k for k, r in routes.items() for j in r if instance.nodes[j].is_customer}
    demand = [n.demand for n in instance.nodes]
    own = sum(demand[j] for j in instance.customers_of(company))
    outgoing = sum(demand[j] for j, k in served.items() if instance.owner(j) == company and k != company)
    incoming = sum(demand[j] for j in nodes if instance.nodes[j].is_customer and instance.owner(j) != company)
    delivered_before = 0.0
    for j in nodes[1:-1]:
        if instance.nodes[j].kind is NodeKind.MEET:
            break
        delivered_before += demand[j]
    return max(own, own - outgoing + incoming - delivered_before)


def capacity_excess(instance: Instance, routes: Mapping[int, Sequence[int]]) -> float:
    """Total load above capacity over all vehicles (0 when every vehicle fits)."""
    return sum(max(0.0, capacity_load(instance, routes, k) - instance.vehicle(k).capacity) for k in routes)


def validate(instance: Instance, solution: Solution) -> EvalReport:
    """Check every constraint family and compute costs and profits."""
    viol: list[Violation] = []
    routes = solution.routes
    noncollab = solution.meet_point is None and len(routes) == 1
    companies = [r.company for r in routes]
    if noncollab:
        expected = {routes[0].company}
    else:
        expected = set(COMPANIES)
    if sorted(companies) != sorted(expected):
        viol.append(Violation(STRUCTURE, f"expected one route per company {sorted(expected)}, got {companies}"))
        return _report(instance, solution, viol, structural=False)

    structural = all([_check_route_structure(instance, r, viol) for r in routes])
    if not structural:
        return _report(instance, solution, viol, structural=False)

    # visits: each relevant customer exactly once
    relevant = instance.customers_of(routes[0].company) if noncollab else instance.customers
    counts: dict[int, int] = {}
    for r in routes:
        for j in r.customers:
            if instance.nodes[j].kind is NodeKind.CUSTOMER:
                counts[j] = counts.get(j, 0) + 1
    for j in relevant:
        c = counts.get(j, 0)
        if c != 1:
            viol.append(Violation(EQ15, f"customer {instance.nodes[j].label} visited {c} times", abs(c - 1)))
    for j in counts:
        if j not in relevant:
            viol.append(Violation(EQ15, f"customer {instance.nodes[j].label} outside this company's set"))

    served = solution.served_by()

    if noncollab:
        r = routes[0]
        if any(instance.nodes[i].kind is NodeKind.MEET for i in r.customers):
            viol.append(Violation(EQ16, "baseline route visits a meet point"))
    else:
        meets = {}
        for r in routes:
            ms = [i for i in r.customers if instance.nodes[i].kind is NodeKind.MEET]
            if len(ms) != 1:
                viol.append(Violation(EQ16, f"vehicle {r.company} visits {len(ms)} meet points", abs(len(ms) - 1)))
            meets[r.company] = ms
        m1, m2 = meets[1], meets[2]
        if len(m1) == 1 and len(m2) == 1:
            if m1[0] != m2[0] or solution.meet_point not in (m1[0],):
                viol.append(Violation(EQ17, "vehicles use different meet points"))
            else:
                r1, r2 = routes[companies.index(1)], routes[companies.index(2)]
                s1 = r1.start[r1.position(m1[0])]
                s2 = r2.start[r2.position(m2[0])]
                gap = abs(s1 - s2)
                if gap > instance.costs.max_wait + TIME_TOL:
                    viol.append(Violation(EQ9, "meet-point service starts too far apart", gap - instance.costs.max_wait))
        m = solution.meet_point
        for r in routes:
            mpos = r.position(m) if m in r.nodes else None
            for p, j in enumerate(r.nodes):
                node = instance.nodes[j]
                if node.kind is not NodeKind.CUSTOMER:
                    continue
                if node.company != r.company:
                    if not node.shared:
                        viol.append(Violation(EQ20, f"reserved customer {node.label} served by vehicle {r.company}"))
                    if mpos is None or p < mpos or r.start[p] < r.start[mpos] - TIME_TOL:
                        viol.append(Violation(EQ10, f"exchanged customer {node.label} before meet point"))

    for r in routes:
        _check_route_timing(instance, r, viol)
        _check_route_battery(instance, r, viol)

    # capacity
    seqs = {r.company: r.nodes for r in routes}
    for r in routes:
        load = capacity_load(instance, seqs, r.company)
        cap = instance.vehicle(r.company).capacity
        if load > cap + 1e-9:
            viol.append(Violation(EQ8, f"vehicle {r.company} load {load} > {cap}", load - cap))

    return _report(instance, solution, viol, structural=True)


def _report(instance: Instance, solution: Solution, viol: list[Violation], structural: bool) -> EvalReport:
    profits: dict[int, float] = {}
    if structural:
        try:
            costs = objective(instance, solution)
            for r in solution.routes:
                profits[r.company] = company_profit(instance, solution, r.company)
        except (ValueError, IndexError):
            costs = Costs(math.nan, math.nan, math.nan)
    else:
        costs = Costs(math.nan, math.nan, math.nan)
    threshold_ok = {}
    th = instance.thresholds
    for k, phi in profits.items():
        ok = True
        if th is not None and solution.collaborative:
            ok = phi >= th[k - 1] - MONEY_TOL
            if not ok:
                viol.append(Violation(EQ2, f"company {k} profit {phi:.4f} < {th[k - 1]:.4f}", th[k - 1] - phi))
        threshold_ok[k] = ok
    return EvalReport(
        feasible=not viol,
        violations=viol,
        total_cost=costs.total_cost,
        energy_cost=costs.energy_cost,
        labor_cost=costs.labor_cost,
        profits=profits,
        threshold_ok=threshold_ok,
    )


# -- multi-vehicle extension --------------------------------------------------


def _transfer_map(ms: MultiVehicleSolution) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    for j, m in ms.transfers:
        out.setdefault(j, []).append(m)
    return out


def profit_multi(instance: Instance, ms: MultiVehicleSolution, company: int) -> float:
    """Company profit when several vehicles per company may exchange goods."""
    tr = _transfer_map(ms)
    total = 0.0
    for j in instance.customers:
        node = instance.nodes[j]
        eps = {m: 1.0 for m in tr.get(j, [])}
        if node.company == company:
            total += node.price * (1.0 - sum(eps.values()))
            for m in eps:
                total += node.price * profit_ratio(instance, company, m, j)
        else:
            for m in eps:
                total += node.price * (1.0 - profit_ratio(instance, node.company, m, j))
    for r in ms.routes:
        if r.company == company:
            total -= route_cost(instance, r)
    return total


def validate_multi(instance: Instance, ms: MultiVehicleSolution) -> EvalReport:
    viol: list[Violation] = []
    routes = ms.routes
    ok = all([_check_route_structure(instance, r, viol) for r in routes])
    if not ok:
        return EvalReport(False, viol, math.nan, math.nan, math.nan, {}, {})

    def tag(v: int) -> str:
        return f"vehicle #{v} (company {routes[v].company})"

    counts: dict[int, list[int]] = {}
    for v, r in enumerate(routes):
        for j in r.customers:
            if instance.nodes[j].is_customer:
                counts.setdefault(j, []).append(v)
    for j in instance.customers:
        c = len(counts.get(j, []))
        if c != 1:
            viol.append(Violation(EQ15, f"customer {instance.nodes[j].label} visited {c} times", abs(c - 1)))

    tr = _transfer_map(ms)
    for j, ms_list in tr.items():
        if len(ms_list) > 1:
            viol.append(Violation(MV_TRANSFER_ONCE, f"customer {instance.nodes[j].label} transferred {len(ms_list)} times"))

    meet_of: dict[int, list[int]] = {}
    for v, r in enumerate(routes):
        ms_v = [i for i in r.customers if instance.nodes[i].kind is NodeKind.MEET]
        meet_of[v] = ms_v
        if len(ms_v) > 1:
            viol.append(Violation(MV_ONE_MEET, f"{tag(v)} visits {len(ms_v)} meet points"))

    pair_count = {v: 0 for v in range(len(routes))}
    for v1, v2, m in ms.pairings:
        if routes[v1].company != 1 or routes[v2].company != 2:
            viol.append(Violation(MV_PAIRING, f"pairing ({v1},{v2}) must join a company-1 and a company-2 vehicle"))
            continue
        pair_count[v1] += 1
        pair_count[v2] += 1
        if m not in meet_of[v1] or m not in meet_of[v2]:
            viol.append(Violation(MV_SAME_MEET, f"pair ({v1},{v2}) does not both visit {instance.nodes[m].label}"))
            continue
        n_cross = sum(1 for j in routes[v1].customers if instance.nodes[j].is_customer and instance.owner(j) == 2)
        n_cross += sum(1 for j in routes[v2].customers if instance.nodes[j].is_customer and instance.owner(j) == 1)
        if n_cross < 1:
            viol.append(Violation(MV_PAIR_NEEDS_TRANSFER, f"pair ({v1},{v2}) meets without any transfer"))
        s1 = routes[v1].start[routes[v1].position(m)]
        s2 = routes[v2].start[routes[v2].position(m)]
        if abs(s1 - s2) > instance.costs.max_wait + TIME_TOL:
            viol.append(Violation(MV_SYNC_WAIT, f"pair ({v1},{v2}) service starts {abs(s1 - s2):.3f} apart"))
    for v in range(len(routes)):
        if pair_count[v] != len(meet_of[v]):
            viol.append(Violation(MV_PAIRING, f"{tag(v)} visits {len(meet_of[v])} meet points but has {pair_count[v]} pairings"))

    for j in instance.customers:
        node = instance.nodes[j]
        own_visits = sum(1 for v in counts.get(j, []) if routes[v].company == node.company)
        n_tr = len(tr.get(j, []))
        if n_tr + own_visits != 1:
            viol.append(Violation(MV_TRANSFER_SERVICE, f"customer {node.label}: {n_tr} transfers, {own_visits} own visits"))
        for m in tr.get(j, []):
            for v in counts.get(j, []):
                if not any(m == pm and v in (p1, p2) for p1, p2, pm in ms.pairings):
                    viol.append(Violation(MV_TRANSFER_AT_PAIR, f"{tag(v)} serves {node.label} transferred at unpaired {instance.nodes[m].label}"))
                r = routes[v]
                if r.company != node.company:
                    if not node.shared:
                        viol.append(Violation(EQ20, f"reserved customer {node.label} served by {tag(v)}"))
                    if m not in r.nodes or r.position(j) < r.position(m) or r.start[r.position(j)] < r.start[r.position(m)] - TIME_TOL:
                        viol.append(Violation(MV_EXCHANGE_AFTER_MEET, f"{node.label} before meet point on {tag(v)}"))

    for r in routes:
        _check_route_timing(instance, r, viol)
        _check_route_battery(instance, r, viol)

    energy = sum(instance.c_d * route_distance(instance, r.nodes) for r in routes)
    labor = sum(instance.c_t * r.arrival for r in routes)
    profits = {k: profit_multi(instance, ms, k) for k in COMPANIES}
    threshold_ok = {}
    th = instance.thresholds
    for k, phi in profits.items():
        good = th is None or phi >= th[k - 1] - MONEY_TOL
        if not good:
            viol.append(Violation(EQ2, f"company {k} profit {phi:.4f} below threshold"))
        threshold_ok[k] = good
    return EvalReport(not viol, viol, energy + labor, energy, labor, profits, threshold_ok)


def lift_to_multi(instance: Instance, solution: Solution) -> MultiVehicleSolution:
    """Express a two-vehicle solution in multi-vehicle form."""
    routes = tuple(sorted(solution.routes, key=lambda r: r.company))
    m = solution.meet_point
    transfers = tuple(
        (j, m)
        for r in routes
        for j in r.customers
        if instance.nodes[j].is_customer and instance.owner(j) != r.company
    )
    pairings = ((0, 1, m),) if m is not None else ()
    return MultiVehicleSolution(routes=routes, pairings=pairings, transfers=transfers)


def assemble_solution(
    instance: Instance,
    routes: Mapping[int, Sequence[int]],
    meet_point: Optional[int],
    plans: Mapping[int, Any],
    status: str = FEASIBLE,
    method: str = "",
    info: Optional[dict] = None,
) -> Solution:
    """Build a :class:`Solution` from visit sequences and charging plans."""
    from .charging_lp import arrival_battery, build_route_lp

    vr = []
    for k in sorted(routes):
        nodes = tuple(routes[k])
        plan = plans[k]
        rlp = build_route_lp(instance, nodes, k)
        battery = tuple(float(b) for b in arrival_battery(rlp, plan.delta)) if instance.electric else ()
        vr.append(
            VehicleRoute(
                company=k,
                nodes=nodes,
                charge=tuple(float(x) for x in plan.delta),
                start=tuple(float(x) for x in plan.start),
                battery=battery,
            )
        )
    sol = Solution(routes=tuple(vr), meet_point=meet_point, status=status, method=method, info=dict(info or {}))
    costs = objective(instance, sol)
    profits = {r.company: company_profit(instance, sol, r.company) for r in vr}
    return Solution(
        routes=sol.routes,
        meet_point=meet_point,
        profits=profits,
        total_cost=costs.total_cost,
        energy_cost=costs.energy_cost,
        labor_cost=costs.labor_cost,
        status=status,
        method=method,
        info=dict(info or {}),
    )
