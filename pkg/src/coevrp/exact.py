"""Exact solver: branch on meet points, depth-first branch-and-bound per branch.

Within a branch the search builds vehicle 1's route node by node, then
vehicle 2's route over whatever customers remain.  Every customer's placement
follows the exchange rules: own customers anywhere, the partner's shared
customers only after the meet point, reserved customers never leave their
owner.  Complete route pairs are priced by the joint charging LP.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .charging_lp import Infeasible, build_route_lp, solve_charging
from .model import BEST_EFFORT, FEASIBLE, NO_FEASIBLE, Instance, NodeKind, Solution
from .schedule import schedule

log = logging.getLogger(__name__)

COST_TOL = 1e-9


@dataclass(frozen=True)
class ExactConfig:
    max_customers: int = 14
    time_limit: Optional[float] = None
    parallel_branches: bool = False
    workers: Optional[int] = None

    def __post_init__(self) -> None:
        if self.max_customers < 1:
            raise ValueError("max_customers must be >= 1")


@dataclass
class BranchResult:
    meet_point: int
    best_solution: Optional[Solution]
    proven_optimal: bool
    lower_bound: float
    nodes_explored: int = 0
    elapsed: float = 0.0


class _Timeout(Exception):
    pass


@dataclass
class _Tables:
    """Per-instance arrays used by the search, as plain Python lists for speed."""

    n: int
    w: list  # w[k][i][j]: c_d*dist + c_t*(service_i + travel_k)
    tt: list
    sp: list  # shortest-path travel times, for admissible window pruning
    dist: list
    service: list
    early: list
    late: list
    charger: list
    min_in: list  # cheapest incoming arc weight, over both vehicles
    battery: list
    battery_min: list
    consumption: list
    electric: bool


def _tables(instance: Instance) -> _Tables:
    n = instance.n_nodes
    D = instance.distance
    service = np.array([nd.service_time for nd in instance.nodes], dtype=float)
    w, tt, sp = [], [], []
    for k in (1, 2):
        t = instance.tt(k)
        wk = instance.c_d * D + instance.c_t * (service[:, None] + t)
        np.fill_diagonal(wk, np.inf)
        w.append(wk.tolist())
        tt.append(t.tolist())
        s = t.copy()
        for via in range(n):
            s = np.minimum(s, s[:, via : via + 1] + s[via : via + 1, :])
        sp.append(s.tolist())
    min_in = np.minimum(np.array(w[0]), np.array(w[1])).min(axis=0)
    windows = [instance.window(i) for i in range(n)]
    return _Tables(
        n=n,
        w=w,
        tt=tt,
        sp=sp,
        dist=D.tolist(),
        service=service.tolist(),
        early=[e for e, _ in windows],
        late=[l for _, l in windows],
        charger=[bool(instance.charge_rate(i)) for i in range(n)],
        min_in=min_in.tolist(),
        battery=[instance.vehicle(k).battery_capacity for k in (1, 2)],
        battery_min=[instance.vehicle(k).battery_min for k in (1, 2)],
        consumption=[instance.vehicle(k).consumption for k in (1, 2)],
        electric=instance.electric,
    )


class _Route:
    """Incremental state of one partially built route."""

    __slots__ = ("nodes", "t", "d", "bmax", "k")

    def __init__(self, k: int, depot: int, tab: _Tables):
        self.k = k
        self.nodes = [depot]
        self.t = tab.early[depot]
        self.d = 0.0
        self.bmax = tab.battery[k - 1]


def _extend(tab: _Tables, r: _Route, j: int) -> Optional[tuple[float, float, float]]:
    """Earliest start, distance and best-case battery after moving to ``j``; None if infeasible."""
    k = r.k - 1
    i = r.nodes[-1]
    arc = tab.dist[i][j]
    if arc == math.inf:
        return None
    t = max(r.t + tab.service[i] + tab.tt[k][i][j], tab.early[j])
    if t > tab.late[j] + 1e-9:
        return None
    b = r.bmax
    if tab.electric:
        # best case: charge to full wherever a charger is available
        if tab.charger[i] and len(r.nodes) > 1:
            b = tab.battery[k]
        b -= tab.consumption[k] * arc
        if b < tab.battery_min[k] - 1e-9:
            return None
    return t, r.d + arc, b


def _reachable(tab: _Tables, r: _Route, required) -> bool:
    """Every required node can still be reached within its window."""
    k = r.k - 1
    i = r.nodes[-1]
    base = r.t + tab.service[i]
    sp = tab.sp[k][i]
    for j in required:
        if base + sp[j] > tab.late[j] + 1e-9:
            return False
    return True


class _Search:
    def __init__(self, instance: Instance, m: int, config: ExactConfig, tab: Optional[_Tables] = None):
        self.inst = instance
        self.m = m
        self.tab = tab or _tables(instance)
        self.deadline = None if config.time_limit is None else time.monotonic() + config.time_limit
        self.best: Optional[Solution] = None
        self.best_key: tuple = (math.inf,)
        self.nodes = 0
        inst = instance
        self.own = {k: set(inst.customers_of(k)) for k in (1, 2)}
        self.reserved = {k: set(inst.reserved_of(k)) for k in (1, 2)}
        self.shared_other = {1: set(inst.shared_of(2)), 2: set(inst.shared_of(1))}
        self.all_customers = set(inst.customers)
        self.cd = inst.c_d
        self.ct = inst.c_t
        self.price = [nd.price for nd in inst.nodes]
        self.keep = {}  # fee share kept by the owner if exchanged at m
        for j in inst.customers:
            try:
                self.keep[j] = inst.alpha(m, j)
            except ValueError:
                self.keep[j] = math.nan
        self.th = inst.thresholds
        self.plan_cache: dict = {}

    def _tick(self) -> None:
        self.nodes += 1
        if self.deadline is not None and self.nodes % 256 == 0 and time.monotonic() > self.deadline:
            raise _Timeout

    def _offer(self, sol: Solution) -> None:
        r1 = tuple(sol.route_of(1).nodes)
        r2 = tuple(sol.route_of(2).nodes)
        key = (sol.total_cost, r1, r2)
        if sol.total_cost < self.best_key[0] - COST_TOL or (
            sol.total_cost <= self.best_key[0] + COST_TOL and key[1:] < self.best_key[1:]
        ):
            self.best, self.best_key = sol, key

    def _pruned(self, bound: float) -> bool:
        return bound > self.best_key[0] + COST_TOL

    # -- vehicle 1 -----------------------------------------------------------

    def run(self) -> None:
        inst, tab = self.inst, self.tab
        r = _Route(1, inst.depot(1), tab)
        self._dfs1(r, set(self.all_customers), False)

    def _bound1(self, r: _Route, open_nodes: set, met: bool) -> float:
        tab = self.tab
        lb = self.cd * r.d + self.ct * r.t
        mi = tab.min_in
        lb += sum(mi[j] for j in open_nodes)
        lb += mi[self.inst.depot(1)] + mi[self.inst.depot(2)] + mi[self.m] * (1 if met else 2)
        return lb

    def _dfs1(self, r: _Route, open_nodes: set, met: bool) -> None:
        self._tick()
        if self._pruned(self._bound1(r, open_nodes, met)):
            return
        required = (self.reserved[1] & open_nodes) | (set() if met else {self.m})
        if not _reachable(self.tab, r, required):
            return
        if self.th is not None and self._profit_ub1(r, open_nodes) < self.th[0] - COST_TOL:
            return
        last = r.nodes[-1]
        cands = []
        for j in open_nodes:
            if j in self.own[1] or (met and j in self.shared_other[1]):
                cands.append(j)
        if not met:
            cands.append(self.m)
        if met and not (self.reserved[1] & open_nodes):
            cands.append(self.inst.depot(1))
        w = self.tab.w[0][last]
        cands.sort(key=lambda j: (w[j], j))
        for j in cands:
            step = _extend(self.tab, r, j)
            if step is None:
                continue
            saved = (r.t, r.d, r.bmax)
            r.t, r.d, r.bmax = step
            r.nodes.append(j)
            if j == self.inst.depot(1):
                self._close1(r, open_nodes)
            elif j == self.m:
                self._dfs1(r, open_nodes, True)
            else:
                open_nodes.discard(j)
                self._dfs1(r, open_nodes, met)
                open_nodes.add(j)
            r.nodes.pop()
            r.t, r.d, r.bmax = saved

    def _profit_ub1(self, r: _Route, open_nodes: set) -> float:
        """Best profit vehicle 1's company could still reach from this partial route."""
        p, keep = self.price, self.keep
        rev = sum(p[j] for j in self.own[1])
        for j in r.nodes:
            if j in self.shared_other[1]:
                rev += p[j] * (1.0 - keep[j])
        for j in open_nodes & self.shared_other[1]:
            rev += p[j] * (1.0 - keep[j])
        return rev - self.cd * r.d - self.ct * r.t - self.tab.min_in[self.inst.depot(1)]

    def _revenue(self, k: int, route: Sequence[int], others: set) -> float:
        """Fee income of company ``k`` when its vehicle drives ``route`` and ``others`` go to the partner."""
        p, keep = self.price, self.keep
        rev = 0.0
        for j in route:
            if j in self.own[k]:
                rev += p[j]
            elif j in self.shared_other[k]:
                rev += p[j] * (1.0 - keep[j])
        for j in others & self.own[k]:
            rev += p[j] * keep[j]
        return rev

    def _plan(self, k: int, route: tuple):
        key = (k, route)
        plan = self.plan_cache.get(key)
        if plan is None:
            plan = solve_charging(build_route_lp(self.inst, route, k))
            self.plan_cache[key] = plan
        return plan

    def _close1(self, r: _Route, open_nodes: set) -> None:
        route1 = tuple(r.nodes)
        mi = self.tab.min_in
        rest_lb = sum(mi[j] for j in open_nodes) + mi[self.inst.depot(2)] + mi[self.m]
        if self._pruned(self.cd * r.d + self.ct * r.t + rest_lb):
            return
        rev1 = None
        if self.th is not None:
            rev1 = self._revenue(1, route1, open_nodes)
            if rev1 - self.cd * r.d - self.ct * r.t < self.th[0] - COST_TOL:
                return
        plan = self._plan(1, route1)
        if not plan.feasible:
            return
        cost1 = self.cd * r.d + self.ct * plan.T
        if self._pruned(cost1 + rest_lb):
            return
        if rev1 is not None and rev1 - cost1 < self.th[0] - COST_TOL:
            return
        if self.th is not None:
            self.rev2 = self._revenue(2, tuple(open_nodes), set(route1))
        # vehicle 2 must take every customer vehicle 1 left open
        rest = set(open_nodes)
        r2 = _Route(2, self.inst.depot(2), self.tab)
        self._dfs2(r2, rest, False, route1, cost1)

    # -- vehicle 2 -----------------------------------------------------------

    def _bound2(self, r: _Route, open_nodes: set, met: bool, cost1: float) -> float:
        mi = self.tab.min_in
        lb = cost1 + self.cd * r.d + self.ct * r.t
        lb += sum(mi[j] for j in open_nodes) + mi[self.inst.depot(2)]
        if not met:
            lb += mi[self.m]
        return lb

    def _dfs2(self, r: _Route, open_nodes: set, met: bool, route1: tuple, cost1: float) -> None:
        self._tick()
        lb = self._bound2(r, open_nodes, met, cost1)
        if self._pruned(lb):
            return
        if self.th is not None and self.rev2 - (lb - cost1) < self.th[1] - COST_TOL:
            return
        required = open_nodes | (set() if met else {self.m})
        if not _reachable(self.tab, r, required):
            return
        last = r.nodes[-1]
        cands = [j for j in open_nodes if j in self.own[2] or met]
        if not met:
            cands.append(self.m)
        if met and not open_nodes:
            cands.append(self.inst.depot(2))
        w = self.tab.w[1][last]
        cands.sort(key=lambda j: (w[j], j))
        for j in cands:
            step = _extend(self.tab, r, j)
            if step is None:
                continue
            saved = (r.t, r.d, r.bmax)
            r.t, r.d, r.bmax = step
            r.nodes.append(j)
            if j == self.inst.depot(2):
                self._leaf(route1, tuple(r.nodes), cost1, r)
            elif j == self.m:
                self._dfs2(r, open_nodes, True, route1, cost1)
            else:
                open_nodes.discard(j)
                self._dfs2(r, open_nodes, met, route1, cost1)
                open_nodes.add(j)
            r.nodes.pop()
            r.t, r.d, r.bmax = saved

    def _leaf(self, route1: tuple, route2: tuple, cost1: float, r2: _Route) -> None:
        if self._pruned(cost1 + self.cd * r2.d + self.ct * r2.t):
            return
        plan = self._plan(2, route2)
        if not plan.feasible:
            return
        cost2 = self.cd * r2.d + self.ct * plan.T
        if self._pruned(cost1 + cost2):
            return
        if self.th is not None and self.rev2 - cost2 < self.th[1] - COST_TOL:
            return
        sol = schedule(self.inst, {1: route1, 2: route2}, self.m, method="exact")
        if isinstance(sol, Infeasible):
            return
        self._offer(sol)


def _root_bound(instance: Instance, m: int, tab: _Tables) -> float:
    mi = tab.min_in
    lb = sum(mi[j] for j in instance.customers)
    return lb + mi[instance.depot(1)] + mi[instance.depot(2)] + 2 * mi[m]


def solve_subproblem(instance: Instance, m: int, config: ExactConfig = ExactConfig()) -> BranchResult:
    """Optimal solution with the meet point fixed to ``m``."""
    if instance.nodes[m].kind is not NodeKind.MEET:
        raise ValueError(f"node {m} is not a meet point")
    if len(instance.customers) > config.max_customers:
        raise ValueError(
            f"{len(instance.customers)} customers exceeds max_customers={config.max_customers}"
        )
    t0 = time.monotonic()
    search = _Search(instance, m, config)
    proven = True
    try:
        search.run()
    except _Timeout:
        proven = False
    elapsed = time.monotonic() - t0
    if proven:
        lb = search.best.total_cost if search.best is not None else math.inf
    else:
        lb = _root_bound(instance, m, search.tab)
        if search.best is not None:
            lb = min(lb, search.best.total_cost)
    log.debug("branch m=%s nodes=%d proven=%s %.2fs", m, search.nodes, proven, elapsed)
    return BranchResult(m, search.best, proven, lb, search.nodes, elapsed)


def _branch_worker(args):
    instance, m, config = args
    return solve_subproblem(instance, m, config)


def solve_exact(instance: Instance, config: ExactConfig = ExactConfig()) -> Union[Solution, Infeasible]:
    """Best solution over all meet-point branches.

    Branches are independent; with ``parallel_branches`` they run in a process
    pool.  Ties go to the lowest meet-point index, so the result does not
    depend on execution order.
    """
    mps = list(instance.meet_points)
    jobs = [(instance, m, config) for m in mps]
    if config.parallel_branches and len(mps) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_branch_worker, jobs))
    else:
        results = [_branch_worker(j) for j in jobs]
    return _combine(results)


def _combine(results: list[BranchResult]) -> Union[Solution, Infeasible]:
    best: Optional[BranchResult] = None
    for br in sorted(results, key=lambda b: b.meet_point):
        if br.best_solution is None:
            continue
        if best is None or br.best_solution.total_cost < best.best_solution.total_cost - COST_TOL:
            best = br
    proven = all(br.proven_optimal for br in results)
    info = {
        "nodes_explored": sum(br.nodes_explored for br in results),
        "proven_optimal": proven,
        "branches": {str(br.meet_point): br.lower_bound for br in results},
    }
    if best is None:
        return Infeasible(NO_FEASIBLE if proven else BEST_EFFORT)
    sol = best.best_solution
    return Solution(
        routes=sol.routes,
        meet_point=sol.meet_point,
        profits=sol.profits,
        total_cost=sol.total_cost,
        energy_cost=sol.energy_cost,
        labor_cost=sol.labor_cost,
        status=FEASIBLE if proven else BEST_EFFORT,
        method="exact",
        info=info,
    )


# -- single-company baseline ---------------------------------------------------


def solve_noncollab_exact(
    instance: Instance, company: int, config: ExactConfig = ExactConfig()
) -> Union[Solution, Infeasible]:
    """Optimal route for one company over its own customers, without a meet point."""
    own = set(instance.customers_of(company))
    if len(own) > config.max_customers:
        raise ValueError(f"{len(own)} customers exceeds max_customers={config.max_customers}")
    tab = _tables(instance)
    deadline = None if config.time_limit is None else time.monotonic() + config.time_limit
    depot = instance.depot(company)
    cd, ct = instance.c_d, instance.c_t
    k = company - 1
    mi = np.array(tab.w[k]).min(axis=0).tolist()
    best: list = [math.inf, None, None]
    counter = [0]

    def dfs(r: _Route, open_nodes: set) -> None:
        counter[0] += 1
        if deadline is not None and counter[0] % 256 == 0 and time.monotonic() > deadline:
            raise _Timeout
        lb = cd * r.d + ct * r.t + sum(mi[j] for j in open_nodes) + mi[depot]
        if lb > best[0] + COST_TOL or not _reachable(tab, r, open_nodes):
            return
        last = r.nodes[-1]
        cands = sorted(open_nodes, key=lambda j: (tab.w[k][last][j], j))
        if not open_nodes:
            cands = [depot]
        for j in cands:
            step = _extend(tab, r, j)
            if step is None:
                continue
            saved = (r.t, r.d, r.bmax)
            r.t, r.d, r.bmax = step
            r.nodes.append(j)
            if j == depot:
                if cd * r.d + ct * r.t <= best[0] + COST_TOL:
                    sol = schedule(instance, {company: tuple(r.nodes)}, None, method="exact")
                    if not isinstance(sol, Infeasible):
                        key = tuple(r.nodes)
                        if sol.total_cost < best[0] - COST_TOL or (
                            sol.total_cost <= best[0] + COST_TOL and key < best[2]
                        ):
                            best[:] = [sol.total_cost, sol, key]
            else:
                open_nodes.discard(j)
                dfs(r, open_nodes)
                open_nodes.add(j)
            r.nodes.pop()
            r.t, r.d, r.bmax = saved

    proven = True
    try:
        if own:
            dfs(_Route(company, depot, tab), set(own))
        else:
            sol = schedule(instance, {company: (depot, depot)}, None, method="exact")
            if not isinstance(sol, Infeasible):
                best[:] = [sol.total_cost, sol, ()]
    except _Timeout:
        proven = False
    if best[1] is None:
        return Infeasible(NO_FEASIBLE if proven else BEST_EFFORT)
    sol = best[1]
    return Solution(
        routes=sol.routes,
        meet_point=None,
        profits=sol.profits,
        total_cost=sol.total_cost,
        energy_cost=sol.energy_cost,
        labor_cost=sol.labor_cost,
        status=FEASIBLE if proven else BEST_EFFORT,
        method="exact",
        info={"nodes_explored": counter[0], "proven_optimal": proven},
    )
