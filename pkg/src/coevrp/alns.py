"""Adaptive large neighbourhood search for the collaborative problem.

Three nested loops: runs (independent restarts with their own sub-seed),
segments (operator weights are updated after each), iterations (destroy,
repair, re-time, simulated-annealing acceptance).  The run-best solution is
polished by local search at the end of each run.

Search states may violate meet-point synchronisation or profit thresholds;
such states carry a penalty and are never reported as the answer.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, TextIO, Union

import numpy as np
from numba import njit

from .charging_lp import Infeasible, build_route_lp, solve_charging, solve_joint
from .evaluator import assemble_solution, capacity_excess, revenues
from .model import BEST_EFFORT, FEASIBLE, NO_FEASIBLE, Instance, NodeKind, Solution
from .schedule import capacity_may_bind

log = logging.getLogger(__name__)

DESTROY_OPS = ("random_removal", "worst_removal", "related_removal", "route_removal")
REPAIR_OPS = ("greedy_insertion", "regret2_insertion")


@dataclass(frozen=True)
class AlnsConfig:
    removal_fraction: float = 0.3
    iterations_per_segment: int = 100
    segments_per_run: int = 10
    runs: int = 5
    scores: tuple[float, float, float] = (33.0, 13.0, 9.0)
    weight_decay: float = 0.8
    accept_worse: float = 0.05  # relative worsening accepted with probability 1/2 at the start
    cooling: float = 0.995
    sync_penalty: Optional[float] = None  # SEK per minute of excess wait; default 10 * c_t
    threshold_penalty: float = 10.0  # SEK per SEK of profit shortfall
    neighbors: int = 5
    meet_shift: float = 0.2  # chance of moving to a random other meet point before repair
    seed: int = 0
    time_limit: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.removal_fraction < 1.0:
            raise ValueError("removal_fraction must lie in (0, 1)")
        for name in ("iterations_per_segment", "segments_per_run", "runs", "neighbors"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.weight_decay <= 1.0:
            raise ValueError("weight_decay must lie in [0, 1]")
        s1, s2, s3 = self.scores
        if not s1 > s2 > s3 >= 0:
            raise ValueError("scores must satisfy s1 > s2 > s3 >= 0")
        if not 0.0 < self.cooling <= 1.0:
            raise ValueError("cooling must lie in (0, 1]")
        if not 0.0 <= self.meet_shift <= 1.0:
            raise ValueError("meet_shift must lie in [0, 1]")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["scores"] = list(self.scores)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AlnsConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown ALNS config keys: {sorted(unknown)}")
        d = dict(d)
        if "scores" in d:
            d["scores"] = tuple(float(x) for x in d["scores"])
        return cls(**d)


def load_config(path: Union[str, Path]) -> AlnsConfig:
    return AlnsConfig.from_dict(json.loads(Path(path).read_text()))


def save_config(config: AlnsConfig, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=1))


# -- operator bank -------------------------------------------------------------


@dataclass
class OperatorBank:
    destroy: dict[str, float] = field(default_factory=lambda: {op: 1.0 for op in DESTROY_OPS})
    repair: dict[str, float] = field(default_factory=lambda: {op: 1.0 for op in REPAIR_OPS})
    scores: dict[str, float] = field(default_factory=dict)
    uses: dict[str, int] = field(default_factory=dict)

    def probabilities(self, kind: str) -> dict[str, float]:
        w = self.destroy if kind == "destroy" else self.repair
        total = sum(w.values())
        return {op: v / total for op, v in w.items()}

    def pick(self, kind: str, rng: np.random.Generator) -> str:
        # same draw as rng.choice(len(ops), p=probs), without its validation overhead
        w = self.destroy if kind == "destroy" else self.repair
        ops = list(w)
        cdf = np.cumsum(np.fromiter(w.values(), float))
        cdf /= cdf[-1]
        idx = int(np.searchsorted(cdf, rng.random(), side="right"))
        return ops[min(idx, len(ops) - 1)]

    def record(self, op: str, score: float) -> None:
        self.uses[op] = self.uses.get(op, 0) + 1
        self.scores[op] = self.scores.get(op, 0.0) + score


MIN_WEIGHT = 1e-3
CACHE_LIMIT = 50_000
MEET_PAIRS = 2
RESTART_FRACTION = 0.5
VERIFY_TRIES = 6
CONSOLIDATE_ROUNDS = 5
PENALTY_GROWTH = 2.0  # penalty multiplier step after a mostly infeasible segment
PENALTY_MAX_SCALE = 64.0
PENALTY_MIN_SCALE = 1.0
QUICK_SYNC_CUSTOMERS = 50  # above this, meet-point sync is first fixed by waiting


def update_weights(bank: OperatorBank, decay: float) -> OperatorBank:
    """Blend each weight with its average segment score; unused operators keep their weight."""
    for table in (bank.destroy, bank.repair):
        for op, w in table.items():
            uses = bank.uses.get(op, 0)
            if uses:
                table[op] = max(MIN_WEIGHT, decay * w + (1.0 - decay) * bank.scores.get(op, 0.0) / uses)
    bank.scores.clear()
    bank.uses.clear()
    return bank


# -- route timing helpers --------------------------------------------------------


@njit(cache=True)
def _timing(nodes, tt, svc, early, late):
    """Zero-charge earliest starts, latest feasible starts and suffix waiting."""
    n = nodes.size
    a = np.empty(n)
    a[0] = early[nodes[0]]
    wait = np.zeros(n)
    for p in range(1, n):
        i, j = nodes[p - 1], nodes[p]
        arr = a[p - 1] + svc[i] + tt[i, j]
        a[p] = max(arr, early[j])
        wait[p] = a[p] - arr
    z = np.empty(n)
    z[n - 1] = late[nodes[n - 1]]
    for p in range(n - 2, -1, -1):
        i, j = nodes[p], nodes[p + 1]
        z[p] = min(late[i], z[p + 1] - svc[i] - tt[i, j])
    ws = np.zeros(n + 1)
    for p in range(n - 1, -1, -1):
        ws[p] = ws[p + 1] + wait[p]
    return a, z, ws


@dataclass
class _RouteInfo:
    nodes: np.ndarray
    a: np.ndarray
    z: np.ndarray
    ws: np.ndarray


class Context:
    """Instance data and caches shared by all search components."""

    def __init__(self, instance: Instance, config: AlnsConfig):
        self.inst = instance
        self.config = config
        n = instance.n_nodes
        self.D = np.where(np.isfinite(instance.distance), instance.distance, np.inf)
        self.tt = [instance.tt(1), instance.tt(2)]
        self.svc = np.array([nd.service_time for nd in instance.nodes], dtype=float)
        win = [instance.window(i) for i in range(n)]
        self.early = np.array([w[0] for w in win], dtype=float)
        self.late = np.array([w[1] for w in win], dtype=float)
        self.cd = instance.c_d
        self.ct = instance.c_t
        self.owner = [instance.owner(i) for i in range(n)]
        self.shared = [instance.nodes[i].shared for i in range(n)]
        self.is_customer = [instance.nodes[i].is_customer for i in range(n)]
        self.sync_penalty = config.sync_penalty if config.sync_penalty is not None else 10.0 * instance.c_t
        self.threshold_penalty = config.threshold_penalty
        self.thresholds = instance.thresholds
        self.max_wait = instance.costs.max_wait
        self.scale = 1.0  # adaptive multiplier on both penalties
        self.quick_sync = len(instance.customers) > QUICK_SYNC_CUSTOMERS
        order = np.argsort(self.D + np.diag(np.full(n, np.inf)), axis=1, kind="stable")
        self.nearest = order
        self.plan_cache: dict = {}
        self.joint_cache: dict = {}
        self.evals = 0
        self.capacity_binds = capacity_may_bind(instance)

    def plan(self, k: int, route: tuple):
        key = (k, route)
        hit = self.plan_cache.get(key)
        if hit is None:
            if len(self.plan_cache) > CACHE_LIMIT:
                self.plan_cache.clear()
            hit = solve_charging(build_route_lp(self.inst, route, k))
            self.plan_cache[key] = hit
        return hit

    def info(self, k: int, route) -> _RouteInfo:
        nodes = np.asarray(route, dtype=np.int64)
        a, z, ws = _timing(nodes, self.tt[k - 1], self.svc, self.early, self.late)
        return _RouteInfo(nodes, a, z, ws)

    def distance(self, route) -> float:
        r = np.asarray(route)
        return float(self.D[r[:-1], r[1:]].sum())


# -- states --------------------------------------------------------------------


@dataclass
class State:
    """Visit sequences (depot ... depot) per company and the shared meet point."""

    routes: dict[int, list[int]]
    meet_point: Optional[int]
    cost: float = math.inf  # penalised objective
    feasible: bool = False
    true_cost: float = math.inf
    plans: Optional[dict] = None
    sync_excess: float = 0.0  # minutes beyond the meet-point tolerance
    shortfall: float = 0.0  # SEK below the profit thresholds

    def copy(self) -> "State":
        return State({k: list(r) for k, r in self.routes.items()}, self.meet_point)

    def key(self) -> tuple:
        return (self.meet_point,) + tuple(tuple(self.routes[k]) for k in sorted(self.routes))


@dataclass
class PartialSolution:
    state: State
    removed: list[int]
    emptied: bool = False  # a route lost all of its customers


def evaluate(ctx: Context, state: State) -> State:
    """Fill in cost, feasibility and charging plans; infeasible timing gives ``inf``."""
    ctx.evals += 1
    routes = {k: tuple(r) for k, r in state.routes.items()}
    plans = {}
    dist = {}
    for k, r in routes.items():
        plan = ctx.plan(k, r)
        if not plan.feasible:
            state.cost = state.true_cost = math.inf
            state.feasible = False
            state.plans = None
            return state
        plans[k] = plan
        dist[k] = ctx.distance(r)
    if ctx.capacity_binds and capacity_excess(ctx.inst, routes) > 1e-9:
        state.cost = state.true_cost = math.inf
        state.feasible = False
        state.plans = None
        return state
    base = sum(ctx.cd * dist[k] + ctx.ct * plans[k].T for k in routes)
    m = state.meet_point
    if m is None:
        state.cost = state.true_cost = base
        state.feasible = True
        state.plans = plans
        return state
    pos = {k: routes[k].index(m) for k in routes}
    gap = abs(plans[1].start[pos[1]] - plans[2].start[pos[2]])
    shortfall = 0.0
    caps = None
    if ctx.thresholds is not None:
        rev = revenues(ctx.inst, routes, m)
        caps = []
        for k in (1, 2):
            phi = rev[k] - ctx.cd * dist[k] - ctx.ct * plans[k].T
            shortfall += max(0.0, ctx.thresholds[k - 1] - phi)
            caps.append((rev[k] - ctx.cd * dist[k] - ctx.thresholds[k - 1]) / ctx.ct)
    if gap <= ctx.max_wait + 1e-9 and shortfall <= 1e-9:
        state.cost = state.true_cost = base
        state.feasible = True
        state.plans = plans
        return state
    key = (m, routes[1], routes[2])
    joint = ctx.joint_cache.get(key)
    if joint is None:
        if caps is not None and min(caps) < 0:
            joint = Infeasible("threshold-infeasible")
        else:
            rl = [build_route_lp(ctx.inst, routes[k], k) for k in (1, 2)]
            joint = solve_joint(rl, [pos[1], pos[2]], ctx.max_wait, caps, quick=ctx.quick_sync)
        if len(ctx.joint_cache) > CACHE_LIMIT:
            ctx.joint_cache.clear()
        ctx.joint_cache[key] = joint
    if not isinstance(joint, Infeasible):
        jp = dict(zip((1, 2), joint))
        state.true_cost = sum(ctx.cd * dist[k] + ctx.ct * jp[k].T for k in routes)
        state.cost = state.true_cost
        state.feasible = True
        state.plans = jp
        return state
    state.true_cost = base
    state.sync_excess = max(0.0, gap - ctx.max_wait)
    state.shortfall = shortfall
    state.feasible = False
    state.plans = plans
    return rescore(ctx, state)


def rescore(ctx: Context, state: State) -> State:
    """Recompute the penalised cost of an infeasible state under the current penalty weights."""
    if not state.feasible and state.plans is not None and math.isfinite(state.true_cost):
        state.cost = state.true_cost + ctx.scale * (
            ctx.sync_penalty * state.sync_excess + ctx.threshold_penalty * state.shortfall
        )
    return state


def to_solution(ctx: Context, state: State, status: str = FEASIBLE, method: str = "alns") -> Solution:
    plans = state.plans
    if plans is None:
        raise ValueError("state has no timing")
    return assemble_solution(
        ctx.inst, {k: tuple(r) for k, r in state.routes.items()}, state.meet_point, plans, status=status, method=method
    )


def from_solution(solution: Solution) -> State:
    return State({r.company: list(r.nodes) for r in solution.routes}, solution.meet_point)


# -- insertion --------------------------------------------------------------------


def _allowed_routes(ctx: Context, state: State, j: int) -> list[int]:
    owner = ctx.owner[j]
    out = [owner] if owner in state.routes else []
    if state.meet_point is not None and ctx.shared[j]:
        out.append(3 - owner)
    return out




def route_options(ctx: Context, state: State, info: dict, j: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Estimated costs and indices of every feasible position for ``j`` in route ``k``.

    Costs use zero-charge timing: added distance plus the completion delay
    left over once downstream waiting has absorbed the shift.  The
    partner's customers may only follow the meet point.
    """
    ri = info[k]
    first = 0
    if ctx.owner[j] != k:
        first = int(np.nonzero(ri.nodes == state.meet_point)[0][0])
    cost, pos, start = _insertion_kernel(
        ri.nodes, ri.a, ri.z, ri.ws, first, ri.nodes.size - 1, j,
        ctx.D, ctx.tt[k - 1], ctx.svc, ctx.early, ctx.late, ctx.cd, ctx.ct,
    )
    if state.meet_point is not None and len(info) == 2 and pos.size:
        cost = _sync_adjusted(ctx, k, info, state.meet_point, j, cost, pos, start)
    return cost, pos


def insertion_costs(ctx: Context, state: State, info: dict, j: int, only: Optional[int] = None) -> list:
    """All feasible positions for ``j`` as ``(delta, company, pos)``; ``pos`` is the index ``j`` will take."""
    out = []
    for k in _allowed_routes(ctx, state, j):
        if only is not None and k != only:
            continue
        cost, pos = route_options(ctx, state, info, j, k)
        out.extend(zip(cost.tolist(), [k] * pos.size, pos.tolist()))
    return out


def _sync_adjusted(ctx: Context, k: int, info: dict, m: int, j: int, cost, pos, start):
    """Re-price positions ahead of the meet point: a later arrival there may make
    the partner wait, while slack this route already spends waiting absorbs it."""
    ri, ro = info[k], info[3 - k]
    q = int(np.nonzero(ri.nodes == m)[0][0])
    qo = int(np.nonzero(ro.nodes == m)[0][0])
    return _sync_kernel(
        cost, pos, start, ri.nodes, ri.a, ri.ws, q, ro.a[qo], ro.ws[qo + 1], j,
        ctx.tt[k - 1], ctx.svc, ctx.early, ctx.max_wait, ctx.ct,
    )


@njit(cache=True)
def _sync_kernel(cost, pos, start, nodes, a, ws, q, ao, wso, j, tt, svc, early, w, ct):
    out = cost.copy()
    ak = a[q]
    own0 = max(ak, ao - w)
    partner0 = max(ao, ak - w)
    for c in range(pos.size):
        p = pos[c]
        if p > q:
            continue
        nx = nodes[p]
        new_next = max(early[nx], start[c] + svc[j] + tt[j, nx])
        shift = max(0.0, new_next - a[p])
        old_end = max(0.0, shift - ws[p + 1])
        shift_m = max(0.0, shift - (ws[p + 1] - ws[q + 1]))
        own = max(ak + shift_m, ao - w) - own0
        partner = max(ao, ak + shift_m - w) - partner0
        new_end = max(0.0, own - ws[q + 1]) + max(0.0, partner - wso)
        out[c] += ct * (new_end - old_end)
    return out


@njit(cache=True)
def _insertion_kernel(nodes, a, z, ws, first, stop, j, D, tt, svc, early, late, cd, ct):
    """Zero-charge cost, index and start time of ``j`` after each position in ``[first, stop)``."""
    n = nodes.size
    cost = np.empty(n)
    pos = np.empty(n, dtype=np.int64)
    start = np.empty(n)
    c = 0
    for p in range(first, stop):
        i, nx = nodes[p], nodes[p + 1]
        arr = max(early[j], a[p] + svc[i] + tt[i, j])
        if arr > late[j] + 1e-9:
            continue
        new_next = max(early[nx], arr + svc[j] + tt[j, nx])
        if new_next > z[p + 1] + 1e-9:
            continue
        dd = D[i, j] + D[j, nx] - D[i, nx]
        if not np.isfinite(dd):
            continue
        shift = max(0.0, new_next - a[p + 1])
        endshift = max(0.0, shift - ws[p + 2])
        cost[c] = cd * dd + ct * endshift
        pos[c] = p + 1
        start[c] = arr
        c += 1
    return cost[:c], pos[:c], start[:c]


def _best_two(options: list) -> tuple:
    best = second = (math.inf, -1, -1)
    for o in options:
        if o < best:
            best, second = o, best
        elif o < second:
            second = o
    return best, second


@njit(cache=True)
def _batch_best_two(nodes, a, z, ws, js, firsts, sync, q, ao, wso, D, tt, svc, early, late, cd, ct, w):
    """Two cheapest positions per customer in ``js`` (``inf``/-1 when absent).

    Same pricing as ``_insertion_kernel`` followed by the sync correction,
    with ties going to the earlier position.
    """
    n = nodes.size
    m = js.size
    c1 = np.full(m, np.inf)
    c2 = np.full(m, np.inf)
    p1 = np.full(m, -1, dtype=np.int64)
    p2 = np.full(m, -1, dtype=np.int64)
    ak = a[q] if sync else 0.0
    own0 = max(ak, ao - w)
    partner0 = max(ao, ak - w)
    for t in range(m):
        j = js[t]
        for p in range(firsts[t], n - 1):
            i, nx = nodes[p], nodes[p + 1]
            arr = max(early[j], a[p] + svc[i] + tt[i, j])
            if arr > late[j] + 1e-9:
                continue
            new_next = max(early[nx], arr + svc[j] + tt[j, nx])
            if new_next > z[p + 1] + 1e-9:
                continue
            dd = D[i, j] + D[j, nx] - D[i, nx]
            if not np.isfinite(dd):
                continue
            shift = max(0.0, new_next - a[p + 1])
            endshift = max(0.0, shift - ws[p + 2])
            cost = cd * dd + ct * endshift
            if sync and p + 1 <= q:
                shift_m = max(0.0, shift - (ws[p + 2] - ws[q + 1]))
                own = max(ak + shift_m, ao - w) - own0
                partner = max(ao, ak + shift_m - w) - partner0
                cost += ct * (max(0.0, own - ws[q + 1]) + max(0.0, partner - wso) - endshift)
            if cost < c1[t]:
                c2[t], p2[t] = c1[t], p1[t]
                c1[t], p1[t] = cost, p + 1
            elif cost < c2[t]:
                c2[t], p2[t] = cost, p + 1
    return c1, p1, c2, p2


def _route_tops(ctx: Context, state: State, info: dict, k: int, js: list[int]) -> dict[int, list]:
    """Best two ``(delta, k, pos)`` options in route ``k`` for each customer of ``js``."""
    if not js:
        return {}
    ri = info[k]
    m = state.meet_point
    q = int(np.nonzero(ri.nodes == m)[0][0]) if m is not None else 0
    firsts = np.array([0 if ctx.owner[j] == k else q for j in js], dtype=np.int64)
    sync = m is not None and len(info) == 2
    ao = wso = 0.0
    if sync:
        ro = info[3 - k]
        qo = int(np.nonzero(ro.nodes == m)[0][0])
        ao, wso = float(ro.a[qo]), float(ro.ws[qo + 1])
    c1, p1, c2, p2 = _batch_best_two(
        ri.nodes, ri.a, ri.z, ri.ws, np.array(js, dtype=np.int64), firsts, sync, q, ao, wso,
        ctx.D, ctx.tt[k - 1], ctx.svc, ctx.early, ctx.late, ctx.cd, ctx.ct, ctx.max_wait,
    )
    out = {}
    for t, j in enumerate(js):
        top = []
        if p1[t] >= 0:
            top.append((float(c1[t]), k, int(p1[t])))
        if p2[t] >= 0:
            top.append((float(c2[t]), k, int(p2[t])))
        out[j] = top
    return out


def repair(ctx: Context, partial: PartialSolution, operator: str, rng: np.random.Generator) -> Optional[State]:
    """Reinsert removed customers; ``None`` when some customer fits nowhere.

    Greedy insertion places the globally cheapest customer first; regret-2
    places the customer that would lose most by waiting for its second-best
    position (a customer with a single option has infinite regret).
    """
    if operator not in REPAIR_OPS:
        raise ValueError(f"unknown repair operator {operator!r}")
    state = _repair(ctx, partial, operator, verify=False)
    if state is not None and ctx.inst.electric and not _routes_chargeable(ctx, state):
        # zero-charge estimates missed the charging detours; redo with per-route checks
        state = _repair(ctx, partial, operator, verify=True)
    return state


def _routes_chargeable(ctx: Context, state: State) -> bool:
    return not any(isinstance(ctx.plan(k, tuple(r)), Infeasible) for k, r in state.routes.items())


def _repair(ctx: Context, partial: PartialSolution, operator: str, verify: bool) -> Optional[State]:
    state = partial.state.copy()
    pending = list(partial.removed)
    info = {k: ctx.info(k, r) for k, r in state.routes.items()}
    allowed = {j: _allowed_routes(ctx, state, j) for j in pending}
    # per customer and route: the two cheapest options
    tops: dict[int, dict[int, list]] = {j: {} for j in pending}
    for k in state.routes:
        for j, top in _route_tops(ctx, state, info, k, [j for j in pending if k in allowed[j]]).items():
            tops[j][k] = top
    while pending:
        choice = None
        best_score = None
        for j in pending:
            b1, b2 = _best_two([o for top in tops[j].values() for o in top])
            if b1[1] < 0:
                return None
            if operator == "regret2_insertion":
                score = (b2[0] - b1[0], -b1[0], -j)
            else:
                score = (-b1[0], -j)
            if best_score is None or score > best_score:
                best_score, choice = score, (j, b1)
        j, (_, k, pos) = choice
        if verify:
            for _, k2, p2 in sorted(insertion_costs(ctx, state, info, j))[:VERIFY_TRIES]:
                trial = state.routes[k2][:p2] + [j] + state.routes[k2][p2:]
                if not isinstance(ctx.plan(k2, tuple(trial)), Infeasible):
                    k, pos = k2, p2
                    break
        state.routes[k].insert(pos, j)
        pending.remove(j)
        del tops[j]
        info[k] = ctx.info(k, state.routes[k])
        for q, top in _route_tops(ctx, state, info, k, [q for q in pending if k in allowed[q]]).items():
            tops[q][k] = top
    return state


# -- removal ----------------------------------------------------------------------


def removal_count(n_customers: int, rho: float) -> int:
    return max(1, min(n_customers, math.ceil(rho * n_customers - 1e-9)))


def _customers(ctx: Context, state: State) -> list[int]:
    return [j for r in state.routes.values() for j in r[1:-1] if ctx.is_customer[j]]


def removal_savings(ctx: Context, state: State) -> dict[int, float]:
    """Distance-and-travel-time saved by dropping each customer from its route."""
    out = {}
    for k, r in state.routes.items():
        tt = ctx.tt[k - 1]
        for p in range(1, len(r) - 1):
            j = r[p]
            if not ctx.is_customer[j]:
                continue
            i, nx = r[p - 1], r[p + 1]
            dd = ctx.D[i, j] + ctx.D[j, nx] - ctx.D[i, nx]
            dt = tt[i, j] + ctx.svc[j] + tt[j, nx] - tt[i, nx]
            out[j] = ctx.cd * dd + ctx.ct * dt
    return out


def destroy(ctx: Context, state: State, operator: str, rho: float, rng: np.random.Generator) -> PartialSolution:
    """Remove ``ceil(rho * |customers|)`` customers; depots and the meet point stay."""
    custs = _customers(ctx, state)
    q = removal_count(len(custs), rho)
    if operator == "random_removal":
        removed = [custs[i] for i in rng.choice(len(custs), size=q, replace=False)]
    elif operator == "worst_removal":
        sav = removal_savings(ctx, state)
        order = sorted(custs, key=lambda j: (-sav[j], j))
        removed = []
        while len(removed) < q:
            # bias towards the worst while keeping some randomness
            idx = int(len(order) * rng.random() ** 3)
            removed.append(order.pop(idx))
    elif operator == "related_removal":
        seed = custs[int(rng.integers(len(custs)))]
        pool = set(custs)
        removed = [seed]
        for j in ctx.nearest[seed]:
            if len(removed) >= q:
                break
            if j in pool and j != seed:
                removed.append(int(j))
    elif operator == "route_removal":
        # empty (or thin out) the lighter route: reaches solutions where one vehicle only meets
        counts = {k: [j for j in r[1:-1] if ctx.is_customer[j]] for k, r in state.routes.items()}
        k = min(counts, key=lambda c: (len(counts[c]), c))
        pool = counts[k] or custs
        take = min(q, len(pool))
        removed = [pool[i] for i in rng.choice(len(pool), size=take, replace=False)]
    else:
        raise ValueError(f"unknown destroy operator {operator!r}")
    out = state.copy()
    gone = set(removed)
    for k in out.routes:
        out.routes[k] = [j for j in out.routes[k] if j not in gone]
    emptied = any(
        not any(ctx.is_customer[j] for j in out.routes[k]) and any(ctx.is_customer[j] for j in state.routes[k])
        for k in out.routes
    )
    return PartialSolution(out, removed, emptied)


# -- meet point --------------------------------------------------------------------


def _with_meet(state: State, m: int) -> Optional[State]:
    out = state.copy()
    old = state.meet_point
    for k in out.routes:
        out.routes[k] = [m if j == old else j for j in out.routes[k]]
    out.meet_point = m
    return out


def _replaced_meet(ctx: Context, state: State, m: int, top: int = MEET_PAIRS) -> list[State]:
    """States with ``m`` re-placed in both routes, ahead of all partner customers.

    Position pairs are ranked by zero-charge insertion cost plus the labor
    of the wait that synchronisation would force beyond the allowed gap.
    """
    bases, opts = {}, {}
    for k, r in state.routes.items():
        base = [j for j in r if j != state.meet_point]
        foreign = [p for p, j in enumerate(base) if ctx.is_customer[j] and ctx.owner[j] != k]
        cost, pos, start = _meet_options(ctx, k, base, m, foreign[0] if foreign else None)
        if cost.size == 0:
            return []
        bases[k], opts[k] = base, (cost, pos, start)
    (c1, p1, s1), (c2, p2, s2) = opts[1], opts[2]
    gap = np.maximum(0.0, np.abs(s1[:, None] - s2[None, :]) - ctx.max_wait)
    score = c1[:, None] + c2[None, :] + ctx.ct * gap
    order = np.argsort(score, axis=None, kind="stable")[:top]
    out = []
    for flat in order:
        i, j = divmod(int(flat), score.shape[1])
        routes = {
            1: bases[1][: p1[i]] + [m] + bases[1][p1[i] :],
            2: bases[2][: p2[j]] + [m] + bases[2][p2[j] :],
        }
        out.append(State(routes, m))
    return out


def shift_meet_point(ctx: Context, partial: PartialSolution, meets: list[int], rng: np.random.Generator) -> PartialSolution:
    """Move a destroyed state to a random other meet point so repair builds around it."""
    state = partial.state
    m = meets[int(rng.integers(len(meets) - 1))]
    if m == state.meet_point:
        m = meets[-1]
    placed = _replaced_meet(ctx, state, m, top=1)
    return PartialSolution(placed[0] if placed else _with_meet(state, m), partial.removed, partial.emptied)


def best_meet_point(ctx: Context, state: State) -> State:
    """Try every meet point, both at the current positions and re-placed, and keep the best."""
    evaluate(ctx, state)
    if state.meet_point is None:
        return state
    best = state
    for m in ctx.inst.meet_points:
        cands = [] if m == state.meet_point else [_with_meet(state, m)]
        cands += [c for c in _replaced_meet(ctx, state, m) if c.key() != state.key()]
        for cand in cands:
            cand = evaluate(ctx, cand)
            if cand.cost < best.cost - 1e-9:
                best = cand
    return best


# -- construction --------------------------------------------------------------------


def _nearest_neighbor(ctx: Context, k: int, customers: list[int], order_key=None) -> Optional[list[int]]:
    depot = ctx.inst.depot(k)
    tt = ctx.tt[k - 1]
    route = [depot]
    t = ctx.early[depot]
    left = list(customers)
    while left:
        i = route[-1]
        best = None
        cands = sorted(left, key=order_key) if order_key else left
        for j in cands:
            if not math.isfinite(ctx.D[i, j]):
                continue
            s = max(t + ctx.svc[i] + tt[i, j], ctx.early[j])
            if s > ctx.late[j]:
                continue
            key = (0.0 if order_key else ctx.D[i, j], order_key(j) if order_key else j)
            if best is None or key < best[0]:
                best = (key, j, s)
            if order_key:
                break
        if best is None:
            return None
        _, j, t = best
        route.append(j)
        left.remove(j)
    route.append(depot)
    info = ctx.info(k, route)
    if np.any(info.a > ctx.late[info.nodes] + 1e-9):
        return None
    return route


def _cheapest_construction(ctx: Context, k: int, customers: list[int]) -> Optional[list[int]]:
    """Insert customers by increasing deadline at their cheapest feasible position."""
    depot = ctx.inst.depot(k)
    state = State({k: [depot, depot]}, None)
    for j in sorted(customers, key=lambda c: (ctx.late[c], ctx.early[c], c)):
        opts = insertion_costs(ctx, state, {k: ctx.info(k, state.routes[k])}, j)
        if not opts:
            return None
        _, _, pos = min(opts)
        state.routes[k].insert(pos, j)
    return state.routes[k]


def _own_route(ctx: Context, k: int) -> list[int]:
    own = list(ctx.inst.customers_of(k))
    for attempt in (
        lambda: _nearest_neighbor(ctx, k, own),
        lambda: _nearest_neighbor(ctx, k, own, order_key=lambda j: (ctx.late[j], ctx.early[j], j)),
        lambda: _cheapest_construction(ctx, k, own),
    ):
        route = attempt()
        if route is not None:
            return route
    raise RuntimeError(
        f"no time-window-feasible start route for company {k}; "
        "try the exact solver or relax the time windows"
    )


def _meet_options(ctx: Context, k: int, route: list[int], m: int, last: Optional[int] = None):
    """Zero-charge cost, index and start time of every position for ``m``; ``last`` caps the index."""
    ri = ctx.info(k, route)
    stop = ri.nodes.size - 1 if last is None else min(last, ri.nodes.size - 1)
    return _insertion_kernel(
        ri.nodes, ri.a, ri.z, ri.ws, 0, stop, m, ctx.D, ctx.tt[k - 1], ctx.svc, ctx.early, ctx.late, ctx.cd, ctx.ct
    )


def _insert_meet(
    ctx: Context, k: int, route: list[int], m: int, last: Optional[int] = None
) -> Optional[tuple[float, list[int]]]:
    """Cheapest zero-charge position for ``m``."""
    cost, pos, _ = _meet_options(ctx, k, route, m, last)
    if cost.size == 0:
        return None
    p = int(np.argmin(cost))
    return float(cost[p]), route[: pos[p]] + [m] + route[pos[p] :]


def initial_solution(instance: Instance, seed: int = 0, config: Optional[AlnsConfig] = None, ctx: Optional[Context] = None) -> State:
    """Nearest-neighbour routes over own customers plus the cheapest meet-point detour.

    Deterministic: ``seed`` is accepted for interface symmetry but the
    construction uses no randomness.
    """
    ctx = ctx or Context(instance, config or AlnsConfig(seed=seed))
    routes = {k: _own_route(ctx, k) for k in (1, 2)}
    best = None
    for m in instance.meet_points:
        parts = [_insert_meet(ctx, k, routes[k], m) for k in (1, 2)]
        if any(p is None for p in parts):
            continue
        total = parts[0][0] + parts[1][0]
        if best is None or total < best[0] - 1e-9:
            best = (total, m, {1: parts[0][1], 2: parts[1][1]})
    if best is None:
        raise RuntimeError("no meet point fits both start routes; try the exact solver")
    return evaluate(ctx, State(best[2], best[1]))


def initial_noncollab(ctx: Context, company: int) -> State:
    return evaluate(ctx, State({company: _own_route(ctx, company)}, None))


# -- main loop ----------------------------------------------------------------------


def perturbed_start(ctx: Context, init: State, rng: np.random.Generator, fraction: float = RESTART_FRACTION) -> State:
    """Random half of the customers pulled out and reinserted: a cheap diverse start for a later run."""
    if not _customers(ctx, init):
        return init
    partial = destroy(ctx, init, "random_removal", fraction, rng)
    meets = list(ctx.inst.meet_points)
    if len(meets) > 1 and init.meet_point is not None:
        partial = shift_meet_point(ctx, partial, meets, rng)
    op = REPAIR_OPS[int(rng.integers(len(REPAIR_OPS)))]
    cand = repair(ctx, partial, op, rng)
    if cand is None:
        return init
    cand = best_meet_point(ctx, cand)
    return cand if cand is not None and math.isfinite(cand.cost) else init


def _start_temperature(cost: float, accept_worse: float) -> float:
    """Temperature at which a ``accept_worse`` relative worsening is accepted with probability 1/2."""
    return max(accept_worse * cost, 1e-9) / math.log(2.0)


def _search(
    ctx: Context,
    init: State,
    progress: Optional[TextIO],
    method: str,
) -> Union[Solution, Infeasible]:
    from .local_search import SMALL_ROUTES, local_search

    cfg = ctx.config
    n_customers = len(_customers(ctx, init))
    deadline = None if cfg.time_limit is None else time.monotonic() + cfg.time_limit
    s1, s2, s3 = cfg.scores
    best: Optional[State] = init if init.feasible else None
    best_penalised = init
    if progress is not None:
        progress.write("iter,segment,run,best_cost\n")
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.runs)
    meets = list(ctx.inst.meet_points)
    timed_out = False
    for run in range(cfg.runs):
        rng = np.random.default_rng(seeds[run])
        bank = OperatorBank()
        current = init if run == 0 else perturbed_start(ctx, init, rng)
        ctx.scale = 1.0
        for st in (current, best_penalised):
            rescore(ctx, st)
        run_best = current
        if current.feasible and (best is None or current.true_cost < best.true_cost - 1e-9):
            best = current
        temp = _start_temperature(current.cost if math.isfinite(current.cost) else 1.0, cfg.accept_worse)
        it = 0
        for seg in range(cfg.segments_per_run):
            feasible_steps = 0
            for _ in range(cfg.iterations_per_segment):
                if deadline is not None and time.monotonic() > deadline:
                    timed_out = True
                    break
                it += 1
                d_op = bank.pick("destroy", rng)
                r_op = bank.pick("repair", rng)
                partial = destroy(ctx, current, d_op, cfg.removal_fraction, rng)
                if len(meets) > 1 and current.meet_point is not None and rng.random() < cfg.meet_shift:
                    partial = shift_meet_point(ctx, partial, meets, rng)
                cand = repair(ctx, partial, r_op, rng)
                u = rng.random()
                score = 0.0
                if cand is not None:
                    cand = best_meet_point(ctx, cand)
                if cand is not None and partial.emptied and n_customers <= SMALL_ROUTES and math.isfinite(cand.cost):
                    # everything moved onto one vehicle: its merged route needs reordering
                    cand = local_search(ctx, cand, max_rounds=CONSOLIDATE_ROUNDS)
                if cand is not None and math.isfinite(cand.cost):
                    if cand.feasible and (best is None or cand.true_cost < best.true_cost - 1e-9):
                        best = cand
                        score = s1
                    elif cand.cost < current.cost - 1e-9:
                        score = s2
                    if cand.cost < run_best.cost - 1e-9:
                        run_best = cand
                    if cand.cost < best_penalised.cost - 1e-9:
                        best_penalised = cand
                    delta = cand.cost - current.cost
                    if delta < 0 or u < math.exp(-delta / temp):
                        if delta >= 0 and score == 0.0:
                            score = s3
                        current = cand
                feasible_steps += current.feasible
                bank.record(d_op, score)
                bank.record(r_op, score)
                temp *= cfg.cooling
                if progress is not None:
                    progress.write(f"{it},{seg},{run},{best.true_cost if best else math.inf:.4f}\n")
            update_weights(bank, cfg.weight_decay)
            share = feasible_steps / cfg.iterations_per_segment
            if share < 0.25 and ctx.scale < PENALTY_MAX_SCALE:
                ctx.scale *= PENALTY_GROWTH
            elif share > 0.75 and ctx.scale > PENALTY_MIN_SCALE:
                ctx.scale /= PENALTY_GROWTH
            for st in (current, run_best, best_penalised):
                rescore(ctx, st)
            if timed_out:
                break
        polished = local_search(ctx, best if best is not None and best.cost <= run_best.cost else run_best)
        if polished.feasible and (best is None or polished.true_cost < best.true_cost - 1e-9):
            best = polished
        if polished.cost < best_penalised.cost - 1e-9:
            best_penalised = polished
        log.debug("run %d: best %s evals %d", run, best.true_cost if best else None, ctx.evals)
        if timed_out:
            break
    info = {"evaluations": ctx.evals, "customers": n_customers, "seed": cfg.seed, "timed_out": timed_out}
    if best is not None:
        sol = to_solution(ctx, best, FEASIBLE, method)
        sol.info.update(info)
        return sol
    if best_penalised.plans is None:
        return Infeasible(NO_FEASIBLE)
    sol = to_solution(ctx, best_penalised, NO_FEASIBLE, method)
    sol.info.update(info)
    return sol


def solve_alns(
    instance: Instance, config: AlnsConfig = AlnsConfig(), progress: Optional[TextIO] = None
) -> Union[Solution, Infeasible]:
    """Collaborative solution by ALNS; status is ``no-feasible-solution`` if none was found."""
    ctx = Context(instance, config)
    init = initial_solution(instance, config.seed, config, ctx)
    return _search(ctx, init, progress, "alns")


def solve_noncollab(
    instance: Instance, company: int, config: AlnsConfig = AlnsConfig(), progress: Optional[TextIO] = None
) -> Union[Solution, Infeasible]:
    """Single-company baseline by the same search, without meet point or exchanges."""
    ctx = Context(instance, config)
    try:
        init = initial_noncollab(ctx, company)
    except RuntimeError:
        return Infeasible(NO_FEASIBLE)
    if not instance.customers_of(company):
        return to_solution(ctx, init, FEASIBLE if init.feasible else NO_FEASIBLE, "alns")
    return _search(ctx, init, progress, "alns")
