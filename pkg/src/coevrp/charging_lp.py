"""Optimal charging amounts and service times for fixed routes.

Given a visiting sequence, energy cost is fixed, so only the labor term
``c_t * T`` remains.  The LP chooses how much to charge where, subject to

* arrival battery never below ``L`` and departure battery never above ``B``
  (cumulative-charge bounds against the zero-charge battery profile),
* ``s[i+1] >= s[i] + st[i] + 60 * delta[i] / r[i] + tt[i]``,
* service-start windows, and ``delta >= 0`` (zero where there is no charger).

Internally service starts are written as ``s = a + u`` where ``a`` is the
earliest zero-charge schedule and ``u >= 0`` the delay caused by charging;
this keeps every timing row's right-hand side non-negative.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from .model import INF, Instance
from numba import njit

from .simplex import linprog, solve_ub

EPS = 1e-9

BATTERY_INFEASIBLE = "battery-infeasible"
TIME_INFEASIBLE = "time-infeasible"
SYNC_INFEASIBLE = "sync-infeasible"
THRESHOLD_INFEASIBLE = "threshold-infeasible"


class ForbiddenArcError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RouteLp:
    sequence: tuple[int, ...]
    bhat: np.ndarray
    travel: np.ndarray
    service: np.ndarray
    early: np.ndarray
    late: np.ndarray
    rates: tuple[Optional[float], ...]
    battery_capacity: float
    battery_min: float
    time_cost: float = 1.0
    electric: bool = True

    @property
    def size(self) -> int:
        return len(self.sequence)

    @property
    def rate_array(self) -> np.ndarray:
        """Charger power per position, 0 where charging is impossible."""
        return np.array([r or 0.0 for r in self.rates], dtype=float)


@dataclass(frozen=True, eq=False)
class ChargingPlan:
    delta: np.ndarray
    start: np.ndarray
    T: float
    labor_cost: float
    feasible: bool = True


@dataclass(frozen=True)
class Infeasible:
    reason: str
    feasible: bool = False


PlanOrInfeasible = Union[ChargingPlan, Infeasible]


def build_route_lp(instance: Instance, route: Sequence[int], company: int) -> RouteLp:
    route = tuple(int(i) for i in route)
    v = instance.vehicle(company)
    dist = instance.distance
    tt = instance.tt(company)
    n = len(route)
    arcs = np.array([dist[a, b] for a, b in zip(route, route[1:])], dtype=float)
    if not np.all(np.isfinite(arcs)):
        bad = [(a, b) for a, b in zip(route, route[1:]) if not math.isfinite(dist[a, b])]
        raise ForbiddenArcError(f"route uses forbidden arc(s) {bad}")
    bhat = np.empty(n)
    bhat[0] = v.battery_capacity
    if n > 1:
        bhat[1:] = v.battery_capacity - v.consumption * np.cumsum(arcs)
    windows = [instance.window(i) for i in route]
    return RouteLp(
        sequence=route,
        bhat=bhat,
        travel=np.array([tt[a, b] for a, b in zip(route, route[1:])], dtype=float),
        service=np.array([instance.nodes[i].service_time for i in route], dtype=float),
        early=np.array([w[0] for w in windows], dtype=float),
        late=np.array([w[1] for w in windows], dtype=float),
        rates=tuple(instance.charge_rate(i) for i in route),
        battery_capacity=v.battery_capacity,
        battery_min=v.battery_min,
        time_cost=instance.c_t,
        electric=instance.electric,
    )


def earliest_times(rlp: RouteLp, delta: Optional[np.ndarray] = None, floor: Optional[dict[int, float]] = None) -> np.ndarray:
    """Earliest service starts given charges, optionally not before ``floor[pos]``."""
    n = rlp.size
    s = np.empty(n)
    t = rlp.early[0]
    for i in range(n):
        if i:
            prev = i - 1
            dwell = rlp.service[prev]
            if delta is not None and delta[prev] > 0:
                dwell += 60.0 * delta[prev] / rlp.rates[prev]
            t = s[prev] + dwell + rlp.travel[prev]
        t = max(t, rlp.early[i])
        if floor and i in floor:
            t = max(t, floor[i])
        s[i] = t
    return s


def charge_requirements(rlp: RouteLp) -> tuple[np.ndarray, np.ndarray]:
    """Lower/upper bounds on cumulative charge after each position.

    ``lo[i]`` is the charge needed by position ``i`` to reach ``i+1`` above
    ``L``; ``hi[i]`` keeps the departure battery at ``i`` within ``B``.
    """
    lo = np.zeros(rlp.size)
    lo[:-1] = rlp.battery_min - rlp.bhat[1:]
    hi = rlp.battery_capacity - rlp.bhat
    return lo, hi


def _chargers(rlp: RouteLp) -> list[int]:
    return [i for i, r in enumerate(rlp.rates[:-1]) if r]


def battery_feasible(rlp: RouteLp) -> bool:
    """Whether some charge vector meets the cumulative battery bounds alone."""
    if not rlp.electric:
        return True
    lo, hi = charge_requirements(rlp)
    chargers = _chargers(rlp)
    nxt = dict(zip(chargers, chargers[1:] + [rlp.size]))
    level = 0.0
    for i in range(rlp.size):
        if i in nxt:
            # charge just enough to cover every position until the next charger;
            # charging late is least restrictive because hi grows along the route
            level = max(level, lo[i : nxt[i]].max())
            if level > hi[i] + EPS:
                return False
        elif lo[i] > level + EPS:
            return False
    return True


def _route_block(rlp: RouteLp, a: np.ndarray):
    """Variables and constraint rows for one route.

    Returns ``(charge_pos, n_vars, rows, rhs)`` where variables are the
    charge amounts at ``charge_pos`` followed by delays ``u[1..n-1]``.
    """
    n = rlp.size
    lo, hi = charge_requirements(rlp)
    deficit = [i for i in range(n - 1) if lo[i] > EPS] if rlp.electric else []
    last_need = deficit[-1] if deficit else -1
    charge_pos = [i for i in _chargers(rlp) if i <= last_need and hi[i] > EPS] if rlp.electric else []
    k = len(charge_pos)
    nv = k + (n - 1)
    ci = {p: j for j, p in enumerate(charge_pos)}

    def u(i):
        return k + i - 1

    rows, rhs = [], []
    for i in range(n - 1):
        row = np.zeros(nv)
        if i > 0:
            row[u(i)] += 1.0
        row[u(i + 1)] -= 1.0
        if i in ci:
            row[ci[i]] = 60.0 / rlp.rates[i]
        rows.append(row)
        rhs.append(a[i + 1] - a[i] - rlp.service[i] - rlp.travel[i])
    for i in range(1, n):
        if math.isfinite(rlp.late[i]):
            row = np.zeros(nv)
            row[u(i)] = 1.0
            rows.append(row)
            rhs.append(rlp.late[i] - a[i])
    for i in deficit:
        row = np.zeros(nv)
        for p in charge_pos:
            if p <= i:
                row[ci[p]] = -1.0
        rows.append(row)
        rhs.append(-lo[i])
    for p in charge_pos:
        row = np.zeros(nv)
        for q in charge_pos:
            if q <= p:
                row[ci[q]] = 1.0
        rows.append(row)
        rhs.append(hi[p])
    return charge_pos, nv, rows, rhs


def _precheck(rlp: RouteLp) -> tuple[Optional[np.ndarray], Optional[Infeasible]]:
    a = earliest_times(rlp)
    if np.any(a > rlp.late + 1e-9):
        return None, Infeasible(TIME_INFEASIBLE)
    if not battery_feasible(rlp):
        return None, Infeasible(BATTERY_INFEASIBLE)
    return a, None


def _zero_plan(rlp: RouteLp, a: np.ndarray) -> ChargingPlan:
    T = float(a[-1])
    return ChargingPlan(np.zeros(rlp.size), a, T, rlp.time_cost * T)


@njit(cache=True)
def _earliest(travel, service, early, delta, rates):
    n = early.size
    s = np.empty(n)
    s[0] = early[0]
    for i in range(1, n):
        p = i - 1
        dwell = service[p]
        if delta[p] > 0.0:
            dwell += 60.0 * delta[p] / rates[p]
        s[i] = max(s[p] + dwell + travel[p], early[i])
    return s


@njit(cache=True)
def _solve_route(bhat, travel, service, early, late, rates, cap, floor_b, electric):
    """Compiled single-route charging LP.

    Returns ``(code, delta, start)`` with code 0 optimal, 1 battery
    infeasible, 2 time infeasible.
    """
    n = early.size
    delta = np.zeros(n)
    a = _earliest(travel, service, early, delta, rates)
    for i in range(n):
        if a[i] > late[i] + 1e-9:
            return 2, delta, a
    if not electric:
        return 0, delta, a
    lo = np.zeros(n)
    for i in range(n - 1):
        lo[i] = floor_b - bhat[i + 1]
    hi = cap - bhat
    last_need = -1
    for i in range(n - 1):
        if lo[i] > EPS:
            last_need = i
    if last_need < 0:
        return 0, delta, a
    # battery-only feasibility: charge lazily, just enough until the next charger
    level = 0.0
    for i in range(n):
        if i < n - 1 and rates[i] > 0.0:
            j = i + 1
            while j < n - 1 and rates[j] <= 0.0:
                j += 1
            for q in range(i, j):
                level = max(level, lo[q])
            if level > hi[i] + EPS:
                return 1, delta, a
        elif lo[i] > level + EPS:
            return 1, delta, a
    # equal charger rates: charging as early as the battery allows is optimal
    # whenever it keeps every window (earlier charge never lengthens a delay suffix)
    rate0 = 0.0
    uniform = True
    for i in range(n - 1):
        if rates[i] > 0.0:
            if rate0 == 0.0:
                rate0 = rates[i]
            elif abs(rates[i] - rate0) > 1e-12:
                uniform = False
    if uniform:
        need = 0.0
        for i in range(n - 1):
            need = max(need, lo[i])
        cum = 0.0
        for i in range(n - 1):
            if rates[i] > 0.0 and cum < need:
                add = min(need, hi[i]) - cum
                if add > 0.0:
                    delta[i] = add
                    cum += add
        s = _earliest(travel, service, early, delta, rates)
        ok = True
        for i in range(n):
            if s[i] > late[i] + 1e-9:
                ok = False
                break
        if ok:
            return 0, delta, s
        delta[:] = 0.0
    cp = np.empty(n, dtype=np.int64)
    k = 0
    for i in range(n - 1):
        if rates[i] > 0.0 and i <= last_need and hi[i] > EPS:
            cp[k] = i
            k += 1
    nv = k + n - 1
    n_def = 0
    n_late = 0
    for i in range(n - 1):
        if lo[i] > EPS:
            n_def += 1
    for i in range(1, n):
        if np.isfinite(late[i]):
            n_late += 1
    m = (n - 1) + n_late + n_def + k
    A = np.zeros((m, nv))
    b = np.zeros(m)
    r = 0
    for i in range(n - 1):
        if i > 0:
            A[r, k + i - 1] += 1.0
        A[r, k + i] -= 1.0
        for q in range(k):
            if cp[q] == i:
                A[r, q] = 60.0 / rates[i]
        b[r] = a[i + 1] - a[i] - service[i] - travel[i]
        r += 1
    for i in range(1, n):
        if np.isfinite(late[i]):
            A[r, k + i - 1] = 1.0
            b[r] = late[i] - a[i]
            r += 1
    for i in range(n - 1):
        if lo[i] > EPS:
            for q in range(k):
                if cp[q] <= i:
                    A[r, q] = -1.0
            b[r] = -lo[i]
            r += 1
    for p in range(k):
        for q in range(p + 1):
            A[r, q] = 1.0
        b[r] = hi[cp[p]]
        r += 1
    c = np.zeros(nv)
    c[nv - 1] = 1.0
    code, x = solve_ub(c, A, b)
    if code != 0:
        return 2, delta, a
    for q in range(k):
        delta[cp[q]] = x[q]
    return 0, delta, _earliest(travel, service, early, delta, rates)


def solve_charging(rlp: RouteLp) -> PlanOrInfeasible:
    """Minimum-completion-time charging plan for one route."""
    code, delta, start = _solve_route(
        rlp.bhat,
        rlp.travel,
        rlp.service,
        rlp.early,
        rlp.late,
        rlp.rate_array,
        rlp.battery_capacity,
        rlp.battery_min,
        rlp.electric,
    )
    if code == 1:
        return Infeasible(BATTERY_INFEASIBLE)
    if code == 2:
        return Infeasible(TIME_INFEASIBLE)
    T = float(start[-1])
    return ChargingPlan(delta, start, T, rlp.time_cost * T)


def solve_joint(
    rlps: Sequence[RouteLp],
    meet_positions: Sequence[int],
    max_wait: float,
    max_T: Optional[Sequence[Optional[float]]] = None,
    quick: bool = False,
) -> Union[list[ChargingPlan], Infeasible]:
    """Charging plans for two routes whose meet-point service starts differ by at most ``max_wait``.

    ``max_T`` optionally caps each route's completion time (profit thresholds
    translate into such caps).  Minimises the summed completion times.  With
    ``quick`` the earlier vehicle first simply waits at the meet point; that
    plan is feasible but not always optimal, and the LP runs only if it fails.
    """
    starts = []
    for rlp in rlps:
        a, bad = _precheck(rlp)
        if bad is not None:
            return bad
        starts.append(a)
    caps = list(max_T) if max_T is not None else [None] * len(rlps)
    for a, cap in zip(starts, caps):
        if cap is not None and a[-1] > cap + 1e-9:
            return Infeasible(THRESHOLD_INFEASIBLE)

    # fast path: independent optima already synchronised and within caps
    plans = [solve_charging(r) for r in rlps]
    if all(p.feasible for p in plans):
        sm = [p.start[m] for p, m in zip(plans, meet_positions)]
        caps_ok = all(cap is None or p.T <= cap + 1e-9 for p, cap in zip(plans, caps))
        if abs(sm[0] - sm[1]) <= max_wait + 1e-9 and caps_ok:
            return plans
    else:
        return next(p for p in plans if not p.feasible)
    if quick:
        waited = _sync_by_waiting(rlps, meet_positions, plans, max_wait, caps)
        if waited is not None:
            return waited

    blocks = [_route_block(r, a) for r, a in zip(rlps, starts)]
    nv = sum(b[1] for b in blocks)
    offs = np.cumsum([0] + [b[1] for b in blocks])
    rows, rhs = [], []
    for (cp, n_b, brows, brhs), off in zip(blocks, offs):
        for row, b in zip(brows, brhs):
            full = np.zeros(nv)
            full[off : off + n_b] = row
            rows.append(full)
            rhs.append(b)

    def uidx(k, pos):
        cp, n_b, _, _ = blocks[k]
        return offs[k] + len(cp) + pos - 1

    m1, m2 = meet_positions
    a1, a2 = starts[0][m1], starts[1][m2]
    for sgn in (1.0, -1.0):
        row = np.zeros(nv)
        if m1 > 0:
            row[uidx(0, m1)] += sgn
        if m2 > 0:
            row[uidx(1, m2)] -= sgn
        rows.append(row)
        rhs.append(max_wait - sgn * (a1 - a2))
    for k, cap in enumerate(caps):
        if cap is not None:
            row = np.zeros(nv)
            row[uidx(k, rlps[k].size - 1)] = 1.0
            rows.append(row)
            rhs.append(cap - starts[k][-1])
    c = np.zeros(nv)
    for k, r in enumerate(rlps):
        c[uidx(k, r.size - 1)] = 1.0
    res = linprog(c, np.array(rows), np.array(rhs))
    if not res.ok:
        return Infeasible(SYNC_INFEASIBLE if all(cap is None for cap in caps) else THRESHOLD_INFEASIBLE)
    out = []
    for k, (r, (cp, n_b, _, _)) in enumerate(zip(rlps, blocks)):
        delta = np.zeros(r.size)
        delta[cp] = res.x[offs[k] : offs[k] + len(cp)]
        pos = meet_positions[k]
        s_meet = starts[k][pos] + (res.x[uidx(k, pos)] if pos > 0 else 0.0)
        start = earliest_times(r, delta, floor={pos: s_meet})
        T = float(start[-1])
        out.append(ChargingPlan(delta, start, T, r.time_cost * T))
    return out


def _sync_by_waiting(rlps, meet_positions, plans, max_wait, caps) -> Optional[list[ChargingPlan]]:
    sm = [p.start[m] for p, m in zip(plans, meet_positions)]
    e = 0 if sm[0] < sm[1] else 1
    pos = meet_positions[e]
    early = rlps[e].early.copy()
    early[pos] = max(early[pos], sm[1 - e] - max_wait)
    plan = solve_charging(replace(rlps[e], early=early))
    if not plan.feasible or abs(plan.start[pos] - sm[1 - e]) > max_wait + 1e-9:
        return None
    out = list(plans)
    out[e] = plan
    if any(cap is not None and p.T > cap + 1e-9 for p, cap in zip(out, caps)):
        return None
    return out


def arrival_battery(rlp: RouteLp, delta: np.ndarray) -> np.ndarray:
    cum = np.concatenate([[0.0], np.cumsum(delta)[:-1]])
    return rlp.bhat + cum


def grid_oracle(rlp: RouteLp, resolution: float = 0.1, max_size: int = 6) -> PlanOrInfeasible:
    """Exhaustive search over charge vectors on a ``resolution`` kWh grid.

    Only plans whose total charge equals the smallest grid multiple covering
    the largest deficit are enumerated: trimming charge from the end of any
    feasible plan keeps it feasible and never delays service.
    """
    if rlp.size > max_size:
        raise ValueError(f"grid oracle limited to {max_size} positions, got {rlp.size}")
    a = earliest_times(rlp)
    if np.any(a > rlp.late + 1e-9):
        return Infeasible(TIME_INFEASIBLE)
    lo, hi = charge_requirements(rlp)
    need = lo.max(initial=0.0) if rlp.electric else 0.0
    if need <= EPS:
        return _zero_plan(rlp, a)
    units = int(math.ceil(need / resolution - 1e-9))
    chargers = _chargers(rlp)
    if not chargers:
        return Infeasible(BATTERY_INFEASIBLE)
    combos = _compositions(units, len(chargers))
    deltas = np.zeros((len(combos), rlp.size))
    deltas[:, chargers] = np.asarray(combos, dtype=float) * resolution
    cum = np.cumsum(deltas, axis=1)
    ok = np.all(cum >= lo - 1e-9, axis=1) & np.all(cum <= hi + 1e-9, axis=1)
    deltas = deltas[ok]
    if not len(deltas):
        return Infeasible(BATTERY_INFEASIBLE)
    s = np.empty_like(deltas)
    s[:, 0] = rlp.early[0]
    for i in range(1, rlp.size):
        p = i - 1
        dwell = rlp.service[p] + (60.0 * deltas[:, p] / rlp.rates[p] if rlp.rates[p] else 0.0)
        s[:, i] = np.maximum(s[:, p] + dwell + rlp.travel[p], rlp.early[i])
    ok = np.all(s <= rlp.late + 1e-9, axis=1)
    if not ok.any():
        return Infeasible(TIME_INFEASIBLE)
    cand = np.nonzero(ok)[0]
    best = cand[np.argmin(s[cand, -1])]
    T = float(s[best, -1])
    return ChargingPlan(deltas[best], s[best], T, rlp.time_cost * T)


def _compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    """All weak compositions of ``total`` into ``parts`` non-negative integers."""
    out = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        comp = []
        for b in bars:
            comp.append(b - prev - 1)
            prev = b
        comp.append(total + parts - 1 - prev - 1)
        out.append(tuple(comp))
    return out
