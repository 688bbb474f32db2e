"""Local search polish: 2-opt, relocate, swap and neighbour move.

Moves are screened with a cheap zero-charge estimate (distance plus earliest
completion time) and only promising ones are fully re-timed.  A move is
kept only if the full, penalised objective strictly improves.
"""

from __future__ import annotations

import math
from typing import Iterator, Optional

import numpy as np
from numba import njit

from .alns import Context, State, evaluate

IMPROVE_TOL = 1e-9
SMALL_ROUTES = 40


@njit(cache=True)
def _estimate(nodes, D, tt, svc, early, late, cd, ct):
    """Zero-charge cost of a route, ``inf`` if a window is missed."""
    t = early[nodes[0]]
    d = 0.0
    for p in range(1, nodes.size):
        i, j = nodes[p - 1], nodes[p]
        d += D[i, j]
        t = max(t + svc[i] + tt[i, j], early[j])
        if t > late[j] + 1e-9:
            return np.inf
    return cd * d + ct * t


def route_estimate(ctx: Context, k: int, route: list[int]) -> float:
    return float(
        _estimate(np.asarray(route, dtype=np.int64), ctx.D, ctx.tt[k - 1], ctx.svc, ctx.early, ctx.late, ctx.cd, ctx.ct)
    )


def placement_ok(ctx: Context, state: State, k: int, route: list[int]) -> bool:
    """Partner customers sit after the meet point; reserved customers stay home."""
    m = state.meet_point
    met = m is None
    for j in route[1:-1]:
        if j == m:
            met = True
        elif ctx.owner[j] != k and (not met or not ctx.shared[j]):
            return False
    return True


def _two_opt(ctx: Context, state: State) -> Iterator[dict[int, list[int]]]:
    for k, r in state.routes.items():
        n = len(r)
        for i in range(1, n - 2):
            for j in range(i + 1, n - 1):
                new = r[:i] + r[i : j + 1][::-1] + r[j + 1 :]
                yield {k: new}


def _relocate(ctx: Context, state: State) -> Iterator[dict[int, list[int]]]:
    for k, r in state.routes.items():
        for p in range(1, len(r) - 1):
            j = r[p]
            base = r[:p] + r[p + 1 :]
            targets = [k]
            if j != state.meet_point and state.meet_point is not None and ctx.shared[j]:
                targets.append(3 - k)
            for k2 in targets:
                if k2 == k:
                    for q in range(1, len(base)):
                        if q != p:
                            yield {k: base[:q] + [j] + base[q:]}
                else:
                    other = state.routes[k2]
                    for q in range(1, len(other)):
                        yield {k: base, k2: other[:q] + [j] + other[q:]}


def _swap(ctx: Context, state: State) -> Iterator[dict[int, list[int]]]:
    """Exchange two customers, within a route or across the two routes."""
    slots = [(k, p) for k, r in state.routes.items() for p in range(1, len(r) - 1) if ctx.is_customer[r[p]]]
    for a in range(len(slots)):
        ka, pa = slots[a]
        for b in range(a + 1, len(slots)):
            kb, pb = slots[b]
            if ka == kb:
                if pb == pa + 1:
                    continue  # covered by 2-opt
                r = list(state.routes[ka])
                r[pa], r[pb] = r[pb], r[pa]
                yield {ka: r}
            else:
                ra, rb = list(state.routes[ka]), list(state.routes[kb])
                ra[pa], rb[pb] = rb[pb], ra[pa]
                yield {ka: ra, kb: rb}


def _neighbor_move(ctx: Context, state: State, k_near: int) -> Iterator[dict[int, list[int]]]:
    where = {j: k for k, r in state.routes.items() for j in r[1:-1]}
    for ego, k in list(where.items()):
        if not ctx.is_customer[ego]:
            continue
        count = 0
        for j in ctx.nearest[ego]:
            j = int(j)
            if count >= k_near:
                break
            if j == ego or j not in where or not ctx.is_customer[j]:
                continue
            count += 1
            kj = where[j]
            routes = {kk: list(r) for kk, r in state.routes.items()}
            routes[kj].remove(j)
            dest = routes[k]
            dest.insert(dest.index(ego) + 1, j)
            yield {kk: routes[kk] for kk in {k, kj}}


def local_search(ctx: Context, state: State, max_rounds: int = 50) -> State:
    """First-improvement descent over all four neighbourhoods."""
    current = evaluate(ctx, state.copy())
    if not math.isfinite(current.cost):
        return current
    est = {k: route_estimate(ctx, k, r) for k, r in current.routes.items()}
    small = sum(len(r) for r in current.routes.values()) <= SMALL_ROUTES
    for _ in range(max_rounds):
        improved = False
        for gen in (_two_opt, _relocate, _swap, lambda c, s: _neighbor_move(c, s, ctx.config.neighbors)):
            for change in gen(ctx, current):
                if not all(placement_ok(ctx, current, k, r) for k, r in change.items()):
                    continue
                new_est = {k: route_estimate(ctx, k, r) for k, r in change.items()}
                screened_out = sum(new_est.values()) >= sum(est[k] for k in change) - IMPROVE_TOL
                # a penalised small state may need a locally worse move to restore sync
                if screened_out and (current.feasible or not small):
                    continue
                cand = State({k: list(r) for k, r in current.routes.items()}, current.meet_point)
                cand.routes.update(change)
                cand = evaluate(ctx, cand)
                if cand.cost < current.cost - IMPROVE_TOL:
                    current = cand
                    est.update(new_est)
                    improved = True
                    break
            if improved:
                break
        if not improved:
            break
    return current
