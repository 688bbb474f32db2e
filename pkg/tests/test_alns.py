import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coevrp import alns
from coevrp.alns import AlnsConfig, Context, OperatorBank, solve_alns, solve_noncollab
from coevrp.evaluator import validate
from coevrp.exact import solve_exact, solve_noncollab_exact
from instances import random_small, with_baseline_thresholds

QUICK = AlnsConfig(runs=2, segments_per_run=3, iterations_per_segment=40)


def test_config_validation_and_round_trip(tmp_path):
    for bad in ({"removal_fraction": 0.0}, {"runs": 0}, {"scores": (1.0, 2.0, 3.0)}, {"cooling": 0.0},
                {"meet_shift": 1.5}, {"weight_decay": 2.0}):
        with pytest.raises(ValueError):
            AlnsConfig(**bad)
    with pytest.raises(ValueError):
        AlnsConfig.from_dict({"nonsense": 1})
    cfg = AlnsConfig(runs=3, seed=9)
    alns.save_config(cfg, tmp_path / "c.json")
    assert alns.load_config(tmp_path / "c.json") == cfg


@given(st.sampled_from(["repair", "destroy"]), st.lists(st.floats(0.01, 50.0), min_size=4, max_size=4),
       st.integers(0, 2**32 - 1))
def test_pick_matches_numpy_choice(kind, weights, seed):
    bank = OperatorBank()
    table = getattr(bank, kind)
    ops = list(table)
    weights = weights[: len(ops)]
    for op, w in zip(ops, weights):
        table[op] = w
    p = np.array(weights) / sum(weights)
    r1, r2 = np.random.default_rng(seed), np.random.default_rng(seed)
    for _ in range(20):
        assert bank.pick(kind, r1) == ops[int(r2.choice(len(ops), p=p))]


def test_weights_follow_scores():
    bank = OperatorBank()
    for _ in range(10):
        bank.record("random_removal", 33.0)
        bank.record("worst_removal", 0.0)
    alns.update_weights(bank, 0.5)
    assert bank.destroy["random_removal"] > 1.0 > bank.destroy["worst_removal"] >= alns.MIN_WEIGHT
    assert bank.destroy["related_removal"] == 1.0
    assert not bank.uses


@given(st.integers(4, 9), st.integers(0, 10_000), st.sampled_from(alns.DESTROY_OPS), st.floats(0.05, 0.9))
def test_destroy_keeps_structure(n, seed, op, rho):
    inst = random_small(n, seed)
    ctx = Context(inst, AlnsConfig())
    state = alns.initial_solution(inst, ctx=ctx)
    partial = alns.destroy(ctx, state, op, rho, np.random.default_rng(seed))
    q = alns.removal_count(n, rho)
    assert q == max(1, math.ceil(rho * n - 1e-9))
    if op == "route_removal":
        assert 1 <= len(partial.removed) <= q
    else:
        assert len(partial.removed) == q
    for k, r in partial.state.routes.items():
        assert r[0] == r[-1] == inst.depot(k)
        assert state.meet_point in r
    left = {j for r in partial.state.routes.values() for j in r}
    assert not left & set(partial.removed)


@given(st.integers(4, 9), st.integers(0, 10_000), st.sampled_from(alns.REPAIR_OPS))
def test_repair_reinserts_everything(n, seed, op):
    inst = random_small(n, seed, tw=False)
    ctx = Context(inst, AlnsConfig())
    state = alns.initial_solution(inst, ctx=ctx)
    partial = alns.destroy(ctx, state, "random_removal", 0.4, np.random.default_rng(seed))
    out = alns.repair(ctx, partial, op, np.random.default_rng(seed))
    if out is None:
        return
    served = sorted(j for r in out.routes.values() for j in r if inst.nodes[j].is_customer)
    assert served == sorted(inst.customers)
    for k, r in out.routes.items():
        m = r.index(state.meet_point)
        for p, j in enumerate(r):
            if inst.nodes[j].is_customer and inst.owner(j) != k:
                assert p > m and inst.nodes[j].shared


def test_deterministic_per_seed():
    inst = random_small(7, 3)
    a = solve_alns(inst, AlnsConfig(runs=2, segments_per_run=2, seed=5))
    b = solve_alns(inst, AlnsConfig(runs=2, segments_per_run=2, seed=5))
    assert a.total_cost == b.total_cost
    assert [r.nodes for r in a.routes] == [r.nodes for r in b.routes]


@given(st.integers(4, 7), st.integers(0, 10_000))
def test_never_beats_exact(n, seed):
    inst = random_small(n, seed)
    ex = solve_exact(inst)
    sol = solve_alns(inst, QUICK)
    if sol.feasible:
        assert validate(inst, sol).feasible
        assert ex.feasible and sol.total_cost >= ex.total_cost - 1e-6


def test_thresholds_are_hard():
    inst = with_baseline_thresholds(random_small(7, 17, n_meet=1))
    assert inst is not None
    sol = solve_alns(inst, QUICK)
    if sol.feasible:
        for k in (1, 2):
            assert sol.profits[k] >= inst.thresholds[k - 1] - 1e-6


def test_noncollab_has_no_meet_point():
    inst = random_small(8, 2)
    for k in (1, 2):
        sol = solve_noncollab(inst, k, QUICK)
        assert sol.meet_point is None and [r.company for r in sol.routes] == [k]
        assert sol.total_cost >= solve_noncollab_exact(inst, k).total_cost - 1e-6


def test_time_limit_and_progress_log():
    inst = random_small(9, 8)
    log = io.StringIO()
    sol = solve_alns(inst, AlnsConfig(time_limit=0.5), log)
    lines = log.getvalue().splitlines()
    assert lines[0] == "iter,segment,run,best_cost"
    assert sol.info["timed_out"]
    assert len(lines) > 2


def test_insertion_costs_price_sync_wait():
    inst = random_small(6, 12, tw=False)
    ctx = Context(inst, AlnsConfig())
    state = alns.evaluate(ctx, alns.initial_solution(inst, ctx=ctx))
    info = {k: ctx.info(k, r) for k, r in state.routes.items()}
    j = state.routes[1][1] if inst.nodes[state.routes[1][1]].is_customer else state.routes[1][-2]
    removed = state.copy()
    for k in removed.routes:
        removed.routes[k] = [x for x in removed.routes[k] if x != j]
    info = {k: ctx.info(k, r) for k, r in removed.routes.items()}
    for delta, k, pos in alns.insertion_costs(ctx, removed, info, j):
        assert math.isfinite(delta)
        assert 1 <= pos < len(removed.routes[k])
