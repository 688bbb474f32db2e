import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coevrp.model import (
    EvMode,
    InstanceError,
    NodeKind,
    TwMode,
    builtin_gothenburg,
    generate_instance,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    save_instance,
)
from instances import random_small


def test_gothenburg_layout():
    inst = builtin_gothenburg()
    labels = [n.label for n in inst.nodes]
    assert labels[:2] == ["D1", "D2"] and labels[-2:] == ["m1", "m2"]
    assert len(inst.customers) == 17
    assert len(inst.customers_of(1)) == 9 and len(inst.customers_of(2)) == 8
    assert all(inst.nodes[j].shared for j in inst.customers)
    assert inst.electric and inst.windows_enforced


def test_gothenburg_shared_subset():
    inst = builtin_gothenburg(shared=[3, 12])
    shared = {inst.nodes[j].label for j in inst.customers if inst.nodes[j].shared}
    assert shared == {"3", "12"}


def test_cost_rates_follow_vehicle_mode():
    ev = builtin_gothenburg()
    cv = ev.with_modes(EvMode.CONVENTIONAL)
    assert ev.c_d < cv.c_d
    assert cv.charge_rate(ev.customers[0]) is None


def test_travel_time_from_speed():
    inst = random_small(5, 1)
    v = inst.vehicle(1)
    assert np.allclose(inst.tt(1), inst.distance / v.speed * 60.0)


@given(st.integers(3, 8), st.integers(0, 10_000), st.booleans(), st.booleans())
def test_json_round_trip(n, seed, tw, electric):
    inst = random_small(n, seed, tw=tw, electric=electric)
    assert instance_from_dict(instance_to_dict(inst)) == inst


def test_file_round_trip(tmp_path):
    inst = generate_instance(12, seed=4, tw_slots="two-slot")
    save_instance(inst, tmp_path / "i.json")
    assert load_instance(tmp_path / "i.json") == inst


def test_generate_is_deterministic():
    a = generate_instance(20, seed=7, tw_slots="two-slot")
    b = generate_instance(20, seed=7, tw_slots="two-slot")
    c = generate_instance(20, seed=8, tw_slots="two-slot")
    assert a == b and a != c
    assert len(a.customers) == 20


@given(st.integers(3, 8), st.integers(0, 10_000))
def test_profit_ratio_in_unit_interval(n, seed):
    inst = random_small(n, seed)
    for m in inst.meet_points:
        for j in inst.customers:
            assert 0.0 <= inst.alpha(m, j) <= 1.0


def test_with_thresholds_and_shared():
    inst = random_small(6, 3)
    assert inst.with_thresholds([1.0, 2.0]).thresholds == (1.0, 2.0)
    assert inst.with_thresholds(None).thresholds is None
    none_shared = inst.with_shared([])
    assert not any(none_shared.nodes[j].shared for j in none_shared.customers)


def test_big_m_exceeds_horizon():
    for inst in (builtin_gothenburg(), builtin_gothenburg(EvMode.CONVENTIONAL, TwMode.IGNORED)):
        assert inst.big_m > inst.horizon > 0


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d["distance"][0].__setitem__(1, -1.0), "distance"),
        (lambda d: d["nodes"].reverse(), "nodes"),
        (lambda d: d["vehicles"].pop(), "vehicles"),
        (lambda d: d["nodes"][2].__setitem__("tw", [50, 10]), "tw"),
    ],
)
def test_bad_instances_rejected(mutate, path):
    d = instance_to_dict(random_small(4, 2))
    mutate(d)
    with pytest.raises(InstanceError) as exc:
        instance_from_dict(d)
    assert path in str(exc.value) or path in exc.value.path


def test_forbidden_arcs_survive_round_trip():
    inst = random_small(4, 9)
    dist = inst.distance.copy()
    dist[2, 3] = math.inf
    inst2 = inst.replace(distance=dist)
    back = instance_from_dict(instance_to_dict(inst2))
    assert math.isinf(back.distance[2, 3])


def test_node_kinds_ordered():
    inst = generate_instance(10, seed=1)
    kinds = [n.kind for n in inst.nodes]
    assert kinds[:2] == [NodeKind.DEPOT, NodeKind.DEPOT]
    first_meet = kinds.index(NodeKind.MEET)
    assert all(k is NodeKind.MEET for k in kinds[first_meet:])
