import csv
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coevrp.alns import AlnsConfig
from coevrp.model import builtin_gothenburg, EvMode, TwMode
from coevrp.report import (
    CSV_COLUMNS,
    SolverSettings,
    apply_tw_profile,
    increase_pct,
    model_name,
    parse_tw_profile,
    reduction_pct,
    run_compare,
    write_csv,
    write_json,
)
from instances import random_small


def test_model_names():
    g = builtin_gothenburg()
    assert model_name(g, False) == "EVRPTW" and model_name(g, True) == "CoEVRPMP-TW"
    c = g.with_modes(EvMode.CONVENTIONAL, TwMode.IGNORED)
    assert model_name(c, False) == "VRP" and model_name(c, True) == "CoVRPMP"


def test_percentages_use_rounded_money():
    assert reduction_pct(1277.71, 818.84) == 35.9
    assert increase_pct(577.94, 716.6) == 24.0
    assert reduction_pct(None, 1.0) is None and increase_pct(0.0, 1.0) is None


@given(st.floats(1.0, 1e5), st.floats(0.0, 1e5))
def test_reduction_and_increase_are_opposite(base, new):
    r, i = reduction_pct(base, new), increase_pct(base, new)
    assert r == pytest.approx(-i, abs=0.11)


def test_tw_profile():
    assert parse_tw_profile("r3-60-180") == (3, 60.0, 180.0)
    for bad in ("x3-60-180", "r1-200-100", "r1-0-100"):
        with pytest.raises(ValueError):
            parse_tw_profile(bad)
    inst = apply_tw_profile(random_small(6, 1), "r2-60-180")
    for j in inst.customers:
        e, l = inst.window(j)
        assert l - e == 60.0 and 0.0 <= e <= 120.0 and e == int(e)
    assert inst.name.endswith("r2-60-180")
    assert apply_tw_profile(random_small(6, 1), "r2-60-180") == inst


def test_compare_three_blocks(tmp_path):
    inst = random_small(5, 4, n_meet=1)
    rep = run_compare(inst, SolverSettings(method="exact"), "demo")
    assert [r.block for r in (rep.baseline, rep.collaborative, rep.thresholded)] == [
        "baseline", "collaborative", "thresholds"]
    assert rep.baseline.feasible and rep.collaborative.feasible
    if rep.thresholded.feasible:
        assert rep.thresholded.total_cost >= rep.collaborative.total_cost - 1e-9
        for k in (1, 2):
            assert rep.thresholded.profits[k] >= rep.baseline.profits[k] - 1e-6
    rows = rep.rows()
    assert len(rows) == 6
    write_csv([rep], tmp_path / "c.csv")
    write_json([rep], tmp_path / "c.json")
    with open(tmp_path / "c.csv") as fh:
        got = list(csv.DictReader(fh))
    assert tuple(got[0]) == CSV_COLUMNS and len(got) == 6
    data = json.loads((tmp_path / "c.json").read_text())
    assert data[0]["config_hash"] == rep.config_hash and len(rep.config_hash) == 12


def test_settings_inject_seed_and_limit():
    s = SolverSettings(method="alns", seed=4, time_limit=3.0, alns=AlnsConfig(runs=2))
    cfg = s.alns_config()
    assert cfg.seed == 4 and cfg.time_limit == 3.0 and cfg.runs == 2
    assert s.exact_config(30).max_customers == 30
    with pytest.raises(ValueError):
        SolverSettings(method="magic")
