import json

import pytest

from coevrp.exact import solve_exact
from coevrp.model import builtin_gothenburg
from coevrp.plotting import NoCoordinatesError, plot_convergence, render, slot_of, solution_geojson
from instances import random_small


@pytest.fixture(scope="module")
def solved():
    inst = random_small(5, 6)
    return inst, solve_exact(inst)


@pytest.mark.parametrize("suffix", [".svg", ".png"])
def test_route_map_images(solved, tmp_path, suffix):
    inst, sol = solved
    out = render(inst, sol, tmp_path / f"map{suffix}")
    assert out.exists() and out.stat().st_size > 1000


def test_geojson(solved, tmp_path):
    inst, sol = solved
    data = json.loads(render(inst, sol, tmp_path / "map.geojson").read_text())
    feats = data["features"]
    points = [f for f in feats if f["geometry"]["type"] == "Point"]
    lines = [f for f in feats if f["geometry"]["type"] == "LineString"]
    assert len(points) == inst.n_nodes and len(lines) == 2
    chosen = [f for f in points if f["properties"].get("chosen")]
    assert [f["properties"]["index"] for f in chosen] == [sol.meet_point]
    bare = solution_geojson(inst, None)["features"]
    assert [f["properties"]["label"] for f in bare] == [f["properties"]["label"] for f in points]
    assert not any(f["properties"].get("chosen") for f in bare)


def test_slots(solved):
    inst, _ = solved
    opens = sorted({inst.window(j)[0] for j in inst.customers})
    for j in inst.customers:
        assert opens[slot_of(inst, j)] == inst.window(j)[0]


def test_missing_coordinates(tmp_path):
    with pytest.raises(NoCoordinatesError):
        render(builtin_gothenburg(), None, tmp_path / "g.svg")


def test_unknown_format(solved, tmp_path):
    inst, sol = solved
    with pytest.raises(ValueError):
        render(inst, sol, tmp_path / "map.bmp")


def test_convergence(tmp_path):
    csv = tmp_path / "p.csv"
    csv.write_text("iter,segment,run,best_cost\n1,0,0,inf\n2,0,0,10.5\n3,0,0,9.0\n1,0,1,12.0\n")
    assert plot_convergence(csv, tmp_path / "c.svg").stat().st_size > 1000
