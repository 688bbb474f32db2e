import json

import pytest

from coevrp.cli import EXIT_ERROR, EXIT_INFEASIBLE, EXIT_OK, main
from coevrp.model import save_instance
from instances import random_small


@pytest.fixture()
def inst_file(tmp_path):
    path = tmp_path / "inst.json"
    save_instance(random_small(5, 6), path)
    return path


def test_solve_writes_outputs(inst_file, tmp_path):
    out = tmp_path / "out"
    assert main(["solve", str(inst_file), "--method", "exact", "--out", str(out)]) == EXIT_OK
    for name in ("solution.json", "solution_evaluation.json", "solution.csv", "solution.svg"):
        assert (out / name).exists()
    assert main(["validate", str(inst_file), str(out / "solution.json")]) == EXIT_OK
    assert main(["plot", str(inst_file), str(out / "solution.json"), "--out", str(out / "m.geojson")]) == EXIT_OK


def test_alns_solve_logs_progress(inst_file, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"runs": 1, "segments_per_run": 2, "iterations_per_segment": 20}))
    out = tmp_path / "out"
    code = main(["solve", str(inst_file), "--config", str(cfg), "--seed", "3", "--out", str(out)])
    assert code == EXIT_OK
    assert (out / "progress.csv").exists() and (out / "convergence.svg").exists()


def test_invalid_solution_exit_code(inst_file, tmp_path):
    out = tmp_path / "out"
    main(["solve", str(inst_file), "--method", "exact", "--out", str(out)])
    data = json.loads((out / "solution.json").read_text())
    data["routes"][0]["start"] = [0.0 for _ in data["routes"][0]["start"]]
    data["routes"][0]["start"][-1] = 1e6
    (out / "bad.json").write_text(json.dumps(data))
    assert main(["validate", str(inst_file), str(out / "bad.json")]) == EXIT_INFEASIBLE


def test_unsatisfiable_thresholds(inst_file, tmp_path):
    code = main(["solve", str(inst_file), "--method", "exact", "--threshold-values", "1e6,1e6",
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_INFEASIBLE


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["solve"],
        ["solve", "missing.json"],
        ["solve", "gothenburg", "--method", "nope"],
        ["solve", "gothenburg", "--shared-set", "99"],
        ["plot", "gothenburg", "--out", "x.svg"],
    ],
)
def test_usage_and_data_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == EXIT_ERROR


def test_generate_baseline_compare(tmp_path):
    inst = tmp_path / "g.json"
    assert main(["generate", "6", "--seed", "2", "--tw-slots", "two-slot", "--out", str(inst)]) == EXIT_OK
    assert main(["baseline", str(inst), "--method", "exact", "--out", str(tmp_path / "b")]) == EXIT_OK
    assert (tmp_path / "b" / "baseline_1.json").exists()
    code = main(["compare", str(inst), "--method", "exact", "--no-tw", "--out", str(tmp_path / "c")])
    assert code in (EXIT_OK, EXIT_INFEASIBLE)
    assert (tmp_path / "c" / "compare.csv").exists() and (tmp_path / "c" / "compare.svg").exists()


def test_milp_export_import(inst_file, tmp_path):
    assert main(["export-milp", str(inst_file), "--meet", "m1", "--out", str(tmp_path / "m.lp")]) == EXIT_OK
    assert (tmp_path / "m.lp").read_text().startswith("\\")
    assert main(["export-milp", str(inst_file), "--out", str(tmp_path / "lps")]) == EXIT_OK
    assert len(list((tmp_path / "lps").glob("*.lp"))) == 2
