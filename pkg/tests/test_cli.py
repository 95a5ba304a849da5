import csv
import json
from dataclasses import asdict

import numpy as np
import pytest

from conftest import FAST, SMALL
from workalloc.cli import EXIT_INFEASIBLE, EXIT_INVALID, EXIT_OK, main
from workalloc.harness import CSV_COLUMNS


@pytest.fixture(scope="module")
def config_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "config.json"
    catalog = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(FAST).items()}
    path.write_text(json.dumps({
        "scenario": {**asdict(SMALL), "history_months": 7},
        "pipeline": {"window": 3, "catalog": catalog, "random_samples": 200, "node_limit": 100,
                     "heuristic_restarts": 1},
        "sweep": {"windows": [3, 4]},
    }))
    return path


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory, config_file):
    out = tmp_path_factory.mktemp("scen") / "s"
    assert main(["generate", "--config", str(config_file), "--out", str(out)]) == EXIT_OK
    return out


def test_generate_writes_files(scenario_dir):
    for name in ("scenario.json", "ground_truth.json", "config.json"):
        assert (scenario_dir / name).is_file()


def test_generate_bare_scenario_config(tmp_path):
    cfg = tmp_path / "bare.json"
    cfg.write_text(json.dumps({"n_workers": 3, "n_clusters": 1, "feature_dim": 2, "history_months": 2,
                               "days_per_month": 5, "tasks_per_day": 4.0}))
    assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "4"]) == EXIT_OK
    assert json.loads((tmp_path / "o" / "config.json").read_text())["seed"] == 4


def test_train_and_allocate(scenario_dir, config_file, tmp_path):
    cat = tmp_path / "cat.json"
    assert main(["train", "--scenario", str(scenario_dir), "--mode", "dao", "--window", "3",
                 "--config", str(config_file), "--out", str(cat)]) == EXIT_OK
    doc = json.loads(cat.read_text())
    W, J, M = doc["shape"]
    assert M == 3 and len(doc["P"]) == W * J * M
    for solver in ("exact", "heuristic"):
        out = tmp_path / f"{solver}.json"
        assert main(["allocate", "--catalog", str(cat), "--solver", solver, "--out", str(out)]) == EXIT_OK
        rep = json.loads(out.read_text())
        assert {"objective", "status", "bound", "gap", "nodes", "wall_time", "x", "y", "z"} <= set(rep)
        assert len(rep["x"]) == J and len(rep["y"]) == W


def test_train_default_output(scenario_dir, config_file):
    assert main(["train", "--scenario", str(scenario_dir), "--mode", "uao-aggregate", "--window", "3",
                 "--config", str(config_file)]) == EXIT_OK
    assert (scenario_dir / "catalog-uao-aggregate-03m.json").is_file()


def test_run_then_report(scenario_dir, config_file, tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--scenario", str(scenario_dir), "--config", str(config_file), "--out", str(out)]) == EXIT_OK
    assert (out / "reports" / "seed0000-window03.json").is_file()
    csv_path = tmp_path / "r.csv"
    assert main(["report", "--in", str(out), "--format", "csv", "--out", str(csv_path)]) == EXIT_OK
    with open(csv_path) as fh:
        assert tuple(next(csv.reader(fh))) == CSV_COLUMNS
    js = tmp_path / "r.json"
    assert main(["report", "--in", str(out), "--format", "json", "--out", str(js)]) == EXIT_OK
    assert "summary" in json.loads(js.read_text())


def test_sweep_writes_outputs(config_file, tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(config_file), "--seeds", "1", "--out", str(out)]) == EXIT_OK
    assert sorted(p.name for p in (out / "reports").iterdir()) == ["seed0000-window03.json",
                                                                   "seed0000-window04.json"]
    assert "trends" in json.loads((out / "summary.json").read_text())
    assert (out / "results.csv").read_text().startswith(",".join(CSV_COLUMNS))


def test_invalid_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n_workers": 2, "n_clusters": 5}))
    assert main(["generate", "--config", str(bad), "--out", str(tmp_path / "x")]) == EXIT_INVALID
    bad.write_text("{not json")
    assert main(["generate", "--config", str(bad), "--out", str(tmp_path / "x")]) == EXIT_INVALID
    assert main(["report", "--in", str(tmp_path)]) == EXIT_INVALID


def _catalog_doc(capacity):
    W, J = 2, 3
    return {"shape": [W, J, 1], "kinds": ["aggregate"], "worker_ids": ["a", "b"], "capacity": capacity,
            "tasks": [{"id": f"t{j}", "day": 0, "value": 1.0, "features": [0.0]} for j in range(J)],
            "P": np.full(W * J, 0.5).tolist()}


def test_infeasible_exit_code(tmp_path):
    cat = tmp_path / "cat.json"
    cat.write_text(json.dumps(_catalog_doc([[1], [1]])))
    assert main(["allocate", "--catalog", str(cat)]) == EXIT_INFEASIBLE
    cat.write_text(json.dumps(_catalog_doc([[2], [1]])))
    assert main(["allocate", "--catalog", str(cat), "--out", str(tmp_path / "ok.json")]) == EXIT_OK


def test_structural_catalog_exit_code(tmp_path):
    doc = _catalog_doc([[2], [2]])
    doc["P"][0] = 1.5
    cat = tmp_path / "cat.json"
    cat.write_text(json.dumps(doc))
    assert main(["allocate", "--catalog", str(cat)]) == EXIT_INVALID


def test_missing_scenario_exit_code(tmp_path):
    assert main(["train", "--scenario", str(tmp_path / "nope"), "--mode", "dao", "--window", "3"]) == EXIT_INVALID
