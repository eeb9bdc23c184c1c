import json

import pytest

from enes.bench import (
    CSV_COLUMNS,
    BenchError,
    load_spec,
    read_results_csv,
    run_benchmark,
    spec_from_dict,
    write_results,
)
from enes.datagen import graph_and_data, write_observations_csv
from enes.metrics import accuracy_from_shd
from enes.model import init_params, save_params

MM11 = {"tag": "mm-11", "kind": "mm", "d": 11, "samples": 300}


def pearson_spec(**extra):
    obj = {"methods": ["pearson"], "runs": 1, "datasets": [dict(MM11)]}
    obj.update(extra)
    return spec_from_dict(obj)


def test_single_pearson_cell():
    spec = pearson_spec()
    assert spec.datasets[0].seeds == [1000]
    res = run_benchmark(spec)
    assert len(res.rows) == 1
    row = res.rows[0]
    assert (row["method"], row["dataset"], row["d"], row["runs"]) == ("pearson", "mm-11", 11, 1)
    assert row["accuracy"] == accuracy_from_shd(row["shd"], 11)
    assert "pearson" in res.render()


def test_rerun_is_bit_identical():
    assert run_benchmark(pearson_spec(runs=2)).to_csv() == run_benchmark(pearson_spec(runs=2)).to_csv()


def test_csv_round_trip(tmp_path):
    spec = spec_from_dict({"methods": ["pearson", "pc"], "runs": 2, "datasets": [dict(MM11)]})
    res = run_benchmark(spec, jobs=2)
    write_results(res, tmp_path / "r.csv")
    text = (tmp_path / "r.csv").read_text()
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert read_results_csv(text) == res.rows
    for key, rep in res.reports.items():
        assert rep.accuracy == accuracy_from_shd(rep.shd, rep.d)


def test_jobs_do_not_change_results():
    spec = spec_from_dict({"methods": ["pearson", "pc"], "runs": 2, "datasets": [dict(MM11)]})
    assert run_benchmark(spec, jobs=1).to_csv() == run_benchmark(spec, jobs=3).to_csv()


def test_leakage_guard():
    training = {"corpus": [{"kind": "mm", "d": 11, "seeds": [0, 1000]}]}
    with pytest.raises(BenchError, match="overlap"):
        spec_from_dict({"methods": ["enes"], "runs": 2, "datasets": [dict(MM11)], "training": training})


def test_enes_without_model_refused():
    with pytest.raises(BenchError, match="trained model"):
        spec_from_dict({"methods": ["enes"], "datasets": [dict(MM11)]})
    with pytest.raises(BenchError, match="model file not found"):
        spec_from_dict({"methods": ["enes"], "datasets": [dict(MM11)], "model": "/nonexistent/m.enes"})


def test_validation_errors(tmp_path):
    with pytest.raises(BenchError, match="no methods"):
        spec_from_dict({"methods": [], "datasets": [dict(MM11)]})
    with pytest.raises(BenchError, match="unknown methods"):
        spec_from_dict({"methods": ["notears"], "datasets": [dict(MM11)]})
    with pytest.raises(BenchError, match="no datasets"):
        spec_from_dict({"methods": ["pearson"], "datasets": []})
    with pytest.raises(BenchError, match="missing file"):
        spec_from_dict(
            {"methods": ["pearson"], "datasets": [{"tag": "x", "kind": "external", "observations": "a.csv", "truth": "a.json"}]},
            tmp_path,
        )
    with pytest.raises(BenchError, match="cannot read"):
        load_spec(tmp_path / "absent.json")


def test_external_dataset_and_model_file(tmp_path):
    g, obs = graph_and_data("sem-linear", 6, 0.3, 400, 7)
    write_observations_csv(obs, tmp_path / "ext.csv")
    (tmp_path / "ext.json").write_text(g.to_json())
    save_params(init_params(0), tmp_path / "m.enes")
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(
        json.dumps(
            {
                "methods": ["enes", "pearson"],
                "model": "m.enes",
                "datasets": [{"tag": "ext", "kind": "external", "observations": "ext.csv", "truth": "ext.json"}],
            }
        )
    )
    res = run_benchmark(load_spec(spec_path))
    assert [r["runs"] for r in res.rows] == [1, 1]
    assert res.reports[("pearson", "ext")].d == 6


def test_dimension_mismatch_reported(tmp_path):
    g, obs = graph_and_data("sem-linear", 6, 0.3, 200, 7)
    write_observations_csv(obs, tmp_path / "ext.csv")
    (tmp_path / "ext.json").write_text(graph_and_data("sem-linear", 5, 0.3, 200, 7)[0].to_json())
    spec = spec_from_dict(
        {"methods": ["pearson"], "datasets": [{"tag": "ext", "kind": "external", "observations": "ext.csv", "truth": "ext.json"}]},
        tmp_path,
    )
    with pytest.raises(BenchError, match="columns"):
        run_benchmark(spec)


def test_training_block_trains_model():
    training = {
        "corpus": [{"kind": "sem-linear", "d": 5, "samples": 200, "seeds": [0, 1]}],
        "epochs": 1,
        "batch_size": 64,
    }
    spec = spec_from_dict({"methods": ["enes"], "runs": 1, "datasets": [dict(MM11)], "training": training})
    res = run_benchmark(spec)
    assert res.rows[0]["method"] == "enes"
