import json
import os
import subprocess
import sys
import time

import pytest

from enes.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def gen(out, *extra):
    return run("generate", "--kind", "sem-linear", "--d", 5, "--samples", 200, "--graphs", 3, "--seed", 4, "--out-dir", out, *extra)


def test_generate_writes_pairs_and_manifest(tmp_path):
    assert gen(tmp_path / "g") == 0
    files = sorted(p.name for p in (tmp_path / "g").iterdir())
    assert files == [f"graph_00{i}.{ext}" for i in range(3) for ext in ("csv", "json")] + ["manifest.json"]
    manifest = json.loads((tmp_path / "g" / "manifest.json").read_text())
    assert [e["seed"] for e in manifest["graphs"]] == [4, 5, 6]


def test_generate_is_deterministic(tmp_path):
    gen(tmp_path / "a")
    gen(tmp_path / "b")
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_generate_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("ENES_OUT_DIR", str(tmp_path / "env"))
    assert run("generate", "--kind", "mm", "--d", 4, "--samples", 50) == 0
    assert (tmp_path / "env" / "manifest.json").is_file()


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_generate_unwritable_dir(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    try:
        assert gen(locked / "out") == 2
    finally:
        locked.chmod(0o700)


def test_generate_unwritable_path_produces_nothing(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert gen(blocker / "out") == 2
    assert "not writable" in capsys.readouterr().err


def test_generate_d2_succeeds_but_training_fails(tmp_path):
    assert run("generate", "--kind", "sem-linear", "--d", 2, "--samples", 50, "--out-dir", tmp_path / "g") == 0
    assert run("train", "--data-dir", tmp_path / "g", "--epochs", 1, "--out", tmp_path / "m.enes") == 2


def test_train_zero_epochs_and_log(tmp_path):
    gen(tmp_path / "g")
    assert run("train", "--data-dir", tmp_path / "g", "--epochs", 0, "--out", tmp_path / "m0.enes") == 0
    assert (tmp_path / "m0.enes.log.csv").read_text().count("\n") == 1
    assert run("train", "--data-dir", tmp_path / "g", "--epochs", 3, "--lr", 0.05, "--out", tmp_path / "m.enes") == 0
    lines = (tmp_path / "m.enes.log.csv").read_text().strip().split("\n")
    assert len(lines) == 4


def test_train_empty_dir(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert run("train", "--data-dir", tmp_path / "empty", "--out", tmp_path / "m.enes") == 2
    assert "manifest.json" in capsys.readouterr().err
    assert not (tmp_path / "m.enes").exists()


def test_usage_errors_exit_one(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run("generate", "--d", 5)
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run("train", "--data-dir", tmp_path, "--weights", "1,2", "--out", tmp_path / "m")
    assert exc.value.code == 1
    gen(tmp_path / "g")
    assert run("predict", "--data", tmp_path / "g" / "graph_000.csv", "--method", "enes") == 1


def test_predict_and_eval_round_trip(tmp_path, capsys):
    gen(tmp_path / "g")
    truth = tmp_path / "g" / "graph_000.json"
    assert run("eval", "--pred", truth, "--truth", truth, "--out", tmp_path / "r.json") == 0
    assert json.loads((tmp_path / "r.json").read_text())["shd"] == 0
    for method in ("pearson", "pc"):
        out = tmp_path / f"{method}.json"
        assert run("predict", "--data", tmp_path / "g" / "graph_000.csv", "--method", method, "--out", out) == 0
        assert run("eval", "--pred", out, "--truth", truth, "--method", method) == 0
    assert "SHD" in capsys.readouterr().out


def test_predict_enes_deterministic(tmp_path):
    gen(tmp_path / "g")
    run("train", "--data-dir", tmp_path / "g", "--epochs", 2, "--lr", 0.05, "--out", tmp_path / "m.enes")
    for name in ("p1.json", "p2.json"):
        assert run("predict", "--data", tmp_path / "g" / "graph_001.csv", "--model", tmp_path / "m.enes", "--out", tmp_path / name) == 0
    assert (tmp_path / "p1.json").read_bytes() == (tmp_path / "p2.json").read_bytes()


def test_eval_dimension_mismatch(tmp_path, capsys):
    gen(tmp_path / "g")
    run("generate", "--kind", "sem-linear", "--d", 4, "--samples", 50, "--out-dir", tmp_path / "h")
    assert run("eval", "--pred", tmp_path / "h" / "graph_000.json", "--truth", tmp_path / "g" / "graph_000.json") == 2
    err = capsys.readouterr().err
    assert "graph_000.json" in err and "d=4" in err


def test_missing_files_exit_two(tmp_path):
    assert run("predict", "--data", tmp_path / "nope.csv", "--method", "pearson") == 2
    assert run("bench", "--spec", tmp_path / "nope.json", "--out", tmp_path / "r.csv") == 2


def test_bench_smoke_d11(tmp_path):
    spec = {"methods": ["pearson"], "runs": 1, "datasets": [{"tag": "mm-11", "kind": "mm", "d": 11}]}
    (tmp_path / "spec.json").write_text(json.dumps(spec))
    start = time.perf_counter()
    assert run("bench", "--spec", tmp_path / "spec.json", "--out", tmp_path / "r.csv") == 0
    assert time.perf_counter() - start < 60
    assert (tmp_path / "r.csv").read_text().startswith("method,dataset,d,runs")


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "enes", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("enes ")
