import csv
import hashlib
import json
import logging
import shutil

import numpy as np
import pytest

from qis import cache, cli, experiment, ising, metrics, qcnn
from qis.errors import OrderingError
from qis.ising import LabeledStates


def _config(tmp_path, state_cache, **extra):
    doc = {
        "paths": {"cache_dir": str(state_cache), "output": "out"},
        "spsa": {"iterations": 3},
        "axis_search": {"grid_size": 16, "grid_restarts": 1, "random_restarts": 2, "max_evals": 400},
    }
    doc.update(extra)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


def _run(*argv):
    return cli.main([str(a) for a in argv])


def _body_and_header(path):
    text = path.read_text()
    header, body = text.split("\n", 1)
    return header, body


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run("train", "--config", bad) == 2
    bad.write_text(json.dumps({"nonsense": 1}))
    assert _run("train", "--config", bad) == 2
    bad.write_text(json.dumps({"spsa": {"a": -1}}))
    assert _run("train", "--config", bad) == 2
    bad.write_text(json.dumps({"spsa": {"seed": 3}}))
    assert _run("train", "--config", bad) == 2
    bad.write_text(json.dumps({"task": "5-class"}))
    assert _run("train", "--config", bad) == 2
    assert _run("train", "--config", tmp_path / "missing.json") == 2


def test_relative_paths_resolve_against_config(tmp_path):
    path = tmp_path / "sub" / "c.json"
    path.parent.mkdir()
    path.write_text(json.dumps({"paths": {"cache_dir": "cc", "output": "oo"}}))
    cfg = experiment.ExperimentConfig.load(path)
    assert cfg.cache_dir == tmp_path / "sub" / "cc"
    assert cfg.model_path() == tmp_path / "sub" / "oo" / "model_2-class.json"


def test_missing_cache_is_validation_error(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"paths": {"cache_dir": str(tmp_path / "none")}}))
    assert _run("train", "--config", path) == 2


def test_gen_states_idempotent_and_regenerates(tmp_path, state_cache, caplog):
    local = tmp_path / "cache"
    shutil.copytree(state_cache, local, ignore=shutil.ignore_patterns("out"))
    cfg = experiment.ExperimentConfig(paths=experiment.Paths(cache_dir=str(local), output=str(tmp_path / "o")))
    assert experiment.cmd_gen_states(cfg) == {"grid": False, "train": False}
    table = cache.read(cfg.grid_cache())
    assert len(table) == 4096
    assert experiment.residuals(table).max() < 1e-8
    raw = bytearray(cfg.train_cache().read_bytes())
    raw[:6] = b"BROKEN"
    cfg.train_cache().write_bytes(bytes(raw))
    with caplog.at_level(logging.WARNING):
        built = experiment.cmd_gen_states(cfg)
    assert built == {"grid": False, "train": True}
    assert "magic" in caplog.text
    assert cache.is_valid(cfg.train_cache(), N=9, count=40)
    rows = experiment.read_csv(tmp_path / "o" / "gen_states.csv")
    assert rows[0] == ["set", "count", "max_residual", "degenerate"]
    assert float(rows[1][2]) < 1e-8


@pytest.fixture(scope="module")
def trained_dir(tmp_path_factory, state_cache):
    tmp = tmp_path_factory.mktemp("pipeline")
    cfg = _config(tmp, state_cache)
    for task in qcnn.TASKS:
        assert _run("train", "--config", cfg, "--task", task) == 0
    return tmp, cfg


def test_train_outputs(trained_dir, tmp_path, state_cache):
    tmp, cfg = trained_dir
    out = tmp / "out"
    for task, n in (("2-class", 117), ("3-class", 156)):
        doc = json.loads((out / f"model_{task}.json").read_text())
        assert len(doc["params"]) == n and doc["seed"] == 0 and doc["wiring_version"] == qcnn.WIRING_VERSION
        rows = experiment.read_csv(out / f"train_log_{task}.csv")
        assert rows[0] == ["iteration", "loss", "grad_norm"] and len(rows) == 1 + 4
    # rerun in a second directory: identical bytes
    cfg2 = _config(tmp_path, state_cache)
    assert _run("train", "--config", cfg2) == 0
    assert (tmp_path / "out" / "model_2-class.json").read_bytes() == (out / "model_2-class.json").read_bytes()
    assert (tmp_path / "out" / "train_log_2-class.csv").read_bytes() == (out / "train_log_2-class.csv").read_bytes()
    assert _run("train", "--config", cfg2, "--seed", "5") == 0
    assert (tmp_path / "out" / "model_2-class.json").read_bytes() != (out / "model_2-class.json").read_bytes()


def test_csv_header(trained_dir):
    tmp, _ = trained_dir
    header, body = _body_and_header(tmp / "out" / "train_log_2-class.csv")
    assert header == f"# qis train seed=0 sha256={hashlib.sha256(body.encode()).hexdigest()}"


def test_phase_diagram_requires_axes(trained_dir, tmp_path, state_cache):
    cfg = _config(tmp_path, state_cache)
    tmp, _ = trained_dir
    shutil.copytree(tmp / "out", tmp_path / "out")
    for f in (tmp_path / "out").glob("axes_*"):
        f.unlink()
    with pytest.raises(Exception, match="evaluate"):
        experiment.cmd_phase_diagram(experiment.ExperimentConfig.load(cfg))
    assert _run("phase-diagram", "--config", cfg) == 2


def test_evaluate_and_phase_diagram(trained_dir):
    tmp, cfg = trained_dir
    for task in qcnn.TASKS:
        for scenario in ("unbiased", "biased"):
            assert _run("evaluate", "--config", cfg, "--task", task, "--scenario", scenario) == 0
            rows = experiment.read_csv(tmp / "out" / f"metrics_{task}_{scenario}.csv")
            assert rows[0] == list(metrics.CSV_COLUMNS)
            vals = dict(zip(rows[0], rows[1]))
            xq, xacc = float(vals["xi_q"]), float(vals["xi_acc"])
            assert qcnn.output_dim(task) >= xq >= xacc - 1e-6
            for axis in ("X", "Z", "highacc", "opt"):
                assert xacc >= float(vals[f"xi_c_{axis}"]) - 1e-6
            assert 0 < float(vals["efficacy_ratio"]) <= 1 + 1e-9
            axes = json.loads((tmp / "out" / f"axes_{task}_{scenario}.json").read_text())
            assert set(axes["params"]) == {"X", "Z", "highacc", "opt"} and axes["seed"] == 0
    assert _run("phase-diagram", "--config", cfg, "--ppm") == 0
    rows = experiment.read_csv(tmp / "out" / "phase_2-class.csv")
    body = rows[1:]
    for axis in ("X", "Z", "highacc", "opt"):
        assert sum(r[0] == axis for r in body) == 4096
    acc = experiment.read_csv(tmp / "out" / "phase_accuracy_2-class.csv")
    assert [r[0] for r in acc[1:]] == ["X", "Z", "highacc", "opt"]
    ppm = (tmp / "out" / "phase_2-class_X.ppm").read_bytes()
    assert ppm.startswith(b"P6\n64 64\n255\n") and len(ppm) == len(b"P6\n64 64\n255\n") + 64 * 64 * 3


def test_bloch_dump(trained_dir):
    tmp, cfg = trained_dir
    assert _run("bloch-dump", "--config", cfg, "--task", "3-class") == 2
    assert _run("bloch-dump", "--config", cfg, "--scenario", "biased") == 0
    rows = experiment.read_csv(tmp / "out" / "bloch_biased.csv")
    head, body = rows[0], rows[1:]
    assert head == ["index", "h1_over_J", "h2_over_J", "label", "x", "y", "z", "exp_X"]
    assert len(body) == 1500
    assert sum(r[3] == "0" for r in body) == 1480
    for r in body:
        x, y, z, ex = map(float, r[4:8])
        assert x * x + y * y + z * z <= 1 + 1e-9
        assert ex == pytest.approx(x, abs=1e-12)
    hist = experiment.read_csv(tmp / "out" / "bloch_hist_biased.csv")
    assert len(hist) == 1 + 40
    assert sum(int(r[2]) + int(r[3]) for r in hist[1:]) == 1500


def test_single_state_test_set_scores_one(trained_dir, state_cache):
    tmp, cfg_path = trained_dir
    cfg = experiment.ExperimentConfig.load(cfg_path)
    cfg.test_pool = "line"
    model = experiment.load_model(cfg)
    line = experiment.training_data(cfg)
    # one state carrying both labels: every sample is the same state
    one = LabeledStates(line.xs[[5, 5]], line.vectors[[5, 5]], np.array([0, 1]))
    ev = experiment.evaluate_model(model, cfg, line=one)
    assert ev.report.xi_q == pytest.approx(1.0, abs=1e-9)
    assert ev.report.xi_acc == pytest.approx(1.0, abs=1e-9)
    for v in ev.report.xi_c_by_axis.values():
        assert v == pytest.approx(1.0, abs=1e-9)


def test_ordering_failure_exit_code(trained_dir, monkeypatch):
    _, cfg = trained_dir

    def boom(c):
        raise OrderingError("xi_acc exceeds xi_q")

    monkeypatch.setitem(cli.COMMANDS, "evaluate", boom)
    assert _run("evaluate", "--config", cfg) == 3
