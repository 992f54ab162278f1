import csv
import json

import numpy as np
import pytest

from inls.classifier import BLOWUP, SCATTER, verdict
from inls.config import ENV_OUT_DIR, RunConfig
from inls.diagnostics import read_csv
from inls.errors import ConfigError, StageError
from inls.evolution import read_checkpoint
from inls.harness import PHASE_COLUMNS, load_run, run_scenario, sweep

SMALL = {
    "coefficient": {"b": 1.0},
    "initial": {"profile": "Gaussian", "A": 0.5, "sigma": 2.0},
    "grid": {"r_max": 30.0, "n": 511},
    "controls": {"dt0": 0.002, "t_end": 0.2, "record_every": 0.05},
    "output": {"name": "small", "checkpoint": True},
}

SWEEP = {
    "coefficient": {"b": 1.0},
    "initial": {"profile": "ScaledGroundState", "taper": 100.0, "taper_width": 900.0},
    "grid": {"r_max": 2048.0, "n": 16383},
    "sweep": {"amplitudes": [0.5, 0.9, 1.1, 1.5], "evolve": False},
    "output": {"name": "phase"},
}


@pytest.fixture(autouse=True)
def _no_env(monkeypatch):
    monkeypatch.delenv(ENV_OUT_DIR, raising=False)


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    return run_scenario(RunConfig.from_dict(SMALL), out_dir=out), out


def test_outputs_written(small_run):
    run, out = small_run
    h = run.config.hash
    names = {p.name for p in out.iterdir()}
    assert names == {f"small-{h}.csv", f"small-{h}-verdict.json", f"small-{h}-run.json", f"small-{h}-final.ckpt"}
    first = (out / f"small-{h}.csv").read_text().splitlines()[0]
    assert first == f"# config_hash={h}"
    vdoc = json.loads((out / f"small-{h}-verdict.json").read_text())
    assert vdoc["config_hash"] == h and vdoc["verdict"] == run.verdict.kind
    assert vdoc["region"] == SCATTER
    ck = read_checkpoint(out / f"small-{h}-final.ckpt")
    assert ck.t == pytest.approx(run.stop_time)


def test_streamed_series_matches_records(small_run):
    run, out = small_run
    recs = read_csv(out / run.paths["series"])
    assert len(recs) == len(run.records)
    for a, b in zip(recs, run.records):
        assert a == b  # .17g round-trips exactly


def test_reloaded_run_reproduces_verdict(small_run):
    run, out = small_run
    loaded = load_run(out / run.paths["run"])
    assert loaded.config.hash == run.config.hash
    assert verdict(loaded) == run.verdict
    assert loaded.verdict == run.verdict
    assert loaded.provenance["n_steps"] > 0


def test_refine_records_companion(tmp_path):
    cfg = RunConfig.from_dict({**SMALL, "controls": {"dt0": 0.002, "t_end": 0.05}})
    run = run_scenario(cfg, refine=True, write=False)
    assert run.refinement["n"] == 2 * 511 + 1
    assert run.refinement["stop_reason"] == "t_end"
    assert not list(tmp_path.iterdir())


def test_sink_receives_records():
    seen = []
    run = run_scenario(RunConfig.from_dict(SMALL), write=False, sink=seen.append)
    assert seen == run.records


def test_stage_errors_are_named(tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a checkpoint")
    cfg = RunConfig.from_dict({**SMALL, "initial": {"profile": "Checkpoint", "path": str(bad)}})
    with pytest.raises(StageError) as info:
        run_scenario(cfg, write=False)
    assert info.value.stage == "initial"
    assert "initial" in str(info.value)


def test_invalid_config_is_not_wrapped():
    cfg = RunConfig.from_dict({**SMALL, "grid": {"r_max": 30.0, "n": 0}})
    with pytest.raises(ConfigError) as info:
        run_scenario(cfg, write=False)
    assert info.value.block == "grid"


def test_checkpoint_profile_resumes(small_run, tmp_path):
    run, out = small_run
    ck = out / run.paths["checkpoint"]
    cfg = RunConfig.from_dict({**SMALL, "initial": {"profile": "Checkpoint", "path": str(ck)},
                               "controls": {"dt0": 0.002, "t_end": 0.3}})
    resumed = run_scenario(cfg, write=False)
    assert resumed.records[0].t == pytest.approx(run.stop_time)
    # t_end is a duration measured from the checkpoint time
    assert resumed.stop_time == pytest.approx(run.stop_time + 0.3)
    mismatched = cfg.with_updates({"grid": {"n": 255}})
    with pytest.raises(ConfigError):
        run_scenario(mismatched, write=False)


@pytest.fixture(scope="module")
def phase(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    rows, path = sweep(RunConfig.from_dict(SWEEP), out_dir=out)
    return rows, path


def test_sweep_regions(phase):
    rows, _ = phase
    assert [r["region"] for r in rows] == [SCATTER, SCATTER, BLOWUP, BLOWUP]
    assert [r["verdict"] for r in rows] == ["NotEvolved"] * 4
    assert [r["amplitude"] for r in rows] == [0.5, 0.9, 1.1, 1.5]


def test_phase_table_layout(phase):
    rows, path = phase
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    table = list(csv.DictReader(lines[1:]))
    assert tuple(table[0]) == PHASE_COLUMNS
    assert [int(r["index"]) for r in table] == [0, 1, 2, 3]
    assert all(r["lambda"] == "" for r in table)


def test_sweep_is_byte_identical_and_thread_independent(phase, tmp_path):
    rows, path = phase
    rows2, path2 = sweep(RunConfig.from_dict(SWEEP), out_dir=tmp_path, threads=2)
    assert path2.read_bytes() == path.read_bytes()
    assert rows2 == rows


def test_sweep_errors_become_rows(tmp_path):
    cfg = RunConfig.from_dict({
        **SMALL, "initial": {"profile": "Gaussian", "sigma": 2.0},
        "sweep": {"amplitudes": [0.3, -1.0], "widths": [2.0]},
    })
    rows, _ = sweep(cfg, out_dir=tmp_path)
    assert rows[0]["verdict"] != "Error" and rows[0]["stop_reason"] == "t_end"
    assert rows[1]["verdict"] == "Error" and "ConfigError" in rows[1]["error"]


def test_sweep_axis_checks(tmp_path):
    with pytest.raises(ConfigError):
        sweep(RunConfig.from_dict(SMALL), out_dir=tmp_path)
    cfg = RunConfig.from_dict({**SMALL, "sweep": {"lambdas": [1.0]}})
    with pytest.raises(ConfigError) as info:
        sweep(cfg, out_dir=tmp_path)
    assert info.value.block == "sweep"


def test_env_var_sets_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_OUT_DIR, str(tmp_path / "env"))
    cfg = RunConfig.from_dict({**SMALL, "controls": {"dt0": 0.002, "t_end": 0.01},
                               "output": {"dir": str(tmp_path / "cfg")}})
    run_scenario(cfg)
    assert (tmp_path / "env").is_dir() and not (tmp_path / "cfg").exists()
    run_scenario(cfg, out_dir=tmp_path / "flag")
    assert (tmp_path / "flag").is_dir()
