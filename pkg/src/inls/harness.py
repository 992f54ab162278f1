"""Scenario execution, run records, persistence and parameter sweeps."""

from __future__ import annotations

import contextlib
import csv
import datetime as _dt
import itertools
import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import RegionAssessment, Verdict, EvidenceItem, classify_initial, verdict as make_verdict
from .coefficient import CoefficientReport, ProblemParams, check_conditions, make_coefficient
from .config import RunConfig, resolve_output_dir
from .diagnostics import CsvSink, VirialWeight, read_csv
from .errors import ConfigError, StageError
from .evolution import EvolveControls, RunFragment, evolve, read_checkpoint, write_checkpoint
from .groundstate import GroundState, build_ground_state
from .state import RadialGrid, RadialState, prepare_initial

log = logging.getLogger(__name__)

PHASE_COLUMNS = (
    "index", "amplitude", "width", "lambda", "energy_phi", "kinetic_phi",
    "region", "verdict", "stop_reason", "run_hash", "error",
)
_CONTROL_KEYS = tuple(f.name for f in fields(EvolveControls))


@contextlib.contextmanager
def _stage(name):
    try:
        yield
    except (StageError, ConfigError):
        raise
    except Exception as exc:  # noqa: BLE001 -- re-raised with the stage attached
        raise StageError(name, exc) from exc


def _relative(path, config: RunConfig):
    path = Path(path)
    if not path.is_absolute() and config.source:
        path = Path(config.source).parent / path
    return path


@dataclass
class Scenario:
    """Validated building blocks of one run."""

    config: RunConfig
    params: ProblemParams
    coefficient: object
    grid: RadialGrid
    controls: EvolveControls
    weight: VirialWeight
    eta: float
    initial: dict


def validate(config: RunConfig) -> Scenario:
    """Let each owning module validate its block; errors name the block."""
    sec = config.section("coefficient")
    try:
        params = ProblemParams(sec["b"])
        family = sec.get("family", "PurePower")
        fp = {k: sec[k] for k in ("a", "d", "c") if k in sec}
        if family == "Tabulated":
            if "table" not in sec:
                raise ValueError("Tabulated family needs a 'table' file with columns r, g")
            tab = np.loadtxt(_relative(sec["table"], config), delimiter=",", ndmin=2)
            fp = {"radii": tab[:, 0], "values": tab[:, 1]}
        coef = make_coefficient(family, fp, params)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc), block="coefficient") from exc

    try:
        grid = RadialGrid(config.get("grid", "r_max"), config.get("grid", "n"))
    except Exception as exc:
        raise ConfigError(str(exc), block="grid") from exc

    ctl = config.section("controls")
    try:
        controls = EvolveControls(**{k: ctl[k] for k in _CONTROL_KEYS if k in ctl})
        weight = VirialWeight(ctl.get("weight", "Unbounded"), ctl.get("weight_scale", 1.0))
        eta = float(ctl.get("eta", 0.0))
        if eta < 0:
            raise ValueError("eta must be >= 0")
    except Exception as exc:
        raise ConfigError(str(exc), block="controls") from exc

    init = config.section("initial")
    profile = init.get("profile")
    allowed = {
        "Gaussian": {"A", "sigma"},
        "ScaledGroundState": {"c", "lam", "taper", "taper_width"},
        "Tabulated": {"path"},
        "Checkpoint": {"path"},
    }
    if profile not in allowed:
        raise ConfigError(f"unknown profile {profile!r}; expected one of {sorted(allowed)}", block="initial")
    extra = set(init) - allowed[profile] - {"profile"}
    if extra:
        raise ConfigError(f"keys {sorted(extra)} do not apply to profile {profile}", block="initial")
    if profile in ("Tabulated", "Checkpoint") and "path" not in init:
        raise ConfigError(f"profile {profile} needs 'path'", block="initial")
    for key in ("A", "sigma", "c", "lam"):
        if key in init and not (init[key] > 0 or (key in ("A", "c") and init[key] == 0)):
            raise ConfigError(f"{key} must be positive", block="initial")
    return Scenario(config, params, coef, grid, controls, weight, eta, init)


def initial_state(sc: Scenario) -> RadialState:
    init = dict(sc.initial)
    profile = init.pop("profile")
    if profile == "Checkpoint":
        state = read_checkpoint(_relative(init["path"], sc.config))
        if state.grid != sc.grid:
            raise ConfigError(f"checkpoint grid {state.grid} differs from configured {sc.grid}", block="initial")
        return state
    if profile == "Tabulated":
        tab = np.loadtxt(_relative(init.pop("path"), sc.config), delimiter=",", ndmin=2)
        values = tab[:, 1] + (1j * tab[:, 2] if tab.shape[1] > 2 else 0.0)
        init = {"radii": tab[:, 0], "values": values}
    return prepare_initial(profile, init, sc.grid, sc.params)


@dataclass
class RunRecord:
    """Everything needed to re-derive and audit one run's verdict."""

    config: RunConfig
    report: CoefficientReport
    ground_state: GroundState
    assessment: RegionAssessment
    records: list
    stop_reason: str
    stop_time: float
    truncation_flag: bool = False
    truncation_time: float | None = None
    refinement: dict | None = None
    eta: float = 0.0
    verdict: Verdict | None = None
    provenance: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)
    final_state: RadialState | None = None

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config.hash,
            "config": self.config.to_dict(),
            "coefficient_report": self.report.to_dict(),
            "ground_state": self.ground_state.summary(),
            "assessment": self.assessment.to_dict(),
            "stop_reason": self.stop_reason,
            "stop_time": self.stop_time,
            "truncation_flag": self.truncation_flag,
            "truncation_time": self.truncation_time,
            "refinement": self.refinement,
            "eta": self.eta,
            "verdict": self.verdict.to_dict() if self.verdict else None,
            "provenance": self.provenance,
            "series": self.paths.get("series"),
        }


def _verdict_from_dict(d: dict) -> Verdict:
    return Verdict(
        kind=d["verdict"],
        evidence=tuple(EvidenceItem(**e) for e in d["evidence"]),
        stop_reason=d["stop_reason"],
        region=d["region"],
        margins=dict(d["margins"]),
    )


def load_run(path) -> RunRecord:
    """Rebuild a RunRecord from its ``*-run.json`` file and the series CSV beside it."""
    path = Path(path)
    d = json.loads(path.read_text())
    records = read_csv(path.parent / d["series"])
    rep = d["coefficient_report"]
    return RunRecord(
        config=RunConfig.from_dict(d["config"]),
        report=CoefficientReport(**rep),
        ground_state=GroundState.from_summary(d["ground_state"]),
        assessment=RegionAssessment(**d["assessment"]),
        records=records,
        stop_reason=d["stop_reason"],
        stop_time=d["stop_time"],
        truncation_flag=d["truncation_flag"],
        truncation_time=d["truncation_time"],
        refinement=d["refinement"],
        eta=d.get("eta", 0.0),
        verdict=_verdict_from_dict(d["verdict"]) if d.get("verdict") else None,
        provenance=d.get("provenance", {}),
        paths={"series": d["series"], "run": str(path)},
    )


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _coefficient_report(sc: Scenario) -> CoefficientReport:
    report = check_conditions(sc.coefficient, sc.params)
    if report.rho_max is not None and report.rho_max > 0:
        report = check_conditions(sc.coefficient, sc.params, rho=report.rho_max)
    return report


def run_scenario(config: RunConfig, out_dir=None, refine: bool = False, write: bool = True,
                 sink=None) -> RunRecord:
    """coefficient -> ground state -> initial data -> classify -> evolve -> verdict.

    With ``write`` the diagnostics CSV (streamed while the run progresses), the
    verdict JSON, the run JSON and, if ``output.checkpoint`` is set, a final
    checkpoint are placed in ``out_dir`` under ``<name>-<config hash>``.
    """
    sc = validate(config)
    started, wall0 = _now(), time.perf_counter()
    with _stage("coefficient"):
        report = _coefficient_report(sc)
    with _stage("groundstate"):
        gs = build_ground_state(sc.params)
    with _stage("initial"):
        state = initial_state(sc)
    with _stage("classify"):
        assessment = classify_initial(state, sc.coefficient, gs, report)

    paths = {}
    stem = f"{config.get('output', 'name', 'run')}-{config.hash}"
    out = None
    if write:
        out = resolve_output_dir(config, out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths["series"] = f"{stem}.csv"

    with _stage("evolve"), contextlib.ExitStack() as stack:
        sinks = [sink] if sink else []
        if write:
            csv_sink = stack.enter_context(CsvSink(out / paths["series"], f"config_hash={config.hash}"))
            sinks.append(csv_sink)

        def fan_out(rec):
            for s in sinks:
                s(rec)

        frag: RunFragment = evolve(state, sc.coefficient, sc.controls, fan_out, sc.weight)

    refinement = None
    if refine:
        with _stage("refine"):
            fine = initial_state(_refined(sc))
            ffrag = evolve(fine, sc.coefficient, sc.controls, None, sc.weight)
            refinement = {
                "n": fine.grid.n, "r_max": fine.grid.r_max, "stop_reason": ffrag.stop_reason,
                "stop_time": ffrag.stop_time, "n_steps": ffrag.n_steps,
                "truncation_flag": ffrag.truncation_flag,
            }

    run = RunRecord(
        config=config, report=report, ground_state=gs, assessment=assessment,
        records=frag.records, stop_reason=frag.stop_reason, stop_time=frag.stop_time,
        truncation_flag=frag.truncation_flag, truncation_time=frag.truncation_time,
        refinement=refinement, eta=sc.eta, paths=paths, final_state=frag.final_state,
    )
    with _stage("verdict"):
        run.verdict = make_verdict(run)
    run.provenance = {
        "version": __version__,
        "started": started,
        "finished": _now(),
        "wall_seconds": time.perf_counter() - wall0,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "n_steps": frag.n_steps,
        "min_dt": frag.min_dt if np.isfinite(frag.min_dt) else None,
        "grid": frag.grid,
        "tail_mass_fraction": state.meta.get("tail_mass_fraction"),
    }
    if write:
        with _stage("output"):
            _write_outputs(run, out, stem)
    return run


def _refined(sc: Scenario) -> Scenario:
    return Scenario(sc.config, sc.params, sc.coefficient, sc.grid.refined(), sc.controls,
                    sc.weight, sc.eta, sc.initial)


def _write_outputs(run: RunRecord, out: Path, stem: str):
    vpath = out / f"{stem}-verdict.json"
    vdoc = {"config_hash": run.config.hash, **run.verdict.to_dict()}
    vpath.write_text(json.dumps(vdoc, indent=2) + "\n")
    run.paths["verdict"] = vpath.name
    if run.config.get("output", "checkpoint", False) and run.final_state is not None:
        cpath = out / f"{stem}-final.ckpt"
        write_checkpoint(cpath, run.final_state)
        run.paths["checkpoint"] = cpath.name
    rpath = out / f"{stem}-run.json"
    run.paths["run"] = rpath.name
    rpath.write_text(json.dumps(run.to_dict(), indent=2) + "\n")


# ------------------------------------------------------------------- sweeps


def _sweep_axes(config: RunConfig):
    sw = config.section("sweep")
    if not sw:
        raise ConfigError("config has no sweep block", block="sweep")
    profile = config.get("initial", "profile")
    mapping = {
        "Gaussian": {"amplitudes": "A", "widths": "sigma"},
        "ScaledGroundState": {"amplitudes": "c", "lambdas": "lam"},
    }.get(profile, {})
    axes = []
    for name, column in (("amplitudes", "amplitude"), ("widths", "width"), ("lambdas", "lambda")):
        if name in sw:
            if name not in mapping:
                raise ConfigError(f"{name} cannot be swept for profile {profile}", block="sweep")
            axes.append((column, mapping[name], sw[name]))
    points = list(itertools.product(*[vals for _, _, vals in axes])) if axes else []
    if not points or any(len(v) == 0 for _, _, v in axes):
        raise ConfigError("sweep cross product is empty", block="sweep")
    return axes, points


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _sweep_point(job):
    index, base, axes, values, evolve_runs, out_dir = job
    row = {"index": index, "amplitude": None, "width": None, "lambda": None}
    overrides = {}
    for (column, key, _), v in zip(axes, values):
        row[column] = v
        overrides[key] = v
    try:
        cfg = RunConfig.from_dict(base).without("sweep").with_updates(
            {"initial": overrides, "output": {"name": f"sweep{index:04d}"}})
        row["run_hash"] = cfg.hash
        if evolve_runs:
            run = run_scenario(cfg, out_dir=out_dir, write=out_dir is not None)
            a, kind, stop = run.assessment, run.verdict.kind, run.stop_reason
        else:
            sc = validate(cfg)
            report = _coefficient_report(sc)
            gs = build_ground_state(sc.params)
            a = classify_initial(initial_state(sc), sc.coefficient, gs, report)
            kind, stop = "NotEvolved", ""
        row.update(energy_phi=a.energy_phi, kinetic_phi=a.kinetic_phi, region=a.region,
                   verdict=kind, stop_reason=stop, error="")
    except Exception as exc:  # noqa: BLE001 -- per-run failures become rows
        row.update(region="", verdict="Error", stop_reason="", error=f"{type(exc).__name__}: {exc}")
    return row


def sweep(config: RunConfig, out_dir=None, threads: int = 1, write_runs: bool = False):
    """Run the cross product of the sweep lists; returns ``(rows, phase_table_path)``.

    Rows are ordered by their index in the cross product whatever order the
    runs finish in, so a repeated sweep produces a byte-identical table.
    """
    axes, points = _sweep_axes(config)
    out = resolve_output_dir(config, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    evolve_runs = config.get("sweep", "evolve", True)
    run_dir = str(out / "runs") if write_runs else None
    base = config.to_dict()
    jobs = [(i, base, axes, vals, evolve_runs, run_dir) for i, vals in enumerate(points)]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    rows.sort(key=lambda r: r["index"])
    path = out / f"{config.get('output', 'name', 'run')}-{config.hash}-phase.csv"
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config.hash}\n")
        w = csv.writer(fh)
        w.writerow(PHASE_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in PHASE_COLUMNS])
    return rows, path


def verify(config: RunConfig | str | None = None, stream=print, dt_scale: float = 1.0,
           criteria=None) -> bool:
    """Run the acceptance suite; True iff every selected criterion passes.

    A config (or path) is validated first and a validation failure is reported
    as a failed line.
    """
    from .acceptance import run_suite

    ok = True
    if config is not None:
        try:
            cfg = RunConfig.load(config) if isinstance(config, (str, Path)) else config
            validate(cfg)
            stream(f"[PASS] config: {cfg.source or 'inline'} validated (hash {cfg.hash})")
        except Exception as exc:  # noqa: BLE001 -- reported, not raised
            stream(f"[FAIL] config: {type(exc).__name__}: {exc}")
            ok = False
    results = run_suite(criteria, dt_scale=dt_scale, stream=stream)
    return ok and all(r.passed for r in results)
