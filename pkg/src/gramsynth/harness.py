"""Experiment harness: structured configs, run commands, persisted artifacts.

Configs are JSON (nested key/value); every random quantity flows through
named integer seeds derived from the config's root seed with
`numpy.random.SeedSequence`, and the derived seeds are recorded in the
artifact.  Artifacts round-trip bit-exactly: floats are serialized with
their shortest repr both in `summary.json` and in the CSV exports.
"""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional

import numpy as np

from .baselines import chebyshev_reference_control, feedback_linearization_baseline
from .controls import SynthesizedControl
from .errors import ConfigError, GramsynthError
from .flow import residual, solve_trajectory
from .ode import SolverConfig
from .picard import (IterationRecord, SynthesisConfig, control_energy,
                     run_picard)
from .systems import SteeringProblem, make_benchmark, mindy_like

SCHEMA = "v1"
TELEMETRY_COLUMNS = ("n", "err_end", "err_fp", "energy", "energy_sq_norm",
                     "gramian_condition", "wall_time")


@dataclass
class ExperimentConfig:
    """Validated experiment settings (one config file drives one command)."""

    system_name: str = "unicycle"
    system_params: dict = field(default_factory=dict)
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)
    seed: int = 0
    out_dir: str = "runs/out"
    export_samples: int = 1001
    export_format: str = "csv"
    scale: dict = field(default_factory=dict)
    underactuated: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            solver = SolverConfig(**data.get("solver", {}))
            synthesis = SynthesisConfig(solver=solver,
                                        **data.get("synthesis", {}))
            system = data.get("system", {})
            export = data.get("export", {})
            cfg = cls(
                system_name=system.get("name", "unicycle"),
                system_params=dict(system.get("params", {})),
                synthesis=synthesis,
                seed=int(data.get("seed", 0)),
                out_dir=str(data.get("out_dir", "runs/out")),
                export_samples=int(export.get("samples", 1001)),
                export_format=str(export.get("format", "csv")),
                scale=dict(data.get("scale", {})),
                underactuated=dict(data.get("underactuated", {})),
                reference=dict(data.get("reference", {})),
                raw=data,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc
        if cfg.export_format not in ("csv", "json"):
            raise ConfigError("export.format must be 'csv' or 'json'")
        if cfg.export_samples < 2:
            raise ConfigError("export.samples must be >= 2")
        return cfg

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def echo(self) -> dict:
        out = dict(self.raw)
        out.update({
            "system": {"name": self.system_name,
                       "params": _jsonable(self.system_params)},
            "seed": self.seed,
            "out_dir": self.out_dir,
            "export": {"samples": self.export_samples,
                       "format": self.export_format},
            "synthesis": _jsonable(asdict(self.synthesis)),
        })
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


@dataclass
class RunArtifact:
    """Everything one run produced, in a JSON-serializable form."""

    command: str
    config: dict
    status: dict
    telemetry: List[dict]
    summary: dict
    control_samples: dict = field(default_factory=dict)
    trajectory_samples: dict = field(default_factory=dict)
    extra_tables: dict = field(default_factory=dict)
    schema: str = SCHEMA

    @property
    def success(self) -> bool:
        return bool(self.status.get("success", False))

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "command": self.command,
            "config": self.config,
            "status": self.status,
            "telemetry": self.telemetry,
            "summary": self.summary,
            "control_samples": self.control_samples,
            "trajectory_samples": self.trajectory_samples,
            "extra_tables": self.extra_tables,
        }

    def save(self, out_dir: Optional[str] = None) -> str:
        out = out_dir or self.config.get("out_dir", "runs/out")
        os.makedirs(out, exist_ok=True)
        path = os.path.join(out, "summary.json")
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
        if self.config.get("export", {}).get("format", "csv") == "csv":
            if self.telemetry:
                _write_csv(os.path.join(out, "telemetry.csv"),
                           TELEMETRY_COLUMNS,
                           [[row[c] for c in TELEMETRY_COLUMNS]
                            for row in self.telemetry])
            if self.control_samples:
                k = len(self.control_samples["u"][0])
                _write_csv(os.path.join(out, "control.csv"),
                           ["t"] + [f"u{i + 1}" for i in range(k)],
                           [[t] + list(u) for t, u in
                            zip(self.control_samples["t"],
                                self.control_samples["u"])])
            if self.trajectory_samples:
                d = len(self.trajectory_samples["x"][0])
                _write_csv(os.path.join(out, "trajectory.csv"),
                           ["t"] + [f"x{i + 1}" for i in range(d)],
                           [[t] + list(x) for t, x in
                            zip(self.trajectory_samples["t"],
                                self.trajectory_samples["x"])])
            for name, table in self.extra_tables.items():
                _write_csv(os.path.join(out, f"{name}.csv"),
                           table["columns"], table["rows"])
        return path

    @classmethod
    def load(cls, path: str) -> "RunArtifact":
        with open(path) as fh:
            data = json.load(fh)
        return cls(command=data["command"], config=data["config"],
                   status=data["status"], telemetry=data["telemetry"],
                   summary=data["summary"],
                   control_samples=data.get("control_samples", {}),
                   trajectory_samples=data.get("trajectory_samples", {}),
                   extra_tables=data.get("extra_tables", {}),
                   schema=data["schema"])


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _records_to_rows(records: List[IterationRecord]) -> List[dict]:
    return [{"n": r.n, "err_end": r.err_end, "err_fp": r.err_fp,
             "energy": r.energy, "energy_sq_norm": r.energy_sq_norm,
             "gramian_condition": r.gramian_condition,
             "wall_time": r.wall_time} for r in records]


def _sample_control(u, t0, T, n):
    ts = np.linspace(t0, T, n)
    return {"t": ts.tolist(), "u": _jsonable(u.eval_many(ts))}


def _sample_trajectory(traj, n):
    ts = np.linspace(traj.t0, traj.T, n)
    return {"t": ts.tolist(), "x": _jsonable(traj.solution.eval_many(ts))}


def _status_dict(status=None, error: Optional[Exception] = None) -> dict:
    if error is not None:
        return {"criterion": "error", "iterations": 0,
                "initial_gramian_ok": False, "success": False,
                "message": f"{type(error).__name__}: {error}"}
    return {"criterion": status.criterion, "iterations": status.iterations,
            "initial_gramian_ok": status.initial_gramian_ok,
            "success": status.success, "message": status.message}


def run_synthesize(cfg: ExperimentConfig) -> RunArtifact:
    """One Picard synthesis run with full telemetry and sample exports."""
    system, problem = make_benchmark(cfg.system_name, cfg.system_params)
    try:
        u, records, status = run_picard(problem, cfg.synthesis)
    except GramsynthError as exc:
        return RunArtifact(command="synthesize", config=cfg.echo(),
                           status=_status_dict(error=exc), telemetry=[],
                           summary={})
    traj = solve_trajectory(problem, u, cfg.synthesis.solver)
    err_end = float(np.linalg.norm(traj.endpoint - problem.x1))
    energy = control_energy(u, problem.t0, problem.T,
                            cfg.synthesis.energy_points)
    summary = {
        "system": system.name, "d": system.d, "k": system.k,
        "map_kind": cfg.synthesis.map_kind,
        "anchor": problem.anchor if cfg.synthesis.anchor is None
        else cfg.synthesis.anchor,
        "iterations": status.iterations,
        "err_end": err_end,
        "energy": energy,
        "energy_sq_norm": 2.0 * energy,
        "control_l2_norm": float(np.sqrt(2.0 * energy)),
        "wall_time_total": float(sum(r.wall_time for r in records)),
    }
    if isinstance(u, SynthesizedControl) and cfg.synthesis.map_kind == "general":
        y = residual(problem, cfg.synthesis.solver)
        cert = 0.5 * float(y @ u.lam)
        summary["energy_certificate"] = cert
        summary["certificate_rel_gap"] = (abs(cert - energy) / energy
                                          if energy > 0 else 0.0)
    return RunArtifact(
        command="synthesize", config=cfg.echo(),
        status=_status_dict(status), telemetry=_records_to_rows(records),
        summary=summary,
        control_samples=_sample_control(u, problem.t0, problem.T,
                                        cfg.export_samples),
        trajectory_samples=_sample_trajectory(traj, cfg.export_samples))


def run_baseline(cfg: ExperimentConfig) -> RunArtifact:
    """Feedback-linearization baseline on a fully actuated benchmark."""
    system, problem = make_benchmark(cfg.system_name, cfg.system_params)
    try:
        u, energy = feedback_linearization_baseline(problem)
    except GramsynthError as exc:
        return RunArtifact(command="baseline", config=cfg.echo(),
                           status=_status_dict(error=exc), telemetry=[],
                           summary={})
    traj = solve_trajectory(problem, u, cfg.synthesis.solver)
    err_end = float(np.linalg.norm(traj.endpoint - problem.x1))
    ok = err_end <= 1e-6
    status = {"criterion": "baseline", "iterations": 0,
              "initial_gramian_ok": True, "success": ok,
              "message": f"err_end={err_end:.3e}"}
    summary = {"system": system.name, "d": system.d, "k": system.k,
               "err_end": err_end, "energy": energy,
               "energy_sq_norm": 2.0 * energy,
               "control_l2_norm": float(np.sqrt(2.0 * energy))}
    return RunArtifact(
        command="baseline", config=cfg.echo(), status=status, telemetry=[],
        summary=summary,
        control_samples=_sample_control(u, problem.t0, problem.T,
                                        cfg.export_samples),
        trajectory_samples=_sample_trajectory(traj, cfg.export_samples))


def run_reference(cfg: ExperimentConfig) -> RunArtifact:
    """Seeded Chebyshev reference control, optionally simulated forward."""
    section = dict(cfg.reference)
    system, problem = make_benchmark(cfg.system_name, cfg.system_params)
    degree = int(section.get("degree", 5))
    sigma = float(section.get("sigma", 0.2))
    simulate = bool(section.get("simulate", True))
    u = chebyshev_reference_control(system.k, (problem.t0, problem.T),
                                    seed=cfg.seed, degree=degree, sigma=sigma)
    energy = control_energy(u, problem.t0, problem.T)
    summary = {"system": system.name, "k": system.k, "degree": degree,
               "sigma": sigma, "seed": cfg.seed,
               "coefficients": _jsonable(u.coefficients),
               "energy": energy, "energy_sq_norm": 2.0 * energy,
               "control_l2_norm": float(np.sqrt(2.0 * energy))}
    traj_samples = {}
    if simulate:
        traj = solve_trajectory(problem, u, cfg.synthesis.solver)
        summary["endpoint"] = _jsonable(traj.endpoint)
        traj_samples = _sample_trajectory(traj, cfg.export_samples)
    status = {"criterion": "reference", "iterations": 0,
              "initial_gramian_ok": True, "success": True, "message": ""}
    return RunArtifact(
        command="reference", config=cfg.echo(), status=status, telemetry=[],
        summary=summary,
        control_samples=_sample_control(u, problem.t0, problem.T,
                                        cfg.export_samples),
        trajectory_samples=traj_samples)


def _derived_seeds(root: int, *tags: int, n: int = 2):
    ss = np.random.SeedSequence([int(root), *map(int, tags)])
    return [int(s) for s in ss.generate_state(n)]


def run_scale(cfg: ExperimentConfig) -> RunArtifact:
    """Scaling benchmark: per-dimension trials of the general synthesis.

    Each trial builds a fresh fully actuated surrogate network, steers from
    the resting equilibrium to a uniformly sampled target, and records the
    amortized per-iteration wall time.  Trial failures are recorded and the
    sweep continues.
    """
    section = dict(cfg.scale)
    dims = sorted(int(d) for d in section.get("dims", [2, 8]))
    trials = int(section.get("trials", 3))
    t0 = float(section.get("t0", 0.0))
    T = float(section.get("T", 1.0))
    target_upper = float(section.get("target_upper", 0.5))
    if trials < 1:
        raise ConfigError("scale.trials must be >= 1")
    syn = replace(cfg.synthesis,
                  n_max=int(section.get("n_max", cfg.synthesis.n_max)),
                  eps_x=float(section.get("eps_x", 1e-6)))

    rows = []
    for d in dims:
        for trial in range(trials):
            sys_seed, target_seed = _derived_seeds(cfg.seed, d, trial)
            system = mindy_like(d, d, sys_seed)
            x1 = np.random.default_rng(target_seed).uniform(0.0, target_upper,
                                                            size=d)
            problem = SteeringProblem(system, np.zeros(d), x1, t0, T)
            tic = time.perf_counter()
            try:
                _, records, status = run_picard(problem, syn)
                wall = time.perf_counter() - tic
                rows.append({
                    "d": d, "trial": trial, "sys_seed": sys_seed,
                    "target_seed": target_seed,
                    "status": status.criterion,
                    "iterations": status.iterations,
                    "err_end": records[-1].err_end,
                    "wall_time_total": wall,
                    "time_per_iteration": wall / status.iterations})
            except GramsynthError as exc:
                rows.append({
                    "d": d, "trial": trial, "sys_seed": sys_seed,
                    "target_seed": target_seed,
                    "status": f"error:{type(exc).__name__}",
                    "iterations": 0, "err_end": float("nan"),
                    "wall_time_total": time.perf_counter() - tic,
                    "time_per_iteration": float("nan")})

    aggregates = []
    for d in dims:
        sub = [r for r in rows if r["d"] == d and r["iterations"] > 0]
        times = np.array([r["time_per_iteration"] for r in sub])
        errs = np.array([r["err_end"] for r in sub])
        aggregates.append({
            "d": d, "trials_ok": len(sub),
            "time_per_iteration_mean": float(times.mean()) if len(sub) else float("nan"),
            "time_per_iteration_std": float(times.std()) if len(sub) else float("nan"),
            "err_end_max": float(errs.max()) if len(sub) else float("nan")})

    ok = all(r["iterations"] > 0 for r in rows)
    status = {"criterion": "scale", "iterations": len(rows),
              "initial_gramian_ok": True, "success": ok,
              "message": f"{sum(r['iterations'] > 0 for r in rows)}/{len(rows)} trials ok"}
    columns = list(rows[0].keys())
    agg_columns = list(aggregates[0].keys())
    return RunArtifact(
        command="scale", config=cfg.echo(), status=status, telemetry=[],
        summary={"dims": dims, "trials": trials, "horizon": [t0, T],
                 "target_upper": target_upper, "aggregates": aggregates},
        extra_tables={
            "scale": {"columns": columns,
                      "rows": [[r[c] for c in columns] for r in rows]},
            "scale_aggregates": {"columns": agg_columns,
                                 "rows": [[a[c] for c in agg_columns]
                                          for a in aggregates]}})


def run_underactuated(cfg: ExperimentConfig) -> RunArtifact:
    """Underactuated surrogate-network demo via minimum-energy synthesis.

    The target is manufactured by forward simulation under a seeded
    Chebyshev reference control, so it is reachable by construction; the
    run then checks that the synthesized control undercuts the reference
    control's energy.
    """
    section = dict(cfg.underactuated)
    d = int(section.get("d", 100))
    k = int(section.get("k", 50))
    t0 = float(section.get("t0", 0.0))
    T = float(section.get("T", 1.0))
    degree = int(section.get("degree", 5))
    sigma = float(section.get("sigma", 0.2))
    sys_seed, x0_seed, ref_seed = _derived_seeds(cfg.seed, d, k, n=3)

    system = mindy_like(d, k, sys_seed)
    x0 = np.random.default_rng(x0_seed).standard_normal(d)
    u_ref = chebyshev_reference_control(k, (t0, T), seed=ref_seed,
                                        degree=degree, sigma=sigma)
    probe = SteeringProblem(system, x0, np.zeros(d), t0, T)
    ref_traj = solve_trajectory(probe, u_ref, cfg.synthesis.solver)
    x1 = ref_traj.endpoint
    problem = SteeringProblem(system, x0, x1, t0, T)

    syn = replace(cfg.synthesis, map_kind="minimum_energy",
                  n_max=int(section.get("n_max", 50)))
    try:
        u, records, status = run_picard(problem, syn)
    except GramsynthError as exc:
        return RunArtifact(command="underactuated", config=cfg.echo(),
                           status=_status_dict(error=exc), telemetry=[],
                           summary={})

    E_synth = control_energy(u, t0, T)
    E_ref = control_energy(u_ref, t0, T)
    errs = [r.err_end for r in records]
    monotone_ok = all(errs[i + 1] <= 2.0 * errs[i]
                      for i in range(len(errs) - 1)) and errs[-1] < errs[0]
    reduced = E_synth < E_ref
    st = _status_dict(status)
    st["success"] = bool(st["success"] and reduced)

    traj = solve_trajectory(problem, u, cfg.synthesis.solver)
    ts = np.linspace(t0, T, cfg.export_samples)
    summary = {
        "system": system.name, "d": d, "k": k, "horizon": [t0, T],
        "seeds": {"system": sys_seed, "x0": x0_seed, "reference": ref_seed},
        "iterations": status.iterations,
        "err_end": float(np.linalg.norm(traj.endpoint - x1)),
        "energy_synthesized": E_synth,
        "energy_reference": E_ref,
        "l2_norm_synthesized": float(np.sqrt(2 * E_synth)),
        "l2_norm_reference": float(np.sqrt(2 * E_ref)),
        "energy_reduced": bool(reduced),
        "monotone_decay": bool(monotone_ok),
    }
    ref_samples = u_ref.eval_many(ts)
    return RunArtifact(
        command="underactuated", config=cfg.echo(), status=st,
        telemetry=_records_to_rows(records), summary=summary,
        control_samples=_sample_control(u, t0, T, cfg.export_samples),
        trajectory_samples=_sample_trajectory(traj, cfg.export_samples),
        extra_tables={"reference_control": {
            "columns": ["t"] + [f"u{i + 1}" for i in range(k)],
            "rows": [[t] + list(row) for t, row in zip(ts, ref_samples)]}})
