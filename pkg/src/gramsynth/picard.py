"""The two Gramian synthesis maps and their Picard iteration.

Each map application runs the same five-step pass: solve the state
equation, sample the Jacobian-input products at the quadrature nodes,
assemble the Gramian, solve for the multiplier, and form the updated
control pointwise from the product rows.  `run_picard` iterates the
selected map, records per-iteration telemetry, and stops on any of the
three termination criteria (iteration budget, endpoint tolerance,
control-update tolerance).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .controls import ControlFunction, SynthesizedControl, ZeroControl
from .errors import PicardDiverged
from .flow import (Trajectory, chain_input_products, flow_input_products,
                   residual, solve_trajectory)
from .gramian import (GramianMatrix, assemble_mixed_from_samples,
                      assemble_symmetric_from_samples, simpson_rule,
                      solve_gramian)
from .ode import SolverConfig
from .quadrature import default_node_count

MAP_KINDS = ("general", "minimum_energy")

# Regularization kicks in by default at this state dimension.
_REG_DIM_THRESHOLD = 64
_DEFAULT_REG = 1e-6


@dataclass(frozen=True)
class SynthesisConfig:
    """Settings of one Picard synthesis run.

    ``anchor`` of None defers to the problem's anchor.  ``quadrature_points``
    (K) of None picks 201/1001/5001 by dimension; ``dense_grid_points`` (M)
    of None reuses the K quadrature nodes as the synthesized control's
    sample grid, which costs nothing beyond the Gramian pass.
    ``regularization`` of None means 0 below dimension 64 and 1e-6 from 64 up.
    """

    map_kind: str = "general"
    anchor: Optional[int] = None
    n_max: int = 20
    eps_x: float = 1e-9
    eps_u: float = 1e-9
    quadrature_points: Optional[int] = None
    dense_grid_points: Optional[int] = None
    eval_strategy: str = "dense"
    solver: SolverConfig = field(default_factory=SolverConfig)
    regularization: Optional[float] = None
    workers: int = 1
    fp_grid_points: int = 1001
    energy_points: int = 1001

    def __post_init__(self):
        if self.map_kind not in MAP_KINDS:
            raise ValueError(f"map_kind must be one of {MAP_KINDS}")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if not (self.eps_x > 0 and self.eps_u > 0):
            raise ValueError("tolerances must be positive")
        if self.anchor not in (None, 1, 2):
            raise ValueError("anchor must be 1, 2, or None")
        if self.eval_strategy not in ("dense", "on_demand"):
            raise ValueError("eval_strategy must be 'dense' or 'on_demand'")
        if self.dense_grid_points is not None and self.dense_grid_points < 2:
            raise ValueError("dense_grid_points must be >= 2")

    def resolved_points(self, d: int) -> int:
        return self.quadrature_points or default_node_count(d)

    def resolved_regularization(self, d: int) -> float:
        if self.regularization is not None:
            return self.regularization
        return _DEFAULT_REG if d >= _REG_DIM_THRESHOLD else 0.0


@dataclass(frozen=True)
class IterationRecord:
    """Telemetry of one Picard pass."""

    n: int
    err_end: float
    err_fp: float
    energy: float
    energy_sq_norm: float
    gramian_condition: float
    wall_time: float


@dataclass(frozen=True)
class RunStatus:
    """Which termination criterion fired, plus feasibility reporting."""

    criterion: str          # endpoint_tolerance | control_update_tolerance | max_iterations
    iterations: int
    initial_gramian_ok: bool
    message: str = ""

    @property
    def success(self) -> bool:
        return self.criterion in ("endpoint_tolerance",
                                  "control_update_tolerance",
                                  "max_iterations")


def _resolve_problem(problem, config):
    if config.anchor is not None and config.anchor != problem.anchor:
        problem = replace(problem, anchor=config.anchor)
    return problem


def _finish_control(lam, tau, kind, traj, rule, samples, config, solve_info):
    """Build the synthesized control, sampling an extra grid only if asked."""
    d = traj.system.d
    M = config.dense_grid_points
    if M is None or M == rule.K:
        grid_ts = rule.nodes
        grid_vals = np.einsum("kim,i->km", samples, lam)
    else:
        from .flow import chain_input_products as _cc
        from .flow import flow_input_products as _fc
        grid_ts = np.linspace(traj.t0, traj.T, M)
        if kind == "general":
            rows = _fc(traj, grid_ts, tau, config.solver, config.workers)
        else:
            rows = _cc(traj, traj.control, grid_ts, tau, config.solver,
                       config.workers)
        grid_vals = np.einsum("kim,i->km", rows, lam)
    return SynthesizedControl(
        lam=lam, anchor_time=tau, map_kind=kind, trajectory=traj,
        grid_ts=grid_ts, grid_values=grid_vals,
        strategy=config.eval_strategy, solver=config.solver,
        solve_info=solve_info)


def apply_general_map(problem, u: ControlFunction,
                      config: SynthesisConfig = SynthesisConfig(),
                      on_deficient: str = "raise"
                      ) -> Tuple[ControlFunction, Trajectory, GramianMatrix]:
    """One application of the symmetric-Gramian steering map."""
    problem = _resolve_problem(problem, config)
    d = problem.system.d
    tau = problem.anchor_time
    traj = solve_trajectory(problem, u, config.solver)
    rule = simpson_rule(problem.t0, problem.T, config.resolved_points(d))
    D = flow_input_products(traj, rule.nodes, tau, config.solver,
                            config.workers)
    gram = assemble_symmetric_from_samples(D, rule)
    y = residual(problem, config.solver)
    sol = solve_gramian(gram, y, reg=config.resolved_regularization(d),
                        on_deficient=on_deficient)
    u_next = _finish_control(sol.lam, tau, "general", traj, rule, D, config,
                             sol)
    return u_next, traj, gram


def apply_minimum_energy_map(problem, u: ControlFunction,
                             config: SynthesisConfig = SynthesisConfig(),
                             on_deficient: str = "raise"
                             ) -> Tuple[ControlFunction, Trajectory, GramianMatrix]:
    """One application of the Lagrange-multiplier (mixed-Gramian) map."""
    problem = _resolve_problem(problem, config)
    d = problem.system.d
    tau = problem.anchor_time
    traj = solve_trajectory(problem, u, config.solver)
    rule = simpson_rule(problem.t0, problem.T, config.resolved_points(d))
    D = flow_input_products(traj, rule.nodes, tau, config.solver,
                            config.workers)
    C = chain_input_products(traj, u, rule.nodes, tau, config.solver,
                             config.workers)
    gram = assemble_mixed_from_samples(D, C, rule)
    y = residual(problem, config.solver)
    sol = solve_gramian(gram, y, reg=config.resolved_regularization(d),
                        on_deficient=on_deficient)
    u_next = _finish_control(sol.lam, tau, "minimum_energy", traj, rule, C,
                             config, sol)
    return u_next, traj, gram


def endpoint_error(traj: Trajectory, x1: np.ndarray) -> float:
    """Euclidean distance between the steered endpoint and the target."""
    return float(np.linalg.norm(traj.endpoint - np.asarray(x1, dtype=float)))


def fixed_point_error(u_next: ControlFunction, u: ControlFunction,
                      grid_points: int = 1001) -> float:
    """Sup over a uniform grid of |u_next(t) - u(t)| (grid sup, not ess-sup)."""
    t0, T = u.span
    ts = np.linspace(t0, T, grid_points)
    diff = u_next.eval_many(ts) - u.eval_many(ts)
    return float(np.max(np.linalg.norm(diff, axis=1)))


def control_energy(u: ControlFunction, t0: float, T: float,
                   nodes: int = 1001) -> float:
    """E(u) = 1/2 int |u|^2 dt by composite Simpson quadrature."""
    rule = simpson_rule(t0, T, nodes)
    vals = u.eval_many(rule.nodes)
    return 0.5 * float(rule.weights @ np.sum(vals * vals, axis=1))


def energy_certificate(G: GramianMatrix, y: np.ndarray,
                       lam: np.ndarray) -> float:
    """1/2 y^T lam; equals the control energy at a symmetric-map fixed point."""
    if G.kind != "symmetric":
        raise ValueError("energy certificate applies to the symmetric Gramian")
    return 0.5 * float(np.asarray(y) @ np.asarray(lam))


def diverging(err_trace) -> bool:
    """Abort rule: three consecutive endpoint-error increases totalling x10."""
    if len(err_trace) < 4:
        return False
    e = err_trace[-4:]
    return e[3] > e[2] > e[1] > e[0] and e[3] >= 10.0 * e[0]


def run_picard(problem, config: SynthesisConfig = SynthesisConfig(),
               u0: Optional[ControlFunction] = None
               ) -> Tuple[ControlFunction, List[IterationRecord], RunStatus]:
    """Picard iteration of the selected synthesis map from u0 (default zero).

    A rank-deficient Gramian at the initial iterate proceeds through the
    minimum-norm least-squares solve and is reported via
    ``status.initial_gramian_ok``; from iteration 1 on it raises
    `SingularGramian`.  Persistent endpoint-error growth (three consecutive
    increases totalling x10) raises `PicardDiverged`.
    """
    problem = _resolve_problem(problem, config)
    apply_map = (apply_general_map if config.map_kind == "general"
                 else apply_minimum_energy_map)
    u: ControlFunction = u0 if u0 is not None else ZeroControl(
        problem.system.k, (problem.t0, problem.T))

    records: List[IterationRecord] = []
    err_trace: List[float] = []
    initial_ok = True

    for n in range(config.n_max):
        tic = time.perf_counter()
        u_next, traj, gram = apply_map(
            problem, u, config, on_deficient="allow" if n == 0 else "raise")
        err_end = endpoint_error(traj, problem.x1)
        err_fp = fixed_point_error(u_next, u, config.fp_grid_points)
        energy = control_energy(u, problem.t0, problem.T,
                                config.energy_points)
        wall = time.perf_counter() - tic
        records.append(IterationRecord(
            n=n, err_end=err_end, err_fp=err_fp, energy=energy,
            energy_sq_norm=2.0 * energy,
            gramian_condition=float(gram.condition_estimate or 0.0),
            wall_time=wall))
        if n == 0 and u_next.solve_info is not None:
            initial_ok = not u_next.solve_info.deficient

        if err_end <= config.eps_x:
            return u, records, RunStatus(
                "endpoint_tolerance", n + 1, initial_ok,
                f"err_end={err_end:.3e} <= {config.eps_x:g}")
        if err_fp <= config.eps_u:
            return u_next, records, RunStatus(
                "control_update_tolerance", n + 1, initial_ok,
                f"err_fp={err_fp:.3e} <= {config.eps_u:g}")

        err_trace.append(err_end)
        if diverging(err_trace):
            e = err_trace[-4:]
            raise PicardDiverged(
                f"err_end grew from {e[0]:.3e} to {e[3]:.3e} over three "
                "consecutive iterations")
        u = u_next

    return u, records, RunStatus("max_iterations", config.n_max, initial_ok,
                                 f"stopped after N_max={config.n_max}")
