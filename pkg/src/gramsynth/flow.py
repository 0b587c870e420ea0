"""Trajectory solves, variational propagation, and Jacobian-input products.

Three matrix-valued products feed the Gramians, all solved as augmented
ODEs in d x k variables (never the full d x d flow Jacobian):

* ``flow_input_product``  -- drift-flow Jacobian times B, transported from
  a sample time to the anchor; the coupled (y, Y) system is propagated in
  both directions.
* ``stm_input_product``   -- closed-loop state-transition matrix times B,
  forward to the horizon, reading the controlled state from the
  trajectory's dense interpolant.
* ``chain_input_product`` -- the STM product pushed through the drift
  variational equation back to the anchor.

Sample-time batches run through `parallel.ordered_map`, so they can fan
out over processes while keeping a deterministic index-ordered gather.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Optional

import numpy as np

from .ode import DenseSolution, OdeProblem, SolverConfig, integrate
from .parallel import ordered_map
from .quadrature import simpson_rule
from .systems import ControlAffineSystem, SteeringProblem, drift_flow


@dataclass(frozen=True)
class Trajectory:
    """A controlled trajectory: the control, its dense solution, the system."""

    system: ControlAffineSystem
    control: object  # evaluable: u(t) -> (k,)
    solution: DenseSolution

    @property
    def t0(self) -> float:
        return self.solution.t_span[0]

    @property
    def T(self) -> float:
        return self.solution.t_span[1]

    @property
    def endpoint(self) -> np.ndarray:
        return self.solution.ys[-1].copy()

    def state(self, t: float) -> np.ndarray:
        return self.solution.eval(t)


@dataclass(frozen=True)
class JacobianProduct:
    """A d x k Jacobian-input product sampled at time t."""

    t: float
    matrix: np.ndarray
    kind: str  # flow_input | stm_input | chain_input


def _controlled_rhs(t, x, system, control):
    return system.drift(t, x) + system.input_matrix(t, x) @ control(t)


def solve_trajectory(problem: SteeringProblem, u,
                     config: SolverConfig = SolverConfig()) -> Trajectory:
    """Dense solution of dx/dt = N + B u from x0 over [t0, T]."""
    rhs = partial(_controlled_rhs, system=problem.system, control=u)
    sol = integrate(OdeProblem(rhs, problem.t0, problem.T, problem.x0), config)
    return Trajectory(system=problem.system, control=u, solution=sol)


def residual(problem: SteeringProblem,
             config: SolverConfig = SolverConfig()) -> np.ndarray:
    """Flow-transported endpoint mismatch the steering operator must match.

    Anchor 1: Phi_{T,t0}(x1) - x0; anchor 2: x1 - Phi_{t0,T}(x0).
    """
    sys_ = problem.system
    if problem.anchor == 1:
        back = drift_flow(sys_, problem.T, problem.t0, problem.x1, config)
        return back - problem.x0
    fwd = drift_flow(sys_, problem.t0, problem.T, problem.x0, config)
    return problem.x1 - fwd


def _drift_variational_rhs(s, z, system, d, k):
    y = z[:d]
    Y = z[d:].reshape(d, k)
    out = np.empty_like(z)
    out[:d] = system.drift(s, y)
    out[d:] = (system.drift_jacobian(s, y) @ Y).ravel()
    return out


def _propagate_drift_variational(system, t_from, t_to, y_init, Y_init, config):
    d, k = Y_init.shape
    z0 = np.concatenate([y_init, Y_init.ravel()])
    rhs = partial(_drift_variational_rhs, system=system, d=d, k=k)
    sol = integrate(OdeProblem(rhs, t_from, t_to, z0), config, dense=False)
    return sol.ys[-1][d:].reshape(d, k)


def flow_input_product(traj: Trajectory, t: float, tau: float,
                       config: SolverConfig = SolverConfig()) -> JacobianProduct:
    """D Phi_{t,tau}(x_u(t)) B_t(x_u(t)) via the coupled variational system."""
    x_t = traj.state(t)
    B_t = traj.system.input_matrix(t, x_t)
    if t == tau:
        return JacobianProduct(t=t, matrix=B_t, kind="flow_input")
    Y = _propagate_drift_variational(traj.system, t, tau, x_t, B_t, config)
    return JacobianProduct(t=t, matrix=Y, kind="flow_input")


def _flow_product_task(payload, t):
    traj, tau, config = payload
    return flow_input_product(traj, t, tau, config).matrix


def flow_input_products(traj: Trajectory, ts, tau: float,
                        config: SolverConfig = SolverConfig(),
                        workers: int = 1) -> np.ndarray:
    """Stacked flow-input products at sample times ts; shape (len(ts), d, k)."""
    mats = ordered_map(_flow_product_task, (traj, tau, config), list(ts),
                       workers=workers)
    return np.stack(mats)


def _stm_rhs(s, Yflat, traj, u, d, k):
    x = traj.solution.eval(s)
    J = traj.system.closed_loop_jacobian(s, x, u(s))
    return (J @ Yflat.reshape(d, k)).ravel()


def stm_input_product(traj: Trajectory, u, t: float,
                      config: SolverConfig = SolverConfig(),
                      t_end: Optional[float] = None,
                      initial_matrix: Optional[np.ndarray] = None) -> JacobianProduct:
    """R_u(T,t) B_t(x_u(t)): closed-loop STM product, forward on [t, T].

    ``initial_matrix`` (test hook) replaces B_t(x_u(t)); with the identity
    it yields the full STM R_u(t_end, t).
    """
    T = traj.T if t_end is None else t_end
    x_t = traj.state(t)
    Y0 = traj.system.input_matrix(t, x_t) if initial_matrix is None \
        else np.asarray(initial_matrix, dtype=float)
    if t == T:
        return JacobianProduct(t=t, matrix=Y0.copy(), kind="stm_input")
    d, k = Y0.shape
    rhs = partial(_stm_rhs, traj=traj, u=u, d=d, k=k)
    sol = integrate(OdeProblem(rhs, t, T, Y0.ravel()), config, dense=False)
    return JacobianProduct(t=t, matrix=sol.ys[-1].reshape(d, k),
                           kind="stm_input")


def chain_input_product(traj: Trajectory, u, t: float, tau: float,
                        config: SolverConfig = SolverConfig()) -> JacobianProduct:
    """D Phi_{T,tau}(x_u(T)) R_u(T,t) B_t(x_u(t)).

    The STM product is formed first, then pushed from the horizon to the
    anchor through the drift variational equation; for tau = T it is
    returned unchanged.
    """
    lam = stm_input_product(traj, u, t, config).matrix
    T = traj.T
    if tau == T:
        return JacobianProduct(t=t, matrix=lam, kind="chain_input")
    Y = _propagate_drift_variational(traj.system, T, tau, traj.endpoint,
                                     lam, config)
    return JacobianProduct(t=t, matrix=Y, kind="chain_input")


def _chain_product_task(payload, t):
    traj, u, tau, config = payload
    return chain_input_product(traj, u, t, tau, config).matrix


def chain_input_products(traj: Trajectory, u, ts, tau: float,
                         config: SolverConfig = SolverConfig(),
                         workers: int = 1) -> np.ndarray:
    """Stacked chain products at sample times ts; shape (len(ts), d, k)."""
    mats = ordered_map(_chain_product_task, (traj, u, tau, config), list(ts),
                       workers=workers)
    return np.stack(mats)


def flow_conjugate_check(problem: SteeringProblem, traj: Trajectory, t: float,
                         config: SolverConfig = SolverConfig(),
                         nodes: int = 201, workers: int = 1) -> float:
    """Defect of the flow-conjugate trajectory representation at time t.

    Computes I_u(t) by Simpson quadrature of D Phi_{s,tau} B u over [t0, t]
    and returns |x_u(t) - Phi_{tau,t}(Phi_{t0,tau}(x0) + I_u(t))|.  Both
    sides are produced by independent solves, so this is a consistency
    check of the whole flow/variational stack, not part of synthesis.
    """
    tau = problem.anchor_time
    t0 = problem.t0
    sys_ = problem.system
    if t == t0:
        I_t = np.zeros(sys_.d)
    else:
        rule = simpson_rule(t0, t, nodes)
        D = flow_input_products(traj, rule.nodes, tau, config, workers)
        u_vals = _eval_control(traj.control, rule.nodes, sys_.k)
        I_t = np.einsum("j,jim,jm->i", rule.weights, D, u_vals)
    shifted = drift_flow(sys_, t0, tau, problem.x0, config) + I_t
    predicted = drift_flow(sys_, tau, t, shifted, config)
    return float(np.linalg.norm(traj.state(t) - predicted))


def flow_conjugate_profile(problem: SteeringProblem, traj: Trajectory,
                           check_indices, config: SolverConfig = SolverConfig(),
                           nodes: int = 201, workers: int = 1):
    """Flow-conjugate defects at several grid times, sharing one sample pass.

    ``check_indices`` are even indices into the ``nodes``-point Simpson grid
    on [t0, T].  Returns (times, defects).
    """
    from .quadrature import cumulative_simpson

    tau = problem.anchor_time
    t0, T = problem.t0, problem.T
    sys_ = problem.system
    rule = simpson_rule(t0, T, nodes)
    D = flow_input_products(traj, rule.nodes, tau, config, workers)
    u_vals = _eval_control(traj.control, rule.nodes, sys_.k)
    integrand = np.einsum("jim,jm->ji", D, u_vals)
    prefixes = cumulative_simpson(integrand, rule)  # ((K+1)//2, d)
    base = drift_flow(sys_, t0, tau, problem.x0, config)
    times, defects = [], []
    for idx in check_indices:
        if idx % 2 != 0:
            raise ValueError("check indices must be even (Simpson prefixes)")
        t = float(rule.nodes[idx])
        shifted = base + prefixes[idx // 2]
        predicted = drift_flow(sys_, tau, t, shifted, config)
        times.append(t)
        defects.append(float(np.linalg.norm(traj.state(t) - predicted)))
    return np.asarray(times), np.asarray(defects)


def _eval_control(u, ts, k) -> np.ndarray:
    """Control samples stacked as (len(ts), k)."""
    eval_many = getattr(u, "eval_many", None)
    if eval_many is not None:
        return np.asarray(eval_many(ts), dtype=float).reshape(len(ts), k)
    return np.stack([np.asarray(u(float(t)), dtype=float).reshape(k)
                     for t in ts])
