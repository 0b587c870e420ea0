"""Control-affine system abstraction and the benchmark catalog.

A system is the pair (N, B) of dx/dt = N_t(x) + B_t(x) u together with
analytic Jacobian providers.  All catalog entries are built from
module-level functions (picklable, so product solves can run in worker
processes).  `jacobian_fd` is the finite-difference oracle used by the
test suite to validate every analytic Jacobian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteValue, UnknownSystem
from .ode import OdeProblem, SolverConfig, integrate

Field = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ControlAffineSystem:
    """The tuple (N, B, D_xN, D_x[N + Bu]) with dimensions d and k."""

    name: str
    d: int
    k: int
    drift: Field
    input_matrix: Field
    drift_jacobian: Field
    closed_loop_jacobian: Callable[[float, np.ndarray, np.ndarray], np.ndarray]

    def __post_init__(self):
        if not (1 <= self.k <= self.d):
            raise ValueError("input dimension must satisfy 1 <= k <= d")

    def rhs(self, t: float, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.drift(t, x) + self.input_matrix(t, x) @ u


@dataclass(frozen=True)
class SteeringProblem:
    """Boundary data (x0, x1) on [t0, T] with the Gramian anchor choice.

    ``anchor`` selects the reference time of the flow Jacobians:
    1 anchors at t0, 2 anchors at T.
    """

    system: ControlAffineSystem
    x0: np.ndarray
    x1: np.ndarray
    t0: float
    T: float
    anchor: int = 2

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "x1", np.asarray(self.x1, dtype=float))
        if not self.t0 < self.T:
            raise ValueError("t0 must be < T")
        if self.x0.shape != (self.system.d,) or self.x1.shape != (self.system.d,):
            raise ValueError("boundary states must have dimension d")
        if self.anchor not in (1, 2):
            raise ValueError("anchor must be 1 (t0) or 2 (T)")

    @property
    def anchor_time(self) -> float:
        return self.t0 if self.anchor == 1 else self.T


def jacobian_fd(f: Field, t: float, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of x -> f(t, x); test oracle only."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((np.asarray(f(t, x + e)) - np.asarray(f(t, x - e))) / (2 * h))
    J = np.stack(cols, axis=1)
    if not np.all(np.isfinite(J)):
        raise NonFiniteValue("finite-difference probe produced NaN/Inf")
    return J


def drift_flow(system: ControlAffineSystem, s: float, t: float,
               x: np.ndarray, config: SolverConfig = SolverConfig()) -> np.ndarray:
    """Drift-only flow map: the state at time t of dx/dt = N, x(s) = x."""
    x = np.asarray(x, dtype=float)
    if s == t:
        return x.copy()
    sol = integrate(OdeProblem(system.drift, s, t, x), config, dense=False)
    return sol.ys[-1]


# ---------------------------------------------------------------------------
# catalog vector fields (module level so systems pickle across processes)

def _zero_drift(t, x):
    return np.zeros_like(x)


def _zero_jac(t, x):
    return np.zeros((x.size, x.size))


def _unicycle_input(t, x):
    th = x[2]
    return np.array([[math.cos(th), 0.0],
                     [math.sin(th), 0.0],
                     [0.0, 1.0]])


def _unicycle_cl_jac(t, x, u):
    th = x[2]
    J = np.zeros((3, 3))
    J[0, 2] = -u[0] * math.sin(th)
    J[1, 2] = u[0] * math.cos(th)
    return J


_PEND_LAM = 0.78
_PEND_BETA = 0.13


def _pend_b(t):
    return (1.0 + 0.5 * math.cos(t)) ** -2


def _pend_drift(t, x):
    b = _pend_b(t)
    a = _PEND_LAM ** 2 * math.sqrt(b)
    g = -b * math.sin(t) + _PEND_BETA * _PEND_LAM
    return np.array([x[1], -a * math.sin(x[0]) - g * x[1]])


def _pend_input(t, x):
    return np.array([[0.0], [_pend_b(t)]])


def _pend_jac(t, x):
    b = _pend_b(t)
    a = _PEND_LAM ** 2 * math.sqrt(b)
    g = -b * math.sin(t) + _PEND_BETA * _PEND_LAM
    return np.array([[0.0, 1.0], [-a * math.cos(x[0]), -g]])


def _pend_cl_jac(t, x, u):
    return _pend_jac(t, x)


_SIR_LAM, _SIR_BETA, _SIR_MU, _SIR_GAM = 1.0, 2.0, 0.2, 1.0


def _sir_drift(t, x):
    S, I, R = x
    return np.array([
        _SIR_LAM - _SIR_BETA * S * I - _SIR_MU * S,
        _SIR_BETA * S * I - (_SIR_MU + _SIR_GAM) * I,
        _SIR_GAM * I - _SIR_MU * R,
    ])


def _sir_input(t, x):
    return np.array([[-x[0]], [0.0], [0.0]])


def _sir_jac(t, x):
    S, I, _ = x
    return np.array([
        [-_SIR_BETA * I - _SIR_MU, -_SIR_BETA * S, 0.0],
        [_SIR_BETA * I, _SIR_BETA * S - _SIR_MU - _SIR_GAM, 0.0],
        [0.0, _SIR_GAM, -_SIR_MU],
    ])


def _sir_cl_jac(t, x, u):
    J = _sir_jac(t, x)
    J = J.copy()
    J[0, 0] -= u[0]
    return J


_SC_J = np.array([10.0, 20.0, 15.0])
_SC_A = np.array([(_SC_J[1] - _SC_J[2]) / _SC_J[0],
                  (_SC_J[2] - _SC_J[0]) / _SC_J[1],
                  (_SC_J[0] - _SC_J[1]) / _SC_J[2]])


def _spacecraft_drift(t, x):
    phi, th = x[0], x[1]
    w1, w2, w3 = x[3], x[4], x[5]
    sphi, cphi = math.sin(phi), math.cos(phi)
    tth, cth = math.tan(th), math.cos(th)
    m = w2 * sphi + w3 * cphi
    return np.array([
        w1 + tth * m,
        w2 * cphi - w3 * sphi,
        m / cth,
        _SC_A[0] * w2 * w3,
        _SC_A[1] * w3 * w1,
        _SC_A[2] * w1 * w2,
    ])


def _spacecraft_input(t, x):
    B = np.zeros((6, 3))
    B[3:, :] = np.diag(1.0 / _SC_J)
    return B


def _spacecraft_jac(t, x):
    phi, th = x[0], x[1]
    w1, w2, w3 = x[3], x[4], x[5]
    sphi, cphi = math.sin(phi), math.cos(phi)
    tth, cth = math.tan(th), math.cos(th)
    m = w2 * sphi + w3 * cphi          # appears in phi-dot and psi-dot
    mp = w2 * cphi - w3 * sphi         # its phi-derivative
    J = np.zeros((6, 6))
    J[0, 0] = tth * mp
    J[0, 1] = m / cth ** 2
    J[0, 3:] = [1.0, tth * sphi, tth * cphi]
    J[1, 0] = -m
    J[1, 3:] = [0.0, cphi, -sphi]
    J[2, 0] = mp / cth
    J[2, 1] = m * tth / cth
    J[2, 3:] = [0.0, sphi / cth, cphi / cth]
    J[3, 4] = _SC_A[0] * w3
    J[3, 5] = _SC_A[0] * w2
    J[4, 3] = _SC_A[1] * w3
    J[4, 5] = _SC_A[1] * w1
    J[5, 3] = _SC_A[2] * w2
    J[5, 4] = _SC_A[2] * w1
    return J


def _spacecraft_cl_jac(t, x, u):
    return _spacecraft_jac(t, x)


_HOP_DECAY = np.array([0.5, 0.3])
_HOP_W = np.array([[0.5, -1.5], [1.5, -0.5]])


def _hopfield_drift(t, x):
    return -_HOP_DECAY * x + _HOP_W @ np.tanh(x)


def _hopfield_jac(t, x):
    s = 1.0 - np.tanh(x) ** 2
    return -np.diag(_HOP_DECAY) + _HOP_W * s[None, :]


def _hopfield_cl_jac(t, x, u):
    return _hopfield_jac(t, x)


def _const_input(t, x, B):
    return B


def _const_cl_jac_from(t, x, u, jac):
    return jac(t, x)


def _mindy_psi(x, alpha, beta):
    up = beta * x + 0.5
    dn = beta * x - 0.5
    return np.sqrt(alpha ** 2 + up ** 2) - np.sqrt(alpha ** 2 + dn ** 2)


def _mindy_psi_deriv(x, alpha, beta):
    up = beta * x + 0.5
    dn = beta * x - 0.5
    return beta * (up / np.sqrt(alpha ** 2 + up ** 2)
                   - dn / np.sqrt(alpha ** 2 + dn ** 2))


def _mindy_drift(t, x, W, decay, alpha, beta):
    return -decay * x + W @ _mindy_psi(x, alpha, beta)


def _mindy_jac(t, x, W, decay, alpha, beta):
    return -np.diag(decay) + W * _mindy_psi_deriv(x, alpha, beta)[None, :]


def _mindy_cl_jac(t, x, u, W, decay, alpha, beta):
    return _mindy_jac(t, x, W, decay, alpha, beta)


def _lti_drift(t, x, A):
    return A @ x


def _lti_jac(t, x, A):
    return np.array(A)


def _lti_cl_jac(t, x, u, A):
    return np.array(A)


def linear_system(A: np.ndarray, B: np.ndarray, name: str = "lti") -> ControlAffineSystem:
    """LTI system dx/dt = A x + B u (mainly for oracle tests)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    d, k = B.shape
    return ControlAffineSystem(
        name=name, d=d, k=k,
        drift=partial(_lti_drift, A=A),
        input_matrix=partial(_const_input, B=B),
        drift_jacobian=partial(_lti_jac, A=A),
        closed_loop_jacobian=partial(_lti_cl_jac, A=A),
    )


def mindy_like(d: int, k: int, seed: int = 0) -> ControlAffineSystem:
    """Synthetic Hopfield-type network with the MINDy activation.

    W has i.i.d. normal entries rescaled so that the effective recurrent
    linearization at rest, W diag(psi'(0)), has spectral radius 0.9 (the
    activation slope psi'(0) = beta/sqrt(alpha^2 + 1/4) is ~6, so scaling
    the raw W to radius 0.9 would put the rest state deep in the unstable
    regime where the fixed-point iteration stops contracting).  Decay is
    uniform on [0.3, 0.7], beta = 20/3, per-component alpha = 1, and the
    input matrix is the first k columns of the identity.
    """
    rng = np.random.default_rng(seed)
    alpha = np.ones(d)
    beta = 20.0 / 3.0
    slope_at_rest = float(_mindy_psi_deriv(np.zeros(1), np.ones(1), beta)[0])
    W = rng.standard_normal((d, d))
    W *= 0.9 / (np.max(np.abs(np.linalg.eigvals(W))) * slope_at_rest)
    decay = rng.uniform(0.3, 0.7, size=d)
    B = np.eye(d)[:, :k].copy()
    params = dict(W=W, decay=decay, alpha=alpha, beta=beta)
    return ControlAffineSystem(
        name=f"mindy_like_d{d}_k{k}_s{seed}", d=d, k=k,
        drift=partial(_mindy_drift, **params),
        input_matrix=partial(_const_input, B=B),
        drift_jacobian=partial(_mindy_jac, **params),
        closed_loop_jacobian=partial(_mindy_cl_jac, **params),
    )


_CATALOG = {
    "unicycle",
    "pendulum",
    "sir",
    "spacecraft",
    "hopfield2d_full",
    "hopfield2d_under",
    "mindy_like",
}


def make_benchmark(name: str, params: Optional[dict] = None):
    """Benchmark system plus its boundary-value setup.

    ``params`` may override boundary data (x0, x1, t0, T, anchor) for any
    system, and supplies (d, k, seed) for ``mindy_like``.

    Returns (ControlAffineSystem, SteeringProblem).
    """
    if name not in _CATALOG:
        raise UnknownSystem(f"unknown benchmark {name!r}; choose from "
                            f"{sorted(_CATALOG)}")
    p = dict(params or {})

    if name == "unicycle":
        system = ControlAffineSystem(
            name="unicycle", d=3, k=2,
            drift=_zero_drift, input_matrix=_unicycle_input,
            drift_jacobian=_zero_jac, closed_loop_jacobian=_unicycle_cl_jac)
        bounds = dict(x0=[0.5, 0.25, math.pi / 12],
                      x1=[1.0, 0.75, 4 * math.pi / 3], t0=0.0, T=2.0)
    elif name == "pendulum":
        system = ControlAffineSystem(
            name="pendulum", d=2, k=1,
            drift=_pend_drift, input_matrix=_pend_input,
            drift_jacobian=_pend_jac, closed_loop_jacobian=_pend_cl_jac)
        bounds = dict(x0=[0.0, 0.0], x1=[math.pi, 0.0], t0=0.5, T=1.5)
    elif name == "sir":
        system = ControlAffineSystem(
            name="sir", d=3, k=1,
            drift=_sir_drift, input_matrix=_sir_input,
            drift_jacobian=_sir_jac, closed_loop_jacobian=_sir_cl_jac)
        bounds = dict(x0=[1.0, 0.2, 0.1], x1=[0.5, 0.25, 0.2], t0=0.0, T=0.5)
    elif name == "spacecraft":
        system = ControlAffineSystem(
            name="spacecraft", d=6, k=3,
            drift=_spacecraft_drift, input_matrix=_spacecraft_input,
            drift_jacobian=_spacecraft_jac,
            closed_loop_jacobian=_spacecraft_cl_jac)
        bounds = dict(x0=[0.3, 0.2, 0.1, 0.0, 0.0, 0.0],
                      x1=[0.0] * 6, t0=0.0, T=5.0)
    elif name in ("hopfield2d_full", "hopfield2d_under"):
        if name == "hopfield2d_full":
            B = np.eye(2)
        else:
            B = np.array([[1.0], [0.5]])
        system = ControlAffineSystem(
            name=name, d=2, k=B.shape[1],
            drift=_hopfield_drift,
            input_matrix=partial(_const_input, B=B),
            drift_jacobian=_hopfield_jac,
            closed_loop_jacobian=_hopfield_cl_jac)
        bounds = dict(x0=[1.0, 1.0], x1=[-1.0, -1.0], t0=0.0, T=1.5)
    else:  # mindy_like
        d = int(p.pop("d", 100))
        k = int(p.pop("k", d))
        seed = int(p.pop("seed", 0))
        system = mindy_like(d, k, seed)
        bounds = dict(x0=np.ones(d), x1=-0.5 * np.ones(d), t0=0.0, T=3.0)

    bounds.update({key: p[key] for key in ("x0", "x1", "t0", "T", "anchor")
                   if key in p})
    problem = SteeringProblem(system=system, **bounds)
    return system, problem
