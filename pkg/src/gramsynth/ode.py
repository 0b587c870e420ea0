"""Adaptive embedded Runge-Kutta integration with dense output.

The default method is the 8th-order Dormand-Prince pair (DOP853) with its
degree-7 companion interpolant; a 5(4) pair (DOPRI5, quartic interpolant)
can substitute via ``SolverConfig.method``.  Step sizes are chosen by a
proportional-integral-derivative controller whose default gains (0, 1, 0)
reduce to the classical integral controller.  Backward integration
(``t_end < t_start``) is supported directly by stepping with negative h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from . import _tableaux as tb
from .errors import NonFiniteState, OutOfSpan, StepLimitExceeded

# Step-size clamps: never shrink below x0.2 or grow above x10 in one step,
# never step below 1e-14 of the span.
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
H_MIN_FRACTION = 1e-14

_ERROR_ORDER = {"dop853": tb.DOP853_ERROR_ORDER, "dopri5": tb.DOPRI5_ERROR_ORDER}
_INTERP_ORDER = {"dop853": 7, "dopri5": 4}


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and step-control settings for `integrate`.

    ``controller_gains`` are the (p, i, d) coefficients of the step-size
    controller; the default (0, 1, 0) is the plain integral controller.
    ``initial_step`` of None selects the starting step automatically.
    """

    rtol: float = 1e-8
    atol: float = 1e-10
    max_steps: int = 200_000
    initial_step: Optional[float] = None
    controller_gains: Tuple[float, float, float] = (0.0, 1.0, 0.0)
    safety_factor: float = 0.9
    method: str = "dop853"

    def __post_init__(self):
        if not (self.rtol > 0.0 and self.atol > 0.0):
            raise ValueError("rtol and atol must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if len(self.controller_gains) != 3:
            raise ValueError("controller_gains must be a (p, i, d) triple")
        if self.method not in _ERROR_ORDER:
            raise ValueError(f"unknown method {self.method!r}")
        if not (0.0 < self.safety_factor <= 1.0):
            raise ValueError("safety_factor must lie in (0, 1]")


@dataclass(frozen=True)
class OdeProblem:
    """First-order IVP dy/dt = vector_field(t, y) on [t_start, t_end]."""

    vector_field: Callable[[float, np.ndarray], np.ndarray]
    t_start: float
    t_end: float
    y0: np.ndarray

    def __post_init__(self):
        if self.t_start == self.t_end:
            raise ValueError("t_start and t_end must differ")


def adapt_step(error_norm: float, h: float, config: SolverConfig,
               history: Sequence[float] = ()) -> float:
    """Next step size from the (p, i, d) controller law.

    ``history`` holds the error norms of up to two preceding steps (most
    recent first); missing entries are treated as 1 (neutral).  With gains
    (0, 1, 0) this reduces to ``h * safety * error_norm**(-1/(q+1))`` where
    q is the embedded error-estimator order.  The returned step is clamped
    to [0.2, 10] times h.
    """
    p, i, d = config.controller_gains
    k = _ERROR_ORDER[config.method] + 1
    beta = ((p + i + d) / k, -(p + 2.0 * d) / k, d / k)
    errs = (error_norm,) + tuple(history[:2]) + (1.0, 1.0)
    factor = config.safety_factor
    for b, e in zip(beta, errs):
        if b == 0.0:
            continue
        if e <= 0.0:
            factor = MAX_FACTOR
            break
        factor *= e ** (-b)
    factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
    return h * factor


def _initial_step(fun, t0, y0, f0, direction, span, order, rtol, atol):
    """Automatic starting step (Hairer-Norsett-Wanner heuristic)."""
    scale = atol + np.abs(y0) * rtol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * direction * f0
    f1 = fun(t0 + h0 * direction, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1, span)


def _rms(x):
    return float(np.linalg.norm(x)) / math.sqrt(x.size)


@dataclass
class DenseSolution:
    """Continuously evaluable result of one adaptive integration.

    Knots ``ts`` are stored in integration order (descending for backward
    solves).  Evaluation at a knot returns the solver's discrete state
    there exactly; between knots the per-step interpolant is used
    (degree 7 for dop853, degree 4 for dopri5).
    """

    ts: np.ndarray
    ys: np.ndarray
    method: str
    segments: Optional[np.ndarray]  # (n_segs, 7, d) dop853 / (n_segs, d, 4) dopri5
    n_accepted: int
    n_rejected: int
    _ts_asc: np.ndarray = field(init=False, repr=False)
    _ascending: bool = field(init=False, repr=False)

    def __post_init__(self):
        self._ascending = bool(self.ts[-1] >= self.ts[0])
        self._ts_asc = self.ts if self._ascending else self.ts[::-1]

    @property
    def t_span(self) -> Tuple[float, float]:
        return float(self.ts[0]), float(self.ts[-1])

    @property
    def step_count(self) -> int:
        return len(self.ts) - 1

    @property
    def interpolation_order(self) -> int:
        return _INTERP_ORDER[self.method]

    def _locate(self, t: float) -> int:
        """Index into ``self.ts`` of the segment containing t (ascending)."""
        lo, hi = float(self._ts_asc[0]), float(self._ts_asc[-1])
        slack = 1e-12 * (hi - lo) + 4e-16 * max(abs(lo), abs(hi), 1.0)
        if t < lo - slack or t > hi + slack:
            raise OutOfSpan(f"t={t} outside span [{lo}, {hi}]")
        t = min(max(t, lo), hi)
        j = int(np.searchsorted(self._ts_asc, t, side="right")) - 1
        j = min(max(j, 0), len(self._ts_asc) - 2)
        if not self._ascending:
            j = len(self.ts) - 2 - j
        return j

    def eval(self, t: float) -> np.ndarray:
        """State at time t (closed span)."""
        if self.segments is None:
            raise OutOfSpan("solution was integrated without dense output")
        j = self._locate(t)
        if t == self.ts[j]:
            return self.ys[j].copy()
        if t == self.ts[j + 1]:
            return self.ys[j + 1].copy()
        x = (t - self.ts[j]) / (self.ts[j + 1] - self.ts[j])
        if self.method == "dop853":
            return _interp_dop853(self.segments[j], self.ys[j], x)
        return _interp_dopri5(self.segments[j], self.ys[j],
                              self.ts[j + 1] - self.ts[j], x)

    def eval_many(self, ts: np.ndarray) -> np.ndarray:
        """Vectorized `eval`; returns an array of shape (len(ts), d)."""
        ts = np.asarray(ts, dtype=float)
        out = np.empty((ts.size, self.ys.shape[1]))
        for i, t in enumerate(ts.ravel()):
            out[i] = self.eval(float(t))
        return out

    def __call__(self, t):
        return self.eval(t)


def _interp_dop853(F, y_old, x):
    # Alternating-Horner form of the degree-7 interpolant.
    y = np.zeros_like(y_old)
    for i in range(6, -1, -1):
        y += F[i]
        y *= x if (6 - i) % 2 == 0 else (1.0 - x)
    return y + y_old


def _interp_dopri5(Q, y_old, h, x):
    p = np.cumprod(np.full(4, x))
    return y_old + h * (Q @ p)


def eval_dense(sol: DenseSolution, t: float) -> np.ndarray:
    """Interpolated state of ``sol`` at time t (closed span)."""
    return sol.eval(t)


def integrate(problem: OdeProblem, config: SolverConfig = SolverConfig(),
              dense: bool = True) -> DenseSolution:
    """Integrate ``problem`` adaptively, returning a dense solution.

    ``dense=False`` skips interpolant construction (and, for dop853, the
    three extra stages it needs); the result then only supports knot access
    and endpoint queries via ``ys[-1]``.

    Raises `StepLimitExceeded` when ``config.max_steps`` step attempts are
    spent, `NonFiniteState` when the state or error estimate goes NaN/Inf.
    """
    fun = problem.vector_field
    t0, t1 = float(problem.t_start), float(problem.t_end)
    y = np.array(problem.y0, dtype=float, copy=True).ravel()
    n = y.size

    f0 = np.asarray(fun(t0, y), dtype=float)
    if f0.shape != y.shape:
        raise ValueError("vector_field output dimension does not match y0")
    if not np.all(np.isfinite(f0)):
        raise NonFiniteState("vector field non-finite at initial state")

    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)
    h_min = H_MIN_FRACTION * span

    if config.method == "dop853":
        n_stages = tb.DOP853_N_STAGES
        K = np.empty((tb.DOP853_N_STAGES_EXTENDED, n))
        A, B, C = tb.DOP853_A, tb.DOP853_B, tb.DOP853_C
    else:
        n_stages = tb.DOPRI5_N_STAGES
        K = np.empty((n_stages + 1, n))
        A, B, C = tb.DOPRI5_A, tb.DOPRI5_B, tb.DOPRI5_C

    if config.initial_step is not None:
        h_abs = min(abs(config.initial_step), span)
    else:
        h_abs = _initial_step(fun, t0, y, f0, direction, span,
                              _ERROR_ORDER[config.method],
                              config.rtol, config.atol)
    h_abs = max(h_abs, h_min)

    ts = [t0]
    ys = [y.copy()]
    segs = [] if dense else None
    f_cur = f0
    t = t0
    n_accepted = 0
    n_rejected = 0
    attempts = 0
    err_history: Tuple[float, ...] = ()
    last_rejected = False

    while direction * (t1 - t) > 0.0:
        attempts += 1
        if attempts > config.max_steps:
            raise StepLimitExceeded(
                f"no convergence within {config.max_steps} step attempts")
        h_abs = min(max(h_abs, h_min), span)
        h = direction * h_abs
        t_new = t + h
        if direction * (t_new - t1) > 0.0:
            t_new = t1
            h = t_new - t
            h_abs = abs(h)

        # Stage sweep shared by both pairs.
        K[0] = f_cur
        for s in range(1, n_stages):
            dy = (K[:s].T @ A[s, :s]) * h
            K[s] = fun(t + C[s] * h, y + dy)
        y_new = y + h * (K[:n_stages].T @ B)
        f_new = np.asarray(fun(t_new, y_new), dtype=float)
        K[n_stages] = f_new

        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(f_new))):
            raise NonFiniteState(f"non-finite state near t={t_new}")

        scale = config.atol + config.rtol * np.maximum(np.abs(y), np.abs(y_new))
        if config.method == "dop853":
            err5 = (K[:n_stages + 1].T @ tb.DOP853_E5) / scale
            err3 = (K[:n_stages + 1].T @ tb.DOP853_E3) / scale
            e5sq = float(err5 @ err5)
            e3sq = float(err3 @ err3)
            if e5sq == 0.0 and e3sq == 0.0:
                error_norm = 0.0
            else:
                error_norm = abs(h) * e5sq / math.sqrt((e5sq + 0.01 * e3sq) * n)
        else:
            err = (K.T @ tb.DOPRI5_E) * h / scale
            error_norm = _rms(err)

        if error_norm <= 1.0:
            if dense:
                if config.method == "dop853":
                    segs.append(_dense_coeffs_dop853(fun, t, y, y_new,
                                                     f_cur, f_new, h, K))
                else:
                    segs.append(K.T @ tb.DOPRI5_P)
            h_next = adapt_step(error_norm, h_abs, config, err_history)
            if last_rejected:
                h_next = min(h_next, h_abs)
            err_history = (max(error_norm, 1e-10),) + err_history[:1]
            t = t_new
            y = y_new
            f_cur = f_new
            ts.append(t)
            ys.append(y.copy())
            h_abs = h_next
            n_accepted += 1
            last_rejected = False
        else:
            h_abs = min(h_abs, adapt_step(error_norm, h_abs, config,
                                          err_history))
            n_rejected += 1
            last_rejected = True

    return DenseSolution(
        ts=np.asarray(ts), ys=np.asarray(ys), method=config.method,
        segments=np.asarray(segs) if dense else None,
        n_accepted=n_accepted, n_rejected=n_rejected)


def _dense_coeffs_dop853(fun, t, y, y_new, f_old, f_new, h, K):
    """Extra stages + F coefficients for the degree-7 interpolant."""
    ns = tb.DOP853_N_STAGES
    for s in range(ns + 1, tb.DOP853_N_STAGES_EXTENDED):
        dy = (K[:s].T @ tb.DOP853_A[s, :s]) * h
        K[s] = fun(t + tb.DOP853_C[s] * h, y + dy)
    delta = y_new - y
    F = np.empty((tb.DOP853_INTERP_POWER, y.size))
    F[0] = delta
    F[1] = h * f_old - delta
    F[2] = 2.0 * delta - h * (f_new + f_old)
    F[3:] = h * (tb.DOP853_D @ K)
    return F
