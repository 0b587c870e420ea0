"""Gramian assembly by Simpson quadrature and the associated linear solves.

The symmetric Gramian integrates outer products of the flow-input samples
(and is explicitly symmetrized before factorization); the mixed Gramian
pairs flow-input rows with chain-input columns and is generally
non-symmetric.  Solves go through Cholesky (symmetric) or partial-pivot LU
(mixed) on G + eps*Id, falling back to a minimum-norm least-squares
solution when factorization fails.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import SingularGramian
from .flow import Trajectory, chain_input_products, flow_input_products
from .ode import SolverConfig
from .quadrature import QuadratureRule, simpson_rule  # noqa: F401  (re-export)

# Relative least-squares residual above which the iterate is considered to
# have left the coercive feasibility set.
DEFICIENCY_TOL = 1e-6

# Factorizations whose condition proxy exceeds this are treated as failed
# (an effectively singular matrix can round to a tiny positive pivot).
CONDITION_LIMIT = 1e14


@dataclass
class GramianMatrix:
    """A d x d trajectory Gramian with its quadrature metadata."""

    matrix: np.ndarray
    kind: str  # "symmetric" | "mixed"
    rule: QuadratureRule
    regularization: float = 0.0
    condition_estimate: Optional[float] = None

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class GramianSolve:
    """Multiplier solve result with solve diagnostics.

    ``residual`` is against the unregularized Gramian (the quantity that
    measures steering defect); ``residual_regularized`` is against
    G + reg*Id.
    """

    lam: np.ndarray
    residual: float
    rel_residual: float
    method: str  # "cholesky" | "lu" | "lstsq"
    condition_estimate: float
    deficient: bool
    residual_regularized: float = 0.0


def assemble_symmetric_from_samples(samples: np.ndarray,
                                    rule: QuadratureRule) -> GramianMatrix:
    """Weighted sum of D_k D_k^T over quadrature samples, symmetrized."""
    M = np.einsum("k,kim,kjm->ij", rule.weights, samples, samples)
    M = 0.5 * (M + M.T)
    return GramianMatrix(matrix=M, kind="symmetric", rule=rule)


def assemble_mixed_from_samples(flow_samples: np.ndarray,
                                chain_samples: np.ndarray,
                                rule: QuadratureRule) -> GramianMatrix:
    """Weighted sum of D_k C_k^T; no symmetrization."""
    M = np.einsum("k,kim,kjm->ij", rule.weights, flow_samples, chain_samples)
    return GramianMatrix(matrix=M, kind="mixed", rule=rule)


def assemble_symmetric(traj: Trajectory, tau: float, rule: QuadratureRule,
                       config: SolverConfig = SolverConfig(),
                       workers: int = 1) -> GramianMatrix:
    """Symmetric Gramian of the trajectory at anchor tau."""
    D = flow_input_products(traj, rule.nodes, tau, config, workers)
    return assemble_symmetric_from_samples(D, rule)


def assemble_mixed(traj: Trajectory, u, tau: float, rule: QuadratureRule,
                   config: SolverConfig = SolverConfig(),
                   workers: int = 1) -> GramianMatrix:
    """Mixed Gramian of the trajectory at anchor tau."""
    D = flow_input_products(traj, rule.nodes, tau, config, workers)
    C = chain_input_products(traj, u, rule.nodes, tau, config, workers)
    return assemble_mixed_from_samples(D, C, rule)


def solve_gramian(G: GramianMatrix, y: np.ndarray, reg: float = 0.0,
                  on_deficient: str = "raise") -> GramianSolve:
    """Solve G lam = y through a factorization of G + reg*Id.

    Symmetric Gramians go through Cholesky, mixed ones through LU; if the
    factorization fails, a minimum-norm least-squares solution is used.
    With reg > 0 the stabilized factorization is reused for iterative
    refinement against the unregularized Gramian, so a well-conditioned
    solve is not left with the O(reg*|lam|) bias of the shifted system
    (refinement stalls harmlessly on near-null directions, where the shift
    is actually doing its job).

    A least-squares residual above ``DEFICIENCY_TOL * |y|`` signals loss
    of coercivity: with ``on_deficient="raise"`` that raises
    `SingularGramian`, with ``"allow"`` the deficient solve is returned
    flagged (this is how rank-deficient initial iterates, e.g. the resting
    unicycle, proceed).
    """
    if on_deficient not in ("raise", "allow"):
        raise ValueError("on_deficient must be 'raise' or 'allow'")
    y = np.asarray(y, dtype=float)
    M = G.matrix + reg * np.eye(G.d) if reg != 0.0 else G.matrix
    G.regularization = reg

    lam = None
    method = None
    condition = None
    solve_again = None
    if G.kind == "symmetric":
        try:
            c, low = scipy.linalg.cho_factor(M, check_finite=False)
            lam = scipy.linalg.cho_solve((c, low), y, check_finite=False)
            solve_again = lambda r: scipy.linalg.cho_solve(  # noqa: E731
                (c, low), r, check_finite=False)
            diag = np.abs(np.diag(c))
            condition = float((diag.max() / diag.min()) ** 2)
            method = "cholesky"
        except scipy.linalg.LinAlgError:
            pass
    else:
        try:
            lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
            diag = np.abs(np.diag(lu))
            if np.all(diag > 0.0):
                lam = scipy.linalg.lu_solve((lu, piv), y, check_finite=False)
                solve_again = lambda r: scipy.linalg.lu_solve(  # noqa: E731
                    (lu, piv), r, check_finite=False)
                condition = float(diag.max() / diag.min())
                method = "lu"
        except scipy.linalg.LinAlgError:
            pass

    if lam is None:
        lam, _, _, sv = np.linalg.lstsq(M, y, rcond=None)
        smin = sv.min() if sv.size else 0.0
        condition = float(sv.max() / max(smin, np.finfo(float).tiny))
        condition = min(condition, 1e300)
        method = "lstsq"

    if reg != 0.0 and solve_again is not None:
        lam = _refine(G.matrix, y, lam, solve_again)

    res = float(np.linalg.norm(G.matrix @ lam - y))
    res_reg = float(np.linalg.norm(M @ lam - y)) if reg != 0.0 else res
    ynorm = float(np.linalg.norm(y))
    rel = res / ynorm if ynorm > 0.0 else 0.0
    deficient = method == "lstsq" and rel > DEFICIENCY_TOL
    if deficient and on_deficient == "raise":
        raise SingularGramian(
            f"least-squares residual {rel:.3e} of |y| exceeds "
            f"{DEFICIENCY_TOL:g}: Gramian not coercive on this iterate",
            residual=res, rel_residual=rel)

    G.condition_estimate = condition
    return GramianSolve(lam=lam, residual=res, rel_residual=rel,
                        method=method, condition_estimate=condition,
                        deficient=deficient, residual_regularized=res_reg)


def _refine(A, y, lam, solve_shifted, max_steps: int = 30):
    """Richardson refinement of ``A lam = y`` using the shifted factors."""
    best = lam
    best_res = float(np.linalg.norm(A @ lam - y))
    for _ in range(max_steps):
        r = y - A @ lam
        lam = lam + solve_shifted(r)
        res = float(np.linalg.norm(A @ lam - y))
        if res < best_res:
            best, best_res = lam, res
        if res >= 0.5 * best_res or res == 0.0:
            break
    return best
