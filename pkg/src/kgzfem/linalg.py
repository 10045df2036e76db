"""Jacobi-preconditioned conjugate gradients, with a dense Cholesky solve as oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

DEFAULT_CG_TOL = 1e-12


class SolverError(RuntimeError):
    """CG did not reach the requested residual within ``max_iter`` iterations."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class BreakdownError(SolverError):
    """Non-positive curvature p^T A p <= 0: the matrix is not SPD."""


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float  # final relative residual ||b - A x|| / ||b||
    history: list[float] = field(default_factory=list)


class JacobiPreconditioner:
    def __init__(self, diagonal: np.ndarray):
        diagonal = np.asarray(diagonal, dtype=float)
        if np.any(~(diagonal > 0)):
            bad = int(np.flatnonzero(~(diagonal > 0))[0])
            raise ValueError(f"Jacobi preconditioner needs a positive diagonal (entry {bad} = {diagonal[bad]})")
        self.inv_diag = 1.0 / diagonal

    def __call__(self, r: np.ndarray) -> np.ndarray:
        return self.inv_diag * r


def jacobi_precondition(A) -> JacobiPreconditioner:
    diag = A.diagonal() if sp.issparse(A) else np.diag(np.asarray(A))
    return JacobiPreconditioner(diag)


def cg_solve(A, b, tol: float = DEFAULT_CG_TOL, max_iter: int | None = None, x0=None,
             preconditioner=None, record_history: bool = False) -> CGResult:
    """Solve the SPD system ``A x = b`` to relative residual ``tol``.

    ``preconditioner`` is a callable applying M^{-1}; pass ``False`` to run
    without one (default is Jacobi).  Raises :class:`SolverError` or
    :class:`BreakdownError`.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if max_iter is None:
        max_iter = 10 * n
    if preconditioner is None:
        preconditioner = jacobi_precondition(A)
    elif preconditioner is False:
        preconditioner = lambda r: r  # noqa: E731

    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return CGResult(np.zeros(n), 0, 0.0, [0.0] if record_history else [])

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x if x0 is not None else b.copy()
    target = tol * bnorm
    rnorm = np.linalg.norm(r)
    history = [rnorm / bnorm] if record_history else []
    if rnorm <= target:
        return CGResult(x, 0, rnorm / bnorm, history)

    z = preconditioner(r)
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ap = A @ p
        curv = p @ Ap
        if not curv > 0:
            raise BreakdownError(f"CG breakdown: p^T A p = {curv:.3e} at iteration {it}",
                                 rnorm / bnorm, it)
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Ap
        rnorm = np.linalg.norm(r)
        if record_history:
            history.append(rnorm / bnorm)
        if rnorm <= target:
            # guard against drift of the recursive residual
            true_r = np.linalg.norm(b - A @ x)
            if true_r <= target:
                return CGResult(x, it, true_r / bnorm, history)
            r = b - A @ x
            rnorm = true_r
        z = preconditioner(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(f"CG did not converge in {max_iter} iterations "
                      f"(relative residual {rnorm / bnorm:.3e} > {tol:.1e})", rnorm / bnorm, max_iter)


def dense_solve(A, b) -> np.ndarray:
    """Cholesky solve of a dense symmetric positive definite system."""
    A = np.asarray(A.toarray() if sp.issparse(A) else A, dtype=float)
    if A.shape[0] > 2000:
        raise ValueError("dense_solve is limited to n <= 2000")
    try:
        factor = sla.cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"non-positive pivot in Cholesky factorization: {exc}") from exc
    return sla.cho_solve(factor, np.asarray(b, dtype=float))
