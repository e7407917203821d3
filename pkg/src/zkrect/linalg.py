"""Linear solves, dense eigenvalues and smallest singular values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DIRECT_MAX = 40_000
DENSE_EIG_MAX = 3_000
KRYLOV_RESTART = 50
KRYLOV_MAXITER = 10_000


class SolveFailure(RuntimeError):
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class SizeError(ValueError):
    pass


@dataclass(frozen=True)
class LinearSolveReport:
    iterations: int
    residual_norm: float
    method: str  # "direct-LU" or "iterative-Krylov"


class LinearSolver:
    """Factorize once, solve many right-hand sides.

    Direct sparse LU up to ``direct_max`` unknowns, restarted GMRES with an
    incomplete-LU preconditioner above that.
    """

    def __init__(self, mat, tol: float = 1e-10, direct_max: int = DIRECT_MAX, restart: int = KRYLOV_RESTART, maxiter: int = KRYLOV_MAXITER):
        if tol <= 0:
            raise ValueError(f"tol must be positive, got {tol!r}")
        mat = sp.csc_matrix(mat, dtype=float)
        if mat.shape[0] != mat.shape[1]:
            raise ValueError(f"matrix must be square, got shape {mat.shape}")
        self.mat = mat
        self.tol = tol
        self.restart = restart
        self.maxiter = maxiter
        self.n = mat.shape[0]
        self.direct = self.n <= direct_max
        try:
            if self.direct:
                self._lu = spla.splu(mat)
            else:
                ilu = spla.spilu(mat, drop_tol=1e-5, fill_factor=20)
                self._precond = spla.LinearOperator(mat.shape, ilu.solve)
        except RuntimeError as exc:  # "Factor is exactly singular"
            raise SolveFailure(f"factorization failed: {exc}") from exc

    def solve(self, rhs: np.ndarray) -> tuple[np.ndarray, LinearSolveReport]:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape != (self.n,):
            raise ValueError(f"rhs has shape {rhs.shape}, expected ({self.n},)")
        bound = self.tol * max(1.0, float(np.linalg.norm(rhs)))
        if self.direct:
            x = self._lu.solve(rhs)
            iterations, method = 0, "direct-LU"
        else:
            count = [0]

            def _tick(_):
                count[0] += 1

            x, _ = spla.gmres(
                self.mat, rhs, M=self._precond, rtol=self.tol, atol=0.0,
                restart=self.restart, maxiter=self.maxiter, callback=_tick, callback_type="pr_norm",
            )
            iterations, method = count[0], "iterative-Krylov"
        if not np.all(np.isfinite(x)):
            raise SolveFailure("solution contains NaN or Inf")
        residual = float(np.linalg.norm(self.mat @ x - rhs))
        if residual > bound:
            raise SolveFailure(f"residual {residual:.3e} exceeds {bound:.3e}", residual)
        return x, LinearSolveReport(iterations, residual, method)


def solve(mat, rhs, tol: float = 1e-10) -> tuple[np.ndarray, LinearSolveReport]:
    """Solve ``mat @ x = rhs`` to ``||mat x - rhs|| <= tol * max(1, ||rhs||)``."""
    return LinearSolver(mat, tol).solve(rhs)


def _dense(mat) -> np.ndarray:
    return mat.toarray() if sp.issparse(mat) else np.asarray(mat, dtype=float)


def dense_eigenvalues(mat, n_max: int = DENSE_EIG_MAX) -> np.ndarray:
    n = mat.shape[0]
    if n > n_max:
        raise SizeError(f"{n} unknowns exceeds the dense eigensolver cap {n_max}; use a coarser grid")
    return sla.eigvals(_dense(mat))


def smallest_singular_value(mat) -> float:
    rows, cols = mat.shape
    if rows < cols:
        raise ValueError(f"need rows >= cols, got {mat.shape}")
    return float(sla.svdvals(_dense(mat)).min())
