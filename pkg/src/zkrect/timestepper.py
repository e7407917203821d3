"""Crank-Nicolson march of du/dt = A_h u with constraints enforced at the new level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .diagnostics import RunSeries, energy_record
from .grid import GridField, ParameterError
from .linalg import LinearSolver, SolveFailure
from .operator import BoundaryConditionSet, SparseOperator, complete_constraints


class SimulationError(RuntimeError):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class MarchConfig:
    dt: float
    T: float
    record_every: int = 1
    solver_tol: float = 1e-10

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ParameterError("dt", f"must be positive, got {self.dt!r}")
        if not (np.isfinite(self.T) and self.T > 0):
            raise ParameterError("T", f"must be positive, got {self.T!r}")
        if self.dt > self.T * (1 + 1e-12):
            raise ParameterError("dt", f"dt = {self.dt} exceeds T = {self.T}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ParameterError("record_every", f"must be an integer >= 1, got {self.record_every!r}")
        if not self.solver_tol > 0:
            raise ParameterError("solver_tol", f"must be positive, got {self.solver_tol!r}")
        n = self.T / self.dt
        if abs(n - round(n)) > 1e-8 * max(1.0, n):
            raise ParameterError("T", f"T = {self.T} is not an integer multiple of dt = {self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


class Stepper:
    """Factorized Crank-Nicolson step ``M_plus u_{n+1} = M_minus u_n``.

    PDE rows carry ``I -+ (dt/2) A``; constraint rows of ``M_plus`` are the
    bare constraints and those of ``M_minus`` are zero.
    """

    def __init__(self, matrix, interior_mask: np.ndarray, dt: float, solver_tol: float = 1e-10):
        matrix = sp.csr_matrix(matrix, dtype=float)
        n = matrix.shape[0]
        pde = sp.diags(interior_mask.astype(float))
        con = sp.diags((~interior_mask).astype(float))
        eye = sp.identity(n, format="csr")
        self.dt = dt
        self.n = n
        self.interior_mask = interior_mask
        self.m_plus = (pde @ (eye - 0.5 * dt * matrix) + con @ matrix).tocsc()
        self.m_minus = (pde @ (eye + 0.5 * dt * matrix)).tocsr()
        self.constraints = matrix[~interior_mask]
        try:
            self.solver = LinearSolver(self.m_plus, solver_tol)
        except SolveFailure as exc:
            raise ParameterError("dt", f"I - (dt/2) A is singular for dt = {dt}; try a smaller dt") from exc
        self.domain = None

    def step_vector(self, u: np.ndarray) -> np.ndarray:
        x, _ = self.solver.solve(self.m_minus @ u)
        return x

    def step(self, u):
        if isinstance(u, GridField):
            return GridField(u.domain, self.step_vector(u.ravel()))
        return self.step_vector(np.asarray(u, dtype=float))


def build_stepper(A, cfg: MarchConfig) -> Stepper:
    """Stepper for a ``SparseOperator`` or, for testing, a bare square matrix
    (every row treated as a PDE row)."""
    if isinstance(A, SparseOperator):
        if A.bc is not BoundaryConditionSet.EVOLUTION:
            raise ValueError(f"the march needs the Evolution set, got {A.bc.value}")
        stepper = Stepper(A.matrix, A.interior_mask, cfg.dt, cfg.solver_tol)
        stepper.domain = A.domain
        return stepper
    mat = sp.csr_matrix(np.atleast_2d(A) if not sp.issparse(A) else A, dtype=float)
    return Stepper(mat, np.ones(mat.shape[0], dtype=bool), cfg.dt, cfg.solver_tol)


def step(s: Stepper, u):
    return s.step(u)


def simulate(u0: GridField, A: SparseOperator, cfg: MarchConfig, stepper: Stepper | None = None) -> RunSeries:
    """March ``u0`` to ``cfg.T``, recording energies every ``record_every``
    steps and always at t = 0 and t = T.

    The constrained nodes of ``u0`` are first recomputed from its free nodes,
    so the recorded initial state is the one the march actually evolves
    (mask-based data differ from it by O(h^2) at the derivative rows).
    """
    if u0.domain != A.domain:
        raise ValueError("initial field and operator live on different domains")
    u0 = complete_constraints(A, u0)
    s = stepper if stepper is not None else build_stepper(A, cfg)
    n_steps = cfg.n_steps
    u = u0.ravel().copy()
    records = [energy_record(u0, 0.0)]
    for k in range(1, n_steps + 1):
        try:
            u = s.step_vector(u)
        except SolveFailure as exc:
            raise SimulationError(f"linear solve failed at step {k}: {exc}", k) from exc
        if not np.all(np.isfinite(u)):
            raise SimulationError(f"non-finite values at step {k}", k)
        if k % cfg.record_every == 0 or k == n_steps:
            records.append(energy_record(GridField(u0.domain, u), k * cfg.dt))
    final = GridField(u0.domain, u)
    return RunSeries.from_records(u0.domain, records, config=cfg, final=final)


def default_dt(d) -> float:
    """Accuracy heuristic min(hx, hy); CN is unconditionally stable here."""
    return min(d.hx, d.hy)

