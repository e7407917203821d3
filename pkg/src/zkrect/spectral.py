"""Dissipativity, generator spectrum and the uniqueness oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import grid
from .grid import GridField, RectDomain
from .linalg import DENSE_EIG_MAX, SizeError, dense_eigenvalues
from .operator import (
    BoundaryConditionSet,
    Role,
    SparseOperator,
    assemble,
    constraint_rows,
    project_onto_constraints,
)

SPECTRUM_EPS = 1e-6


# -- dissipativity --------------------------------------------------------------


def random_smooth_field(op: SparseOperator, rng: np.random.Generator, n_modes: int = 4) -> GridField:
    """Random smooth field satisfying the constraints of ``op``, unit norm.

    The x-profiles vanish at both ends with zero slope at the end the boundary
    set clamps, and the y-profiles vanish at y = 0 only, so the dissipative
    boundary traces are generically nonzero. The result is projected onto the
    discrete constraint set.
    """
    d = op.domain
    X, Y = d.mesh()
    adjoint = op.bc is BoundaryConditionSet.ADJOINT
    ramp = X / d.L if adjoint else 1.0 - X / d.L
    values = np.zeros(d.shape)
    for k in range(1, n_modes + 1):
        for l in range(1, n_modes + 1):
            c = rng.standard_normal() / (k * l)
            values += c * np.sin(k * np.pi * X / d.L) * ramp * np.sin((l - 0.5) * np.pi * Y / d.B)
    v = project_onto_constraints(op, GridField(d, values))
    return v * (1.0 / np.sqrt(grid.norm_sq(v)))


def quadratic_form(op: SparseOperator, v: GridField) -> float:
    """(A_h v, v) in the trapezoid inner product, PDE rows only."""
    return grid.inner_product(op.pde_action(v), v)


def boundary_form(op: SparseOperator, v: GridField, trace_at: str | None = None) -> float:
    """Boundary-trace value of (A v, v) for the continuous operator:
    -(1/2) int v_x^2 dy - int v^2(x, B) dx, with the x-trace taken at x = 0 for
    the evolution operator and at x = L for the adjoint. ``trace_at`` overrides
    the edge ("x0" or "xL")."""
    if trace_at is None:
        trace_at = "xL" if op.bc is BoundaryConditionSet.ADJOINT else "x0"
    trace = grid.integrate_trace_xL(v) if trace_at == "xL" else grid.integrate_trace_x0(v)
    return -0.5 * trace - grid.integrate_trace_yB(v)


@dataclass(frozen=True)
class DissipativityReport:
    max_form: float
    max_defect: float
    forms: np.ndarray = field(repr=False)
    boundary_values: np.ndarray = field(repr=False)
    defects: np.ndarray = field(repr=False)


def dissipativity_report(op: SparseOperator, samples: int = 100, seed: int = 0, trace_at: str | None = None) -> DissipativityReport:
    """Quadratic form of ``op`` on ``samples`` random unit-norm constrained fields
    against the boundary-trace expression."""
    if op.bc is BoundaryConditionSet.OVERDETERMINED:
        raise ValueError("dissipativity is defined for the Evolution and Adjoint sets")
    rng = np.random.default_rng(seed)
    forms, rhs = np.empty(samples), np.empty(samples)
    for s in range(samples):
        v = random_smooth_field(op, rng)
        forms[s] = quadratic_form(op, v)
        rhs[s] = boundary_form(op, v, trace_at)
    defects = np.abs(forms - rhs)
    return DissipativityReport(float(forms.max()), float(defects.max()), forms, rhs, defects)


# -- spectrum -------------------------------------------------------------------


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray = field(repr=False)
    max_real_part: float
    scale: float
    verdict: bool


def generator_spectrum(d: RectDomain, include_ux0: bool = False, n_max: int = DENSE_EIG_MAX) -> SpectrumReport:
    """Eigenvalues of the evolution operator restricted to the free nodes.

    Verdict: max Re(lambda) <= 1e-6 * max |lambda|.
    """
    op = assemble(d, BoundaryConditionSet.EVOLUTION, include_ux0)
    n_free = int(op.interior_mask.sum())
    if n_free > n_max:
        raise SizeError(f"{n_free} free unknowns exceeds the dense eigensolver cap {n_max}; use a coarser grid")
    eig = dense_eigenvalues(op.reduced.matrix, n_max)
    scale = float(np.abs(eig).max())
    max_re = float(eig.real.max())
    return SpectrumReport(eig, max_re, scale, max_re <= SPECTRUM_EPS * scale)


def periodic_operator(d: RectDomain) -> sp.csr_matrix:
    """Central-difference -(D_x + D_xxx + D_x D_yy) on the doubly periodic grid
    with (nx-1) x (ny-1) nodes."""
    px, py = d.nx - 1, d.ny - 1
    iy = sp.identity(py, format="csr")

    def circulant(n, stencil):
        m = sp.lil_matrix((n, n))
        for r in range(n):
            for o, c in stencil.items():
                m[r, (r + o) % n] += c
        return m.tocsr()

    dx = circulant(px, {-1: -0.5, 1: 0.5}) / d.hx
    dxxx = circulant(px, {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5}) / d.hx**3
    dyy = circulant(py, {-1: 1.0, 0: -2.0, 1: 1.0}) / d.hy**2
    return (-(sp.kron(dx + dxxx, iy) + sp.kron(dx, dyy))).tocsr()


def periodic_symbol(d: RectDomain) -> np.ndarray:
    """Closed-form eigenvalues of ``periodic_operator``; all purely imaginary."""
    px, py = d.nx - 1, d.ny - 1
    th = 2 * np.pi * np.arange(px) / px
    ph = 2 * np.pi * np.arange(py) / py
    T, P = np.meshgrid(th, ph, indexing="ij")
    d1 = np.sin(T) / d.hx
    d3 = (np.sin(2 * T) - 2 * np.sin(T)) / d.hx**3
    d2y = (2 * np.cos(P) - 2) / d.hy**2
    return (-1j * (d1 + d3 + d1 * d2y)).ravel()


# -- uniqueness oracle -------------------------------------------------------------


def _oracle_rows(d: RectDomain, overdetermined: bool):
    """PDE rows of (d_x + d_xxx + d_xyy) and the constraint rows to stack.

    The evolution system is square; the overdetermined system adds
    u_x(0, y) = 0 on every y > 0 row of nodes.
    """
    op = assemble(d, BoundaryConditionSet.EVOLUTION)
    pde = -op.matrix[op.interior_mask]
    C = op.constraints
    if overdetermined:
        extra = constraint_rows(d, [(1, j, Role.DX0) for j in range(1, d.ny)])
        C = sp.vstack([C, extra]).tocsr()
    return op, pde, C


def _sigma_min(base: np.ndarray, shift: np.ndarray, lam: complex) -> float:
    # sqrt(W) (P - lambda I) Z, Z a W-orthonormal basis of the constraint null space
    if lam.imag == 0:
        return float(sla.svdvals(base - lam.real * shift).min())
    re = base - lam.real * shift
    im = -lam.imag * shift
    doubled = np.block([[re, -im], [im, re]])
    return float(sla.svdvals(doubled).min())


def operator_scale(d: RectDomain) -> float:
    """Size of (d_x + d_xxx + d_xyy) on the gravest mode of the rectangle."""
    kx, ky = np.pi / d.L, np.pi / d.B
    return kx * (1.0 + kx**2 + ky**2)


def uniqueness_oracle(d: RectDomain, lambdas, overdetermined: bool = True, n_max: int = DENSE_EIG_MAX) -> list[tuple[complex, float]]:
    """Smallest singular value of u -> (u_x + u_xxx + u_xyy - lambda u) over the
    grid functions satisfying the boundary rows, in the trapezoid L2 norm,
    divided by ``operator_scale``.

    The boundary rows are imposed exactly (restriction to their null space),
    which is the stacked rectangular system with the constraint rows
    infinitely weighted. A positive value for every lambda means the
    discrete eigenproblem has only the trivial solution.
    """
    if d.size > n_max:
        raise SizeError(f"{d.size} unknowns exceeds the dense cap {n_max}")
    op, pde, C = _oracle_rows(d, overdetermined)
    w = d.weights.ravel()
    Z = sla.null_space(C.toarray())
    # W-orthonormalize the null-space basis
    gram = Z.T @ (w[:, None] * Z)
    evals, evecs = np.linalg.eigh(gram)
    Zw = Z @ (evecs / np.sqrt(evals)) @ evecs.T
    root_w = np.sqrt(w[op.interior_mask])[:, None]
    base = root_w * (pde @ Zw)
    # the identity part of (P - lambda I) acts on the PDE-row nodes
    shift = root_w * Zw[op.interior_mask]
    scale = operator_scale(d)
    out = []
    for lam in lambdas:
        lam = complex(lam)
        if not np.isfinite(lam):
            raise ValueError(f"lambda must be finite, got {lam!r}")
        out.append((lam, _sigma_min(base, shift, lam) / scale))
    return out
