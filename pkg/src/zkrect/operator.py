"""Sparse assembly of the stationary operator and its adjoint.

The evolution operator is ``A u = -(u_x + u_xxx + u_xyy)`` and the adjoint is
``A* w = w_x + w_xxx + w_xyy``. Boundary conditions are imposed by row
replacement: the row of every boundary-hosting node is swapped for a
homogeneous constraint row, so ``A @ u`` returns the PDE action at interior
nodes and the constraint residual at constrained nodes.

Node roles for the default evolution set (N = nx-1, M = ny-1)::

    i = 0, i = N, j = 0      Dirichlet        u = 0
    i = N-1                  x-derivative     u_x(L, y) = 0
    j = M, 1 <= i <= N-2     coupled          u - u_xy = 0
    otherwise                PDE row

Corners and the ends of the y = B row take the x or y = 0 condition.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import GridField, RectDomain, ShapeError


class BoundaryConditionSet(enum.Enum):
    EVOLUTION = "Evolution"
    ADJOINT = "Adjoint"
    OVERDETERMINED = "Overdetermined"


class Role(enum.IntEnum):
    PDE = 0
    DIRICHLET = 1
    DX0 = 2  # u_x(0, y) = 0, hosted at i = 1
    DXL = 3  # u_x(L, y) = 0, hosted at i = N-1
    COUPLED = 4  # u(x, B) = +-u_xy(x, B), hosted at j = M


@lru_cache(maxsize=None)
def fd_weights(offsets: tuple[int, ...], order: int) -> np.ndarray:
    """Unit-spacing finite-difference weights for the ``order``-th derivative."""
    offs = np.asarray(offsets, dtype=float)
    n = len(offs)
    if order >= n:
        raise ValueError("need more nodes than the derivative order")
    vander = np.vander(offs, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vander, rhs)


CENTRAL_D1 = {-1: -0.5, 1: 0.5}
CENTRAL_D2 = {-1: 1.0, 0: -2.0, 1: 1.0}
CENTRAL_D3 = {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5}
ONE_SIDED_FWD = dict(zip((0, 1, 2), fd_weights((0, 1, 2), 1)))  # (-3, 4, -1)/2
ONE_SIDED_BWD = dict(zip((0, -1, -2), fd_weights((0, -1, -2), 1)))  # (3, -4, 1)/2


def node_roles(d: RectDomain, bc: BoundaryConditionSet, include_ux0: bool = False) -> np.ndarray:
    """Role of every node, shape ``(nx, ny)``.

    ``include_ux0`` adds u_x(0, y) = 0 to the evolution set (the four
    x-conditions of D(A)); for the adjoint set it adds w_x(L, y) = 0, the
    mirror image. The overdetermined set always carries all four.
    """
    bc = BoundaryConditionSet(bc)
    N, M = d.nx - 1, d.ny - 1
    roles = np.full(d.shape, Role.PDE, dtype=np.int8)
    if bc is BoundaryConditionSet.EVOLUTION:
        dx0, dxl = include_ux0, True
    elif bc is BoundaryConditionSet.ADJOINT:
        dx0, dxl = True, include_ux0
    else:
        dx0 = dxl = True
    roles[1:N, M] = Role.COUPLED
    if dx0:
        roles[1, 1:] = Role.DX0
    if dxl:
        roles[N - 1, 1:] = Role.DXL
    roles[0, :] = roles[N, :] = roles[:, 0] = Role.DIRICHLET
    return roles


class _Builder:
    def __init__(self, d: RectDomain):
        self.d = d
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []

    def add(self, row: int, i: int, j: int, value: float):
        self.rows.append(row)
        self.cols.append(self.d.index(i, j))
        self.vals.append(value)

    def matrix(self, n_rows: int) -> sp.csr_matrix:
        m = sp.coo_matrix((self.vals, (self.rows, self.cols)), shape=(n_rows, self.d.size)).tocsr()
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        return m


def _d3_stencil(i: int, N: int) -> dict[int, float]:
    """Third-derivative offsets/weights at x index i (unit spacing)."""
    if i - 2 >= 0 and i + 2 <= N:
        return CENTRAL_D3
    # biased 5-node window kept inside [0, N]; second order
    start = min(max(i - 2, 0), N - 4) - i
    offsets = tuple(range(start, start + 5))
    return dict(zip(offsets, fd_weights(offsets, 3)))


def _pde_row(b: _Builder, row: int, i: int, j: int, sign: float):
    d = b.d
    hx, hy = d.hx, d.hy
    N = d.nx - 1
    for o, c in CENTRAL_D1.items():
        b.add(row, i + o, j, sign * c / hx)
    for o, c in _d3_stencil(i, N).items():
        b.add(row, i + o, j, sign * c / hx**3)
    for oi, ci in CENTRAL_D1.items():
        for oj, cj in CENTRAL_D2.items():
            b.add(row, i + oi, j + oj, sign * ci * cj / (hx * hy**2))


def _constraint_row(b: _Builder, row: int, i: int, j: int, role: Role, coupled_sign: float):
    d = b.d
    if role is Role.DIRICHLET:
        b.add(row, i, j, 1.0)
    elif role is Role.DX0:
        for o, c in ONE_SIDED_FWD.items():
            b.add(row, o, j, c / d.hx)
    elif role is Role.DXL:
        N = d.nx - 1
        for o, c in ONE_SIDED_BWD.items():
            b.add(row, N + o, j, c / d.hx)
    elif role is Role.COUPLED:
        b.add(row, i, j, 1.0)
        for oi, ci in CENTRAL_D1.items():
            for oj, cj in ONE_SIDED_BWD.items():
                b.add(row, i + oi, j + oj, -coupled_sign * ci * cj / (d.hx * d.hy))
    else:
        raise ValueError(f"not a constraint role: {role!r}")


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Row-replaced discrete operator in CSR layout."""

    matrix: sp.csr_matrix = field(repr=False)
    bc: BoundaryConditionSet
    domain: RectDomain
    interior_mask: np.ndarray = field(repr=False)
    include_ux0: bool = False

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def indptr(self) -> np.ndarray:
        return self.matrix.indptr

    @property
    def indices(self) -> np.ndarray:
        return self.matrix.indices

    @property
    def data(self) -> np.ndarray:
        return self.matrix.data

    @property
    def roles(self) -> np.ndarray:
        return node_roles(self.domain, self.bc, self.include_ux0).ravel()

    def __matmul__(self, u):
        if isinstance(u, GridField):
            if u.domain != self.domain:
                raise ShapeError("field and operator live on different domains")
            return self.matrix @ u.ravel()
        return self.matrix @ u

    def pde_action(self, u: GridField) -> GridField:
        """Operator applied to ``u`` with constraint rows zeroed."""
        out = np.where(self.interior_mask, self @ u, 0.0)
        return GridField(self.domain, out)

    @cached_property
    def constraints(self) -> sp.csr_matrix:
        return self.matrix[~self.interior_mask]

    @cached_property
    def reduced(self) -> "ReducedOperator":
        return reduce_operator(self)


def assemble(d: RectDomain, bc: BoundaryConditionSet = BoundaryConditionSet.EVOLUTION, include_ux0: bool = False) -> SparseOperator:
    bc = BoundaryConditionSet(bc)
    roles = node_roles(d, bc, include_ux0)
    pde_sign = 1.0 if bc is BoundaryConditionSet.ADJOINT else -1.0
    coupled_sign = -1.0 if bc is BoundaryConditionSet.ADJOINT else 1.0
    b = _Builder(d)
    for i in range(d.nx):
        for j in range(d.ny):
            row = d.index(i, j)
            role = Role(roles[i, j])
            if role is Role.PDE:
                _pde_row(b, row, i, j, pde_sign)
            else:
                _constraint_row(b, row, i, j, role, coupled_sign)
    mask = (roles == Role.PDE).ravel()
    op = SparseOperator(b.matrix(d.size), bc, d, mask, bool(include_ux0))
    if d.size <= 1024:
        _check_constraints_independent(op)
    return op


def _check_constraints_independent(op: SparseOperator):
    C = op.constraints.toarray()
    if np.linalg.matrix_rank(C) != C.shape[0]:
        raise RuntimeError(f"{op.bc.value} constraint rows are linearly dependent")


def constraint_rows(d: RectDomain, roles_wanted, coupled_sign: float = 1.0) -> sp.csr_matrix:
    """Constraint rows for an explicit list of ``(i, j, role)`` triples."""
    b = _Builder(d)
    for row, (i, j, role) in enumerate(roles_wanted):
        _constraint_row(b, row, i, j, Role(role), coupled_sign)
    return b.matrix(len(roles_wanted))


def bc_residual(u: GridField, bc: BoundaryConditionSet = BoundaryConditionSet.EVOLUTION, include_ux0: bool = False) -> float:
    """Max-norm violation of the constraints of ``bc`` by ``u``."""
    op = assemble(u.domain, bc, include_ux0)
    r = op.constraints @ u.ravel()
    return float(np.max(np.abs(r))) if r.size else 0.0


@dataclass(frozen=True, eq=False)
class ReducedOperator:
    """Operator on the free (PDE-row) nodes after eliminating constraints.

    ``extension`` maps free-node values to the full grid vector satisfying
    every constraint, so ``matrix = A[free] @ extension``.
    """

    matrix: np.ndarray = field(repr=False)
    extension: np.ndarray = field(repr=False)
    free: np.ndarray = field(repr=False)


def reduce_operator(op: SparseOperator) -> ReducedOperator:
    free = op.interior_mask
    A = op.matrix.tocsc()
    Acc = A[~free][:, ~free]
    Acf = A[~free][:, free]
    G = -sla.solve(Acc.toarray(), Acf.toarray())
    E = np.zeros((op.n, int(free.sum())))
    E[free] = np.eye(int(free.sum()))
    E[~free] = G
    Ared = op.matrix[free] @ E
    return ReducedOperator(np.asarray(Ared), E, free)


def project_onto_constraints(op: SparseOperator, u: GridField) -> GridField:
    """Nearest field (trapezoid norm) to ``u`` that satisfies every constraint row."""
    C = op.constraints.toarray()
    w = np.maximum(op.domain.weights.ravel(), 0.0)
    winv = 1.0 / w
    v = u.ravel()
    # min (v'-v)^T W (v'-v) s.t. C v' = 0  ->  v' = v - W^-1 C^T (C W^-1 C^T)^-1 C v
    CW = C * winv
    lam = np.linalg.solve(CW @ C.T, C @ v)
    return GridField(op.domain, v - winv * (C.T @ lam))


def complete_constraints(op: SparseOperator, u: GridField) -> GridField:
    """Keep the free-node values of ``u`` and solve the constraint rows for the
    constrained nodes."""
    free = op.interior_mask
    A = op.matrix.tocsc()
    Acc = A[~free][:, ~free]
    Acf = A[~free][:, free]
    v = u.ravel().copy()
    v[~free] = spla.spsolve(Acc, -(Acf @ v[free]))
    return GridField(op.domain, v)


def dump_coo(op: SparseOperator, path) -> None:
    """Write ``row col value`` lines (0-based) for external inspection."""
    m = op.matrix.tocoo()
    order = np.lexsort((m.col, m.row))
    with Path(path).open("w") as fh:
        fh.write(f"# {op.bc.value} operator, n={op.n}, nnz={m.nnz}\n")
        for r, c, v in zip(m.row[order], m.col[order], m.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")
