import numpy as np
import pytest
import scipy.sparse as sp
import sympy

from zkrect import grid
from zkrect.grid import GridField, InitialCondition, RectDomain
from zkrect.operator import (
    BoundaryConditionSet as BC,
    Role,
    assemble,
    bc_residual,
    complete_constraints,
    dump_coo,
    fd_weights,
    node_roles,
    project_onto_constraints,
)
from zkrect.spectral import dissipativity_report


def test_fd_weights_known_stencils():
    assert np.allclose(fd_weights((-1, 0, 1), 2), [1, -2, 1])
    assert np.allclose(fd_weights((0, 1, 2), 1), [-1.5, 2, -0.5])
    assert np.allclose(fd_weights((-2, -1, 0, 1, 2), 3), [-0.5, 1, 0, -1, 0.5])
    with pytest.raises(ValueError):
        fd_weights((0, 1), 2)


@pytest.mark.parametrize("bc", list(BC))
def test_csr_layout(bc, small_domain):
    op = assemble(small_domain, bc)
    assert op.n == small_domain.size
    for r in range(op.n):
        cols = op.indices[op.indptr[r]:op.indptr[r + 1]]
        assert np.all(np.diff(cols) > 0)
    nnz = np.diff(op.indptr)[op.interior_mask]
    assert nnz.max() <= 9


def test_zero_field(small_domain):
    op = assemble(small_domain)
    assert np.all(op @ GridField.zeros(small_domain) == 0)


def test_roles_default_evolution():
    d = RectDomain(1, 1, 9, 9)
    r = node_roles(d, BC.EVOLUTION)
    N, M = 8, 8
    assert r[0, 4] == r[N, 4] == r[4, 0] == Role.DIRICHLET
    assert r[N - 1, 4] == Role.DXL
    assert r[3, M] == Role.COUPLED
    assert r[1, 4] == Role.PDE
    assert node_roles(d, BC.EVOLUTION, include_ux0=True)[1, 4] == Role.DX0
    adj = node_roles(d, BC.ADJOINT)
    assert adj[1, 4] == Role.DX0 and adj[N - 1, 4] == Role.PDE
    over = node_roles(d, BC.OVERDETERMINED)
    assert over[1, 4] == Role.DX0 and over[N - 1, 4] == Role.DXL


def test_coupled_sign_flips_for_adjoint():
    d = RectDomain(1, 1, 9, 9)
    ev, adj = assemble(d, BC.EVOLUTION), assemble(d, BC.ADJOINT)
    row = d.index(4, 8)
    a = ev.matrix[row].toarray().ravel()
    b = adj.matrix[row].toarray().ravel()
    assert a[row] == b[row] == 1.0
    off = np.arange(d.size) != row
    assert np.allclose(a[off], -b[off]) and np.any(a[off] != 0)


def test_bc_residual_examples():
    d = RectDomain(1, 1, 33, 33)
    one = GridField(d, np.ones(d.shape))
    assert bc_residual(one) == pytest.approx(1.0)
    u = grid.sample_initial(InitialCondition(), d)
    op = assemble(d)
    r = np.abs(op.constraints @ u.ravel())
    roles = op.roles[~op.interior_mask]
    assert r[roles == Role.DIRICHLET].max() == 0.0
    res = [bc_residual(grid.sample_initial(InitialCondition(), RectDomain(1, 1, n, n))) for n in (17, 33, 65)]
    # at least O(h^2) on the derivative rows (u_xxx of the mask vanishes at x = L,
    # so the one-sided stencil error is one order smaller here)
    assert res[0] / res[1] > 3.5 and res[1] / res[2] > 3.5


def _analytic_action():
    x, y = sympy.symbols("x y")
    u = x * y * sympy.sin(sympy.pi * x) ** 2 * sympy.sin(sympy.pi * y) ** 2
    Au = -(sympy.diff(u, x) + sympy.diff(u, x, 3) + sympy.diff(u, x, 1, y, 2))
    return sympy.lambdify((x, y), u, "numpy"), sympy.lambdify((x, y), Au, "numpy")


def test_truncation_second_order():
    u_f, Au_f = _analytic_action()
    errs = []
    for n in (17, 33, 65):
        d = RectDomain(1, 1, n, n)
        op = assemble(d)
        X, Y = d.mesh()
        approx = op @ GridField(d, u_f(X, Y))
        err = np.abs(approx - Au_f(X, Y).ravel())[op.interior_mask]
        errs.append(err.max())
    assert 3.0 < errs[0] / errs[1] < 5.0
    assert 3.0 < errs[1] / errs[2] < 5.0


def test_adjoint_consistency_in_the_interior(rng):
    d = RectDomain(1, 1, 21, 21)
    A, As = assemble(d, BC.EVOLUTION), assemble(d, BC.ADJOINT)
    for _ in range(5):
        u = np.zeros(d.shape)
        w = np.zeros(d.shape)
        u[3:-3, 3:-3] = rng.standard_normal((d.nx - 6, d.ny - 6))
        w[3:-3, 3:-3] = rng.standard_normal((d.nx - 6, d.ny - 6))
        U, W = GridField(d, u), GridField(d, w)
        lhs = grid.inner_product(A.pde_action(U), W)
        rhs = grid.inner_product(U, As.pde_action(W))
        assert abs(lhs - rhs) <= 1e-10 * np.sqrt(grid.norm_sq(U) * grid.norm_sq(W)) * d.size


@pytest.mark.parametrize("bc", list(BC))
def test_constraint_rows_independent(bc):
    op = assemble(RectDomain(1, 1, 13, 11), bc)
    C = op.constraints.toarray()
    assert np.linalg.matrix_rank(C) == C.shape[0]


def test_projection_and_completion(rng):
    d = RectDomain(1, 1, 13, 13)
    op = assemble(d)
    v = GridField(d, rng.standard_normal(d.shape))
    p = project_onto_constraints(op, v)
    assert np.abs(op.constraints @ p.ravel()).max() < 1e-10
    # projecting twice changes nothing
    assert np.allclose(project_onto_constraints(op, p).values, p.values, atol=1e-10)
    c = complete_constraints(op, v)
    assert np.abs(op.constraints @ c.ravel()).max() < 1e-9
    assert np.array_equal(c.ravel()[op.interior_mask], v.ravel()[op.interior_mask])


def test_reduced_operator_matches_full(rng):
    d = RectDomain(1, 1, 11, 11)
    op = assemble(d)
    R = op.reduced
    f = rng.standard_normal(int(op.interior_mask.sum()))
    full = R.extension @ f
    assert np.abs(op.constraints @ full).max() < 1e-9
    assert np.allclose(R.matrix @ f, (op.matrix @ full)[op.interior_mask])


def test_dump_roundtrip(tmp_path):
    op = assemble(RectDomain(1, 1, 9, 9), BC.ADJOINT)
    path = tmp_path / "op.txt"
    dump_coo(op, path)
    data = np.loadtxt(path, comments="#")
    m = sp.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=op.matrix.shape)
    assert abs(m - op.matrix).max() == 0


def test_dissipativity_form_negative_and_defect_shrinks():
    reps = [dissipativity_report(assemble(RectDomain(1, 1, n, n)), samples=20, seed=1) for n in (17, 33)]
    for r in reps:
        assert r.max_form < 0
    assert reps[1].max_defect < 0.5 * reps[0].max_defect


def test_adjoint_dissipativity_and_wrong_trace_control():
    op = assemble(RectDomain(1, 1, 33, 33), BC.ADJOINT)
    right = dissipativity_report(op, samples=20, seed=2)
    wrong = dissipativity_report(op, samples=20, seed=2, trace_at="x0")
    assert right.max_form < 0
    assert wrong.max_defect > 2 * right.max_defect
