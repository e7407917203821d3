import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zkrect import grid
from zkrect.grid import GridField, ICFamily, InitialCondition, ParameterError, RectDomain, ShapeError


def test_spacings():
    d = RectDomain(1, 1, 11, 11)
    assert d.hx == pytest.approx(0.1) and d.hy == pytest.approx(0.1)
    d = RectDomain(2 * math.pi, math.pi, 65, 33)
    assert d.hx == pytest.approx(2 * math.pi / 64) and d.hy == pytest.approx(math.pi / 32)
    assert d.hx * (d.nx - 1) == pytest.approx(d.L, rel=1e-15)


@pytest.mark.parametrize("kwargs, name", [
    (dict(L=0, B=1, nx=11, ny=11), "L"),
    (dict(L=1, B=-2, nx=11, ny=11), "B"),
    (dict(L=1, B=1, nx=7, ny=11), "nx"),
    (dict(L=1, B=1, nx=11, ny=5), "ny"),
    (dict(L=float("nan"), B=1, nx=11, ny=11), "L"),
])
def test_domain_errors_name_the_field(kwargs, name):
    with pytest.raises(ParameterError) as exc:
        grid.build_domain(**kwargs)
    assert exc.value.field == name


def test_index_is_row_major():
    d = RectDomain(1, 2, 9, 12)
    X, Y = d.mesh()
    i, j = 3, 7
    assert X.ravel()[d.index(i, j)] == pytest.approx(i * d.hx)
    assert Y.ravel()[d.index(i, j)] == pytest.approx(j * d.hy)


def test_gridfield_rejects_bad_values():
    d = RectDomain(1, 1, 9, 9)
    with pytest.raises(ShapeError):
        GridField(d, np.zeros(10))
    bad = np.zeros(d.shape)
    bad[2, 2] = np.nan
    with pytest.raises(ValueError):
        GridField(d, bad)
    with pytest.raises(ShapeError):
        GridField.zeros(d) + GridField.zeros(RectDomain(1, 1, 10, 9))


def test_sine_squared_values():
    d = RectDomain(1, 1, 33, 33)
    u = grid.sample_initial(InitialCondition(amplitude=1.0), d)
    assert u.values[16, 16] == pytest.approx(1.0)
    u = grid.sample_initial(InitialCondition(amplitude=2.0), d)
    assert u.values[8, 8] == pytest.approx(0.5)


@pytest.mark.parametrize("family", list(ICFamily))
def test_every_family_vanishes_on_dirichlet_edges(family, rng):
    d = RectDomain(1.3, 0.7, 21, 17)
    for _ in range(5):
        u = grid.sample_initial(grid.random_initial_condition(rng, family), d)
        assert np.all(u.values[0] == 0) and np.all(u.values[-1] == 0)
        assert np.all(u.values[:, 0] == 0)


def test_random_draw_covers_families(rng):
    seen = {grid.random_initial_condition(rng).family for _ in range(60)}
    assert seen == set(ICFamily)


def test_invalid_ic_parameters():
    with pytest.raises(ParameterError):
        InitialCondition(ICFamily.GAUSSIAN_BUMP, width=0.0)
    with pytest.raises(ParameterError):
        InitialCondition(ICFamily.MODAL, modes=(1, -1))
    with pytest.raises(ValueError):
        InitialCondition("NoSuchFamily")


def test_trace_yB_weight():
    d = RectDomain(1, 1, 11, 11)
    one = GridField(d, np.ones(d.shape))
    assert grid.integrate_trace_yB(one, "1+x") == pytest.approx(1.5)
    assert grid.integrate_trace_yB(one) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        grid.integrate_trace_yB(one, "x")


def test_trace_x0_linear_field():
    d = RectDomain(1, 1, 11, 11)
    u = GridField.from_function(d, lambda x, y: x + 0 * y)
    # the one-sided stencil is exact on quadratics
    assert grid.integrate_trace_x0(u) == pytest.approx(1.0, rel=1e-12)
    assert grid.integrate_trace_xL(u) == pytest.approx(1.0, rel=1e-12)


def _errors(fn, exact, sizes=(17, 33, 65)):
    return [abs(fn(RectDomain(1.0, 2.0, n, n)) - exact) for n in sizes]


def test_quadrature_second_order():
    # int_0^1 int_0^2 e^x cos(y) dx dy = (e - 1) sin 2
    exact = (math.e - 1) * math.sin(2.0)
    errs = _errors(lambda d: grid.inner_product(GridField.from_function(d, lambda x, y: np.exp(x) * np.cos(y)),
                                                GridField.from_function(d, lambda x, y: 1 + 0 * x)), exact)
    for a, b in zip(errs, errs[1:]):
        assert 3.5 <= a / b <= 4.5


def test_trace_x0_second_order():
    # u = sin(2x) (1 + y): u_x(0, y) = 2 (1 + y); int_0^2 4 (1+y)^2 dy = 4 (27 - 1)/3
    exact = 4 * 26 / 3
    errs = _errors(lambda d: grid.integrate_trace_x0(GridField.from_function(d, lambda x, y: np.sin(2 * x) * (1 + y))), exact)
    for a, b in zip(errs, errs[1:]):
        assert 3.5 <= a / b <= 4.5


def test_gradient_norms_converge():
    # u = sin(pi x) sin(pi y / 2) on (0,1)x(0,2): ||u_x||^2 = pi^2/2, ||u_y||^2 = pi^2/8
    d = RectDomain(1.0, 2.0, 129, 129)
    u = GridField.from_function(d, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y / 2))
    ux, uy = grid.gradient_norms_sq(u)
    assert ux == pytest.approx(np.pi**2 / 2, rel=1e-3)
    assert uy == pytest.approx(np.pi**2 / 8, rel=1e-3)


# squares of values below ~1e-154 underflow to zero
finite = st.floats(-1e3, 1e3, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-100)


@settings(max_examples=40, deadline=None)
@given(st.lists(finite, min_size=81, max_size=81))
def test_norm_positive_definite(vals):
    d = RectDomain(1, 1, 9, 9)
    u = GridField(d, np.array(vals))
    n = grid.norm_sq(u)
    assert n >= 0
    assert (n == 0) == bool(np.all(u.values == 0))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-5, 5))
def test_weighted_norm_bracket(L, B, a):
    d = RectDomain(L, B, 9, 9)
    u = grid.sample_initial(InitialCondition(amplitude=a), d)
    n, w = grid.norm_sq(u), grid.weighted_norm_sq(u)
    assert n <= w * (1 + 1e-12) and w <= (1 + L) * n * (1 + 1e-12)


def test_refined_domain():
    d = RectDomain(2, 3, 9, 13).refined(2)
    assert (d.nx, d.ny) == (17, 25)
