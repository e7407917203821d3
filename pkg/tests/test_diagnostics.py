import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zkrect import grid
from zkrect.diagnostics import (
    CSV_COLUMNS,
    DegenerateRunError,
    RunSeries,
    check_apriori_bound,
    check_estimate_I,
    check_estimate_II,
    check_observability,
    estimate_M,
    fit_decay,
    m_ratio,
    observability_dropped_term,
    phi,
    decay_constants,
    window_ratios,
)
from zkrect.grid import InitialCondition, RectDomain
from zkrect.operator import assemble
from zkrect.timestepper import MarchConfig, simulate

D = RectDomain(1.0, 1.0, 9, 9)


def synthetic(t, l2sq, trace_x0=None, trace_yB=None, domain=D, **extra):
    z = np.zeros_like(t)
    cols = dict(
        t=t, l2sq=l2sq, weighted_sq=extra.get("weighted_sq", l2sq),
        trace_x0=z if trace_x0 is None else trace_x0,
        trace_yB=z if trace_yB is None else trace_yB,
        trace_yB_weighted=extra.get("trace_yB_weighted", z if trace_yB is None else trace_yB),
        ux_sq=extra.get("ux_sq", z), uy_sq=extra.get("uy_sq", z),
    )
    return RunSeries(domain, **cols)


def exact_decay(T=2.0, n=20001, rate=2.0):
    """l2sq = e^{-rate t} with all dissipation through the y = B trace, which
    satisfies d/dt (1/2) l2sq + int u^2(x,B) = 0 exactly."""
    t = np.linspace(0, T, n)
    e = np.exp(-rate * t)
    return synthetic(t, e, trace_yB=0.5 * rate * e)


def zero_run(n=11):
    t = np.linspace(0, 1, n)
    return synthetic(t, np.zeros(n))


def test_zero_run_checks():
    s = zero_run()
    assert check_estimate_I(s).max_residual == 0
    assert check_estimate_II(s).max_residual == 0
    b = check_apriori_bound(s)
    assert b.holds and b.slack == 0
    o = check_observability(s)
    assert o.holds and o.slack == 0
    with pytest.raises(DegenerateRunError):
        estimate_M([s])


def test_estimate_I_exact_series():
    assert check_estimate_I(exact_decay()).max_residual < 1e-6


def test_observability_slack_is_the_dropped_term():
    s = exact_decay()
    o = check_observability(s)
    # closed form: (2/T) int_0^T t e^{-2t} dt with T = 2
    T = 2.0
    dropped = 2 / T * (0.25 - (2 * T + 1) / 4 * math.exp(-2 * T))
    assert o.holds
    assert observability_dropped_term(s) == pytest.approx(dropped, rel=1e-7)
    assert o.slack == pytest.approx(dropped, rel=1e-6)


def test_phi_additivity():
    s = exact_decay()
    whole = phi(s)
    assert whole == pytest.approx(phi(s.window(0, 1)) + phi(s.window(1, 2)), rel=1e-12)
    assert whole == pytest.approx(0.5 * (1 - math.exp(-4)), rel=1e-7)


def test_m_ratio_closed_form():
    s = exact_decay()
    avg = (1 - math.exp(-4)) / 4
    assert m_ratio(s) == pytest.approx(avg / (0.5 * (1 - math.exp(-4))), rel=1e-6)
    assert estimate_M([s, exact_decay(rate=4.0)]) == pytest.approx(max(m_ratio(s), m_ratio(exact_decay(rate=4.0))))


def test_estimate_M_rejects_mixed_rectangles():
    a = exact_decay()
    t = a.t
    b = synthetic(t, a.l2sq, trace_yB=a.trace_yB, domain=RectDomain(2.0, 1.0, 9, 9))
    with pytest.raises(ValueError):
        estimate_M([a, b])


def test_decay_constants():
    K, g = decay_constants(2.0)
    assert K == pytest.approx(1.5) and g == pytest.approx(math.log(1.5))
    assert g == pytest.approx(0.4055, abs=1e-4)
    with pytest.raises(ValueError):
        decay_constants(0.0)


def test_fit_exact_exponential():
    t = np.linspace(0, 5, 501)
    s = synthetic(t, np.exp(-2 * t))
    fit = fit_decay(s, 2.0, window=1.0)
    assert fit.gamma_emp == pytest.approx(1.0) and fit.r2 == pytest.approx(1.0)
    assert fit.K_emp == pytest.approx(1.0)
    assert fit.pointwise_bound_holds


def test_fit_non_decaying_warns():
    t = np.linspace(0, 1, 50)
    s = synthetic(t, np.exp(t))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        fit = fit_decay(s, 2.0)
    assert not fit.decaying and any(issubclass(x.category, RuntimeWarning) for x in w)


def test_window_ratios():
    t = np.linspace(0, 4, 401)
    s = synthetic(t, np.exp(-t))
    assert np.allclose(window_ratios(s, 1.0), [math.exp(-1)] * 4)
    z = synthetic(t, np.zeros_like(t))
    assert window_ratios(z, 2.0) == [0.0, 0.0]


@pytest.fixture(scope="module")
def real_run():
    d = RectDomain(1, 1, 17, 17)
    return simulate(grid.sample_initial(InitialCondition(), d), assemble(d), MarchConfig(1e-3, 0.2))


def test_estimate_II_volume_term_negative_control(real_run):
    with_term = check_estimate_II(real_run).max_residual
    without = check_estimate_II(real_run, volume_term=False).max_residual
    assert without > 1.0 and without > 3 * with_term


def test_csv_roundtrip(tmp_path, real_run):
    path = tmp_path / "run.csv"
    real_run.to_csv(path)
    assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    back = RunSeries.from_csv(path, real_run.domain)
    for name in CSV_COLUMNS[:-1]:
        assert np.array_equal(getattr(back, name), getattr(real_run, name))
    assert np.array_equal(back.grad_sq, real_run.grad_sq)
    assert check_apriori_bound(back).slack == pytest.approx(check_apriori_bound(real_run).slack, rel=1e-14)
    with pytest.raises(ValueError):
        check_estimate_II(back)


def test_csv_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        RunSeries.from_csv(p, D)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 100.0), st.sampled_from([-1.0, 1.0]))
def test_bound_slack_scale_invariant(alpha, sign):
    d = RectDomain(1, 1, 9, 9)
    A = assemble(d)
    cfg = MarchConfig(0.01, 0.1)
    base = simulate(grid.sample_initial(InitialCondition(), d), A, cfg)
    scaled = simulate(grid.sample_initial(InitialCondition(amplitude=sign * alpha), d), A, cfg)
    assert check_apriori_bound(scaled).normalized_slack == pytest.approx(check_apriori_bound(base).normalized_slack, rel=1e-8, abs=1e-10)
    assert check_observability(scaled).normalized_slack == pytest.approx(check_observability(base).normalized_slack, rel=1e-8, abs=1e-10)


def test_series_validation():
    with pytest.raises(ValueError):
        synthetic(np.array([1.0, 0.0]), np.ones(2))
    s = exact_decay(n=11)
    with pytest.raises(ValueError):
        s.index_at(0.123)
