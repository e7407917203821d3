"""Numerical laboratory for the linear Zakharov-Kuznetsov equation on a rectangle."""

from .critical import CriticalResult, kdv_critical_lengths, kdv_is_critical, zk_is_critical
from .ensemble import VerifyReport, run_ensemble, self_convergence, verify
from .diagnostics import (
    DecayFit,
    EnergyRecord,
    RunSeries,
    check_apriori_bound,
    check_estimate_I,
    check_estimate_II,
    check_observability,
    estimate_M,
    fit_decay,
    phi,
    decay_constants,
    window_ratios,
)
from .grid import (
    GridField,
    ICFamily,
    InitialCondition,
    ParameterError,
    RectDomain,
    build_domain,
    inner_product,
    integrate_trace_x0,
    integrate_trace_yB,
    sample_initial,
)
from .grid import norm_sq
from .linalg import LinearSolveReport, dense_eigenvalues, smallest_singular_value, solve
from .operator import BoundaryConditionSet, SparseOperator, assemble, bc_residual
from .spectral import dissipativity_report, generator_spectrum, uniqueness_oracle
from .timestepper import MarchConfig, build_stepper, simulate, step

__version__ = "0.1.0"
