"""Energy functionals of recorded runs: estimates I-II, the a priori bound,
the observability inequality, the constant M and decay fitting.

All time integrals use the trapezoid rule on the recorded stride.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.integrate import cumulative_trapezoid, trapezoid

from . import grid
from .grid import GridField, RectDomain

CSV_COLUMNS = ("t", "l2sq", "weighted_sq", "trace_x0", "trace_yB", "trace_yB_weighted", "grad_sq")


class DegenerateRunError(ValueError):
    """A run with (numerically) vanishing boundary dissipation."""


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    l2sq: float
    weighted_sq: float
    trace_x0: float
    trace_yB: float
    trace_yB_weighted: float
    ux_sq: float
    uy_sq: float

    @property
    def grad_sq(self) -> float:
        return self.ux_sq + self.uy_sq


def energy_record(u: GridField, t: float) -> EnergyRecord:
    ux_sq, uy_sq = grid.gradient_norms_sq(u)
    return EnergyRecord(
        t=float(t),
        l2sq=grid.norm_sq(u),
        weighted_sq=grid.weighted_norm_sq(u),
        trace_x0=grid.integrate_trace_x0(u),
        trace_yB=grid.integrate_trace_yB(u),
        trace_yB_weighted=grid.integrate_trace_yB(u, "1+x"),
        ux_sq=ux_sq,
        uy_sq=uy_sq,
    )


_RECORD_FIELDS = tuple(f.name for f in fields(EnergyRecord))


@dataclass(frozen=True, eq=False)
class RunSeries:
    """Recorded energies of one run, stored column-wise.

    ``ux_sq`` and ``uy_sq`` are absent for series read back from CSV, which
    only carries their sum.
    """

    domain: RectDomain
    t: np.ndarray
    l2sq: np.ndarray
    weighted_sq: np.ndarray
    trace_x0: np.ndarray
    trace_yB: np.ndarray
    trace_yB_weighted: np.ndarray
    ux_sq: np.ndarray | None = None
    uy_sq: np.ndarray | None = None
    grad_sq_column: np.ndarray | None = field(default=None, repr=False)
    config: object = None
    final: GridField | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.t) == 0:
            raise ValueError("a run series needs at least one record")
        if np.any(np.diff(self.t) < 0):
            raise ValueError("record times must be nondecreasing")

    @classmethod
    def from_records(cls, domain: RectDomain, records, config=None, final=None) -> "RunSeries":
        cols = {name: np.array([getattr(r, name) for r in records], dtype=float) for name in _RECORD_FIELDS}
        return cls(domain, config=config, final=final, **cols)

    @property
    def l2sq0(self) -> float:
        return float(self.l2sq[0])

    @property
    def grad_sq(self) -> np.ndarray:
        if self.ux_sq is not None and self.uy_sq is not None:
            return self.ux_sq + self.uy_sq
        return self.grad_sq_column

    @property
    def horizon(self) -> float:
        return float(self.t[-1] - self.t[0])

    def __len__(self):
        return len(self.t)

    @property
    def records(self) -> list[EnergyRecord]:
        if self.ux_sq is None:
            raise ValueError("per-direction gradient norms are not available for this series")
        return [
            EnergyRecord(*(float(getattr(self, name)[k]) for name in _RECORD_FIELDS)) for k in range(len(self))
        ]

    def _take(self, sl) -> dict:
        out = {}
        for name in ("t", "l2sq", "weighted_sq", "trace_x0", "trace_yB", "trace_yB_weighted", "ux_sq", "uy_sq", "grad_sq_column"):
            col = getattr(self, name)
            out[name] = None if col is None else col[sl]
        return out

    def window(self, t0: float, t1: float) -> "RunSeries":
        """Sub-series of the records with t0 <= t <= t1 (a small tolerance absorbs round-off)."""
        tol = 1e-9 * max(1.0, abs(t1))
        sel = (self.t >= t0 - tol) & (self.t <= t1 + tol)
        return RunSeries(self.domain, config=self.config, **self._take(sel))

    def index_at(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.t - t)))
        if abs(self.t[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"no record at t = {t}")
        return k

    def to_csv(self, path) -> None:
        grad = self.grad_sq
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for k in range(len(self)):
                writer.writerow(
                    [repr(float(v)) for v in (self.t[k], self.l2sq[k], self.weighted_sq[k], self.trace_x0[k],
                                              self.trace_yB[k], self.trace_yB_weighted[k], grad[k])]
                )

    @classmethod
    def from_csv(cls, path, domain: RectDomain) -> "RunSeries":
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != CSV_COLUMNS:
                raise ValueError(f"unexpected CSV header {header}")
            data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
        if data.size == 0:
            raise ValueError("CSV has no records")
        cols = dict(zip(CSV_COLUMNS, data.T))
        grad = cols.pop("grad_sq")
        return cls(domain, grad_sq_column=grad, **cols)


def _normalizer(series: RunSeries) -> float:
    return series.l2sq0 if series.l2sq0 > 0 else 1.0


def phi(series: RunSeries) -> float:
    """Time integral of (1/2) int u_x^2(0, y) dy + int u^2(x, B) dx."""
    if len(series) < 2:
        return 0.0
    return float(trapezoid(0.5 * series.trace_x0 + series.trace_yB, series.t))


@dataclass(frozen=True)
class ResidualReport:
    max_residual: float
    t: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)


def _centered_rate(t: np.ndarray, q: np.ndarray) -> np.ndarray:
    return (q[2:] - q[:-2]) / (t[2:] - t[:-2])


def _residual_report(series: RunSeries, residual: np.ndarray) -> ResidualReport:
    r = np.abs(residual) / _normalizer(series)
    return ResidualReport(float(r.max()) if r.size else 0.0, series.t[1:-1], r)


def check_estimate_I(series: RunSeries) -> ResidualReport:
    """Residual of d/dt (1/2)||u||^2 + (1/2) int u_x^2(0,y) dy + int u^2(x,B) dx = 0,
    normalized by ||u0||^2."""
    if len(series) < 3:
        raise ValueError("need at least 3 records")
    s = slice(1, -1)
    rate = 0.5 * _centered_rate(series.t, series.l2sq)
    return _residual_report(series, rate + 0.5 * series.trace_x0[s] + series.trace_yB[s])


def check_estimate_II(series: RunSeries, volume_term: bool = True) -> ResidualReport:
    """Residual of the identity obtained with the multiplier (1 + x) u.

    ``volume_term=False`` drops int [3/2 u_x^2 + 1/2 u_y^2 - 1/2 u^2], which
    must break the identity.
    """
    if len(series) < 3:
        raise ValueError("need at least 3 records")
    if series.ux_sq is None:
        raise ValueError("estimate II needs ||u_x||^2 and ||u_y||^2 separately")
    s = slice(1, -1)
    residual = 0.5 * _centered_rate(series.t, series.weighted_sq)
    residual = residual + 0.5 * series.trace_x0[s] + series.trace_yB_weighted[s]
    if volume_term:
        residual = residual + 1.5 * series.ux_sq[s] + 0.5 * series.uy_sq[s] - 0.5 * series.l2sq[s]
    return _residual_report(series, residual)


@dataclass(frozen=True)
class InequalityCheck:
    holds: bool
    slack: float
    normalized_slack: float


def check_apriori_bound(series: RunSeries) -> InequalityCheck:
    """||u||^2(t) + int_0^t (||u_x||^2 + ||u_y||^2)
    + int_0^t (int u_x^2(0,y) dy + 2 int (1+x) u^2(x,B) dx) <= (1 + L + T)||u0||^2
    at every record, T being the series horizon."""
    t = series.t
    grad = series.grad_sq
    traces = series.trace_x0 + 2.0 * series.trace_yB_weighted
    lhs = series.l2sq + cumulative_trapezoid(grad, t, initial=0.0) + cumulative_trapezoid(traces, t, initial=0.0)
    rhs = (1.0 + series.domain.L + series.horizon) * series.l2sq0
    slack = float(np.min(rhs - lhs))
    return InequalityCheck(slack >= 0.0, slack, slack / _normalizer(series))


@dataclass(frozen=True)
class ObservabilityCheck:
    holds: bool
    slack: float
    normalized_slack: float
    time_average: float
    phi: float
    dropped_term: float


def observability_dropped_term(series: RunSeries) -> float:
    """(2/T) int_0^T t [(1/2) int u_x^2(0,y) dy + int u^2(x,B) dx] dt.

    This is what separates the exact identity from the inequality, evaluated
    directly from the traces."""
    tau = series.t - series.t[0]
    T = series.horizon
    return float(2.0 / T * trapezoid(tau * (0.5 * series.trace_x0 + series.trace_yB), series.t))


def check_observability(series: RunSeries, tol: float = 1e-6) -> ObservabilityCheck:
    """||u0||^2 <= (1/T) int_0^T ||u||^2 dt + 2 Phi, within ``tol * ||u0||^2``."""
    T = series.horizon
    if T <= 0:
        raise ValueError("series must span a positive time interval")
    average = float(trapezoid(series.l2sq, series.t)) / T
    p = phi(series)
    slack = average + 2.0 * p - series.l2sq0
    normalized = slack / _normalizer(series)
    return ObservabilityCheck(normalized >= -tol, slack, normalized, average, p, observability_dropped_term(series))


def m_ratio(series: RunSeries) -> float:
    """(1/T) int ||u||^2 dt / Phi for a single run."""
    p = phi(series)
    if series.l2sq0 <= 0 or p <= 1e-14 * series.l2sq0:
        raise DegenerateRunError(
            f"Phi = {p:.3e} vanishes for ||u0||^2 = {series.l2sq0:.3e}: "
            "a nontrivial run without boundary dissipation would contradict unique continuation"
        )
    return float(trapezoid(series.l2sq, series.t)) / series.horizon / p


def estimate_M(ensemble) -> float:
    """Empirical constant M: the largest time-averaged energy per unit Phi.

    Any valid M is at least this large; it is a lower bound, not the
    constant itself.
    """
    ensemble = list(ensemble)
    if not ensemble:
        raise ValueError("empty ensemble")
    sizes = {(s.domain.L, s.domain.B) for s in ensemble}
    if len(sizes) != 1:
        raise ValueError(f"ensemble mixes rectangles: {sorted(sizes)}")
    return max(m_ratio(s) for s in ensemble)


def decay_constants(C: float) -> tuple[float, float]:
    """(K, gamma) = ((1 + C)/C, -ln(C/(1 + C)))."""
    if C <= 0:
        raise ValueError(f"C must be positive, got {C!r}")
    return (1.0 + C) / C, -math.log(C / (1.0 + C))


def window_ratios(series: RunSeries, window: float) -> list[float]:
    """l2sq((n+1)T)/l2sq(nT) for every complete window of length ``window``.

    A window that starts from an exactly zero state has ratio 0 (the
    contraction inequality holds with equality).
    """
    n_windows = int(math.floor(series.horizon / window + 1e-9))
    t0 = series.t[0]
    ratios = []
    for n in range(n_windows):
        a = series.l2sq[series.index_at(t0 + n * window)]
        b = series.l2sq[series.index_at(t0 + (n + 1) * window)]
        ratios.append(float(b / a) if a > 0 else (0.0 if b == 0 else math.inf))
    return ratios


@dataclass(frozen=True)
class DecayFit:
    gamma_emp: float
    K_emp: float
    r2: float
    C_emp: float
    K_thm: float
    gamma_thm: float
    decaying: bool = True
    window: float | None = None
    pointwise_bound_holds: bool | None = None


def fit_decay(series: RunSeries, C_emp: float, window: float | None = None, skip_fraction: float = 0.1) -> DecayFit:
    """Least-squares line through (t, ln ||u||^2(t)) on the tail of the series.

    ``window`` is the horizon T used to obtain ``C_emp``; the pointwise check is
    ||u||(t) <= K ||u0|| exp(-gamma floor(t/T) T). Non-decaying data produce a
    fit with ``decaying=False`` and a warning rather than an error.
    """
    K_thm, gamma_thm = decay_constants(C_emp)
    n = len(series)
    start = int(math.floor(skip_fraction * n))
    t = series.t[start:] - series.t[0]
    y = series.l2sq[start:]
    keep = y > 0
    t, y = t[keep], y[keep]
    if len(t) < 2:
        raise ValueError("need at least two positive records in the fitted tail")
    fit = stats.linregress(t, np.log(y))
    r2 = float(fit.rvalue**2) if np.isfinite(fit.rvalue) else 1.0
    gamma = -0.5 * float(fit.slope)
    K_emp = math.exp(0.5 * (float(fit.intercept) - math.log(series.l2sq0)))
    decaying = bool(series.l2sq[-1] < series.l2sq0 and gamma > 0)
    if not decaying:
        warnings.warn("series does not decay; fit reported for inspection only", RuntimeWarning, stacklevel=2)
    pointwise = None
    if window is not None:
        tau = series.t - series.t[0]
        n_win = np.floor(tau / window + 1e-9)
        bound = K_thm * math.sqrt(series.l2sq0) * np.exp(-gamma_thm * n_win * window)
        pointwise = bool(np.all(np.sqrt(series.l2sq) <= bound * (1.0 + 1e-12)))
    return DecayFit(gamma, K_emp, r2, float(C_emp), K_thm, gamma_thm, decaying, window, pointwise)
