"""Ensembles of runs and the observability -> M -> decay pipeline."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import (
    DecayFit,
    DegenerateRunError,
    ObservabilityCheck,
    RunSeries,
    check_observability,
    estimate_M,
    fit_decay,
    window_ratios,
)
from .grid import ICFamily, InitialCondition, RectDomain, norm_sq, random_initial_condition, sample_initial
from .operator import assemble
from .timestepper import MarchConfig, build_stepper, simulate

N_WINDOWS = 4
RATIO_MARGIN = 0.05
R2_MIN = 0.95


def worker_count(requested: int | None = None) -> int:
    """Thread count, capped by ZKRECT_THREADS when set."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("ZKRECT_THREADS")
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError as exc:
            raise ValueError(f"ZKRECT_THREADS must be an integer, got {cap!r}") from exc
    return max(1, n)


def draw_initial_conditions(size: int, seed: int, amplitude_scale: float = 1.0) -> list[InitialCondition]:
    """``size`` random data cycling through the families so each is represented.
    Drawn amplitudes are multiplied by ``amplitude_scale``."""
    if size < 1:
        raise ValueError("ensemble size must be >= 1")
    rng = np.random.default_rng(seed)
    families = list(ICFamily)
    out = []
    for k in range(size):
        ic = random_initial_condition(rng, families[k % len(families)])
        out.append(replace(ic, amplitude=ic.amplitude * amplitude_scale))
    return out


def run_ensemble(d: RectDomain, cfg: MarchConfig, ics, include_ux0: bool = False, threads: int | None = None) -> list[RunSeries]:
    A = assemble(d, include_ux0=include_ux0)
    stepper = build_stepper(A, cfg)
    fields = [sample_initial(ic, d) for ic in ics]
    # the factorized solve is read-only, so runs can share one stepper
    with ThreadPoolExecutor(max_workers=worker_count(threads)) as pool:
        return list(pool.map(lambda u0: simulate(u0, A, cfg, stepper=stepper), fields))


@dataclass(frozen=True)
class VerifyReport:
    M_emp: float
    C_emp: float
    K_thm: float
    gamma_thm: float
    gamma_emp: float
    r2: float
    threshold: float
    window_ratios: list[float]
    observability: list[ObservabilityCheck] = field(repr=False)
    fit: DecayFit = field(repr=False)
    decay_run: RunSeries = field(repr=False)

    @property
    def observability_holds(self) -> bool:
        return all(o.holds for o in self.observability)

    @property
    def ratios_hold(self) -> bool:
        return all(r <= self.threshold for r in self.window_ratios)

    @property
    def fit_holds(self) -> bool:
        return self.gamma_emp > 0 and self.r2 >= R2_MIN

    @property
    def passed(self) -> bool:
        return self.observability_holds and self.ratios_hold

    def verdicts(self) -> dict:
        return {
            "observability": self.observability_holds,
            "window_ratios": self.ratios_hold,
            "decay_fit": self.fit_holds,
            "pointwise_bound": self.fit.pointwise_bound_holds,
        }


def verify(
    d: RectDomain,
    cfg: MarchConfig,
    ensemble_size: int = 12,
    seed: int = 0,
    amplitude_scale: float = 1.0,
    include_ux0: bool = False,
    decay_ic: InitialCondition | None = None,
    n_windows: int = N_WINDOWS,
    threads: int | None = None,
) -> VerifyReport:
    """Observability on every member, M_emp over the ensemble (horizon cfg.T),
    then one run over ``n_windows`` windows of length cfg.T from ``decay_ic``.

    Raises DegenerateRunError when some member has zero data or no boundary
    dissipation.
    """
    ics = draw_initial_conditions(ensemble_size, seed, amplitude_scale)
    if any(norm_sq(sample_initial(ic, d)) == 0 for ic in ics):
        raise DegenerateRunError("ensemble contains a zero initial datum")
    members = run_ensemble(d, cfg, ics, include_ux0, threads)
    obs = [check_observability(s) for s in members]
    M = estimate_M(members)
    C = M + 2.0
    long_cfg = MarchConfig(cfg.dt, n_windows * cfg.T, cfg.record_every, cfg.solver_tol)
    decay_ic = decay_ic if decay_ic is not None else InitialCondition()
    u0 = sample_initial(decay_ic, d)
    if norm_sq(u0) == 0:
        raise DegenerateRunError("decay run needs a nonzero initial datum")
    run = simulate(u0, assemble(d, include_ux0=include_ux0), long_cfg)
    fit = fit_decay(run, C, window=cfg.T)
    ratios = window_ratios(run, cfg.T)
    return VerifyReport(
        M_emp=M,
        C_emp=C,
        K_thm=fit.K_thm,
        gamma_thm=fit.gamma_thm,
        gamma_emp=fit.gamma_emp,
        r2=fit.r2,
        threshold=C / (1.0 + C) + RATIO_MARGIN,
        window_ratios=ratios,
        observability=obs,
        fit=fit,
        decay_run=run,
    )


def self_convergence(d: RectDomain, dt: float, T: float, levels: int = 3, ic: InitialCondition | None = None,
                     include_ux0: bool = False) -> tuple[list[float], float]:
    """l2sq(T) on (h, dt), (h/2, dt/2), ... and the observed order
    log2(|q1 - q0| / |q2 - q1|) from the last three levels."""
    if levels < 3:
        raise ValueError("need at least three levels")
    ic = ic if ic is not None else InitialCondition()
    values = []
    for k in range(levels):
        dk = d.refined(2**k) if k else d
        cfg = MarchConfig(dt / 2**k, T, record_every=2**k * max(1, int(round(T / dt))))
        run = simulate(sample_initial(ic, dk), assemble(dk, include_ux0=include_ux0), cfg)
        values.append(float(run.l2sq[-1]))
    a, b = abs(values[-2] - values[-3]), abs(values[-1] - values[-2])
    order = math.log2(a / b) if b > 0 and a > 0 else math.inf
    return values, order
