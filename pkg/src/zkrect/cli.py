"""Command-line front end: simulate, verify, spectrum, critical, decay-fit,
dump-operator.

Exit codes: 0 success, 1 runtime error, 2 a check failed, 64 usage or
configuration error. JSON summaries carry ``"schema": 1`` and are written
with sorted keys so fixed inputs give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import critical, spectral
from .diagnostics import (
    DegenerateRunError,
    RunSeries,
    check_apriori_bound,
    check_estimate_I,
    check_estimate_II,
    check_observability,
    fit_decay,
    m_ratio,
    window_ratios,
)
from .ensemble import verify
from .grid import ICFamily, InitialCondition, ParameterError, RectDomain, sample_initial
from .linalg import SizeError, SolveFailure
from .operator import BoundaryConditionSet, assemble, dump_coo
from .timestepper import MarchConfig, SimulationError, simulate

EXIT_OK, EXIT_RUNTIME, EXIT_CHECK, EXIT_USAGE = 0, 1, 2, 64
SCHEMA = 1
MONOTONE_TOL = 1e-8

SECTIONS = {
    "domain": {"L": 1.0, "B": 1.0, "nx": 33, "ny": 33},
    "march": {"dt": 1e-3, "T": 2.0, "record_every": 1, "solver_tol": 1e-10},
    "initial_condition": {"family": "SineSquaredProduct", "amplitude": 1.0, "params": {}, "seed": 0},
    "bc_variant": {"include_ux0": False},
    "outputs": {"csv_path": None, "json_path": None},
}
IC_PARAMS = ("center", "width", "modes")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    domain: dict = field(default_factory=lambda: dict(SECTIONS["domain"]))
    march: dict = field(default_factory=lambda: dict(SECTIONS["march"]))
    initial_condition: dict = field(default_factory=lambda: dict(SECTIONS["initial_condition"]))
    bc_variant: dict = field(default_factory=lambda: dict(SECTIONS["bc_variant"]))
    outputs: dict = field(default_factory=lambda: dict(SECTIONS["outputs"]))

    def as_dict(self) -> dict:
        return {name: dict(getattr(self, name)) for name in SECTIONS}

    def build_domain(self) -> RectDomain:
        d = self.domain
        return RectDomain(d["L"], d["B"], d["nx"], d["ny"])

    def build_march(self) -> MarchConfig:
        m = self.march
        return MarchConfig(m["dt"], m["T"], m["record_every"], m["solver_tol"])

    def build_ic(self) -> InitialCondition:
        ic = self.initial_condition
        params = dict(ic["params"])
        for key in ("center", "modes"):
            if key in params:
                params[key] = tuple(params[key])
        try:
            family = ICFamily(ic["family"])
        except ValueError:
            names = ", ".join(f.value for f in ICFamily)
            raise ParameterError("initial_condition.family", f"unknown family {ic['family']!r}; expected one of {names}") from None
        return InitialCondition(family, ic["amplitude"], **params)


def _check_type(path: str, value, expected):
    if expected is bool:
        ok = isinstance(value, bool)
    elif expected is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif expected is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, expected)
    if not ok:
        raise ConfigError(f"{path}: expected {getattr(expected, '__name__', expected)}, got {value!r}")


_TYPES = {
    "domain": {"L": float, "B": float, "nx": int, "ny": int},
    "march": {"dt": float, "T": float, "record_every": int, "solver_tol": float},
    "initial_condition": {"family": str, "amplitude": float, "params": dict, "seed": int},
    "bc_variant": {"include_ux0": bool},
    "outputs": {"csv_path": (str, type(None)), "json_path": (str, type(None))},
}


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse the grouped JSON config. Unknown sections or keys are errors."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be an object")
    cfg = RunConfig()
    for section, body in raw.items():
        if section not in SECTIONS:
            raise ConfigError(f"{source}: unknown section {section!r}")
        if not isinstance(body, dict):
            raise ConfigError(f"{source}: {section} must be an object")
        target = getattr(cfg, section)
        for key, value in body.items():
            if key not in SECTIONS[section]:
                raise ConfigError(f"{source}: unknown key {section}.{key}")
            _check_type(f"{section}.{key}", value, _TYPES[section][key])
            target[key] = value
    for key in cfg.initial_condition["params"]:
        if key not in IC_PARAMS:
            raise ConfigError(f"{source}: unknown key initial_condition.params.{key}")
    return cfg


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    return parse_config(text, str(p))


# -- output helpers --------------------------------------------------------------


def _clean(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def dumps(payload: dict) -> str:
    body = {"schema": SCHEMA, **payload}
    return json.dumps(_clean(body), sort_keys=True, indent=2) + "\n"


def emit(payload: dict, path=None, stream=None) -> None:
    text = dumps(payload)
    if path:
        Path(path).write_text(text)
    else:
        (stream or sys.stdout).write(text)


# -- commands --------------------------------------------------------------------


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    mapping = {
        "L": ("domain", "L"), "B": ("domain", "B"), "nx": ("domain", "nx"), "ny": ("domain", "ny"),
        "dt": ("march", "dt"), "T": ("march", "T"), "record_every": ("march", "record_every"),
        "solver_tol": ("march", "solver_tol"), "family": ("initial_condition", "family"),
        "amplitude": ("initial_condition", "amplitude"), "seed": ("initial_condition", "seed"),
        "csv": ("outputs", "csv_path"), "json": ("outputs", "json_path"),
    }
    for attr, (section, key) in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            getattr(cfg, section)[key] = value
    if getattr(args, "include_ux0", None) is not None:
        cfg.bc_variant["include_ux0"] = args.include_ux0
    return cfg


def run_summary(series: RunSeries, cfg: RunConfig) -> tuple[dict, bool]:
    """JSON summary of one run and whether every inequality check held."""
    l2 = series.l2sq
    scale = series.l2sq0
    increments = np.diff(l2)
    max_inc = float(increments.max()) if increments.size else 0.0
    monotone = max_inc <= MONOTONE_TOL * scale
    bound = check_apriori_bound(series)
    obs = check_observability(series)
    summary = {
        "config": cfg.as_dict(),
        "n_records": len(series),
        "l2sq_initial": scale,
        "l2sq_final": float(l2[-1]),
        "l2_monotone": monotone,
        "max_l2_increase": max_inc / scale if scale > 0 else max_inc,
        "apriori_bound": {"holds": bound.holds, "slack": bound.slack, "normalized_slack": bound.normalized_slack},
        "observability": {
            "holds": obs.holds,
            "slack": obs.slack,
            "normalized_slack": obs.normalized_slack,
            "time_average": obs.time_average,
            "phi": obs.phi,
            "dropped_term": obs.dropped_term,
        },
    }
    if len(series) >= 3:
        summary["estimate_I_residual"] = check_estimate_I(series).max_residual
        summary["estimate_II_residual"] = check_estimate_II(series).max_residual
    try:
        summary["M_ratio"] = m_ratio(series)
    except DegenerateRunError:
        summary["M_ratio"] = None
    return summary, bound.holds and obs.holds


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    d = cfg.build_domain()
    march = cfg.build_march()
    u0 = sample_initial(cfg.build_ic(), d)
    A = assemble(d, include_ux0=cfg.bc_variant["include_ux0"])
    series = simulate(u0, A, march)
    summary, ok = run_summary(series, cfg)
    if cfg.outputs["csv_path"]:
        series.to_csv(cfg.outputs["csv_path"])
    emit(summary, cfg.outputs["json_path"])
    return EXIT_OK if ok else EXIT_CHECK


def cmd_verify(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    if args.ensemble_size < 1:
        raise ConfigError("ensemble-size must be >= 1")
    d = cfg.build_domain()
    ic = cfg.build_ic()
    report = verify(
        d,
        cfg.build_march(),
        ensemble_size=args.ensemble_size,
        seed=cfg.initial_condition["seed"],
        amplitude_scale=ic.amplitude,
        include_ux0=cfg.bc_variant["include_ux0"],
        decay_ic=ic,
        n_windows=args.windows,
        threads=args.threads,
    )
    payload = {
        "config": cfg.as_dict(),
        "ensemble_size": args.ensemble_size,
        "M_emp": report.M_emp,
        "C_emp": report.C_emp,
        "K_thm": report.K_thm,
        "gamma_thm": report.gamma_thm,
        "gamma_emp": report.gamma_emp,
        "r2": report.r2,
        "ratio_threshold": report.threshold,
        "window_ratios": report.window_ratios,
        "observability_slacks": [o.normalized_slack for o in report.observability],
        "verdicts": report.verdicts(),
    }
    if cfg.outputs["csv_path"]:
        report.decay_run.to_csv(cfg.outputs["csv_path"])
    emit(payload, cfg.outputs["json_path"])
    return EXIT_OK if report.passed else EXIT_CHECK


def _parse_lambda(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ConfigError(f"cannot parse lambda {text!r}") from None


def cmd_spectrum(args) -> int:
    d = RectDomain(args.L, args.B, args.nx, args.ny)
    rep = spectral.generator_spectrum(d, include_ux0=args.include_ux0)
    eig = rep.eigenvalues[np.lexsort((rep.eigenvalues.imag, rep.eigenvalues.real))]
    payload = {
        "domain": {"L": d.L, "B": d.B, "nx": d.nx, "ny": d.ny},
        "include_ux0": args.include_ux0,
        "max_real_part": rep.max_real_part,
        "scale": rep.scale,
        "verdict": rep.verdict,
        "eigenvalues": {"real": eig.real, "imag": eig.imag},
    }
    if not args.no_oracle:
        lambdas = [_parse_lambda(s) for s in args.lambdas.split(",")]
        table = spectral.uniqueness_oracle(d, lambdas, overdetermined=True)
        payload["sigma_min"] = [{"lambda": [lam.real, lam.imag], "sigma_min": s} for lam, s in table]
    emit(payload, args.json)
    return EXIT_OK if rep.verdict else EXIT_CHECK


def cmd_critical(args) -> int:
    if args.B is None:
        res = critical.kdv_is_critical(args.L, tol=args.tol)
        mode = "kdv"
    else:
        res = critical.zk_is_critical(args.L, args.B, k_max=args.k_max, n_max=args.n_max, tol=args.tol)
        mode = "zk"
    witness = "(" + ",".join(str(v) for v in res.best_triple) + ")"
    if args.json_out:
        emit({"mode": mode, "L": args.L, "B": args.B, "is_critical": res.is_critical,
              "witness": list(res.best_triple), "residual": res.residual})
    elif res.is_critical:
        print(f"critical, {witness} residual={res.residual:.3e}")
    else:
        print(f"non-critical, nearest {witness} residual={res.residual:.3e}")
    return EXIT_OK


def cmd_decay_fit(args) -> int:
    d = RectDomain(args.L, args.B, args.nx, args.ny)
    try:
        series = RunSeries.from_csv(args.csv_in, d)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.csv_in}: {exc.strerror}") from None
    if args.C <= 0:
        raise ConfigError("C must be positive")
    fit = fit_decay(series, args.C, window=args.window)
    payload = {
        "C_emp": fit.C_emp,
        "K_thm": fit.K_thm,
        "gamma_thm": fit.gamma_thm,
        "gamma_emp": fit.gamma_emp,
        "K_emp": fit.K_emp,
        "r2": fit.r2,
        "decaying": fit.decaying,
        "pointwise_bound_holds": fit.pointwise_bound_holds,
    }
    if args.window is not None:
        payload["window_ratios"] = window_ratios(series, args.window)
    emit(payload, args.json)
    return EXIT_OK if fit.decaying else EXIT_CHECK


def cmd_dump_operator(args) -> int:
    d = RectDomain(args.L, args.B, args.nx, args.ny)
    op = assemble(d, BoundaryConditionSet(args.bc), include_ux0=args.include_ux0)
    dump_coo(op, args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _domain_args(p, nx=17, ny=17):
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--nx", type=int, default=nx)
    p.add_argument("--ny", type=int, default=ny)


def _run_args(p):
    p.add_argument("--config", help="grouped JSON config (defaults apply to missing keys)")
    for name, typ in (("L", float), ("B", float), ("nx", int), ("ny", int), ("dt", float), ("T", float),
                      ("record-every", int), ("solver-tol", float), ("amplitude", float), ("seed", int)):
        p.add_argument(f"--{name}", type=typ, dest=name.replace("-", "_"))
    p.add_argument("--family", choices=[f.value for f in ICFamily])
    p.add_argument("--csv", help="CSV series output path")
    p.add_argument("--json", help="JSON summary output path (stdout if omitted)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--include-ux0", dest="include_ux0", action="store_true", default=None)
    g.add_argument("--no-include-ux0", dest="include_ux0", action="store_false")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zkrect", description="Linear ZK equation on a rectangle: runs, energy checks, spectra.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="march one initial datum and check the energy inequalities")
    _run_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="ensemble -> M_emp -> decay constants -> window ratios")
    _run_args(p)
    p.add_argument("--ensemble-size", type=int, default=12)
    p.add_argument("--windows", type=int, default=4)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spectrum", help="eigenvalues of the reduced evolution operator and the uniqueness oracle")
    _domain_args(p)
    p.add_argument("--include-ux0", action="store_true")
    p.add_argument("--lambdas", default="0,1j,-1j,1+1j,1-1j,-1")
    p.add_argument("--no-oracle", action="store_true")
    p.add_argument("--json")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("critical", help="KdV critical length (only --L) or ZK critical rectangle (--L and --B)")
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--B", type=float, default=None)
    p.add_argument("--tol", type=float, default=critical.DEFAULT_TOL)
    p.add_argument("--k-max", type=int, default=64)
    p.add_argument("--n-max", type=int, default=64)
    p.add_argument("--json", dest="json_out", action="store_true")
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("decay-fit", help="fit exponential decay to a recorded CSV series")
    p.add_argument("csv_in", metavar="CSV")
    p.add_argument("--C", type=float, required=True, help="C_emp = M_emp + 2")
    p.add_argument("--window", type=float, default=None)
    _domain_args(p)
    p.add_argument("--json")
    p.set_defaults(func=cmd_decay_fit)

    p = sub.add_parser("dump-operator", help="write the assembled matrix as 'row col value' lines")
    _domain_args(p)
    p.add_argument("--bc", choices=[b.value for b in BoundaryConditionSet], default="Evolution")
    p.add_argument("--include-ux0", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dump_operator)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError, DegenerateRunError, SizeError) as exc:
        print(f"zkrect {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationError, SolveFailure, OSError, RuntimeError, ValueError) as exc:
        print(f"zkrect {args.command}: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
