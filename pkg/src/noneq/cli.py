"""Batch front end: config ingestion, subcommands, validation suite.

Exit codes: 0 success, 1 validation failure, 2 config error, 3 numerical
failure.  The environment variable NONEQ_QUAD_RTOL overrides the
quadrature relative tolerance of any run, which keeps continuous
integration fast without touching config files.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .correlators import QuadratureError, free_space_alpha, pair_integrals
from .dynamics import (DynamicsError, StiffnessError, TraceDriftError,
                       build_liouvillian, coupled_state, evolve,
                       initial_state, steady_state, x_pattern_deviation)
from .entanglement import concurrence_general, concurrence_x
from .material import SIC
from .rates import build_rates, photon_number
from .scattering import SlabResonanceError
from .sweep import (SweepAxis, dipole_angle_scan, grid_sweep, summary_dict,
                    white_line_scan, write_summary_json, write_sweep_csv)

_NUMERICAL_ERRORS = (QuadratureError, SlabResonanceError, DynamicsError,
                     StiffnessError, TraceDriftError, np.linalg.LinAlgError)


def _fmt(value: float) -> str:
    return format(value, ".17g")


def _load_config(args) -> RunConfig:
    if not args.config:
        raise ConfigError("this command requires --config")
    cfg = RunConfig.from_file(args.config)
    return _apply_env(cfg)


def _apply_env(cfg: RunConfig) -> RunConfig:
    env = os.environ.get("NONEQ_QUAD_RTOL")
    if env:
        try:
            rtol = float(env)
        except ValueError:
            raise ConfigError(f"NONEQ_QUAD_RTOL: not a number: {env!r}")
        cfg = replace(cfg, rel_tol=rtol)
        cfg.validate()
    return cfg


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _complex_pair(z: complex) -> list:
    return [z.real, z.imag]


# -- rates ---------------------------------------------------------------

def cmd_rates(args) -> int:
    cfg = _load_config(args)
    rates = build_rates(cfg.emitter_config(), cfg.geometry(),
                        cfg.material_model(), cfg.slab(), cfg.T_W, cfg.T_M,
                        cfg.quadrature_settings())
    report: dict = {
        "config_sha256": cfg.resolved_hash(),
        "gamma_down_over_gamma0": [[_complex_pair(z) for z in row]
                                   for row in rates.gamma_down],
        "gamma_up_over_gamma0": [[_complex_pair(z) for z in row]
                                 for row in rates.gamma_up],
        "lambda_12_over_gamma0": _complex_pair(rates.lambda_12),
    }
    lines = [f"# config_sha256={cfg.resolved_hash()}"]
    lines.append("Gamma(omega)/Gamma0 [emission]:")
    for q in range(2):
        lines.append("  " + "  ".join(f"{rates.gamma_down[q, qp]:+.9e}"
                                      for qp in range(2)))
    lines.append("Gamma(-omega)/Gamma0 [absorption]:")
    for q in range(2):
        lines.append("  " + "  ".join(f"{rates.gamma_up[q, qp]:+.9e}"
                                      for qp in range(2)))
    lines.append(f"Lambda12/Gamma0: {rates.lambda_12:+.9e}")

    ch = _try_channel_params(cfg)
    if ch is not None:
        report["channel_params"] = {
            "gamma_S": ch.gamma_S, "gamma_A": ch.gamma_A,
            "n_S": ch.n_S, "n_A": ch.n_A, "T_S": ch.T_S, "T_A": ch.T_A,
        }
        lines.append("symmetric channels:")
        lines.append(f"  gamma_S = {ch.gamma_S:.9e}   n_S = {ch.n_S:.9e}"
                     f"   T_S = {ch.T_S:.6f} K")
        lines.append(f"  gamma_A = {ch.gamma_A:.9e}   n_A = {ch.n_A:.9e}"
                     f"   T_A = {ch.T_A:.6f} K")
        lines.append(f"  gamma_A/gamma_S = {ch.gamma_A / ch.gamma_S:.9e}")
    if cfg.T_W == cfg.T_M:
        n = photon_number(cfg.omega0, cfg.T_W)
        ratio = n / (1.0 + n)
        measured = (rates.gamma_up[0, 0].real
                    / rates.gamma_down[0, 0].real)
        report["detailed_balance"] = {"thermal_n_over_1pn": ratio,
                                      "measured_up_over_down": measured}
        lines.append(f"detailed balance n/(1+n): thermal {ratio:.9e}, "
                     f"measured {measured:.9e}")

    if args.format == "json":
        _write_or_print(json.dumps(report, indent=2, sort_keys=True) + "\n",
                        args.out)
    else:
        _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def _try_channel_params(cfg: RunConfig):
    from .correlators import alpha_from_integrals
    from .rates import alpha_scalars, channel_params, integral_table
    try:
        table = integral_table(cfg.omega0, cfg.geometry(),
                               cfg.material_model(), cfg.slab(),
                               cfg.quadrature_settings())
        alphas = {pair: alpha_from_integrals(pair, cfg.omega0, p)
                  for pair, p in table.items()}
        return channel_params(alpha_scalars(alphas, cfg.emitter_config()),
                              photon_number(cfg.omega0, cfg.T_W),
                              photon_number(cfg.omega0, cfg.T_M),
                              cfg.omega0)
    except ValueError:
        return None


# -- dynamics ------------------------------------------------------------

def cmd_dynamics(args) -> int:
    cfg = _load_config(args)
    name = args.initial if args.initial is not None else cfg.initial_state
    t_max = args.t_max if args.t_max is not None else cfg.t_max
    n_points = args.n_points if args.n_points is not None else cfg.n_points
    if t_max <= 0:
        raise ConfigError("dynamics.t_max: must be strictly positive")
    if n_points < 2:
        raise ConfigError("dynamics.n_points: must be at least 2")
    try:
        rho0 = initial_state(name)
    except ValueError as exc:
        raise ConfigError(f"dynamics.initial_state: {exc}") from None

    rates = build_rates(cfg.emitter_config(), cfg.geometry(),
                        cfg.material_model(), cfg.slab(), cfg.T_W, cfg.T_M,
                        cfg.quadrature_settings())
    lv = build_liouvillian(rates, omega0=cfg.omega0_over_gamma0,
                           include_hamiltonian=cfg.include_hamiltonian)
    t_grid = np.linspace(0.0, t_max, n_points)
    max_step = np.inf if args.no_step_ceiling else None
    trajectory = evolve(lv, rho0, t_grid, max_step=max_step)

    lines = [f"# config_sha256={cfg.resolved_hash()}",
             "t,rho_G,rho_A,rho_S,rho_E,re_rho_23,im_rho_23,"
             "re_rho_14,im_rho_14,concurrence"]
    for t, rho in zip(t_grid, trajectory):
        cs = coupled_state(rho)
        if x_pattern_deviation(rho) <= 1e-9:
            conc = concurrence_x(rho).C
        else:
            conc = concurrence_general(rho)
        lines.append(",".join([
            _fmt(t), _fmt(cs.rho_G), _fmt(cs.rho_A), _fmt(cs.rho_S),
            _fmt(cs.rho_E), _fmt(rho[1, 2].real), _fmt(rho[1, 2].imag),
            _fmt(rho[0, 3].real), _fmt(rho[0, 3].imag), _fmt(conc)]))
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


# -- steady --------------------------------------------------------------

def cmd_steady(args) -> int:
    cfg = _load_config(args)
    rates = build_rates(cfg.emitter_config(), cfg.geometry(),
                        cfg.material_model(), cfg.slab(), cfg.T_W, cfg.T_M,
                        cfg.quadrature_settings())
    steady = steady_state(rates)
    cs = coupled_state(steady.rho)
    if x_pattern_deviation(steady.rho) <= 1e-9:
        conc = concurrence_x(steady.rho).C
    else:
        conc = concurrence_general(steady.rho)
    record = {
        "config_sha256": cfg.resolved_hash(),
        "populations_coupled": {"G": cs.rho_G, "A": cs.rho_A,
                                "S": cs.rho_S, "E": cs.rho_E},
        "populations_product": [steady.rho[i, i].real for i in range(4)],
        "rho_23": _complex_pair(complex(steady.rho[1, 2])),
        "rho_14": _complex_pair(complex(steady.rho[0, 3])),
        "concurrence": conc,
        "degenerate": steady.degenerate,
        "rank_ambiguous": steady.rank_ambiguous,
        "schur_singular_values": [float(s)
                                  for s in steady.singular_values],
    }
    _write_or_print(json.dumps(record, indent=2, sort_keys=True) + "\n",
                    args.out)
    return 0


# -- sweep ---------------------------------------------------------------

def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if not cfg.axes:
        raise ConfigError("sweep.axes: at least one axis is required")
    axes = tuple(SweepAxis.from_spec(spec) for spec in cfg.axes)
    if args.white_line:
        if len(axes) != 1:
            raise ConfigError("sweep.axes: the white-line scan takes "
                              "exactly one axis")
        result = white_line_scan(cfg, axes[0])
    elif len(axes) == 1 and axes[0].name in ("dipole_phi", "dipole_theta"):
        result = dipole_angle_scan(cfg, axes[0], jobs=args.jobs)
    else:
        result = grid_sweep(cfg, axes, jobs=args.jobs)

    summary = summary_dict(result, cfg)
    if args.out:
        out = Path(args.out)
        if args.format == "json":
            from .sweep import _record_dict
            payload = dict(summary)
            payload["records"] = [_record_dict(rec, result.axes)
                                  for rec in result.records]
            with open(out, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
        else:
            write_sweep_csv(result, out, cfg.resolved_hash())
            write_summary_json(result, out.with_suffix(".summary.json"),
                               cfg)
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


# -- validate ------------------------------------------------------------

def _check(lines: list, name: str, ok: bool, detail: str) -> bool:
    lines.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok


def _validation_config(cfg: RunConfig, **overrides) -> RunConfig:
    base = replace(RunConfig(), rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                   evanescent_cutoff_exponent=cfg.evanescent_cutoff_exponent,
                   max_subdivisions=cfg.max_subdivisions)
    return replace(base, **overrides)


def cmd_validate(args) -> int:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    cfg = _apply_env(cfg)
    lines: list = []
    ok = True

    # the pass thresholds below assume at least this much quadrature effort;
    # a looser setting could produce lucky agreement the suite cannot certify
    good = cfg.rel_tol <= 1e-6 and cfg.abs_tol <= 1e-9
    ok &= _check(lines, "quadrature tolerance", good,
                 f"rel_tol {cfg.rel_tol:.1e}, abs_tol {cfg.abs_tol:.1e} "
                 "(suite calibrated for rel_tol <= 1e-6, abs_tol <= 1e-9)")

    # free-space quadrature against the closed dipole-field forms
    try:
        from .constants import C_LIGHT
        from .correlators import alpha_from_integrals
        settings = _validation_config(cfg).quadrature_settings()
        omega = 0.3 * SIC.omega_r
        worst = 0.0
        worst_slab = 0.0
        for rt in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0):
            sep = rt * C_LIGHT / omega
            geom_cfg = _validation_config(cfg, z1=50e-6, z2=50e-6, r12=sep,
                                          material="vacuum")
            ints = pair_integrals((1, 2), omega, geom_cfg.geometry(),
                                  geom_cfg.material_model(),
                                  geom_cfg.slab(), settings)
            ap = alpha_from_integrals((1, 2), omega, ints)
            ref = free_space_alpha(omega, (sep, 0.0, 0.0))
            err = float(np.max(np.abs(ap.alpha_W - ref))
                        / float(np.max(np.abs(ref))))
            worst = max(worst, err)
            worst_slab = max(worst_slab,
                             float(np.max(np.abs(ap.alpha_M))))
        good = worst < 1e-6 and worst_slab < 1e-9
        ok &= _check(lines, "free-space quadrature", good,
                     f"max relative deviation {worst:.3e} over 7 "
                     f"separations (bound 1e-6), slab residual "
                     f"{worst_slab:.3e} (bound 1e-9)")
    except _NUMERICAL_ERRORS as exc:
        ok &= _check(lines, "free-space quadrature", False,
                     f"{type(exc).__name__}: {exc}")

    # equilibrium: steady state thermal, concurrence zero
    try:
        eq_cfg = _validation_config(cfg, z1=1.0e-6, z2=1.0e-6, r12=0.25e-6,
                                    T_W=300.0, T_M=300.0)
        rates = build_rates(eq_cfg.emitter_config(), eq_cfg.geometry(),
                            eq_cfg.material_model(), eq_cfg.slab(),
                            300.0, 300.0, eq_cfg.quadrature_settings())
        steady = steady_state(rates)
        n = photon_number(eq_cfg.omega0, 300.0)
        w = (1.0 + 2.0 * n) ** 2
        thermal = np.diag([(1.0 + n) ** 2 / w, n * (1.0 + n) / w,
                           n * (1.0 + n) / w, n * n / w])
        dev = float(np.max(np.abs(steady.rho - thermal)))
        conc = concurrence_general(steady.rho)
        good = dev < 1e-8 and conc < 1e-10
        ok &= _check(lines, "equilibrium thermalization", good,
                     f"population deviation {dev:.3e} (bound 1e-8), "
                     f"concurrence {conc:.3e} (bound 1e-10)")
    except _NUMERICAL_ERRORS as exc:
        ok &= _check(lines, "equilibrium thermalization", False,
                     f"{type(exc).__name__}: {exc}")

    # Bell state concurrence through both routes
    bell = np.zeros((4, 4), dtype=complex)
    bell[0, 0] = bell[0, 3] = bell[3, 0] = bell[3, 3] = 0.5
    c_x = concurrence_x(bell).C
    c_g = concurrence_general(bell)
    good = abs(c_x - 1.0) < 1e-12 and abs(c_g - 1.0) < 1e-10
    ok &= _check(lines, "Bell-state concurrence", good,
                 f"closed form {c_x:.12f}, spin-flip spectrum {c_g:.12f} "
                 "(both must be 1)")

    if args.level == "full":
        # coarse steady-concurrence grid around the documented maximum
        try:
            grid_cfg = _validation_config(cfg, z1=1.04e-6, z2=1.04e-6,
                                          r12=0.01e-6, T_W=30.0, T_M=30.0)
            ax_z = SweepAxis.from_range("z2", 0.05e-6, 5.0e-6, 32)
            ax_t = SweepAxis.from_range("T_M", 100.0, 2000.0, 32)
            res = grid_sweep(grid_cfg, (ax_z, ax_t), jobs=args.jobs)
            am = res.argmax
            dz = ax_z.values[1] - ax_z.values[0]
            dt = ax_t.values[1] - ax_t.values[0]
            good = (am is not None and res.n_failed == 0
                    and abs(am.concurrence - 0.24) <= 0.02
                    and abs(am.point[0] - 1.3e-6) <= dz
                    and abs(am.point[1] - 1100.0) <= dt)
            detail = ("no valid points" if am is None else
                      f"max C {am.concurrence:.4f} at z2 "
                      f"{am.point[0]*1e6:.3f} um, T_M {am.point[1]:.0f} K "
                      f"({res.n_failed} failed points)")
            ok &= _check(lines, "steady-concurrence grid", good, detail)
        except _NUMERICAL_ERRORS as exc:
            ok &= _check(lines, "steady-concurrence grid", False,
                         f"{type(exc).__name__}: {exc}")

        # white-line optimum and channel parameters
        try:
            wl_cfg = _validation_config(cfg, z1=1.04e-6, z2=1.04e-6,
                                        r12=0.01e-6, T_W=30.0, T_M=30.0)
            res = white_line_scan(wl_cfg,
                                  SweepAxis.from_range("T_M", 400.0,
                                                       2000.0, 33))
            am = res.argmax
            good = (am is not None and res.n_failed == 0
                    and abs(am.concurrence - 0.222) < 0.02
                    and 4.6e-8 < am.gamma_ratio < 4.6e-6
                    and abs(am.n_S - 0.02) < 0.01
                    and abs(am.n_A - 1.56) < 0.3)
            detail = ("no valid points" if am is None else
                      f"max C {am.concurrence:.4f}, gamma_A/gamma_S "
                      f"{am.gamma_ratio:.3e}, n_S {am.n_S:.4f}, "
                      f"n_A {am.n_A:.3f}")
            ok &= _check(lines, "white-line optimum", good, detail)
        except _NUMERICAL_ERRORS as exc:
            ok &= _check(lines, "white-line optimum", False,
                         f"{type(exc).__name__}: {exc}")

    sys.stdout.write("\n".join(lines) + "\n")
    sys.stdout.write("validation " + ("PASSED" if ok else "FAILED") + "\n")
    return 0 if ok else 1


# -- parser --------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noneq",
        description="Dissipative dynamics and steady entanglement of two "
                    "emitters near a slab held out of thermal equilibrium")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML or JSON run configuration")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for sweeps")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="output format where both are supported")

    p = sub.add_parser("rates", help="transition rates and coherent "
                                     "coupling in decay-rate units")
    common(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("dynamics", help="time evolution from a named "
                                        "initial state")
    common(p)
    p.add_argument("--initial", help="initial state: G, A, S, E, 2, or 3")
    p.add_argument("--t-max", type=float, help="final dimensionless time")
    p.add_argument("--n-points", type=int, help="output grid size")
    p.add_argument("--no-step-ceiling", action="store_true",
                   help="drop the oscillation-resolving step bound "
                        "(long runs from coherence-free states)")
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("steady", help="stationary state and concurrence")
    common(p)
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("sweep", help="grid sweep over config axes")
    common(p)
    p.add_argument("--white-line", action="store_true",
                   help="symmetric scan with per-point closed-form checks")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="self-checks against known "
                                        "closed forms")
    common(p)
    p.add_argument("level", nargs="?", choices=("quick", "full"),
                   default="quick")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except _NUMERICAL_ERRORS as exc:
        sys.stderr.write(f"numerical failure: {type(exc).__name__}: "
                         f"{exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
