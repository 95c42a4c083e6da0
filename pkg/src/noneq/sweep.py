"""Deterministic parameter-space exploration of the steady concurrence.

A sweep walks a grid in row-major order over up to three axes, runs the
full pipeline (quadratures, rates, steady state, concurrence) at every
point, and reduces to a SweepResult whose record order never depends on
the execution schedule.  The angular quadratures are temperature
independent, so their results are cached per geometry key; temperature
axes then cost almost nothing beyond the first pass.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig, SweepAxisSpec, dipole_from_angles
from .correlators import QuadratureError, alpha_from_integrals
from .dynamics import DynamicsError, coupled_state, steady_state
from .entanglement import (concurrence_general, concurrence_x,
                           steady_concurrence)
from .rates import (ChannelParams, alpha_scalars, channel_params,
                    integral_table, photon_number, rates_from_integrals)
from .scattering import SlabResonanceError

_NAN = float("nan")

# Axes a grid sweep accepts; "z" is the white-line shorthand moving both
# emitters together.
_GRID_AXES = ("omega0", "z1", "z2", "r12", "T_W", "T_M", "delta",
              "dipole_phi", "dipole_theta")


@dataclass(frozen=True)
class SweepAxis:
    """Named axis with explicit, strictly ascending values."""

    name: str
    values: tuple

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("axis must contain at least one value")
        vals = tuple(float(v) for v in self.values)
        if any(not math.isfinite(v) for v in vals):
            raise ValueError("axis values must be finite")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("axis values must be strictly ascending")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_range(cls, name: str, lo: float, hi: float, count: int,
                   scale: str = "linear") -> "SweepAxis":
        spec = SweepAxisSpec(name=name, min=lo, max=hi, count=count,
                             scale=scale)
        return cls(name=name, values=spec.values())

    @classmethod
    def from_spec(cls, spec: SweepAxisSpec) -> "SweepAxis":
        return cls(name=spec.name, values=spec.values())


@dataclass(frozen=True)
class SweepRecord:
    """Observables at one grid point; nan where not defined."""

    point: tuple
    ok: bool = True
    error: str = ""
    concurrence: float = _NAN
    rho_G: float = _NAN
    rho_A: float = _NAN
    rho_S: float = _NAN
    rho_E: float = _NAN
    rho_23: complex = complex(_NAN, _NAN)
    gamma_ratio: float = _NAN
    n_S: float = _NAN
    n_A: float = _NAN
    T_S: float = _NAN
    T_A: float = _NAN
    degenerate: bool = False
    rank_ambiguous: bool = False


@dataclass(frozen=True)
class SweepResult:
    """Row-major grid of records plus the concurrence argmax."""

    axes: tuple
    records: tuple
    argmax: SweepRecord | None
    n_failed: int

    def __post_init__(self):
        expected = 1
        for axis in self.axes:
            expected *= len(axis.values)
        if len(self.records) != expected:
            raise ValueError("record count does not match the grid size")


def _apply_point(cfg: RunConfig, names: tuple, values: tuple) -> RunConfig:
    """Override one grid point's parameters on the base config."""
    fields: dict = {}
    angles: dict = {}
    for name, value in zip(names, values):
        if name in ("dipole_phi", "dipole_theta"):
            angles[name] = value
        elif name == "delta":
            fields["thickness"] = value
        elif name == "z":
            fields["z1"] = value
            fields["z2"] = value
        else:
            fields[name] = value
    if angles:
        # Fixed partner angles reproduce the two standard cuts: a phi
        # scan sits at theta = 0, a theta scan at phi = pi/2.
        phi = angles.get("dipole_phi", math.pi / 2)
        theta = angles.get("dipole_theta", 0.0)
        d = dipole_from_angles(phi, theta)
        fields["dipole1"] = d
        fields["dipole2"] = d
    return replace(cfg, **fields)


# One cache per worker process; keys are frozen dataclasses, values the
# quadrature tables, so concurrent duplicate inserts are benign.
_INTEGRAL_CACHE: dict = {}


def _cached_integrals(omega, geometry, material, slab, settings):
    key = (omega, geometry, material, slab, settings)
    table = _INTEGRAL_CACHE.get(key)
    if table is None:
        table = integral_table(omega, geometry, material, slab, settings)
        _INTEGRAL_CACHE[key] = table
    return table


def _eval_point(task) -> SweepRecord:
    cfg, names, values = task
    point = tuple(float(v) for v in values)
    try:
        cfg = _apply_point(cfg, names, values)
        emitters = cfg.emitter_config()
        geometry = cfg.geometry()
        material = cfg.material_model()
        slab = cfg.slab()
        settings = cfg.quadrature_settings()
        integrals = _cached_integrals(cfg.omega0, geometry, material, slab,
                                      settings)
        rates = rates_from_integrals(emitters, geometry, integrals,
                                     cfg.T_W, cfg.T_M)
        steady = steady_state(rates)
        try:
            conc = concurrence_x(steady.rho).C
        except ValueError:
            conc = concurrence_general(steady.rho)
        pops = coupled_state(steady.rho)
        record = SweepRecord(
            point=point, concurrence=conc,
            rho_G=pops.rho_G, rho_A=pops.rho_A, rho_S=pops.rho_S,
            rho_E=pops.rho_E, rho_23=pops.rho_23,
            degenerate=steady.degenerate,
            rank_ambiguous=steady.rank_ambiguous)
        try:
            alphas = {pair: alpha_from_integrals(pair, cfg.omega0, p)
                      for pair, p in integrals.items()}
            ch = channel_params(alpha_scalars(alphas, emitters),
                                photon_number(cfg.omega0, cfg.T_W),
                                photon_number(cfg.omega0, cfg.T_M),
                                cfg.omega0)
        except ValueError:
            return record
        return replace(record, gamma_ratio=ch.gamma_A / ch.gamma_S,
                       n_S=ch.n_S, n_A=ch.n_A, T_S=ch.T_S, T_A=ch.T_A)
    except (QuadratureError, SlabResonanceError, DynamicsError,
            np.linalg.LinAlgError, ValueError) as exc:
        return SweepRecord(point=point, ok=False,
                           error=f"{type(exc).__name__}: {exc}")


def _reduce(axes: tuple, records: list) -> SweepResult:
    argmax = None
    n_failed = 0
    for rec in records:
        if not rec.ok:
            n_failed += 1
            continue
        if math.isnan(rec.concurrence):
            continue
        if argmax is None or rec.concurrence > argmax.concurrence:
            argmax = rec
    return SweepResult(axes=tuple(axes), records=tuple(records),
                       argmax=argmax, n_failed=n_failed)


def grid_sweep(cfg: RunConfig, axes, jobs: int = 1) -> SweepResult:
    """Steady concurrence on the product grid of up to three axes.

    Records come back in row-major order (last axis fastest) whatever the
    worker count; failed points are kept with their error string but are
    excluded from the argmax.
    """
    axes = tuple(axes)
    if not 1 <= len(axes) <= 3:
        raise ValueError("grid_sweep takes one to three axes")
    names = tuple(a.name for a in axes)
    if len(set(names)) != len(names):
        raise ValueError("axes must name distinct parameters")
    for name in names:
        if name not in _GRID_AXES:
            raise ValueError(f"unknown sweep axis {name!r}")
    tasks = [(cfg, names, values) for values
             in itertools.product(*(a.values for a in axes))]
    if jobs > 1 and len(tasks) > 1:
        # Chunks follow row-major order, so workers see consecutive
        # points and share their geometry-keyed quadrature cache.
        chunk = max(1, min(256, len(axes[-1].values)))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_eval_point, tasks, chunksize=chunk))
    else:
        records = [_eval_point(t) for t in tasks]
    return _reduce(axes, records)


def white_line_scan(cfg: RunConfig, axis: SweepAxis,
                    check_tol: float = 1e-8) -> SweepResult:
    """Symmetric-configuration scan with per-point closed-form checks.

    The configuration must have z1 = z2 and identical real dipoles; the
    axis may move the common height (name "z", or "z1"/"z2" as synonyms)
    or a bath temperature.  Every point computes the channel parameters
    and the closed-form steady concurrence, verifies it against the
    general pipeline within check_tol, and reports both channels.
    """
    if axis.name in ("z", "z1", "z2"):
        names: tuple = ("z",)
    elif axis.name in ("T_M", "T_W"):
        names = (axis.name,)
    else:
        raise ValueError("white-line axis must move z or a temperature")
    if cfg.z1 != cfg.z2:
        raise ValueError("white-line scan requires z1 = z2")
    if cfg.dipole1 != cfg.dipole2 or cfg.gamma0_ratio != 1.0:
        raise ValueError("white-line scan requires identical emitters")
    if any(c.imag != 0.0 for c in cfg.dipole1):
        raise ValueError("white-line scan requires real dipoles")

    records = []
    for value in axis.values:
        rec = _eval_point((cfg, names, (value,)))
        if rec.ok and not math.isnan(rec.gamma_ratio):
            ch = _channel_at(cfg, names, (value,))
            closed = steady_concurrence(ch)
            if abs(closed - rec.concurrence) > check_tol:
                rec = SweepRecord(
                    point=rec.point, ok=False,
                    error="closed-form concurrence deviates from the "
                          f"general pipeline by {abs(closed - rec.concurrence):.3e}")
        elif rec.ok:
            rec = SweepRecord(point=rec.point, ok=False,
                              error="configuration not symmetric at this "
                                    "point")
        records.append(rec)
    return _reduce((SweepAxis(name=names[0], values=axis.values),), records)


def _channel_at(cfg: RunConfig, names, values):
    cfg = _apply_point(cfg, names, values)
    integrals = _cached_integrals(cfg.omega0, cfg.geometry(),
                                  cfg.material_model(), cfg.slab(),
                                  cfg.quadrature_settings())
    alphas = {pair: alpha_from_integrals(pair, cfg.omega0, p)
              for pair, p in integrals.items()}
    return channel_params(alpha_scalars(alphas, cfg.emitter_config()),
                          photon_number(cfg.omega0, cfg.T_W),
                          photon_number(cfg.omega0, cfg.T_M), cfg.omega0)


def dipole_angle_scan(cfg: RunConfig, axis: SweepAxis,
                      jobs: int = 1) -> SweepResult:
    """Concurrence against a common rotation of both (parallel) dipoles."""
    if axis.name not in ("dipole_phi", "dipole_theta"):
        raise ValueError("angle axis must be dipole_phi or dipole_theta")
    return grid_sweep(cfg, (axis,), jobs=jobs)


def channel_curve(gamma_ratio: float, n_S: float, n_A_values) -> tuple:
    """Closed-form steady concurrence over n_A at fixed Gamma_A/Gamma_S
    and n_S, no quadrature involved."""
    records = []
    for n_a in n_A_values:
        ch = ChannelParams(gamma_S=1.0, gamma_A=gamma_ratio, n_S=n_S,
                           n_A=float(n_a), T_S=_NAN, T_A=_NAN)
        records.append((float(n_a), steady_concurrence(ch)))
    return tuple(records)


# -- output files --------------------------------------------------------

def _fmt(value: float) -> str:
    return format(value, ".17g")


def write_sweep_csv(result: SweepResult, path, config_hash: str) -> None:
    """One row per grid point, axes first, full round-trip precision."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_sha256={config_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*(a.name for a in result.axes), "ok",
                         "concurrence", "rho_G", "rho_A", "rho_S", "rho_E",
                         "re_rho_23", "im_rho_23", "gamma_A_over_gamma_S",
                         "n_S", "n_A", "T_S", "T_A", "degenerate",
                         "rank_ambiguous", "error"])
        for rec in result.records:
            writer.writerow([
                *(_fmt(v) for v in rec.point),
                "1" if rec.ok else "0",
                _fmt(rec.concurrence), _fmt(rec.rho_G), _fmt(rec.rho_A),
                _fmt(rec.rho_S), _fmt(rec.rho_E), _fmt(rec.rho_23.real),
                _fmt(rec.rho_23.imag), _fmt(rec.gamma_ratio),
                _fmt(rec.n_S), _fmt(rec.n_A), _fmt(rec.T_S), _fmt(rec.T_A),
                "1" if rec.degenerate else "0",
                "1" if rec.rank_ambiguous else "0",
                rec.error])


def _finite_or_none(v: float):
    # strict JSON has no NaN token
    return v if math.isfinite(v) else None


def _record_dict(rec: SweepRecord, axes) -> dict:
    return {
        "point": {axis.name: v for axis, v in zip(axes, rec.point)},
        "ok": rec.ok,
        "concurrence": _finite_or_none(rec.concurrence),
        "populations": {"G": _finite_or_none(rec.rho_G),
                        "A": _finite_or_none(rec.rho_A),
                        "S": _finite_or_none(rec.rho_S),
                        "E": _finite_or_none(rec.rho_E)},
        "rho_23": [_finite_or_none(rec.rho_23.real),
                   _finite_or_none(rec.rho_23.imag)],
        "gamma_A_over_gamma_S": _finite_or_none(rec.gamma_ratio),
        "n_S": _finite_or_none(rec.n_S),
        "n_A": _finite_or_none(rec.n_A),
        "T_S": _finite_or_none(rec.T_S),
        "T_A": _finite_or_none(rec.T_A),
        "degenerate": rec.degenerate,
        "rank_ambiguous": rec.rank_ambiguous,
        "error": rec.error,
    }


def summary_dict(result: SweepResult, cfg: RunConfig) -> dict:
    """JSON-ready sweep summary: argmax, parameters, diagnostics counts."""
    return {
        "config_sha256": cfg.resolved_hash(),
        "parameters": cfg.to_dict(),
        "axes": [{"name": a.name, "count": len(a.values),
                  "min": a.values[0], "max": a.values[-1]}
                 for a in result.axes],
        "n_points": len(result.records),
        "diagnostics": {
            "n_failed": result.n_failed,
            "n_degenerate": sum(r.degenerate for r in result.records),
            "n_rank_ambiguous": sum(r.rank_ambiguous
                                    for r in result.records),
        },
        "argmax": (None if result.argmax is None
                   else _record_dict(result.argmax, result.axes)),
    }


def write_summary_json(result: SweepResult, path, cfg: RunConfig) -> None:
    with open(path, "w") as fh:
        json.dump(summary_dict(result, cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
