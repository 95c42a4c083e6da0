"""Run configuration: file parsing, strict validation, serialization.

Config files are TOML (or JSON with the same structure) and carry SI
units throughout: meters, kelvin, rad/s.  Conversion to the internal
dimensionless quantities happens inside the computational modules, never
here.  Parsing is strict: unknown sections or keys raise ConfigError
with the full dotted key path, as do values outside their physical
domain.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .correlators import EmitterGeometry, QuadratureSettings
from .material import (SIC, DrudeLorentzModel, PermittivityModel,
                       TabulatedConstant, Vacuum)
from .rates import EmitterPairConfig
from .scattering import SlabGeometry


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key path."""


MATERIAL_MODELS = ("sic", "vacuum", "drude_lorentz", "constant")
AXIS_NAMES = ("omega0", "z1", "z2", "r12", "T_W", "T_M", "delta",
              "dipole_phi", "dipole_theta")
OUTPUT_FORMATS = ("csv", "json")


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {message}")


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    v = float(value)
    _require(math.isfinite(v), path, "must be finite")
    return v


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _as_str(value, path: str, allowed: tuple = ()) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected a string, got {value!r}")
    if allowed and value not in allowed:
        raise ConfigError(
            f"{path}: {value!r} is not one of {', '.join(allowed)}")
    return value


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true/false, got {value!r}")
    return value


def _component(value, path: str) -> complex:
    """One dipole component: a real number or a [re, im] pair."""
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_as_float(value[0], path), _as_float(value[1], path))
    return complex(_as_float(value, path))


def _dipole(value, path: str) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{path}: expected a 3-vector")
    return tuple(_component(c, f"{path}[{i}]") for i, c in enumerate(value))


def _pop_section(data: dict, name: str) -> dict:
    section = data.pop(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"{name}: expected a table/section")
    return dict(section)


def _reject_unknown(section: dict, path: str) -> None:
    if section:
        key = sorted(section)[0]
        raise ConfigError(f"{path}.{key}: unknown key")


def _emit_component(c: complex):
    return c.real if c.imag == 0.0 else [c.real, c.imag]


@dataclass(frozen=True)
class SweepAxisSpec:
    """One sweep axis given as an inclusive range plus a point count."""

    name: str
    min: float
    max: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        _require(self.name in AXIS_NAMES, "sweep.axes.name",
                 f"{self.name!r} is not one of {', '.join(AXIS_NAMES)}")
        _require(self.count >= 1, "sweep.axes.count", "must be at least 1")
        _require(self.scale in ("linear", "log"), "sweep.axes.scale",
                 "must be linear or log")
        if self.count == 1:
            _require(self.min == self.max, "sweep.axes",
                     "count = 1 requires min = max")
        else:
            _require(self.min < self.max, "sweep.axes",
                     "min must be below max")
        if self.scale == "log":
            _require(self.min > 0, "sweep.axes.min",
                     "log scale requires positive bounds")

    def values(self) -> tuple:
        if self.count == 1:
            return (self.min,)
        if self.scale == "log":
            lo, hi = math.log(self.min), math.log(self.max)
            vals = [math.exp(lo + (hi - lo) * i / (self.count - 1))
                    for i in range(self.count)]
            vals[0], vals[-1] = self.min, self.max
            return tuple(vals)
        return tuple(self.min + (self.max - self.min) * i / (self.count - 1)
                     for i in range(self.count))


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run settings, one field group per config section."""

    # material
    material: str = "sic"
    eps_inf: float | None = None
    omega_l: float | None = None
    omega_r: float | None = None
    material_gamma: float | None = None
    eps_const: complex | None = None
    # slab
    thickness: float = 1e-8
    # emitters
    omega0: float = 0.3 * 1.495e14
    z1: float = 1.04e-6
    z2: float = 1.04e-6
    r12: float = 0.25e-6
    dipole1: tuple = (0.0 + 0j, 0.0 + 0j, 1.0 + 0j)
    dipole2: tuple = (0.0 + 0j, 0.0 + 0j, 1.0 + 0j)
    gamma0_ratio: float = 1.0
    # bath
    T_W: float = 300.0
    T_M: float = 300.0
    # quadrature
    rel_tol: float = 1e-8
    abs_tol: float = 1e-11
    evanescent_cutoff_exponent: float = 40.0
    max_subdivisions: int = 2000
    # dynamics
    initial_state: str = "G"
    t_max: float = 10.0
    n_points: int = 201
    include_hamiltonian: bool = False
    # bare splitting in decay-rate units, used only out of the rotating
    # frame; not derivable from the SI inputs without a dipole magnitude
    omega0_over_gamma0: float = 0.0
    # sweep
    axes: tuple = ()
    # output
    out_path: str | None = None
    out_format: str = "csv"

    # -- construction ----------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        kw: dict = {}

        mat = _pop_section(data, "material")
        model = _as_str(mat.pop("model", "sic"), "material.model",
                        MATERIAL_MODELS)
        kw["material"] = model
        if model == "drude_lorentz":
            for key, dest in (("eps_inf", "eps_inf"), ("omega_l", "omega_l"),
                              ("omega_r", "omega_r"),
                              ("gamma", "material_gamma")):
                if key not in mat:
                    raise ConfigError(f"material.{key}: required for "
                                      f"model = drude_lorentz")
                kw[dest] = _as_float(mat.pop(key), f"material.{key}")
        elif model == "constant":
            re = _as_float(mat.pop("eps_re", 1.0), "material.eps_re")
            im = _as_float(mat.pop("eps_im", 0.0), "material.eps_im")
            kw["eps_const"] = complex(re, im)
        _reject_unknown(mat, "material")

        slab = _pop_section(data, "slab")
        if "thickness" in slab:
            kw["thickness"] = _as_float(slab.pop("thickness"),
                                        "slab.thickness")
            _require(kw["thickness"] > 0, "slab.thickness",
                     "must be strictly positive")
        _reject_unknown(slab, "slab")

        em = _pop_section(data, "emitters")
        for key in ("omega0", "z1", "z2", "r12", "gamma0_ratio"):
            if key in em:
                kw[key] = _as_float(em.pop(key), f"emitters.{key}")
        has_vectors = "dipole1" in em or "dipole2" in em
        has_angles = "dipole_phi" in em or "dipole_theta" in em
        if has_vectors and has_angles:
            raise ConfigError("emitters: give dipole vectors or angles, "
                              "not both")
        if has_angles:
            phi = _as_float(em.pop("dipole_phi", 0.0), "emitters.dipole_phi")
            theta = _as_float(em.pop("dipole_theta", 0.0),
                              "emitters.dipole_theta")
            d = dipole_from_angles(phi, theta)
            kw["dipole1"] = d
            kw["dipole2"] = d
        elif has_vectors:
            if "dipole1" not in em or "dipole2" not in em:
                raise ConfigError("emitters: dipole1 and dipole2 must be "
                                  "given together")
            kw["dipole1"] = _dipole(em.pop("dipole1"), "emitters.dipole1")
            kw["dipole2"] = _dipole(em.pop("dipole2"), "emitters.dipole2")
        _reject_unknown(em, "emitters")

        bath = _pop_section(data, "bath")
        for key in ("T_W", "T_M"):
            if key in bath:
                kw[key] = _as_float(bath.pop(key), f"bath.{key}")
                _require(kw[key] >= 0, f"bath.{key}", "must be nonnegative")
        _reject_unknown(bath, "bath")

        quad = _pop_section(data, "quadrature")
        for key in ("rel_tol", "abs_tol", "evanescent_cutoff_exponent"):
            if key in quad:
                kw[key] = _as_float(quad.pop(key), f"quadrature.{key}")
                _require(kw[key] > 0, f"quadrature.{key}",
                         "must be strictly positive")
        if "max_subdivisions" in quad:
            kw["max_subdivisions"] = _as_int(quad.pop("max_subdivisions"),
                                             "quadrature.max_subdivisions")
        _reject_unknown(quad, "quadrature")

        dyn = _pop_section(data, "dynamics")
        if "initial_state" in dyn:
            kw["initial_state"] = _as_str(dyn.pop("initial_state"),
                                          "dynamics.initial_state")
        if "t_max" in dyn:
            kw["t_max"] = _as_float(dyn.pop("t_max"), "dynamics.t_max")
            _require(kw["t_max"] > 0, "dynamics.t_max",
                     "must be strictly positive")
        if "n_points" in dyn:
            kw["n_points"] = _as_int(dyn.pop("n_points"),
                                     "dynamics.n_points")
            _require(kw["n_points"] >= 2, "dynamics.n_points",
                     "must be at least 2")
        if "include_hamiltonian" in dyn:
            kw["include_hamiltonian"] = _as_bool(
                dyn.pop("include_hamiltonian"),
                "dynamics.include_hamiltonian")
        if "omega0_over_gamma0" in dyn:
            kw["omega0_over_gamma0"] = _as_float(
                dyn.pop("omega0_over_gamma0"),
                "dynamics.omega0_over_gamma0")
        _reject_unknown(dyn, "dynamics")

        sweep = _pop_section(data, "sweep")
        axes_raw = sweep.pop("axes", [])
        if not isinstance(axes_raw, (list, tuple)):
            raise ConfigError("sweep.axes: expected an array of tables")
        axes = []
        for i, entry in enumerate(axes_raw):
            if not isinstance(entry, dict):
                raise ConfigError(f"sweep.axes[{i}]: expected a table")
            entry = dict(entry)
            for key in ("name", "min", "max", "count"):
                if key not in entry:
                    raise ConfigError(f"sweep.axes[{i}].{key}: required")
            try:
                axis = SweepAxisSpec(
                    name=_as_str(entry.pop("name"),
                                 f"sweep.axes[{i}].name", AXIS_NAMES),
                    min=_as_float(entry.pop("min"),
                                  f"sweep.axes[{i}].min"),
                    max=_as_float(entry.pop("max"),
                                  f"sweep.axes[{i}].max"),
                    count=_as_int(entry.pop("count"),
                                  f"sweep.axes[{i}].count"),
                    scale=_as_str(entry.pop("scale", "linear"),
                                  f"sweep.axes[{i}].scale"))
            except ConfigError as exc:
                raise ConfigError(f"sweep.axes[{i}]: {exc}") from None
            _reject_unknown(entry, f"sweep.axes[{i}]")
            axes.append(axis)
        kw["axes"] = tuple(axes)
        _reject_unknown(sweep, "sweep")

        out = _pop_section(data, "output")
        if "path" in out:
            kw["out_path"] = _as_str(out.pop("path"), "output.path")
        if "format" in out:
            kw["out_format"] = _as_str(out.pop("format"), "output.format",
                                       OUTPUT_FORMATS)
        _reject_unknown(out, "output")

        _reject_unknown(data, "config")
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
        if path.suffix.lower() == ".json":
            try:
                data = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        else:
            try:
                data = tomllib.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
                raise ConfigError(f"{path}: invalid TOML: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a table")
        return cls.from_dict(data)

    # -- validation ------------------------------------------------------

    def validate(self) -> None:
        """Re-check every physical bound by building the domain objects."""
        try:
            self.material_model()
            self.slab()
            self.geometry()
            self.emitter_config()
            self.quadrature_settings()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        _require(self.T_W >= 0, "bath.T_W", "must be nonnegative")
        _require(self.T_M >= 0, "bath.T_M", "must be nonnegative")
        _require(self.t_max > 0, "dynamics.t_max",
                 "must be strictly positive")
        _require(self.n_points >= 2, "dynamics.n_points",
                 "must be at least 2")
        _require(self.out_format in OUTPUT_FORMATS, "output.format",
                 f"must be one of {', '.join(OUTPUT_FORMATS)}")
        names = [a.name for a in self.axes]
        _require(len(names) == len(set(names)), "sweep.axes",
                 "axis names must be distinct")

    # -- domain objects --------------------------------------------------

    def material_model(self) -> PermittivityModel:
        if self.material == "sic":
            return SIC
        if self.material == "vacuum":
            return Vacuum()
        if self.material == "constant":
            return TabulatedConstant(self.eps_const
                                     if self.eps_const is not None else 1 + 0j)
        try:
            return DrudeLorentzModel(eps_inf=self.eps_inf,
                                     omega_l=self.omega_l,
                                     omega_r=self.omega_r,
                                     gamma=self.material_gamma)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"material: {exc}") from None

    def slab(self) -> SlabGeometry:
        try:
            return SlabGeometry(thickness=self.thickness)
        except ValueError as exc:
            raise ConfigError(f"slab: {exc}") from None

    def geometry(self) -> EmitterGeometry:
        try:
            return EmitterGeometry(z1=self.z1, z2=self.z2, r12=self.r12)
        except ValueError as exc:
            raise ConfigError(f"emitters: {exc}") from None

    def emitter_config(self) -> EmitterPairConfig:
        try:
            return EmitterPairConfig(omega0=self.omega0,
                                     dipole1=self.dipole1,
                                     dipole2=self.dipole2,
                                     gamma0_ratio=self.gamma0_ratio)
        except ValueError as exc:
            raise ConfigError(f"emitters: {exc}") from None

    def quadrature_settings(self) -> QuadratureSettings:
        try:
            return QuadratureSettings(
                rel_tol=self.rel_tol, abs_tol=self.abs_tol,
                evanescent_cutoff_exponent=self.evanescent_cutoff_exponent,
                max_subdivisions=self.max_subdivisions)
        except ValueError as exc:
            raise ConfigError(f"quadrature: {exc}") from None

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        mat: dict = {"model": self.material}
        if self.material == "drude_lorentz":
            mat.update(eps_inf=self.eps_inf, omega_l=self.omega_l,
                       omega_r=self.omega_r, gamma=self.material_gamma)
        elif self.material == "constant":
            eps = self.eps_const if self.eps_const is not None else 1 + 0j
            mat.update(eps_re=eps.real, eps_im=eps.imag)
        return {
            "material": mat,
            "slab": {"thickness": self.thickness},
            "emitters": {
                "omega0": self.omega0, "z1": self.z1, "z2": self.z2,
                "r12": self.r12, "gamma0_ratio": self.gamma0_ratio,
                "dipole1": [_emit_component(c) for c in self.dipole1],
                "dipole2": [_emit_component(c) for c in self.dipole2],
            },
            "bath": {"T_W": self.T_W, "T_M": self.T_M},
            "quadrature": {
                "rel_tol": self.rel_tol, "abs_tol": self.abs_tol,
                "evanescent_cutoff_exponent":
                    self.evanescent_cutoff_exponent,
                "max_subdivisions": self.max_subdivisions,
            },
            "dynamics": {
                "initial_state": self.initial_state, "t_max": self.t_max,
                "n_points": self.n_points,
                "include_hamiltonian": self.include_hamiltonian,
                "omega0_over_gamma0": self.omega0_over_gamma0,
            },
            "sweep": {"axes": [
                {"name": a.name, "min": a.min, "max": a.max,
                 "count": a.count, "scale": a.scale} for a in self.axes]},
            "output": {"format": self.out_format,
                       **({"path": self.out_path}
                          if self.out_path is not None else {})},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def resolved_hash(self) -> str:
        """sha256 of the canonical JSON form, for output provenance."""
        canonical = json.dumps(self.to_dict(), sort_keys=True,
                               separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def dipole_from_angles(phi: float, theta: float) -> tuple:
    """Unit dipole (sin phi cos theta, sin phi sin theta, cos phi).

    phi is the angle to the z axis (surface normal), theta the azimuth
    from the x axis (the interatomic axis).
    """
    return (complex(math.sin(phi) * math.cos(theta)),
            complex(math.sin(phi) * math.sin(theta)),
            complex(math.cos(phi)))
