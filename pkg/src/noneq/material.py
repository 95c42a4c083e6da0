"""Dielectric permittivity models.

A permittivity model is one of three variants: ``Vacuum`` (identically 1),
``DrudeLorentzModel`` (single-resonance dielectric), or ``TabulatedConstant``
(a fixed complex value, useful to pin a measured epsilon at one frequency).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Vacuum:
    """Empty space: epsilon(omega) = 1 exactly."""


@dataclass(frozen=True)
class DrudeLorentzModel:
    """Single-resonance Drude-Lorentz dielectric.

    epsilon(omega) = eps_inf * (omega^2 - omega_l^2 + i*gamma*omega)
                             / (omega^2 - omega_r^2 + i*gamma*omega)

    Parameters
    ----------
    eps_inf : float
        High-frequency limit of the permittivity.
    omega_l : float
        Longitudinal optical phonon frequency (rad/s).
    omega_r : float
        Transverse resonance frequency (rad/s).
    gamma : float
        Damping rate (rad/s).
    """

    eps_inf: float
    omega_l: float
    omega_r: float
    gamma: float

    def __post_init__(self):
        for name in ("eps_inf", "omega_l", "omega_r", "gamma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.omega_l > self.omega_r:
            raise ValueError("omega_l must exceed omega_r")


@dataclass(frozen=True)
class TabulatedConstant:
    """Fixed permittivity, frequency-independent."""

    eps: complex


PermittivityModel = Union[Vacuum, DrudeLorentzModel, TabulatedConstant]

# Silicon carbide parameters used throughout the examples.
SIC = DrudeLorentzModel(eps_inf=6.7, omega_l=1.827e14, omega_r=1.495e14,
                        gamma=0.009e14)


def permittivity(model: PermittivityModel, omega: float) -> complex:
    """Evaluate epsilon(omega) for the given model.

    omega must be strictly positive (rad/s).  The vacuum variant returns
    exactly 1+0j; the Drude-Lorentz variant has Im epsilon > 0 for gamma > 0.
    """
    if not omega > 0:
        raise ValueError("omega must be strictly positive")
    if isinstance(model, Vacuum):
        return 1.0 + 0.0j
    if isinstance(model, TabulatedConstant):
        return complex(model.eps)
    if isinstance(model, DrudeLorentzModel):
        num = omega * omega - model.omega_l**2 + 1j * model.gamma * omega
        den = omega * omega - model.omega_r**2 + 1j * model.gamma * omega
        return model.eps_inf * num / den
    raise TypeError(f"unknown permittivity model: {model!r}")


def surface_resonance_check(model: DrudeLorentzModel,
                            tol: float = 1e-8) -> float:
    """Frequency where Re epsilon(omega) = -1, the surface-mode resonance
    of a flat vacuum-dielectric interface.

    The lossless root sqrt((eps_inf omega_l^2 + omega_r^2)/(1 + eps_inf))
    seeds a bisection bracket of +-10%; damping moves the crossing only at
    second order in gamma/omega.  A bracket endpoint cannot sit too close
    to omega_r, where the loss term flips Re epsilon back to positive and
    there is a spurious descending crossing.  Raises ValueError when the
    bracket fails to straddle the crossing (unphysically large damping).
    """
    def f(w):
        return permittivity(model, w).real + 1.0

    w0 = math.sqrt((model.eps_inf * model.omega_l**2 + model.omega_r**2)
                   / (1.0 + model.eps_inf))
    lo = max(0.9 * w0, model.omega_r * (1.0 + 1e-9))
    hi = min(1.1 * w0, model.omega_l * (1.0 - 1e-9))
    flo = f(lo)
    if flo * f(hi) > 0:
        raise ValueError("no Re epsilon = -1 crossing near the lossless root")
    while hi - lo > tol * model.omega_r:
        mid = 0.5 * (lo + hi)
        if flo * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
