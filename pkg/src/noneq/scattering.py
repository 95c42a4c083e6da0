"""Fresnel coefficients and finite-thickness slab amplitudes.

Conventions: the slab occupies -delta < z < 0, vacuum on both sides; modes
are labelled by (omega, k, p) with k the transverse wavenumber.  The vacuum
longitudinal wavenumber kz is real nonnegative in the propagative sector
(k <= omega/c) and purely imaginary with Im kz > 0 in the evanescent sector.
The medium wavenumber kzm = sqrt(eps w^2/c^2 - k^2) takes the branch
Im kzm >= 0 (and Re kzm >= 0 on the real axis), so transmitted waves decay
into an absorbing medium.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

from .constants import C_LIGHT


class Polarization(enum.Enum):
    TE = 1
    TM = 2


class Sector(enum.Enum):
    PROPAGATIVE = "propagative"
    EVANESCENT = "evanescent"


class SlabResonanceError(ValueError):
    """Guided-mode pole of a lossless slab hit by the quadrature."""


@dataclass(frozen=True)
class SlabGeometry:
    """Slab of finite thickness (m)."""

    thickness: float

    def __post_init__(self):
        if not (self.thickness > 0 and math.isfinite(self.thickness)):
            raise ValueError("thickness must be strictly positive and finite")


@dataclass(frozen=True)
class ModeKinematics:
    omega: float
    k: float
    kz: complex
    kzm: complex
    sector: Sector


def _branch_im_pos(z: complex) -> complex:
    # principal sqrt, then fold onto Im >= 0 (Re >= 0 on the real axis)
    w = cmath.sqrt(z)
    if w.imag < 0:
        w = -w
    if w.imag == 0 and w.real < 0:
        w = -w
    return w


def mode_kinematics(omega: float, k: float, eps: complex) -> ModeKinematics:
    """Longitudinal wavenumbers in vacuum and medium for a mode (omega, k)."""
    if not omega > 0:
        raise ValueError("omega must be strictly positive")
    if k < 0:
        raise ValueError("k must be nonnegative")
    w_c = omega / C_LIGHT
    if k <= w_c:
        kz = complex(math.sqrt(w_c * w_c - k * k), 0.0)
        sector = Sector.PROPAGATIVE
    else:
        kz = complex(0.0, math.sqrt(k * k - w_c * w_c))
        sector = Sector.EVANESCENT
    kzm = _branch_im_pos(eps * w_c * w_c - k * k)
    return ModeKinematics(omega=omega, k=k, kz=kz, kzm=kzm, sector=sector)


def evanescent_kinematics(omega: float, s: float,
                          eps: complex) -> ModeKinematics:
    """Kinematics built from the vacuum decay constant s = Im kz / (omega/c).

    Near the light line the transverse coordinate u = sqrt(1 + s^2) rounds
    u - 1 away at absolute machine precision, so forming kz and kzm from k
    leaves them with a relative error of order eps_mach / s^2; a high-Q
    guided-mode denominator amplifies that into jumps between adjacent
    representable k.  Starting from s keeps both wavenumbers exact to
    rounding.
    """
    if not omega > 0:
        raise ValueError("omega must be strictly positive")
    if s < 0:
        raise ValueError("s must be nonnegative")
    w_c = omega / C_LIGHT
    kz = complex(0.0, w_c * s)
    kzm = _branch_im_pos(w_c * w_c * (eps - 1.0 - s * s))
    return ModeKinematics(omega=omega, k=w_c * math.hypot(1.0, s), kz=kz,
                          kzm=kzm, sector=Sector.EVANESCENT)


def fresnel_r(p: Polarization, kin: ModeKinematics, eps: complex) -> complex:
    """Vacuum-medium reflection amplitude of a single interface."""
    if kin.kz == 0 and kin.kzm == 0:
        # grazing mode of an index-matched medium; limit along eps -> 1
        return 0.0j
    if p is Polarization.TE:
        return (kin.kz - kin.kzm) / (kin.kz + kin.kzm)
    return (eps * kin.kz - kin.kzm) / (eps * kin.kz + kin.kzm)


def fresnel_t(p: Polarization, kin: ModeKinematics, eps: complex) -> complex:
    """Vacuum-to-medium transmission amplitude."""
    if kin.kz == 0 and kin.kzm == 0:
        return 1.0 + 0.0j
    if p is Polarization.TE:
        return 2 * kin.kz / (kin.kz + kin.kzm)
    return 2 * cmath.sqrt(eps) * kin.kz / (eps * kin.kz + kin.kzm)


def fresnel_tbar(p: Polarization, kin: ModeKinematics, eps: complex) -> complex:
    """Medium-to-vacuum transmission amplitude."""
    if kin.kz == 0 and kin.kzm == 0:
        return 1.0 + 0.0j
    if p is Polarization.TE:
        return 2 * kin.kzm / (kin.kz + kin.kzm)
    return 2 * cmath.sqrt(eps) * kin.kzm / (eps * kin.kz + kin.kzm)


def _slab_denominator(r: complex, phase: complex) -> complex:
    den = 1.0 - r * r * phase
    if abs(den) < 1e-14:
        raise SlabResonanceError(
            "slab Fabry-Perot denominator vanishes (lossless guided mode)")
    return den


def slab_rho(p: Polarization, kin: ModeKinematics, eps: complex,
             geom: SlabGeometry) -> complex:
    """Reflection amplitude of the finite slab."""
    r = fresnel_r(p, kin, eps)
    phase = cmath.exp(2j * kin.kzm * geom.thickness)
    return r * (1.0 - phase) / _slab_denominator(r, phase)


def slab_tau(p: Polarization, kin: ModeKinematics, eps: complex,
             geom: SlabGeometry) -> complex:
    """Transmission amplitude through the finite slab."""
    r = fresnel_r(p, kin, eps)
    phase = cmath.exp(2j * kin.kzm * geom.thickness)
    t = fresnel_t(p, kin, eps)
    tbar = fresnel_tbar(p, kin, eps)
    # keep kzm - kz in a single exponent: both grow like ik for large k and
    # the difference stays bounded
    travel = cmath.exp(1j * (kin.kzm - kin.kz) * geom.thickness)
    return t * tbar * travel / _slab_denominator(r, phase)
