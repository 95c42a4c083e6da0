"""Field-correlator matrices of an emitter pair by angular-spectrum quadrature.

The dissipative couplings of two emitters facing the slab split into a part
driven by the field radiated from the surrounding walls (held at T_W) and a
part driven by the field radiated from the slab itself (held at T_M).  Both
parts are dimensionless 3x3 matrices over the Cartesian dipole components,
obtained from angular integrals of the slab reflection and transmission
amplitudes weighted by Bessel functions of the transverse phase k*r12.

All integrals use the substitution k = (omega/c) sin(theta) over the
propagative sector and k = (omega/c) cosh(v) over the evanescent one, which
removes the 1/kz endpoint singularity at k = omega/c.  The evanescent range
is truncated where the kernel exp(-Im kz (z1+z2)) has decayed to a
configurable exponent, with a minimum reach of k = 10 omega/c.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import j0, j1, jv

from .constants import C_LIGHT
from .material import PermittivityModel, permittivity
from .scattering import (Polarization, SlabGeometry, evanescent_kinematics,
                         fresnel_r, mode_kinematics, slab_rho, slab_tau)

# safeguard reach of the evanescent integral in units of omega/c
_U_MIN_REACH = 10.0


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class EmitterGeometry:
    """Positions of the two emitters relative to the slab face at z = 0.

    Emitter q sits at height z_q > 0 on the vacuum side; the lateral
    separation r12 >= 0 lies along the x axis, pointing from emitter 2
    toward emitter 1 (so the signed separation of the ordered pair (2, 1)
    is -r12).
    """

    z1: float
    z2: float
    r12: float

    def __post_init__(self):
        for name in ("z1", "z2"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be strictly positive and finite")
        if not (self.r12 >= 0 and math.isfinite(self.r12)):
            raise ValueError("r12 must be nonnegative and finite")

    def height(self, q: int) -> float:
        return self.z1 if q == 1 else self.z2

    def lateral(self, q: int, qp: int) -> float:
        """Signed transverse separation of the ordered pair (q, q')."""
        if q == qp:
            return 0.0
        return self.r12 if (q, qp) == (1, 2) else -self.r12


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-11
    evanescent_cutoff_exponent: float = 40.0
    max_subdivisions: int = 2000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "evanescent_cutoff_exponent"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.max_subdivisions >= 1:
            raise ValueError("max_subdivisions must be at least 1")


@dataclass(frozen=True, eq=False)
class AlphaPair:
    """Correlator matrices of one ordered emitter pair at one frequency.

    alpha_W multiplies the wall photon population n(omega, T_W), alpha_M the
    slab one; their sum is real entrywise up to quadrature error.
    """

    alpha_W: np.ndarray
    alpha_M: np.ndarray
    pair: tuple
    omega: float


@dataclass(frozen=True, eq=False)
class PairIntegrals:
    """The six angular integral matrices of one ordered pair.

    A and B are complex; C, D, C2, D2 come out real (stored complex for
    uniformity).  A, B, C feed the wall part, A, B, D the slab part, and
    C2, D2 the dispersive interaction shift.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    C2: np.ndarray
    D2: np.ndarray


def _n_te(x: float) -> np.ndarray:
    b0, b2 = j0(x), jv(2, x)
    n = np.zeros((3, 3), dtype=complex)
    n[0, 0] = b0 + b2
    n[1, 1] = b0 - b2
    return n


def _n_tm(u: float, kappa: complex, x: float, phi: float,
          phip: float) -> np.ndarray:
    b0, b1, b2 = j0(x), j1(x), jv(2, x)
    n = np.zeros((3, 3), dtype=complex)
    mod2 = phi * phip * (kappa.real**2 + kappa.imag**2)
    n[0, 0] = mod2 * (b0 - b2)
    n[1, 1] = mod2 * (b0 + b2)
    n[0, 2] = -2j * phi * u * kappa * b1
    n[2, 0] = -2j * phip * u * kappa.conjugate() * b1
    n[2, 2] = 2 * u * u * b0
    return n


def angular_integrals(p: Polarization, k: float, omega: float, r_qqp: float,
                      phi: int = 1, phip: int = 1) -> np.ndarray:
    """Angular matrix N_p^{phi phi'} at transverse wavenumber k.

    Parameters
    ----------
    p : Polarization
        TE or TM.
    k : float
        Transverse wavenumber (rad/m), k >= 0; may exceed omega/c.
    omega : float
        Angular frequency (rad/s), > 0.
    r_qqp : float
        Signed transverse separation of the pair (m).
    phi, phip : int
        Propagation-direction signs (+1 up, -1 down) of the two modes.

    The removable 1/x singularities of the azimuthal average cancel in the
    closed Bessel forms used here, so no small-argument special case is
    needed.
    """
    if not omega > 0:
        raise ValueError("omega must be strictly positive")
    if k < 0:
        raise ValueError("k must be nonnegative")
    if phi not in (1, -1) or phip not in (1, -1):
        raise ValueError("phi and phip must be +1 or -1")
    u = k * C_LIGHT / omega
    x = k * r_qqp
    if p is Polarization.TE:
        return _n_te(x)
    if u <= 1:
        kappa = complex(math.sqrt(1.0 - u * u), 0.0)
    else:
        kappa = complex(0.0, math.sqrt(u * u - 1.0))
    return _n_tm(u, kappa, x, float(phi), float(phip))


def _round_trip_gap(p: Polarization, v: float, omega: float, eps: complex,
                    slab: SlabGeometry) -> float:
    """|1 - r^2 exp(2i kzm delta)| at evanescent coordinate u = cosh(v)."""
    kin = evanescent_kinematics(omega, math.sinh(v), eps)
    r = fresnel_r(p, kin, eps)
    return abs(1.0 - r * r * cmath.exp(2j * kin.kzm * slab.thickness))


# relative offsets of the breakpoint ladder bracketing each resonance
_LADDER = (1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1)


def _guided_mode_points(omega: float, eps: complex, slab: SlabGeometry,
                        v_max: float) -> list:
    """Quadrature breakpoints at guided-mode dips of the slab round trip.

    Where the Fabry-Perot denominator nearly vanishes the reflection
    amplitude spikes into a Lorentzian whose width is set by material loss;
    near-light-line modes of a thin slab can be orders of magnitude narrower
    than any fixed quadrature panel.  A log-spaced scan of the denominator
    locates every dip, ternary search sharpens it, and a geometric ladder of
    breakpoints around each lets the adaptive rule resolve the spike.
    """
    if eps == 1.0 + 0.0j:
        return []
    centers: list = []
    s_grid = np.geomspace(1e-6, math.sinh(v_max), 800)
    v_grid = np.arcsinh(s_grid)
    for p in (Polarization.TE, Polarization.TM):
        gaps = np.array([_round_trip_gap(p, v, omega, eps, slab)
                         for v in v_grid])
        for i in range(1, len(v_grid) - 1):
            if not (gaps[i] < 0.3 and gaps[i] < gaps[i - 1]
                    and gaps[i] <= gaps[i + 1]):
                continue
            lo, hi = v_grid[i - 1], v_grid[i + 1]
            for _ in range(80):
                m1 = lo + (hi - lo) / 3.0
                m2 = hi - (hi - lo) / 3.0
                if (_round_trip_gap(p, m1, omega, eps, slab)
                        < _round_trip_gap(p, m2, omega, eps, slab)):
                    hi = m2
                else:
                    lo = m1
            v_star = 0.5 * (lo + hi)
            if all(abs(v_star - q) > 1e-6 * v_star for q in centers):
                centers.append(v_star)
    pts = []
    for v_star in centers:
        pts.append(v_star)
        for off in _LADDER:
            pts.extend((v_star * (1.0 - off), v_star * (1.0 + off)))
    return sorted(v for v in pts if 0.0 < v < v_max)


def _check_converged(err: float, value: np.ndarray,
                     settings: QuadratureSettings, label: str) -> None:
    bound = 10.0 * max(settings.abs_tol,
                       settings.rel_tol * float(np.max(np.abs(value))))
    if not err <= bound:
        raise QuadratureError(
            f"{label} quadrature error estimate {err:.3e} exceeds {bound:.3e}")


def pair_integrals(pair: tuple, omega: float, geometry: EmitterGeometry,
                   material: PermittivityModel, slab: SlabGeometry,
                   settings: QuadratureSettings | None = None) -> PairIntegrals:
    """All six angular integral matrices of one ordered emitter pair.

    Parameters
    ----------
    pair : (int, int)
        Ordered pair (q, q') with q, q' in {1, 2}.
    omega : float
        Angular frequency (rad/s).
    geometry : EmitterGeometry
    material : PermittivityModel
        Slab permittivity model.
    slab : SlabGeometry
        Slab thickness.
    settings : QuadratureSettings, optional

    Returns
    -------
    PairIntegrals

    Raises
    ------
    QuadratureError
        When either adaptive quadrature reports an error estimate more than
        ten times the requested tolerance.
    """
    q, qp = pair
    if q not in (1, 2) or qp not in (1, 2):
        raise ValueError("pair indices must be 1 or 2")
    if settings is None:
        settings = QuadratureSettings()
    eps = permittivity(material, omega)
    w_c = omega / C_LIGHT
    zd = (geometry.height(q) - geometry.height(qp)) * w_c
    zs = (geometry.height(q) + geometry.height(qp)) * w_c
    rt = geometry.lateral(q, qp) * w_c

    def slab_amplitudes(kin, with_tau: bool):
        r1 = slab_rho(Polarization.TE, kin, eps, slab)
        r2 = slab_rho(Polarization.TM, kin, eps, slab)
        if not with_tau:
            return r1, r2, None, None
        t1 = slab_tau(Polarization.TE, kin, eps, slab)
        t2 = slab_tau(Polarization.TM, kin, eps, slab)
        return r1, r2, t1, t2

    def f_prop(theta: float) -> np.ndarray:
        u = math.sin(theta)
        kap = math.cos(theta)
        x = u * rt
        n1 = _n_te(x)
        n2pp = _n_tm(u, complex(kap, 0.0), x, 1.0, 1.0)
        n2pm = _n_tm(u, complex(kap, 0.0), x, 1.0, -1.0)
        r1, r2, t1, t2 = slab_amplitudes(mode_kinematics(omega, u * w_c, eps),
                                         with_tau=True)
        w1 = abs(r1) ** 2 + abs(t1) ** 2
        w2 = abs(r2) ** 2 + abs(t2) ** 2
        pref = 0.75 * u
        ph_d = pref * cmath.exp(1j * kap * zd)
        ph_s = pref * cmath.exp(1j * kap * zs)
        f_a = ph_d * (n1 + n2pp)
        f_b = ph_d * (w1 * n1 + w2 * n2pp)
        f_z = ph_s * (r1 * n1 + r2 * n2pm)
        return np.stack((f_a, f_b, f_z))

    def f_evan(v: float) -> np.ndarray:
        u = math.cosh(v)
        sh = math.sinh(v)
        x = u * rt
        n1 = _n_te(x)
        n2 = _n_tm(u, complex(0.0, sh), x, 1.0, 1.0)
        r1, r2, _, _ = slab_amplitudes(evanescent_kinematics(omega, sh, eps),
                                       with_tau=False)
        pref = 0.75 * u * math.exp(-sh * zs)
        return pref * (r1 * n1 + r2 * n2)

    v_max = max(math.asinh(settings.evanescent_cutoff_exponent / zs),
                math.acosh(_U_MIN_REACH))
    breakpoints = _guided_mode_points(omega, eps, slab, v_max) or None
    prop, err_p = quad_vec(f_prop, 0.0, 0.5 * math.pi,
                           epsabs=settings.abs_tol, epsrel=settings.rel_tol,
                           limit=settings.max_subdivisions, norm='max')
    evan, err_e = quad_vec(f_evan, 0.0, v_max,
                           epsabs=settings.abs_tol, epsrel=settings.rel_tol,
                           limit=settings.max_subdivisions, norm='max',
                           points=breakpoints)
    _check_converged(err_p, prop, settings, "propagative")
    _check_converged(err_e, evan, settings, "evanescent")
    a_mat, b_mat, z_c = prop
    return PairIntegrals(
        A=a_mat,
        B=b_mat,
        C=z_c.real.astype(complex),
        C2=(0.5 * z_c.imag).astype(complex),
        D=evan.imag.astype(complex),
        D2=(0.5 * evan.real).astype(complex),
    )


def integral_ABCD(pair, omega, geometry, material, slab, settings=None):
    """The matrices (A, B, C, D) driving the dissipative rates."""
    p = pair_integrals(pair, omega, geometry, material, slab, settings)
    return p.A, p.B, p.C, p.D


def integral_C2D2(pair, omega, geometry, material, slab, settings=None):
    """The matrices (C2, D2) driving the dispersive interaction shift."""
    p = pair_integrals(pair, omega, geometry, material, slab, settings)
    return p.C2, p.D2


def alpha_from_integrals(pair: tuple, omega: float,
                         integrals: PairIntegrals) -> AlphaPair:
    """Assemble the wall and slab correlator matrices from the integrals."""
    a_w = 0.5 * (integrals.A.conj() + integrals.B + 2.0 * integrals.C)
    a_m = 0.5 * (integrals.A - integrals.B + 2.0 * integrals.D)
    return AlphaPair(alpha_W=a_w, alpha_M=a_m, pair=tuple(pair), omega=omega)


def alpha_pair(pair, omega, geometry, material, slab,
               settings=None) -> AlphaPair:
    """Wall and slab correlator matrices of one ordered pair by quadrature."""
    p = pair_integrals(pair, omega, geometry, material, slab, settings)
    return alpha_from_integrals(pair, omega, p)


def free_space_alpha(omega: float, separation) -> np.ndarray:
    """Closed-form vacuum correlator matrix for a separation vector (m).

    The matrix is alpha_par on the interatomic axis and alpha_perp on the
    two transverse axes, with

        alpha_par  = 3 (sin r/r^3 - cos r/r^2)
        alpha_perp = (3/2) (sin r/r + cos r/r^2 - sin r/r^3)

    at r = |separation| omega / c; the coincident limit is the identity.
    """
    if not omega > 0:
        raise ValueError("omega must be strictly positive")
    dr = np.asarray(separation, dtype=float)
    if dr.shape != (3,):
        raise ValueError("separation must be a 3-vector")
    norm = float(np.linalg.norm(dr))
    r = norm * omega / C_LIGHT
    if r == 0.0:
        return np.eye(3)
    if r < 1e-2:
        # series around r = 0; the closed forms lose precision to cancellation
        r2 = r * r
        par = 1.0 - r2 / 10.0 + r2 * r2 / 280.0
        perp = 1.0 - r2 / 5.0 + 3.0 * r2 * r2 / 280.0
    else:
        s, c = math.sin(r), math.cos(r)
        par = 3.0 * (s / r**3 - c / r**2)
        perp = 1.5 * (s / r + c / r**2 - s / r**3)
    rhat = dr / norm
    proj = np.outer(rhat, rhat)
    return par * proj + perp * (np.eye(3) - proj)
