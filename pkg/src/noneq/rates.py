"""Master-equation coefficients for the emitter pair.

Everything dimensionless: rates in units of Gamma0, the vacuum
spontaneous-emission rate of emitter 1 at the transition frequency, with
time measured in 1/Gamma0.  Dipole magnitudes are absorbed into Gamma0;
unequal emitters enter only through the ratio Gamma0^2/Gamma0^1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .constants import C_LIGHT, HBAR, K_B
from .correlators import (AlphaPair, EmitterGeometry, QuadratureSettings,
                          alpha_from_integrals, integral_C2D2, pair_integrals)
from .material import PermittivityModel
from .scattering import SlabGeometry

ORDERED_PAIRS = ((1, 1), (2, 2), (1, 2), (2, 1))


@dataclass(frozen=True)
class EmitterPairConfig:
    """Two emitters with a common transition frequency omega0 (rad/s).

    Dipole orientations are unit 3-vectors (complex components allowed);
    gamma0_ratio is Gamma0^2/Gamma0^1.
    """

    omega0: float
    dipole1: tuple
    dipole2: tuple
    gamma0_ratio: float = 1.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be strictly positive")
        if not self.gamma0_ratio > 0:
            raise ValueError("gamma0_ratio must be strictly positive")
        for name in ("dipole1", "dipole2"):
            v = np.asarray(getattr(self, name), dtype=complex)
            if v.shape != (3,):
                raise ValueError(f"{name} must be a 3-vector")
            if abs(np.linalg.norm(v) - 1.0) > 1e-9:
                raise ValueError(f"{name} must be a unit vector")
            object.__setattr__(self, name, tuple(complex(c) for c in v))

    def dipole(self, q: int) -> np.ndarray:
        return np.asarray(self.dipole1 if q == 1 else self.dipole2,
                          dtype=complex)


@dataclass(frozen=True, eq=False)
class RateSet:
    """Dimensionless rates of the two-emitter master equation.

    gamma_down[q-1, q'-1] is Gamma^{qq'}(omega)/Gamma0 (photon emission),
    gamma_up the absorption counterpart at -omega; lambda_12 is the coherent
    dipole-dipole coupling Lambda^{12}/Gamma0, with Lambda^{21} its
    conjugate.
    """

    gamma_down: np.ndarray
    gamma_up: np.ndarray
    lambda_12: complex = 0j


@dataclass(frozen=True)
class AlphaScalars:
    """Unit-dipole contractions of the correlator matrices (no Gamma0 ratio)."""

    w11: complex
    w22: complex
    w12: complex
    m11: complex
    m22: complex
    m12: complex


@dataclass(frozen=True)
class ChannelParams:
    """Rates and effective photon numbers of the symmetric/antisymmetric
    decay channels of two identical emitters."""

    gamma_S: float
    gamma_A: float
    n_S: float
    n_A: float
    T_S: float
    T_A: float


def photon_number(omega: float, T: float) -> float:
    """Bose occupation 1/(exp(hbar omega / kB T) - 1); exactly 0 at T = 0."""
    if not omega > 0:
        raise ValueError("omega must be strictly positive")
    if T < 0:
        raise ValueError("temperature must be nonnegative")
    if T == 0.0:
        return 0.0
    x = HBAR * omega / (K_B * T)
    if x > 700.0:
        # 1/expm1 would overflow; the difference to exp(-x) is e^{-2x}
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def bose_temperature(omega: float, n: float) -> float:
    """Temperature at which the Bose occupation at omega equals n.

    Returns 0 for n = 0 and NaN for n < 0 (no temperature realizes a
    negative occupation).
    """
    if not omega > 0:
        raise ValueError("omega must be strictly positive")
    if n < 0:
        return math.nan
    if n == 0.0:
        return 0.0
    return HBAR * omega / (K_B * math.log1p(1.0 / n))


def _contract(matrix: np.ndarray, d_left: np.ndarray,
              d_right: np.ndarray) -> complex:
    return complex(np.conj(d_left) @ matrix @ d_right)


def alpha_scalars(alphas: dict, config: EmitterPairConfig) -> AlphaScalars:
    """Contract the (1,1), (2,2), (1,2) correlator matrices with the dipoles."""
    d1, d2 = config.dipole(1), config.dipole(2)
    return AlphaScalars(
        w11=_contract(alphas[(1, 1)].alpha_W, d1, d1),
        w22=_contract(alphas[(2, 2)].alpha_W, d2, d2),
        w12=_contract(alphas[(1, 2)].alpha_W, d1, d2),
        m11=_contract(alphas[(1, 1)].alpha_M, d1, d1),
        m22=_contract(alphas[(2, 2)].alpha_M, d2, d2),
        m12=_contract(alphas[(1, 2)].alpha_M, d1, d2),
    )


def gamma_rates(alphas: dict, config: EmitterPairConfig, T_W: float,
                T_M: float) -> RateSet:
    """Transition rates from the correlator matrices of all ordered pairs.

    Parameters
    ----------
    alphas : dict
        AlphaPair for each ordered pair (1,1), (2,2), (1,2), (2,1), all at
        the same frequency.
    config : EmitterPairConfig
    T_W, T_M : float
        Temperatures (K) of the walls and of the slab.

    Returns
    -------
    RateSet with the Gamma matrices filled in and lambda_12 = 0.
    """
    omega = alphas[(1, 1)].omega
    n_w = photon_number(omega, T_W)
    n_m = photon_number(omega, T_M)
    g = (1.0, config.gamma0_ratio)
    down = np.zeros((2, 2), dtype=complex)
    up = np.zeros((2, 2), dtype=complex)
    for q, qp in ORDERED_PAIRS:
        ap = alphas[(q, qp)]
        if ap.omega != omega:
            raise ValueError("alpha pairs evaluated at different frequencies")
        root = math.sqrt(g[q - 1] * g[qp - 1])
        a_w = _contract(ap.alpha_W, config.dipole(q), config.dipole(qp))
        a_m = _contract(ap.alpha_M, config.dipole(q), config.dipole(qp))
        down[q - 1, qp - 1] = root * ((1.0 + n_w) * a_w + (1.0 + n_m) * a_m)
        up[q - 1, qp - 1] = root * np.conj(n_w * a_w + n_m * a_m)
    return RateSet(gamma_down=down, gamma_up=up)


def lambda_free(omega: float, positions, dipoles,
                gamma0_ratio: float = 1.0) -> complex:
    """Free-space coherent dipole-dipole coupling, in units of Gamma0.

    positions and dipoles are the two emitters' position vectors (m) and
    unit dipole vectors; coincident positions are rejected (the coupling
    diverges as 1/r^3).
    """
    r1, r2 = (np.asarray(p, dtype=float) for p in positions)
    d1, d2 = (np.asarray(d, dtype=complex) for d in dipoles)
    dr = r1 - r2
    dist = float(np.linalg.norm(dr))
    if dist == 0.0:
        raise ValueError("coincident emitter positions")
    rt = dist * omega / C_LIGHT
    rhat = dr / dist
    dot = complex(np.conj(d1) @ d2)
    proj = complex(np.conj(d1) @ rhat) * complex(d2 @ rhat)
    s, c = math.sin(rt), math.cos(rt)
    g1 = ((rt * rt - 1.0) * c - rt * s) / rt**3
    g2 = (c + rt * s) / rt**3
    return -math.sqrt(gamma0_ratio) * 0.75 * ((dot - proj) * g1
                                              + 2.0 * proj * g2)


def _positions(geometry: EmitterGeometry):
    # x axis along r1 - r2
    return ((geometry.r12, 0.0, geometry.z1), (0.0, 0.0, geometry.z2))


def lambda_slab(omega: float, geometry: EmitterGeometry,
                material: PermittivityModel, slab: SlabGeometry, dipoles,
                settings: QuadratureSettings | None = None,
                gamma0_ratio: float = 1.0) -> complex:
    """Coherent coupling Lambda^{12}/Gamma0 including the slab-reflected part.

    Temperature does not enter: the coupling is the same in and out of
    thermal equilibrium.
    """
    lam0 = lambda_free(omega, _positions(geometry), dipoles, gamma0_ratio)
    c2, d2 = integral_C2D2((1, 2), omega, geometry, material, slab, settings)
    da, db = (np.asarray(d, dtype=complex) for d in dipoles)
    term = math.sqrt(gamma0_ratio) * complex(np.conj(da) @ (c2 - d2) @ db)
    return lam0 + term


def channel_params(scalars: AlphaScalars, n_W: float, n_M: float,
                   omega: float, rtol: float = 1e-9) -> ChannelParams:
    """Symmetric/antisymmetric channel rates and occupations.

    Valid only for a symmetric configuration: identical self correlators
    and a real cross correlator, checked to relative tolerance rtol.
    """
    for a, b, label in ((scalars.w11, scalars.w22, "wall"),
                        (scalars.m11, scalars.m22, "slab")):
        if abs(a - b) > rtol * max(abs(a), abs(b), 1.0):
            raise ValueError(
                f"asymmetric configuration: {label} self correlators differ")
    for c, label in ((scalars.w12, "wall"), (scalars.m12, "slab")):
        if abs(c.imag) > rtol * max(abs(c), 1.0):
            raise ValueError(
                f"asymmetric configuration: {label} cross correlator not real")
    w_s, w_x = scalars.w11, scalars.w12
    m_s, m_x = scalars.m11, scalars.m12
    gamma_a = (w_s - w_x + m_s - m_x).real
    gamma_s = (w_s + w_x + m_s + m_x).real
    if gamma_a <= 0 or gamma_s <= 0:
        raise ValueError("channel rates must be strictly positive")
    n_a = ((w_s - w_x).real * n_W + (m_s - m_x).real * n_M) / gamma_a
    n_s = ((w_s + w_x).real * n_W + (m_s + m_x).real * n_M) / gamma_s
    return ChannelParams(gamma_S=gamma_s, gamma_A=gamma_a, n_S=n_s, n_A=n_a,
                         T_S=bose_temperature(omega, n_s),
                         T_A=bose_temperature(omega, n_a))


def integral_table(omega: float, geometry: EmitterGeometry,
                   material: PermittivityModel, slab: SlabGeometry,
                   settings: QuadratureSettings | None = None) -> dict:
    """Angular integrals for all four ordered pairs.

    Temperature never enters here, so the table can be reused across
    bath-temperature scans of a fixed geometry.
    """
    return {pair: pair_integrals(pair, omega, geometry, material, slab,
                                 settings)
            for pair in ORDERED_PAIRS}


def rates_from_integrals(config: EmitterPairConfig,
                         geometry: EmitterGeometry, integrals: dict,
                         T_W: float, T_M: float) -> RateSet:
    """RateSet from a precomputed integral table (no quadrature)."""
    alphas = {pair: alpha_from_integrals(pair, config.omega0, p)
              for pair, p in integrals.items()}
    rs = gamma_rates(alphas, config, T_W, T_M)
    lam0 = lambda_free(config.omega0, _positions(geometry),
                       (config.dipole(1), config.dipole(2)),
                       config.gamma0_ratio)
    p12 = integrals[(1, 2)]
    term = math.sqrt(config.gamma0_ratio) * complex(
        np.conj(config.dipole(1)) @ (p12.C2 - p12.D2) @ config.dipole(2))
    return replace(rs, lambda_12=lam0 + term)


def build_rates(config: EmitterPairConfig, geometry: EmitterGeometry,
                material: PermittivityModel, slab: SlabGeometry, T_W: float,
                T_M: float,
                settings: QuadratureSettings | None = None) -> RateSet:
    """Complete RateSet for the standard pipeline: one quadrature per pair."""
    integrals = integral_table(config.omega0, geometry, material, slab,
                               settings)
    return rates_from_integrals(config, geometry, integrals, T_W, T_M)
