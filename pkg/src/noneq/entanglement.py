"""Concurrence of the qubit pair: X-state shortcut, collective-frame form,
closed-form stationary value, and the general spin-flip construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import CoupledBasisState, x_pattern_deviation
from .rates import ChannelParams

__all__ = [
    "ConcurrenceReport",
    "concurrence_x",
    "k1_coupled",
    "steady_concurrence",
    "concurrence_general",
]

_SPIN_FLIP = np.array(
    [
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
    ]
)


@dataclass(frozen=True)
class ConcurrenceReport:
    """Concurrence of an X state with its two competing branches.

    ``K1`` weighs the inner coherence against the outer populations,
    ``K2`` the outer coherence against the inner ones; only one of them
    can be positive at a time.
    """

    C: float
    K1: float
    K2: float
    dominant_branch: str


def _safe_sqrt(x: float) -> float:
    # eigenvalue noise from trajectories may go slightly negative
    return np.sqrt(x) if x > 0.0 else 0.0


def concurrence_x(rho: np.ndarray, *, pattern_tol: float = 1e-9) -> ConcurrenceReport:
    """Concurrence of an X-patterned density matrix in the product basis."""
    rho = np.asarray(rho, dtype=complex)
    dev = x_pattern_deviation(rho)
    if dev > pattern_tol:
        raise ValueError(
            f"off-pattern entries up to {dev:.3e}; use concurrence_general"
        )
    k1 = abs(rho[1, 2]) - _safe_sqrt(rho[0, 0].real * rho[3, 3].real)
    k2 = abs(rho[0, 3]) - _safe_sqrt(rho[1, 1].real * rho[2, 2].real)
    c = 2.0 * max(0.0, k1, k2)
    if c == 0.0:
        branch = "none"
    else:
        branch = "K1" if k1 >= k2 else "K2"
    return ConcurrenceReport(C=c, K1=float(k1), K2=float(k2), dominant_branch=branch)


def k1_coupled(state: CoupledBasisState) -> float:
    """The inner concurrence branch from collective-frame variables."""
    rho_sa = np.conj(state.rho_AS)
    gap = np.hypot(state.rho_S - state.rho_A, abs(rho_sa - state.rho_AS))
    return float(0.5 * gap - _safe_sqrt(state.rho_G * state.rho_E))


def steady_concurrence(ch: ChannelParams) -> float:
    """Stationary concurrence of a mirror-symmetric configuration.

    Positive only out of equilibrium: the two decay channels must settle
    at different photon numbers for the inner coherence to survive.
    """
    gs, ga = ch.gamma_S, ch.gamma_A
    ns, na = ch.n_S, ch.n_A
    zg = (1 + na) ** 2 * (1 + 2 * ns) * ga + (1 + 2 * na) * (1 + ns) ** 2 * gs
    za = na * (1 + na) * (1 + 2 * ns) * ga + (na * (1 + 2 * ns) + ns**2 * (1 + 2 * na)) * gs
    zs = ns * (1 + ns) * (1 + 2 * na) * gs + (ns * (1 + 2 * na) + na**2 * (1 + 2 * ns)) * ga
    ze = na**2 * (1 + 2 * ns) * ga + (1 + 2 * na) * ns**2 * gs
    z = zg + za + zs + ze
    val = (abs(ns - na) * (gs + ga) / 2.0 - np.sqrt(zg) * np.sqrt(ze)) * 2.0 / z
    return float(max(0.0, val))


def concurrence_general(rho: np.ndarray) -> float:
    """Wootters concurrence of an arbitrary two-qubit density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("density matrix must be 4x4")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-9:
        raise ValueError("density matrix is not Hermitian")
    flipped = _SPIN_FLIP @ rho.conj() @ _SPIN_FLIP
    ev = np.linalg.eigvals(rho @ flipped)
    lams = np.sort([_safe_sqrt(e.real) for e in ev])[::-1]
    return float(max(0.0, lams[0] - lams[1] - lams[2] - lams[3]))
