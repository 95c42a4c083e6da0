"""Lindblad generator, propagation, and steady states of the qubit pair.

Everything here is dimensionless: rates are in units of the single-emitter
vacuum decay rate and time is measured in its inverse.  The density matrix
lives in the product basis ``{|gg>, |eg>, |ge>, |ee>}``; the collective
(coupled) basis ``{|G>, |A>, |S>, |E>}`` with ``|A/S> = (|eg> -/+ |ge>)
/ sqrt(2)`` diagonalizes the coherent dipole-dipole coupling and is the
natural frame for the symmetric-configuration closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .rates import ChannelParams, RateSet

__all__ = [
    "DynamicsError",
    "StiffnessError",
    "TraceDriftError",
    "CoupledBasisState",
    "SteadyState",
    "SIGMA_1",
    "SIGMA_2",
    "COUPLED_KETS",
    "check_density_matrix",
    "initial_state",
    "x_pattern_deviation",
    "build_liouvillian",
    "evolve",
    "steady_state",
    "is_degenerate",
    "degenerate_steady",
    "symmetric_steady",
    "coherence_decay",
    "to_coupled",
    "from_coupled",
    "coupled_state",
]


class DynamicsError(RuntimeError):
    """Propagation failed or produced an invalid density matrix."""


class StiffnessError(DynamicsError):
    """The adaptive integrator gave up (step underflow or no convergence)."""


class TraceDriftError(DynamicsError):
    """Trace left the unit value beyond tolerance; result not trustworthy."""


# lowering operators of the two qubits in the product basis
SIGMA_1 = np.zeros((4, 4))
SIGMA_1[0, 1] = SIGMA_1[2, 3] = 1.0
SIGMA_2 = np.zeros((4, 4))
SIGMA_2[0, 2] = SIGMA_2[1, 3] = 1.0

_S2 = 1.0 / np.sqrt(2.0)
# columns are |G>, |A>, |S>, |E> expressed in the product basis
COUPLED_KETS = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, _S2, _S2, 0.0],
        [0.0, -_S2, _S2, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)

_X_MASK = np.zeros((4, 4), dtype=bool)
_X_MASK[np.arange(4), np.arange(4)] = True
_X_MASK[np.arange(4), np.arange(4)[::-1]] = True

_NAMED_STATES = {
    "G": np.outer(COUPLED_KETS[:, 0], COUPLED_KETS[:, 0]),
    "A": np.outer(COUPLED_KETS[:, 1], COUPLED_KETS[:, 1]),
    "S": np.outer(COUPLED_KETS[:, 2], COUPLED_KETS[:, 2]),
    "E": np.outer(COUPLED_KETS[:, 3], COUPLED_KETS[:, 3]),
    "2": np.diag([0.0, 1.0, 0.0, 0.0]),
    "3": np.diag([0.0, 0.0, 1.0, 0.0]),
}


def check_density_matrix(
    rho: np.ndarray,
    *,
    herm_tol: float = 1e-12,
    trace_tol: float = 1e-12,
    eig_floor: float = -1e-10,
) -> np.ndarray:
    """Validate a 4x4 density matrix and return it as a complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("density matrix must be 4x4")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > trace_tol or abs(np.trace(rho).imag) > trace_tol:
        raise ValueError("density matrix trace differs from 1")
    if np.min(np.linalg.eigvalsh(rho)) < eig_floor:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def initial_state(state: str | np.ndarray) -> np.ndarray:
    """Resolve a named initial state or validate an explicit matrix.

    Recognized names: ``G``, ``A``, ``S``, ``E`` (coupled basis) and
    ``2`` = |eg>, ``3`` = |ge>.
    """
    if isinstance(state, str):
        try:
            return _NAMED_STATES[state].astype(complex)
        except KeyError:
            raise ValueError(
                f"unknown state name {state!r}; use G, A, S, E, 2, or 3"
            ) from None
    return check_density_matrix(state)


def x_pattern_deviation(rho: np.ndarray) -> float:
    """Largest magnitude among entries outside the two diagonals."""
    rho = np.asarray(rho)
    return float(np.max(np.abs(np.where(_X_MASK, 0.0, rho))))


def _vec(rho: np.ndarray) -> np.ndarray:
    return np.reshape(rho, 16, order="F")


def _unvec(v: np.ndarray) -> np.ndarray:
    return np.reshape(v, (4, 4), order="F")


def _sandwich(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    # vec(A rho B) = (B^T kron A) vec(rho) under column stacking
    return np.kron(right.T, left)


def _anticomm_half(k: np.ndarray) -> np.ndarray:
    eye = np.eye(4)
    return 0.5 * (np.kron(eye, k) + np.kron(k.T, eye))


def build_liouvillian(
    rates: RateSet, omega0: float = 0.0, include_hamiltonian: bool = False
) -> np.ndarray:
    """Assemble the 16x16 generator acting on the column-stacked state.

    The coherent part carries the dipole-dipole coupling always and the
    bare splitting ``omega0`` (in decay-rate units) only on request: in
    the rotating frame it merely phases the outer coherences and drops
    out of populations and concurrence.
    """
    sig = (SIGMA_1, SIGMA_2)
    gd = np.asarray(rates.gamma_down, dtype=complex)
    gu = np.asarray(rates.gamma_up, dtype=complex)

    ham = rates.lambda_12 * SIGMA_1.T @ SIGMA_2
    ham = ham + ham.conj().T
    if include_hamiltonian:
        ham = ham + omega0 * (SIGMA_1.T @ SIGMA_1 + SIGMA_2.T @ SIGMA_2)
    eye = np.eye(4)
    lv = -1j * (np.kron(eye, ham) - np.kron(ham.T, eye))

    for q in range(2):
        for qp in range(2):
            jump = _sandwich(sig[qp], sig[q].T) - _anticomm_half(sig[q].T @ sig[qp])
            lv = lv + gd[q, qp] * jump
            pump = _sandwich(sig[qp].T, sig[q]) - _anticomm_half(sig[q] @ sig[qp].T)
            lv = lv + gu[q, qp] * pump
    return lv


def _real_embedding(lv: np.ndarray) -> np.ndarray:
    re, im = lv.real, lv.imag
    return np.block([[re, -im], [im, re]])


def evolve(
    lv: np.ndarray,
    rho0: np.ndarray,
    t_grid: np.ndarray,
    *,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    max_step: float | None = None,
) -> np.ndarray:
    """Propagate ``rho0`` over ``t_grid`` and return the (nt, 4, 4) path.

    Stiff implicit stepping with the exact (constant) Jacobian keeps the
    integration stable when the coherent coupling exceeds the decay rates
    by orders of magnitude.  ``max_step`` defaults to 0.1 over the largest
    generator entry so that fast coherent oscillations cannot be stepped
    over; pass ``numpy.inf`` to lift the ceiling when the initial state
    has no weight in the oscillating coherences.

    Each returned matrix is Hermitized; any trace drift beyond 1e-8 is an
    error, never silently renormalized.
    """
    rho0 = check_density_matrix(rho0)
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a nonempty 1-d array")
    if t[0] < 0 or np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be ascending and nonnegative")

    if max_step is None:
        max_step = 0.1 / max(1.0, float(np.max(np.abs(lv))))

    y0 = np.concatenate([_vec(rho0).real, _vec(rho0).imag])
    if t[-1] == t[0]:
        states = np.broadcast_to(rho0, (t.size, 4, 4)).copy()
        return states

    lr = _real_embedding(lv)
    sol = solve_ivp(
        lambda _, y: lr @ y,
        (t[0], t[-1]),
        y0,
        method="Radau",
        t_eval=t,
        rtol=rtol,
        atol=atol,
        max_step=max_step,
        jac=lambda _, y: lr,
    )
    if not sol.success:
        raise StiffnessError(f"integration failed: {sol.message}")

    states = np.empty((t.size, 4, 4), dtype=complex)
    for k in range(t.size):
        rho = _unvec(sol.y[:16, k] + 1j * sol.y[16:, k])
        rho = 0.5 * (rho + rho.conj().T)
        drift = abs(np.trace(rho).real - 1.0)
        if drift > 1e-8:
            raise TraceDriftError(f"trace drifted by {drift:.3e} at t={t[k]:g}")
        states[k] = rho
    return states


@dataclass(frozen=True)
class SteadyState:
    """Null-space solution of the generator with rank diagnostics.

    ``singular_values`` are those of the population-sector Schur
    complement, the conditioned object that decides uniqueness.
    """

    rho: np.ndarray
    degenerate: bool
    rank_ambiguous: bool
    singular_values: np.ndarray = field(repr=False)


# Collective lowering operators in the coupled basis (G, A, S, E):
# the symmetric one steps E -> S -> G, the antisymmetric one E -> A -> G.
_SIGMA_SYM = np.zeros((4, 4))
_SIGMA_SYM[0, 2] = 1.0
_SIGMA_SYM[2, 3] = 1.0
_SIGMA_ANTI = np.zeros((4, 4))
_SIGMA_ANTI[0, 1] = 1.0
_SIGMA_ANTI[1, 3] = -1.0

# vec indices within the coupled basis: populations, then the only
# coherences the populations couple to (AS, SA, GE, EG).  The remaining
# eight components change excitation number by one and never mix in.
_POP_IDX = np.array([0, 5, 10, 15])
_COH_IDX = np.array([9, 6, 12, 3])


def _collective(two_by_two: np.ndarray) -> np.ndarray:
    """Rate matrix rewritten on the (symmetric, antisymmetric) channels."""
    m = np.asarray(two_by_two, dtype=complex)
    return 0.5 * np.array([
        [m[0, 0] + m[0, 1] + m[1, 0] + m[1, 1],
         m[0, 0] - m[0, 1] + m[1, 0] - m[1, 1]],
        [m[0, 0] + m[0, 1] - m[1, 0] - m[1, 1],
         m[0, 0] - m[0, 1] - m[1, 0] + m[1, 1]],
    ])


def coupled_liouvillian(rates: RateSet) -> np.ndarray:
    """Generator on vec(rho) in the coupled basis.

    Built from the collective operators directly, so the tiny
    antisymmetric-channel rates never share a float with the coherent
    coupling: the population block stays accurate however large
    ``lambda_12`` grows, which a numerical change of basis of the
    product-basis generator cannot guarantee.
    """
    gd = _collective(rates.gamma_down)
    gu = _collective(rates.gamma_up)
    lam = complex(rates.lambda_12)
    ham = np.zeros((4, 4), dtype=complex)
    ham[1, 1] = -lam.real
    ham[2, 2] = lam.real
    ham[1, 2] = 1j * lam.imag
    ham[2, 1] = -1j * lam.imag
    eye = np.eye(4)
    lv = -1j * (np.kron(eye, ham) - np.kron(ham.T, eye))
    ops = (_SIGMA_SYM, _SIGMA_ANTI)
    for c in range(2):
        for cp in range(2):
            lv = lv + gd[c, cp] * (
                _sandwich(ops[cp], ops[c].T)
                - _anticomm_half(ops[c].T @ ops[cp]))
            lv = lv + gu[c, cp] * (
                _sandwich(ops[cp].T, ops[c])
                - _anticomm_half(ops[c] @ ops[cp].T))
    return lv


def _assemble_coupled(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Product-basis density matrix from coupled-basis populations and
    (AS, SA, GE, EG) coherences."""
    rho_c = np.zeros((4, 4), dtype=complex)
    rho_c[np.arange(4), np.arange(4)] = p
    rho_c[1, 2], rho_c[2, 1], rho_c[0, 3], rho_c[3, 0] = q
    return COUPLED_KETS @ rho_c @ COUPLED_KETS.T


def steady_state(rates: RateSet, *, rho_A_weight: float = 0.0) -> SteadyState:
    """Stationary state of the master equation for the given rates.

    Mathematically this is the null space of the 16x16 generator.  The
    populations only ever couple to the four coherences that conserve
    excitation number, all of which relax strictly, so the stationary
    problem condenses onto the four coupled-basis populations by a Schur
    complement.  Solving there keeps the extraction accurate even when
    the coherent coupling dominates the generator's norm by many orders
    of magnitude, a regime where a plain null-space search loses the
    slow antisymmetric channel entirely (see ``nullspace_steady``).

    When every emission rate coincides and every absorption rate
    coincides the antisymmetric sector decouples and the null space is
    two-dimensional; the returned representative then carries
    ``rho_A_weight`` in |A><A| (the conserved quantity that the initial
    state would fix) and no coherence.  ``rank_ambiguous`` flags a
    separation of less than 1e3 between the two smallest singular values
    of the condensed problem.
    """
    lc = coupled_liouvillian(rates)
    lpq = lc[np.ix_(_POP_IDX, _COH_IDX)]
    lqq = lc[np.ix_(_COH_IDX, _COH_IDX)]
    try:
        elim = np.linalg.solve(lqq, lc[np.ix_(_COH_IDX, _POP_IDX)])
    except np.linalg.LinAlgError:
        raise DynamicsError(
            "coherence block of the generator is singular") from None
    schur = lc[np.ix_(_POP_IDX, _POP_IDX)] - lpq @ elim
    _, s, vh = np.linalg.svd(schur)
    degenerate = is_degenerate(rates)
    rank_ambiguous = bool(s[-2] < 1e3 * s[-1])

    if not degenerate:
        p = vh[-1].conj()
        tr = complex(p.sum())
        # |tr| is bounded below for any state vector, so a small value
        # really is a malformed generator, not an unlucky phase.
        if abs(tr) < 1e-12:
            raise DynamicsError("null vector is traceless; generator "
                                "malformed")
        p = p / tr
        rho = _assemble_coupled(p, -elim @ p)
        rho = 0.5 * (rho + rho.conj().T)
        return SteadyState(rho, degenerate, rank_ambiguous, s)

    # two-dimensional null space: fix trace and the |A> population.  The
    # null vectors carry arbitrary phases, so align each to its largest
    # component and keep two independent real directions.
    basis: list[np.ndarray] = []
    for v in (vh[-1].conj(), vh[-2].conj()):
        for phase in (1.0, 1j):
            w = np.real(phase * v).astype(float)
            for b in basis:
                w = w - float(b @ w) / float(b @ b) * b
            if np.linalg.norm(w) > 1e-10 and len(basis) < 2:
                basis.append(w)
    if len(basis) < 2:
        raise DynamicsError("degenerate null space could not be spanned")
    mat = np.array([[b.sum() for b in basis],
                    [b[1] for b in basis]])
    coeff = np.linalg.solve(mat, np.array([1.0, rho_A_weight]))
    p = coeff[0] * basis[0] + coeff[1] * basis[1]
    rho = _assemble_coupled(p.astype(complex), np.zeros(4, dtype=complex))
    rho = 0.5 * (rho + rho.conj().T)
    return SteadyState(rho, degenerate, rank_ambiguous, s)


def nullspace_steady(lv: np.ndarray) -> np.ndarray:
    """Reference extraction: smallest singular vector of the full 16x16
    generator, trace-normalized.

    Independent of the condensed route in ``steady_state`` and useful for
    cross-checks, but its accuracy degrades as epsilon * |lv| / gap once
    the coherent coupling dwarfs the slowest relaxation rate.
    """
    lv = np.asarray(lv, dtype=complex)
    _, _, vh = np.linalg.svd(lv)
    rho = _unvec(vh[-1].conj())
    tr = complex(np.trace(rho))
    if abs(tr) < 1e-12:
        raise DynamicsError("null vector is traceless; generator malformed")
    rho = rho / tr
    return 0.5 * (rho + rho.conj().T)


def is_degenerate(rates: RateSet, rtol: float = 1e-10) -> bool:
    """True when every emission rate coincides and every absorption rate
    coincides, so the antisymmetric state decouples from the dynamics.

    A complex coherent coupling also breaks the decoupling: its
    imaginary part rotates |A> into |S>.
    """
    for mat in (np.asarray(rates.gamma_down), np.asarray(rates.gamma_up)):
        flat = mat.ravel()
        ref = flat[0]
        scale = max(1.0, abs(ref))
        if np.max(np.abs(flat - ref)) > rtol * scale:
            return False
    lam = complex(rates.lambda_12)
    return abs(lam.imag) <= rtol * max(1.0, abs(lam))


def degenerate_steady(rates: RateSet, rho_A_initial: float = 0.0) -> "CoupledBasisState":
    """Closed-form stationary family of the equal-rate case.

    The |A> population is conserved, and the remaining weight spreads over
    |G>, |S>, |E> with weights (d^2, d*u, u^2) built from the common
    emission rate d and absorption rate u.
    """
    if not is_degenerate(rates):
        raise ValueError("rates are not all equal; no conserved |A> population")
    if not 0.0 <= rho_A_initial <= 1.0:
        raise ValueError("rho_A_initial must lie in [0, 1]")
    d = float(np.asarray(rates.gamma_down)[0, 0].real)
    u = float(np.asarray(rates.gamma_up)[0, 0].real)
    z = d * d + d * u + u * u
    rest = 1.0 - rho_A_initial
    return CoupledBasisState(
        rho_G=rest * d * d / z,
        rho_A=rho_A_initial,
        rho_S=rest * d * u / z,
        rho_E=rest * u * u / z,
    )


@dataclass(frozen=True)
class CoupledBasisState:
    """X-patterned state in the collective basis.

    Populations are real; ``rho_AS`` and ``rho_GE`` are the only
    coherences an X state supports in this frame.
    """

    rho_G: float
    rho_A: float
    rho_S: float
    rho_E: float
    rho_AS: complex = 0j
    rho_GE: complex = 0j

    def __post_init__(self) -> None:
        pops = (self.rho_G, self.rho_A, self.rho_S, self.rho_E)
        if min(pops) < -1e-10:
            raise ValueError("negative population")
        if abs(sum(pops) - 1.0) > 1e-12:
            raise ValueError("populations must sum to 1")

    @property
    def rho_23(self) -> complex:
        """The |eg><ge| coherence of the same state in the product basis."""
        return 0.5 * (self.rho_S - self.rho_A + self.rho_AS - np.conj(self.rho_AS))

    def matrix(self) -> np.ndarray:
        """The 4x4 density matrix in the product basis."""
        coupled = np.zeros((4, 4), dtype=complex)
        coupled[0, 0] = self.rho_G
        coupled[1, 1] = self.rho_A
        coupled[2, 2] = self.rho_S
        coupled[3, 3] = self.rho_E
        coupled[1, 2] = self.rho_AS
        coupled[2, 1] = np.conj(self.rho_AS)
        coupled[0, 3] = self.rho_GE
        coupled[3, 0] = np.conj(self.rho_GE)
        return from_coupled(coupled)


def to_coupled(rho: np.ndarray) -> np.ndarray:
    """Transform a product-basis matrix into the collective basis."""
    v = COUPLED_KETS
    return v.T @ np.asarray(rho, dtype=complex) @ v


def from_coupled(rho_coupled: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_coupled`."""
    v = COUPLED_KETS
    return v @ np.asarray(rho_coupled, dtype=complex) @ v.T


def coupled_state(rho: np.ndarray) -> CoupledBasisState:
    """Read the X-pattern entries of a state in the collective basis."""
    rc = to_coupled(rho)
    return CoupledBasisState(
        rho_G=rc[0, 0].real,
        rho_A=rc[1, 1].real,
        rho_S=rc[2, 2].real,
        rho_E=rc[3, 3].real,
        rho_AS=complex(rc[1, 2]),
        rho_GE=complex(rc[0, 3]),
    )


def symmetric_steady(ch: ChannelParams) -> CoupledBasisState:
    """Stationary populations of the two-channel rate equations.

    Valid for mirror-symmetric configurations, where the collective
    populations close on themselves.  The ``rho_23`` property of the
    result gives the stationary product-basis coherence, nonzero whenever
    the two channels see different photon numbers.
    """
    gs, ga = ch.gamma_S, ch.gamma_A
    ns, na = ch.n_S, ch.n_A
    zg = (1 + na) ** 2 * (1 + 2 * ns) * ga + (1 + 2 * na) * (1 + ns) ** 2 * gs
    za = na * (1 + na) * (1 + 2 * ns) * ga + (na * (1 + 2 * ns) + ns**2 * (1 + 2 * na)) * gs
    zs = ns * (1 + ns) * (1 + 2 * na) * gs + (ns * (1 + 2 * na) + na**2 * (1 + 2 * ns)) * ga
    ze = na**2 * (1 + 2 * ns) * ga + (1 + 2 * na) * ns**2 * gs
    z = zg + za + zs + ze
    return CoupledBasisState(
        rho_G=zg / z, rho_A=za / z, rho_S=zs / z, rho_E=ze / z
    )


def coherence_decay(
    ch: ChannelParams,
    lambda_12: complex,
    rho_AS0: complex,
    rho_GE0: complex,
    t: np.ndarray | float,
    omega0: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form decay of the two collective-frame coherences.

    Both decay at half the summed channel widths; ``rho_AS`` rotates with
    twice the dipole-dipole coupling and ``rho_GE`` with twice the bare
    frequency (zero in the rotating frame).
    """
    t = np.asarray(t, dtype=float)
    width = ch.gamma_A * (1 + 2 * ch.n_A) + ch.gamma_S * (1 + 2 * ch.n_S)
    rho_as = rho_AS0 * np.exp((-0.5 * width + 2j * lambda_12) * t)
    rho_ge = rho_GE0 * np.exp((-0.5 * width + 2j * omega0) * t)
    return rho_as, rho_ge
