"""Field-correlator quadrature against high-precision references."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from noneq.constants import C_LIGHT
from noneq.correlators import (EmitterGeometry, QuadratureError,
                               QuadratureSettings, alpha_pair,
                               free_space_alpha, pair_integrals)
from noneq.material import SIC, Vacuum
from noneq.scattering import SlabGeometry

OMEGA = 0.3 * SIC.omega_r
SLAB = SlabGeometry(0.01e-6)

# closed-form scalars at scaled separation r = |dr| omega / c
FREE_SPACE_REF = {
    0.1: (0.99900035707672709, 0.99800107116405874),
    0.5: (0.97522218381639941, 0.95066552390440929),
    1.0: (0.90350603681927037, 0.81045345880220958),
    2.0: (0.65309666246998743, 0.35542473888426756),
    5.0: (-0.057053644847502475, -0.2591504599751903),
    10.0: (0.023540082539625464, -0.093373207903218204),
    20.0: (-0.0027182609945775795, 0.069830024301860864),
}
PAR_AT_PI = 0.30396355092701331

# pair (1, 2) at z1 = 1 um, z2 = 1.2 um, r12 = 0.25 um over the SiC slab
REF_12_A = np.array([
    [0.99968110127495169 - 0.016827036603518435j, 0.0,
     -0.00011188769509625233 - 0.0070108002703374535j],
    [0.0, 0.99954124165608137 - 0.016825728834337588j, 0.0],
    [-0.00011188769509625233 - 0.0070108002703374535j, 0.0,
     0.99963075181215837 - 0.011217088618067625j],
])
REF_12_B = np.array([
    [0.99963891371830806 - 0.016826748526674964j, 0.0,
     -0.00011188692664135666 - 0.0070107584299537674j],
    [0.0, 0.99949906648623059 - 0.01682544080810208j, 0.0],
    [-0.00011188692664135666 - 0.0070107584299537674j, 0.0,
     0.9996257160023237 - 0.011217021671906653j],
])
REF_12_C = np.array([
    [-0.010229519998831261, 0.0, -1.5464112129187774e-5],
    [0.0, -0.010226300181163174, 0.0],
    [1.5464112129187774e-5, 0.0, -0.0012979531235233713],
])
REF_12_D = np.array([
    [0.018031443656745082, 0.0, 0.00074054077915619645],
    [0.0, 0.018126618012835647, 0.0],
    [-0.00074054077915619645, 0.0, 0.0065607337267505799],
])
REF_12_C2 = np.array([
    [0.013457638462401006, 0.0, -2.1773297702366537e-6],
    [0.0, 0.013453633931883746, 0.0],
    [2.1773297702366537e-6, 0.0, 0.0020286754137921378],
])
REF_12_D2 = np.array([
    [1.2388606631608817, 0.0, 0.57681488554010909],
    [0.0, 1.3190108505287263, 0.0],
    [-0.57681488554010909, 0.0, 2.5829073353113571],
])
REF_12_AW = np.array([
    [0.98943048749779861 + 1.4403842173547557e-7j, 0.0,
     -0.00012735142299799227 + 2.0920191843066548e-8j],
    [0.0, 0.98929385388999281 + 1.4401311775413317e-7j, 0.0],
    [-9.642319873961672e-5 + 2.0920191843066548e-8j, 0.0,
     0.99833028078371766 + 3.3473080485852356e-8j],
])
REF_12_AM = np.array([
    [0.018052537435066896 - 1.4403842173547557e-7j, 0.0,
     0.00074054039492874861 - 2.0920191843066548e-8j],
    [0.0, 0.018147705597761035 - 1.4401311775413317e-7j, 0.0],
    [-0.00074054116338364429 - 2.0920191843066548e-8j, 0.0,
     0.006563251631667918 - 3.3473080485852356e-8j],
])
# coincident pair at z = 1 um (diagonal, transverse pair equal)
REF_11_AW_DIAG = (0.98992789898849274, 0.98992789898849274,
                  0.99867419255251073)
REF_11_AM_DIAG = (0.018986419661156613, 0.018986419661156613,
                  0.0083328999829432)


@pytest.fixture(scope="module")
def oracle_pair_12():
    geo = EmitterGeometry(z1=1e-6, z2=1.2e-6, r12=0.25e-6)
    return pair_integrals((1, 2), OMEGA, geo, SIC, SLAB)


def test_free_space_closed_forms():
    for r, (par, perp) in FREE_SPACE_REF.items():
        sep = np.array([0.0, 0.0, r * C_LIGHT / OMEGA])
        alpha = free_space_alpha(OMEGA, sep)
        # separation along z: parallel on the zz axis, transverse on xx/yy
        assert alpha[2, 2] == pytest.approx(par, rel=1e-13, abs=1e-15)
        assert alpha[0, 0] == pytest.approx(perp, rel=1e-13, abs=1e-15)
        assert alpha[1, 1] == alpha[0, 0]
        assert np.max(np.abs(alpha - np.diag(np.diag(alpha)))) == 0.0


def test_free_space_at_pi():
    sep = np.array([math.pi * C_LIGHT / OMEGA, 0.0, 0.0])
    assert free_space_alpha(OMEGA, sep)[0, 0] == pytest.approx(PAR_AT_PI,
                                                               rel=1e-13)


def test_free_space_orientation_covariance():
    # rotating the separation vector rotates the matrix
    sep = np.array([0.7e-6, -0.4e-6, 1.1e-6])
    alpha = free_space_alpha(OMEGA, sep)
    c, s = math.cos(0.83), math.sin(0.83)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    assert_allclose(free_space_alpha(OMEGA, rot @ sep),
                    rot @ alpha @ rot.T, rtol=1e-12, atol=1e-14)


def test_free_space_series_joins_closed_form():
    # the series takes over below scaled separation 1e-2; the two branches
    # must agree where they meet
    for r in (0.0099999, 0.0100001):
        sep = np.array([r * C_LIGHT / OMEGA, 0.0, 0.0])
        alpha = free_space_alpha(OMEGA, sep)
        s, c = math.sin(r), math.cos(r)
        par = 3.0 * (s / r**3 - c / r**2)
        assert alpha[0, 0] == pytest.approx(par, rel=1e-11)


def test_free_space_coincident_is_identity():
    assert_allclose(free_space_alpha(OMEGA, np.zeros(3)), np.eye(3))


def test_pair_integrals_frozen(oracle_pair_12):
    p = oracle_pair_12
    assert_allclose(p.A, REF_12_A, rtol=1e-9, atol=1e-11)
    assert_allclose(p.B, REF_12_B, rtol=1e-9, atol=1e-11)
    assert_allclose(p.C, REF_12_C, rtol=1e-9, atol=1e-11)
    assert_allclose(p.D, REF_12_D, rtol=1e-9, atol=1e-11)
    assert_allclose(p.C2, REF_12_C2, rtol=1e-9, atol=1e-11)
    assert_allclose(p.D2, REF_12_D2, rtol=1e-9, atol=1e-11)


def test_alpha_assembly_frozen(oracle_pair_12):
    geo = EmitterGeometry(z1=1e-6, z2=1.2e-6, r12=0.25e-6)
    ap = alpha_pair((1, 2), OMEGA, geo, SIC, SLAB)
    assert_allclose(ap.alpha_W, REF_12_AW, rtol=1e-9, atol=1e-11)
    assert_allclose(ap.alpha_M, REF_12_AM, rtol=1e-9, atol=1e-11)


def test_coincident_alpha_frozen():
    geo = EmitterGeometry(z1=1e-6, z2=1.2e-6, r12=0.25e-6)
    ap = alpha_pair((1, 1), OMEGA, geo, SIC, SLAB)
    assert_allclose(np.diag(ap.alpha_W).real, REF_11_AW_DIAG, rtol=1e-9)
    assert_allclose(np.diag(ap.alpha_M).real, REF_11_AM_DIAG, rtol=1e-9)
    off = ap.alpha_W - np.diag(np.diag(ap.alpha_W))
    assert np.max(np.abs(off)) < 1e-11


def test_pair_exchange_is_dagger():
    geo = EmitterGeometry(z1=1e-6, z2=1.2e-6, r12=0.25e-6)
    a12 = alpha_pair((1, 2), OMEGA, geo, SIC, SLAB)
    a21 = alpha_pair((2, 1), OMEGA, geo, SIC, SLAB)
    assert np.max(np.abs(a21.alpha_W - a12.alpha_W.conj().T)) < 1e-12
    assert np.max(np.abs(a21.alpha_M - a12.alpha_M.conj().T)) < 1e-12


def test_alpha_sum_is_real(oracle_pair_12):
    """The wall and slab matrices assemble as Re A + C + D plus imaginary
    parts that cancel entrywise, so their sum is real by construction."""
    geo = EmitterGeometry(z1=1e-6, z2=1.2e-6, r12=0.25e-6)
    ap = alpha_pair((1, 2), OMEGA, geo, SIC, SLAB)
    assert np.max(np.abs((ap.alpha_W + ap.alpha_M).imag)) < 1e-15
    for name in ("C", "D", "C2", "D2"):
        assert np.max(np.abs(getattr(oracle_pair_12, name).imag)) == 0.0


def test_vacuum_material_recovers_free_space():
    z = 50e-6
    r12 = 1.0 * C_LIGHT / OMEGA
    geo = EmitterGeometry(z1=z, z2=z, r12=r12)
    ap = alpha_pair((1, 2), OMEGA, geo, Vacuum(), SLAB)
    ref = free_space_alpha(OMEGA, np.array([r12, 0.0, 0.0]))
    assert_allclose(ap.alpha_W.real, ref, rtol=1e-7, atol=1e-9)
    assert np.max(np.abs(ap.alpha_W.imag)) < 1e-9
    assert np.max(np.abs(ap.alpha_M)) < 1e-9


def test_light_line_modes_converge_quickly():
    # tall asymmetric geometry whose ultrathin-slab guided modes sit within
    # a few ulp of the light line; must converge under default settings
    geo = EmitterGeometry(z1=1.04e-6, z2=4.04e-6, r12=0.01e-6)
    p = pair_integrals((1, 2), OMEGA, geo, SIC, SLAB)
    assert np.all(np.isfinite(p.D2))


def test_starved_quadrature_raises():
    geo = EmitterGeometry(z1=1.04e-6, z2=1.28e-6, r12=0.25e-6)
    starved = QuadratureSettings(rel_tol=1e-12, abs_tol=1e-15,
                                 max_subdivisions=1)
    with pytest.raises(QuadratureError):
        pair_integrals((1, 2), OMEGA, geo, SIC, SLAB, starved)


def test_settings_validation():
    with pytest.raises(ValueError):
        QuadratureSettings(rel_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureSettings(max_subdivisions=0)
    with pytest.raises(ValueError):
        EmitterGeometry(z1=-1e-6, z2=1e-6, r12=0.0)
    with pytest.raises(ValueError):
        EmitterGeometry(z1=1e-6, z2=1e-6, r12=-0.1e-6)
