import math

import numpy as np
import pytest
from scipy.integrate import quad

from nopolab import oracle
from nopolab.core import POSITIVE_P, WIGNER
from nopolab.errors import ThresholdDomainError


# ---------------------------------------------------------------------------
# linear spectra
# ---------------------------------------------------------------------------

def test_linear_spectra_values():
    v0, vpi2 = oracle.linear_spectra(0.0, 0.0)
    assert (v0, vpi2) == (1.0, 1.0)
    v0, vpi2 = oracle.linear_spectra(0.5, 0.0)
    assert vpi2 == pytest.approx(1.0 / 9.0)
    assert v0 == pytest.approx(9.0)
    # perfect squeezing at threshold, zero frequency
    _, vpi2 = oracle.linear_spectra(1.0, 0.0)
    assert vpi2 == pytest.approx(0.0, abs=1e-15)
    v0, _ = oracle.linear_spectra(1.0, 0.0)
    assert math.isinf(v0)


def test_heisenberg_identity_grid():
    # mu capped at 0.98: beyond that V^0 > ~10^4 amplifies the float64
    # rounding of the 1 - (nearly 1) subtraction in V^{pi/2} past 1e-12
    mus = np.linspace(0.0, 0.98, 100)
    omegas = np.linspace(0.0, 10.0, 100)
    for mu in mus:
        prod = oracle.heisenberg_product_linear(mu, omegas)
        assert np.max(np.abs(prod - 1.0)) <= 1e-12


def test_linear_parseval_matches_moment():
    # (1/2pi) Int dW of -2 mu/(W^2+(1+mu)^2) = -mu/(1+mu) = <y^(1) y+^(1)>
    for mu in (0.2, 0.5, 0.9):
        val, _ = quad(lambda w: -2.0 * mu / (w**2 + (1 + mu) ** 2), -np.inf, np.inf)
        val /= 2.0 * math.pi
        target = oracle.moments_plusp(mu, 1.0).yy1
        assert val == pytest.approx(target, abs=1e-9)


# ---------------------------------------------------------------------------
# nonlinear spectra
# ---------------------------------------------------------------------------

def test_spectrum_plusp_reduces_to_linear_at_g2_zero():
    w = np.linspace(0, 10, 33)
    v0, vpi2 = oracle.spectrum_plusp(0.7, 0.3, 0.0, w)
    l0, lpi2 = oracle.linear_spectra(0.7, w)
    assert np.allclose(v0, l0, atol=1e-15)
    assert np.allclose(vpi2, lpi2, atol=1e-15)


def test_spectrum_plusp_zero_frequency_consistency():
    # general formula at W=0 equals the dedicated zero-frequency form
    for mu in np.linspace(0.05, 0.97, 24):
        for gr in (1e-3, 1e-2, 0.1, 1.0, 10.0):
            full = oracle.spectrum_plusp(mu, gr, 0.001, 0.0)[1]
            direct = oracle.squeezed_spectrum_plusp_zero(mu, gr, 0.001)
            assert full == pytest.approx(direct, abs=1e-12)


def test_spectrum_domain_error_at_threshold():
    for fn in (lambda: oracle.spectrum_plusp(1.0, 1.0, 0.001, 0.0),
               lambda: oracle.spectrum_wigner(1.0, 1.0, 0.001, 0.0),
               lambda: oracle.moments_plusp(1.0, 1.0),
               lambda: oracle.moments_wigner(1.2, 1.0),
               lambda: oracle.total_squeeze_moment(1.0, 1.0, 0.001, POSITIVE_P)):
        with pytest.raises(ThresholdDomainError):
            fn()


def test_optimum_drive_location():
    mus = np.linspace(0.80, 0.99, 1901)
    vals = [oracle.squeezed_spectrum_plusp_zero(mu, 0.01, 0.001) for mu in mus]
    mu_star = mus[int(np.argmin(vals))]
    assert 0.91 <= mu_star <= 0.95


def test_wigner_vacuum_is_distorted():
    v = oracle.spectrum_wigner(0.0, 1.0, 0.01, np.linspace(0, 5, 11))
    assert np.all(v > 1.0)          # distortion with the pump off
    assert np.max(v - 1.0) > 1e-3


def test_wigner_matches_plusp_as_gamma_r_vanishes():
    w = np.linspace(0.0, 10.0, 81)
    g2 = 0.001
    for mu in (0.2, 0.5, 0.9):
        vp = oracle.spectrum_plusp(mu, 1e-6, g2, w)[1]
        vw = oracle.spectrum_wigner(mu, 1e-6, g2, w)
        assert np.max(np.abs(vw - vp)) <= 1e-4 * g2


def test_wigner_matches_plusp_near_threshold():
    w = np.linspace(0.0, 10.0, 81)
    g2 = 0.001
    lin = oracle.linear_spectra(0.99, w)[1]
    nl_p = oracle.spectrum_plusp(0.99, 1.0, g2, w)[1] - lin
    nl_w = oracle.spectrum_wigner(0.99, 1.0, g2, w) - lin
    rel = np.max(np.abs(nl_w - nl_p)) / np.max(np.abs(nl_p))
    assert rel <= 0.05


# ---------------------------------------------------------------------------
# moment hierarchy
# ---------------------------------------------------------------------------

def test_moments_plusp_substitutions():
    ms = oracle.moments_plusp(0.5, 1.0)
    assert ms.xx1 == pytest.approx(1.0)
    assert ms.yy1 == pytest.approx(-1.0 / 3.0)
    assert ms.triple == pytest.approx(1.0 / 9.0)
    assert oracle.moments_plusp(0.5, 2.0).triple == pytest.approx(1.0 / 6.0)
    # pump depletion from the second-order equation: -(xx1 - yy1)
    assert ms.x0_2 == pytest.approx(-(ms.xx1 - ms.yy1))


def test_moments_at_mu_zero():
    ms = oracle.moments_plusp(0.0, 1.0)
    assert (ms.x0_2, ms.yy1, ms.xx1, ms.yy3, ms.triple) == (0, 0, 0, 0, 0)
    mw = oracle.moments_wigner(0.0, 1.0)
    assert mw.xx1 == pytest.approx(1.0)
    assert mw.yy1 == pytest.approx(1.0)


def test_pump_depletion_agrees_between_representations():
    for mu in (0.1, 0.5, 0.9):
        mp = oracle.moments_plusp(mu, 0.7)
        mw = oracle.moments_wigner(mu, 0.7)
        assert mp.x0_2 == pytest.approx(mw.x0_2)
        assert mw.x0_2 == pytest.approx(-(mw.xx1 - mw.yy1))


def test_total_squeeze_moment_consistency_with_moment_sets():
    # the displayed total must equal the expansion sum of its own hierarchy
    g2 = 4e-4
    for mu in (0.1, 0.5, 0.9):
        for gr in (0.1, 1.0, 10.0):
            mp = oracle.moments_plusp(mu, gr)
            total_p = oracle.total_squeeze_moment(mu, gr, g2, POSITIVE_P)
            assert total_p == pytest.approx(1.0 + mp.yy1 + g2 * 2.0 * mp.yy3, rel=1e-12)
            mw = oracle.moments_wigner(mu, gr)
            total_w = oracle.total_squeeze_moment(mu, gr, g2, WIGNER)
            assert total_w == pytest.approx(mw.yy1 + g2 * (mw.yy2 + 2.0 * mw.yy3), rel=1e-12)


def test_total_squeeze_moment_limits():
    # mu -> 0: positive-P correction vanishes, semiclassical one does not
    g2 = 1e-3
    p_corr = oracle.total_squeeze_moment(1e-9, 1.0, g2, POSITIVE_P) - 1.0 / (1.0 + 1e-9)
    w_corr = oracle.total_squeeze_moment(1e-9, 1.0, g2, WIGNER) - 1.0 / (1.0 + 1e-9)
    assert abs(p_corr) < 1e-11
    assert w_corr > 1e-4 * g2
    # linear part tends to 0.5 at threshold
    assert 1.0 / (1.0 + 0.999999) == pytest.approx(0.5, abs=1e-6)
    # gamma_r -> 0 agreement
    d = abs(oracle.total_squeeze_moment(0.5, 1e-6, g2, POSITIVE_P)
            - oracle.total_squeeze_moment(0.5, 1e-6, g2, WIGNER))
    assert d <= 1e-6


def test_near_threshold_nl_corrections_agree():
    g2 = 1e-3
    mu = 0.99
    lin = 1.0 / (1.0 + mu)
    for gr in (0.1, 1.0, 10.0):
        cp = oracle.total_squeeze_moment(mu, gr, g2, POSITIVE_P) - lin
        cw = oracle.total_squeeze_moment(mu, gr, g2, WIGNER) - lin
        assert abs(cp - cw) / abs(cp) < 0.05


# ---------------------------------------------------------------------------
# triple spectral correlations
# ---------------------------------------------------------------------------

def test_triple_plusp_values():
    assert oracle.triple_plusp(0.0, 1.0, 0.3, -0.7) == 0.0
    val = oracle.triple_plusp(0.5, 1.0, 0.0, 0.0)
    want = 4.0 * 0.25 * 1.0 / math.sqrt(2 * math.pi) / (1.0 * 0.25 * 2.25)
    assert val == pytest.approx(want)
    assert val.imag == pytest.approx(0.0)


def test_triple_conjugation_symmetry():
    rng = np.random.default_rng(3)
    for _ in range(20):
        w1, w2 = rng.uniform(-3, 3, 2)
        d = oracle.triple_plusp(0.6, 0.4, w1, w2)
        dr = oracle.triple_plusp(0.6, 0.4, -w1, -w2)
        assert d == pytest.approx(np.conj(dr))
        dw = oracle.triple_wigner(0.3, 0.4, w1, w2, 0.2)
        dwr = oracle.triple_wigner(0.3, 0.4, -w1, -w2, 0.2)
        assert dw == pytest.approx(np.conj(dwr))


def test_triple_wigner_nonzero_at_mu_zero():
    val = oracle.triple_wigner(0.0, 1.0, 0.0, 0.0, 0.3)
    want = 0.3**4 * 4.0 / math.sqrt(2 * math.pi) * (-1.0 + 1.0 + 1.0)
    assert val == pytest.approx(want)
    assert abs(val) > 0


def test_triple_frequency_integral_reproduces_moment():
    for mu, gr in ((0.3, 0.5), (0.5, 1.0), (0.7, 2.0)):
        est = oracle.triple_moment_from_spectrum(mu, gr, omega_max=80.0, n=1601)
        want = oracle.moments_plusp(mu, gr).triple
        assert est == pytest.approx(want, abs=1e-4)


# ---------------------------------------------------------------------------
# critical point
# ---------------------------------------------------------------------------

def test_critical_xx_reference_values():
    assert oracle.critical_xx(0.0) == pytest.approx(2.0 / math.sqrt(math.pi), abs=1e-6)
    assert oracle.critical_xx(-20.0) == pytest.approx(0.05, rel=0.01)
    assert oracle.critical_xx(20.0) == pytest.approx(40.0, rel=0.01)


def test_critical_xx_monotone_in_eta():
    etas = np.linspace(-10, 10, 41)
    vals = [oracle.critical_xx(e) for e in etas]
    assert np.all(np.diff(vals) > 0)


def test_critical_xx_gaussian_limit():
    # far below threshold the stationary density is ~ exp(eta u): <u> = 1/|eta|
    assert oracle.critical_xx(-10.0) == pytest.approx(0.1, rel=0.02)


def test_critical_squeeze_moment():
    assert oracle.critical_squeeze_moment(0.3, 1.0, 0.0) == pytest.approx(0.5)
    # gamma_r -> inf: prefactor (2+2 gr)/(2+gr) -> 2
    g = 0.02
    val = oracle.critical_squeeze_moment(0.0, 1e9, g)
    assert val == pytest.approx(0.5 + (g / 4.0) * 1.1283791670955126, rel=1e-6)


def test_critical_squeeze_minimizer_above_threshold():
    g = 0.01
    etas = np.linspace(-5.0, 10.0, 301)
    for gr in (0.1, 1.0, 10.0):
        vals = [oracle.critical_squeeze_moment(e, gr, g) for e in etas]
        eta_star = etas[int(np.argmin(vals))]
        assert eta_star > 0.0
        assert vals[int(np.argmin(vals))] < oracle.critical_squeeze_moment(0.0, gr, g)
