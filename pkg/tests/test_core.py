import math

import numpy as np
import pytest

import nopolab as nl
from nopolab.core import POSITIVE_P, WIGNER
from nopolab.errors import ParameterError, ScalingError


def test_derive_scaled_no_threshold():
    sp = nl.derive_scaled(nl.PhysicalParams(gamma0=1.0, gamma=1.0, chi=0.0, drive=3.0))
    assert sp.g == 0.0
    assert math.isinf(sp.e_crit)
    assert sp.no_threshold
    assert sp.mu == 0.0


def test_derive_scaled_hits_reference_point():
    # gamma_r = 0.5 with chi chosen so g^2 = 0.001
    chi = math.sqrt(0.001) * 1.0 * math.sqrt(2.0 * 0.5)
    sp = nl.derive_scaled(nl.PhysicalParams(gamma0=0.5, gamma=1.0, chi=chi, drive=1.0))
    assert sp.gamma_r == pytest.approx(0.5)
    assert sp.g == pytest.approx(0.0316227766, rel=1e-8)
    assert sp.g2 == pytest.approx(0.001, rel=1e-12)


def test_derive_scaled_threshold_drive():
    sp = nl.derive_scaled(nl.PhysicalParams(gamma0=1.0, gamma=1.0, chi=0.1, drive=10.0))
    assert sp.e_crit == pytest.approx(10.0)
    assert sp.mu == pytest.approx(1.0)


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_derive_scaled_round_trip():
    rng = np.random.default_rng(2)
    for _ in range(50):
        g2 = float(10 ** rng.uniform(-5, -2))
        gr = float(10 ** rng.uniform(-2, 1))
        mu = float(rng.uniform(0, 1.5))
        p = nl.physical_from_scaled(g2, gr, mu)
        sp = nl.derive_scaled(p)
        assert sp.g2 == pytest.approx(g2, rel=1e-12)
        assert sp.gamma_r == pytest.approx(gr, rel=1e-12)
        assert sp.mu == pytest.approx(mu, rel=1e-12, abs=1e-15)


def test_invalid_params_raise():
    with pytest.raises(ParameterError):
        nl.PhysicalParams(gamma0=0.0, gamma=1.0, chi=0.1, drive=1.0)
    with pytest.raises(ParameterError):
        nl.PhysicalParams(gamma0=1.0, gamma=1.0, chi=-0.1, drive=1.0)


def test_weak_coupling_warning():
    with pytest.warns(UserWarning):
        nl.PhysicalParams(gamma0=1.0, gamma=1.0, chi=0.5, drive=1.0)


def test_classical_steady_state_branches():
    p0 = nl.PhysicalParams(gamma0=1.0, gamma=1.0, chi=0.05, drive=0.0)
    assert nl.classical_steady_state(p0) == (0.0, 0.0, 0.0)

    p_below = nl.physical_from_scaled(0.001, 1.0, 0.5)
    a0, a1, a2 = nl.classical_steady_state(p_below)
    assert a0 == pytest.approx(p_below.drive / p_below.gamma0)
    assert a1 == 0.0 and a2 == 0.0

    p_above = nl.PhysicalParams(gamma0=1.0, gamma=1.0, chi=0.1, drive=20.0)
    a0, a1, a2 = nl.classical_steady_state(p_above)
    assert a0 == pytest.approx(10.0)   # clamped at E_c/gamma0
    assert abs(a1) ** 2 == pytest.approx(100.0)
    assert a1 == a2 and a1.real > 0 and a1.imag == 0


def test_classical_steady_state_zero_drift_residual():
    from nopolab.core import classical_drift
    for mu in (0.0, 0.3, 0.8, 1.0, 1.7):
        p = nl.physical_from_scaled(0.002, 0.7, mu)
        a0, a1, a2 = nl.classical_steady_state(p)
        res = classical_drift(p, a0, a1, a2)
        assert max(abs(r) for r in res) <= 1e-12


def test_quadratures_zero_state():
    s = nl.PhaseState.vacuum(POSITIVE_P)
    q = nl.quadratures_from_state(s, g=0.1, gamma_r=1.0)
    assert q.x0 == q.y0 == q.x == q.y == q.xp == q.yp == 0.0


def test_quadratures_substitution_example():
    amps = np.zeros(6, dtype=complex)
    amps[2] = 1.0   # a1
    amps[5] = 1.0   # a2+
    s = nl.PhaseState(POSITIVE_P, amps)
    q = nl.quadratures_from_state(s, g=0.1, gamma_r=1.0, theta=0.0)
    assert q.x == pytest.approx(0.2)
    assert q.y == pytest.approx(0.0)


def test_quadrature_rotation_identities():
    rng = np.random.default_rng(5)
    amps = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    s = nl.PhaseState(POSITIVE_P, amps)
    g, gr = 0.07, 0.8
    q0 = nl.quadratures_from_state(s, g, gr, theta=0.0)
    q90 = nl.quadratures_from_state(s, g, gr, theta=math.pi / 2)
    # theta = pi/2 maps the X-family of theta=0 onto the Y-family
    assert q90.x == pytest.approx(q0.y)
    assert q90.x0 == pytest.approx(q0.y0)
    assert q90.xp == pytest.approx(q0.yp)
    qpi = nl.quadratures_from_state(s, g, gr, theta=math.pi)
    for name in ("x0", "y0", "x", "y", "xp", "yp"):
        assert getattr(qpi, name) == pytest.approx(-getattr(q0, name))


def test_quadratures_linear_in_amplitudes():
    rng = np.random.default_rng(6)
    a = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    b = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    g, gr, th = 0.03, 0.5, 0.7
    qa = nl.quadratures_from_state(nl.PhaseState(POSITIVE_P, a), g, gr, th)
    qb = nl.quadratures_from_state(nl.PhaseState(POSITIVE_P, b), g, gr, th)
    qs = nl.quadratures_from_state(nl.PhaseState(POSITIVE_P, 2.0 * a + b), g, gr, th)
    for name in ("x0", "y0", "x", "y", "xp", "yp"):
        assert qs.__dict__[name] == pytest.approx(2.0 * qa.__dict__[name] + qb.__dict__[name])


def test_wigner_plus_variables_are_conjugates():
    rng = np.random.default_rng(7)
    amps = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    q = nl.quadratures_from_state(nl.PhaseState(WIGNER, amps), g=0.1, gamma_r=1.0)
    assert q.xp == pytest.approx(np.conj(q.x))
    assert q.yp == pytest.approx(np.conj(q.y))


def test_critical_params_and_rescale():
    sp = nl.ScaledParams(gamma_r=1.0, mu=1.05, g=0.05, e_crit=10.0)
    cp = nl.critical_params(sp)
    assert cp.eta == pytest.approx(2.0)
    sp_at = nl.ScaledParams(gamma_r=1.0, mu=1.0, g=0.05, e_crit=10.0)
    assert nl.critical_params(sp_at).eta == 0.0

    # undepleted pump x0 = 2 mu = 2 maps to the origin of the critical frame
    q = nl.QuadratureSample(x0=2.0, y0=0.0, x=0.1, y=0.02, xp=0.1, yp=0.02, time=3.0)
    qc = nl.critical_rescale(sp_at, q)
    assert qc.x0 == pytest.approx(0.0)
    assert qc.x == pytest.approx(0.1 / math.sqrt(0.05))
    assert qc.y == pytest.approx(0.02 / 0.05)
    assert qc.time == pytest.approx(3.0 * 0.05)

    with pytest.raises(ScalingError):
        nl.critical_rescale(nl.ScaledParams(1.0, 0.0, 0.0, math.inf), q)


def test_phase_state_validation():
    with pytest.raises(ParameterError):
        nl.PhaseState("bogus", np.zeros(6))
    with pytest.raises(ParameterError):
        nl.PhaseState(POSITIVE_P, np.zeros(3))
    with pytest.raises(ParameterError):
        nl.PhaseState(WIGNER, np.zeros(6))
