import numpy as np
import pytest

from nopolab import epr, oracle
from nopolab.errors import ParameterError


def test_inference_variance_values():
    assert epr.inference_variance(1.0, 1.0) == pytest.approx(1.0)
    assert epr.inference_variance(2.0, 0.5) == pytest.approx(0.8)
    # V0 -> inf limit tends to 2 V^{pi/2}
    assert epr.inference_variance(1e12, 0.3) == pytest.approx(0.6, rel=1e-9)


def test_inference_variance_is_harmonic_mean():
    # equals the harmonic mean, so it is bounded by min(V0, Vpi2)*2 and by the
    # geometric mean; monotone increasing in each argument
    rng = np.random.default_rng(8)
    v0 = rng.uniform(0.1, 10.0, 200)
    vp = rng.uniform(0.0, 10.0, 200)
    d2 = epr.inference_variance(v0, vp)
    assert np.all(d2 <= np.sqrt(v0 * vp) + 1e-12)
    d2_up = epr.inference_variance(v0 * 1.01, vp)
    assert np.all(d2_up >= d2 - 1e-12)
    d2_up2 = epr.inference_variance(v0, vp + 0.01)
    assert np.all(d2_up2 >= d2 - 1e-12)


def test_inference_variance_scale_check():
    for v in (0.2, 1.0, 3.7):
        assert epr.inference_variance(v, v) == pytest.approx(v)


def test_inference_variance_domain():
    with pytest.raises(ParameterError):
        epr.inference_variance(0.0, 0.0)
    with pytest.raises(ParameterError):
        epr.inference_variance(-1.0, 1.0)


def test_inference_gains():
    cx, cy = epr.inference_gains(1.0, 1.0)
    assert cx == 0.0 and cy == 0.0
    cx, cy = epr.inference_gains(9.0, 1.0 / 9.0)
    assert cx == pytest.approx(40.0 / 41.0)
    assert cy == pytest.approx(-40.0 / 41.0)
    cx, _ = epr.inference_gains(2.0, 0.0)
    assert cx == pytest.approx(1.0)


def test_epr_flag_boundary_and_values():
    assert not epr.epr_flag(1.0, 1.0)          # boundary is not strict violation
    assert epr.epr_flag(0.8, 0.8)              # 0.64 < 1
    # linear theory at mu = 0.5, zero frequency: the inference variance is the
    # harmonic mean 2*(9)(1/9)/(9 + 1/9) = 9/41 ~ 0.2195, so EPR is
    # demonstrated (idealized linearized system shows EPR for any mu > 0)
    d2 = epr.inference_variance(9.0, 1.0 / 9.0)
    assert d2 == pytest.approx(9.0 / 41.0)
    assert epr.epr_flag(d2, d2)


def test_duan_simon_flags():
    assert not epr.duan_simon_flag(1.0)
    assert epr.duan_simon_flag(1.0 / 9.0)
    assert not epr.duan_sum(2.0, 2.0)
    assert epr.duan_sum(1.0, 2.9)


def test_epr_implies_duan_simon():
    # with V0 >= 1, inference variance < 1 forces V^{pi/2} < 1
    rng = np.random.default_rng(9)
    v0 = rng.uniform(1.0, 50.0, 500)
    vp = rng.uniform(0.0, 3.0, 500)
    d2 = epr.inference_variance(v0, vp)
    flag_epr = d2 * d2 < 1.0
    flag_ds = vp < 1.0
    assert np.all(~flag_epr | flag_ds)


class _FakeSpec:
    def __init__(self, omega, v0, vpi2, v0_se=None, vpi2_se=None):
        self.omega = omega
        self.v0 = v0
        self.vpi2 = vpi2
        self.v0_se = v0_se
        self.vpi2_se = vpi2_se


def test_epr_report_vacuum_sets_no_flags():
    omega = np.linspace(0, 5, 11)
    rep = epr.epr_report(_FakeSpec(omega, np.ones(11), np.ones(11)))
    assert not rep.epr_demonstrated.any()
    assert not rep.entangled_duan_simon.any()
    assert np.allclose(rep.inference_x, 1.0)
    assert np.allclose(rep.heisenberg_product, 1.0)


def test_epr_report_optimum_drive_point():
    v0, vpi2 = oracle.spectrum_plusp(0.93, 0.01, 0.001, 0.0)
    rep = epr.epr_report(_FakeSpec(np.array([0.0]), np.array([v0]), np.array([vpi2])))
    assert rep.entangled_duan_simon[0]
    assert rep.epr_demonstrated[0]
    assert rep.epr_product[0] < 1.0


def test_epr_report_conservative_flagging():
    # an estimate just below threshold with a large standard error must not
    # assert a paradox
    spec = _FakeSpec(np.array([0.0]), np.array([1.5]), np.array([0.97]),
                     v0_se=np.array([0.0]), vpi2_se=np.array([0.1]))
    rep = epr.epr_report(spec)
    assert not rep.entangled_duan_simon[0]
    spec2 = _FakeSpec(np.array([0.0]), np.array([1.5]), np.array([0.97]))
    assert epr.epr_report(spec2).entangled_duan_simon[0]


def test_epr_report_small_drive_is_weakly_epr():
    # at mu = 0.05 the closed forms keep V0*Vpi2 ~ 1, so the inference
    # variance (harmonic mean) stays below 1: entanglement and weak EPR
    v0, vpi2 = oracle.spectrum_plusp(0.05, 0.01, 0.001, 0.0)
    assert v0 * vpi2 == pytest.approx(1.0, abs=5e-5)
    d2 = epr.inference_variance(v0, vpi2)
    assert d2 == pytest.approx(0.98034, abs=2e-4)
    rep = epr.epr_report(_FakeSpec(np.array([0.0]), np.array([v0]), np.array([vpi2])))
    assert rep.entangled_duan_simon[0]
    assert rep.epr_product[0] < 1.0
