import math

import numpy as np
import pytest

from nopolab import spectra
from nopolab.errors import EstimationError


def _ou_exact(n_series, n_samples, lam, sigma, h, rng):
    """Exact discrete-time stationary OU paths (AR(1) with matched moments)."""
    rho = math.exp(-lam * h)
    var = sigma * sigma / (2.0 * lam)
    x = np.empty((n_series, n_samples))
    x[:, 0] = rng.standard_normal(n_series) * math.sqrt(var)
    innov = rng.standard_normal((n_series, n_samples)) * math.sqrt(var * (1 - rho * rho))
    for n in range(1, n_samples):
        x[:, n] = rho * x[:, n - 1] + innov[:, n]
    return x


def test_ou_spectrum_matches_lorentzian():
    # dx = -lam x dt + sigma dW has S(W) = sigma^2/(W^2 + lam^2) in the
    # delta(W) -> T/2pi normalization; segments of the default length 100
    # keep the finite-resolution (Fejer) bias well below the 5% band
    lam, sigma, h = 1.0, 0.9, 0.02
    t_seg = 100.0
    rng = np.random.default_rng(101)
    x = _ou_exact(64, 100 * int(t_seg / h), lam, sigma, h, rng)
    est = spectra.cross_spectrum(x, x, t_seg, h)
    band = est.omega <= 5.0
    target = sigma * sigma / (est.omega[band] ** 2 + lam * lam)
    rel = np.abs(np.real(est.values[band]) - target) / target
    assert np.max(rel) < 0.05


def test_white_noise_spectrum_is_flat():
    h = 0.05
    v = 1.7
    rng = np.random.default_rng(102)
    x = rng.standard_normal((32, 40000)) * math.sqrt(v)
    est = spectra.cross_spectrum(x, x, 20.0, h)
    target = v * h     # sampled white noise of variance v has density v*h
    rel = np.abs(np.real(est.values) - target) / target
    assert np.max(rel) < 0.05


def test_zero_series_gives_zero_spectrum():
    x = np.zeros(4000)
    est = spectra.cross_spectrum(x, x, 10.0, 0.01)
    assert np.all(est.values == 0.0)


def test_series_too_short_raises():
    x = np.zeros(50)
    with pytest.raises(EstimationError):
        spectra.cross_spectrum(x, x, 10.0, 0.01)


def test_estimator_real_for_real_series():
    rng = np.random.default_rng(103)
    x = rng.standard_normal(16000)
    y = 0.3 * x + rng.standard_normal(16000)
    est = spectra.cross_spectrum(x, y, 10.0, 0.01)
    scale = np.abs(est.values).max()
    assert np.max(np.abs(np.imag(est.values))) <= 1e-10 * scale


def test_parseval_exact_on_grid():
    # rectangular window, no overlap: summing the full grid reproduces the
    # mean square of the windowed data exactly
    lam, sigma, h = 0.7, 1.1, 0.02
    t_seg = 20.0
    rng = np.random.default_rng(104)
    x = _ou_exact(4, 50 * int(t_seg / h), lam, sigma, h, rng)
    n = int(t_seg / h)
    est = spectra.cross_spectrum(x, x, t_seg, h)
    # reconstruct the full-grid sum from the half grid of a real series
    s = np.real(est.values)
    full_sum = s[0] + s[-1] + 2.0 * np.sum(s[1:-1])
    mean_sq = np.mean(x[:, : (x.shape[1] // n) * n] ** 2)
    assert full_sum / t_seg == pytest.approx(mean_sq, rel=1e-10)
    # and the theoretical stationary variance within the 5% finite-resolution band
    assert full_sum / t_seg == pytest.approx(sigma * sigma / (2 * lam), rel=0.05)


def test_cross_spectrum_recovers_known_cross_density():
    # y = a*x with x white: S_xy = a * S_xx, real
    h, v, a = 0.05, 1.0, 0.8
    rng = np.random.default_rng(105)
    x = rng.standard_normal((16, 20000)) * math.sqrt(v)
    est = spectra.cross_spectrum(x, a * x, 25.0, h)
    target = a * v * h
    z = (np.real(est.values) - target) / est.se
    assert abs(np.mean(np.real(est.values)) / target - 1.0) < 0.02
    assert np.max(np.abs(z)) < 5.0


def test_boxcar_correction_limits():
    assert spectra.boxcar_correction(0.0, 0.05) == pytest.approx(1.0)
    w = 10.0
    h = 0.05
    want = (math.sin(w * h / 2) / (w * h / 2)) ** 2
    assert spectra.boxcar_correction(w, h) == pytest.approx(want, rel=1e-12)
    assert 0.97 < want < 1.0
