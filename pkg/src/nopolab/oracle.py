"""Closed-form moments, squeezing spectra and critical-point asymptotics.

Everything here is an analytic function of the dimensionless parameters
(mu, gamma_r, g^2) and scaled frequency Omega; no simulation is involved.
These results serve as oracles for the trajectory estimators:

* linearized output spectra V^0, V^{pi/2} and their exact Heisenberg
  identity V^0 * V^{pi/2} = 1;
* the order-g^2 (nonlinear) corrections to the spectra, in both the
  positive-P and truncated-Wigner representations;
* the perturbative intracavity moment hierarchy of both representations;
* quadrature triple spectral correlations;
* critical-point (mu ~ 1) moments from the quartic stationary density.

All below-threshold perturbative formulas diverge at mu = 1 and raise
ThresholdDomainError there; the critical-frame functions own that regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .core import POSITIVE_P, WIGNER
from .errors import ParameterError, ThresholdDomainError

SQRT_2PI = math.sqrt(2.0 * math.pi)


def _check_below_threshold(mu: float):
    if not 0.0 <= mu:
        raise ParameterError(f"mu must be non-negative, got {mu}")
    if mu >= 1.0:
        raise ThresholdDomainError(
            f"below-threshold perturbation theory diverges at the threshold (mu={mu})"
        )


# ---------------------------------------------------------------------------
# Linearized spectra
# ---------------------------------------------------------------------------

def linear_spectra(mu: float, omega):
    """Linear-theory output spectra (V0, Vpi2) at scaled frequency omega.

        V^{pi/2} = 1 - 4*mu/(omega^2 + (1+mu)^2)
        V^0      = 1 + 4*mu/(omega^2 + (1-mu)^2)

    V^0 diverges at (mu=1, omega=0); the signaled value there is +inf.
    """
    if mu < 0:
        raise ParameterError(f"mu must be non-negative, got {mu}")
    omega = np.asarray(omega, dtype=float)
    v_sq = 1.0 - 4.0 * mu / (omega**2 + (1.0 + mu) ** 2)
    denom = omega**2 + (1.0 - mu) ** 2
    with np.errstate(divide="ignore"):
        v_un = 1.0 + np.where(denom > 0.0, 4.0 * mu / denom, np.inf)
    if v_un.ndim == 0:
        return float(v_un), float(v_sq)
    return v_un, v_sq


def linear_spectra_theta(mu: float, omega, theta: float):
    """Linear V^theta: cos^2/sin^2 mixture of the theta=0 and theta=pi/2 spectra."""
    v0, vpi2 = linear_spectra(mu, omega)
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    return 1.0 + c2 * (np.asarray(v0) - 1.0) + s2 * (np.asarray(vpi2) - 1.0)


def heisenberg_product_linear(mu: float, omega):
    """V^0 * V^{pi/2} of the linearized theory; identically 1."""
    v0, vpi2 = linear_spectra(mu, omega)
    return np.asarray(v0) * np.asarray(vpi2)


# ---------------------------------------------------------------------------
# Nonlinear (order g^2) spectra
# ---------------------------------------------------------------------------

def spectrum_plusp(mu: float, gamma_r: float, g2: float, omega):
    """Positive-P output spectra (V0, Vpi2) including the order-g^2 correction.

    The squeezed spectrum:

        V^{pi/2}(W) = 1 - 4 mu/(W^2+(1+mu)^2) + 4 g^2 mu^2 gamma_r/(W^2+(1+mu)^2)^2
            * [ (W^2+1-mu^2)/(mu gamma_r (1-mu^2))
                + ((1-mu+gamma_r)(1+mu) - W^2)/((1-mu)(W^2+(1-mu+gamma_r)^2))
                - ((1+mu+gamma_r)(1+mu) - W^2)/((1+mu)(W^2+(1+mu+gamma_r)^2)) ]

    and the complementary V^0(W) with (1+mu) -> (1-mu) in the overall
    Lorentzian and the bracket numerators, with the correction entering with
    the opposite overall sign.
    """
    _check_below_threshold(mu)
    if mu == 0.0:
        # the order-g^2 correction carries an overall factor mu
        return linear_spectra(mu, omega)
    w2 = np.asarray(omega, dtype=float) ** 2
    a, b = 1.0 - mu, 1.0 + mu
    ra, rb = a + gamma_r, b + gamma_r
    one_m_mu2 = 1.0 - mu * mu

    lor_b = w2 + b * b
    bracket_sq = (
        (w2 + one_m_mu2) / (mu * gamma_r * one_m_mu2)
        + (ra * b - w2) / (a * (w2 + ra * ra))
        - (rb * b - w2) / (b * (w2 + rb * rb))
    )
    v_sq = 1.0 - 4.0 * mu / lor_b + (4.0 * g2 * mu * mu * gamma_r / lor_b**2) * bracket_sq

    lor_a = w2 + a * a
    bracket_un = (
        (w2 + one_m_mu2) / (mu * gamma_r * one_m_mu2)
        + (ra * a - w2) / (a * (w2 + ra * ra))
        - (rb * a - w2) / (b * (w2 + rb * rb))
    )
    v_un = 1.0 + 4.0 * mu / lor_a - (4.0 * g2 * mu * mu * gamma_r / lor_a**2) * bracket_un

    if np.ndim(omega) == 0:
        return float(v_un), float(v_sq)
    return v_un, v_sq


def squeezed_spectrum_plusp_zero(mu: float, gamma_r: float, g2: float) -> float:
    """Dedicated zero-frequency form of the positive-P squeezed spectrum:

        V^{pi/2}(0) = 1 - 4 mu/(1+mu)^2
            + 4 g^2 mu/(1+mu)^4 * [1 + 2 mu^2 gamma_r (2+gamma_r)
                                       / ((1-mu)((1+gamma_r)^2 - mu^2))]
    """
    _check_below_threshold(mu)
    b = 1.0 + mu
    corr = 1.0 + 2.0 * mu * mu * gamma_r * (2.0 + gamma_r) / (
        (1.0 - mu) * ((1.0 + gamma_r) ** 2 - mu * mu)
    )
    return 1.0 - 4.0 * mu / b**2 + 4.0 * g2 * mu / b**4 * corr


def spectrum_wigner(mu: float, gamma_r: float, g2: float, omega):
    """Truncated-Wigner squeezed output spectrum V^{pi/2} to order g^2.

    Shares the linear term with the positive-P result but carries a
    different nonlinear correction; in particular it does not vanish at
    mu = 0 (the semiclassical vacuum is distorted by the crystal).
    """
    _check_below_threshold(mu)
    w2 = np.asarray(omega, dtype=float) ** 2
    a, b = 1.0 - mu, 1.0 + mu
    ra, rb = a + gamma_r, b + gamma_r
    one_m_mu2 = 1.0 - mu * mu
    lor_b = w2 + b * b

    term0 = 2.0 * mu * (1.0 + w2 - mu * mu) / (gamma_r * one_m_mu2)
    term_a = ((a * ra - 2.0 * mu * mu) * w2 + ra * (1.0 + mu + mu**2 + mu**3)) / (
        a * (w2 + ra * ra)
    )
    term_b = ((b * rb + 2.0 * mu * mu) * w2 + rb * (1.0 + 3.0 * mu + mu**2 - mu**3)) / (
        b * (w2 + rb * rb)
    )
    v_sq = 1.0 - 4.0 * mu / lor_b + (2.0 * g2 * gamma_r / lor_b**2) * (term0 + term_a + term_b)
    if np.ndim(omega) == 0:
        return float(v_sq)
    return v_sq


# ---------------------------------------------------------------------------
# Perturbative moment hierarchy (scaled, stationary)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentSetPP:
    """Positive-P stationary moments of the scaled expansion variables.

    x0_2   = <x0^(2)>            pump depletion
    yy1    = <y^(1) y+^(1)>      squeezed quadrature, linear order
    xx1    = <x^(1) x+^(1)>      unsqueezed quadrature, linear order
    yy3    = <y^(1) y+^(3)>      first nonlinear correction
    triple = <x^(1) y+^(1) y0^(2)>
    """

    x0_2: float
    yy1: float
    xx1: float
    yy3: float
    triple: float


@dataclass(frozen=True)
class MomentSetW:
    """Semiclassical (truncated Wigner) analogues, including <y^(2) y+^(2)>
    and the three-term triple sum."""

    x0_2: float
    xx1: float
    yy1: float
    yy2: float
    yy3: float
    triple: float


def moments_plusp(mu: float, gamma_r: float) -> MomentSetPP:
    """Stationary moments of the positive-P expansion hierarchy.

    x0_2 follows from the second-order pump equation,
    <x0^(2)> = -(<x^(1) x+^(1)> - <y^(1) y+^(1)>) = -2 mu/(1 - mu^2),
    matching the truncated-Wigner mean field (pump depletion is a first
    moment, so the representations must agree on it).
    """
    _check_below_threshold(mu)
    one_m_mu2 = 1.0 - mu * mu
    b = 1.0 + mu
    bracket = mu * gamma_r / (gamma_r + 2.0) + (
        gamma_r * (2.0 - mu + mu * mu) + 4.0 * b
    ) / (b * (gamma_r + 2.0 * b))
    return MomentSetPP(
        x0_2=-2.0 * mu / one_m_mu2,
        yy1=-mu / b,
        xx1=mu / (1.0 - mu),
        yy3=mu / (4.0 * b * one_m_mu2) * bracket,
        triple=mu * mu / one_m_mu2 * gamma_r / (gamma_r + 2.0),
    )


def moments_wigner(mu: float, gamma_r: float) -> MomentSetW:
    _check_below_threshold(mu)
    a, b = 1.0 - mu, 1.0 + mu
    one_m_mu2 = a * b
    r2 = gamma_r / (gamma_r + 2.0)
    r2b = gamma_r / (gamma_r + 2.0 * b)
    return MomentSetW(
        x0_2=-2.0 * mu / one_m_mu2,
        xx1=1.0 / a,
        yy1=1.0 / b,
        yy2=r2 / (2.0 * a * b) + r2b / (2.0 * b * b),
        yy3=-mu * r2 / (4.0 * a * b * b) + mu / (2.0 * a * b**3) + mu * r2b / (4.0 * b**3),
        triple=r2 / one_m_mu2,
    )


def total_squeeze_moment(mu: float, gamma_r: float, g2: float, representation: str) -> float:
    """Stationary <Y1 Y1^dag> including the order-g^2 nonlinear correction.

    Both representations share the linear part 1/(1+mu); the corrections
    differ below threshold (the positive-P one vanishes with mu, the
    semiclassical one does not) but agree as gamma_r -> 0 and near mu = 1.
    """
    _check_below_threshold(mu)
    b = 1.0 + mu
    one_m_mu2 = 1.0 - mu * mu
    if representation == POSITIVE_P:
        bracket = mu * gamma_r / (gamma_r + 2.0) + (
            gamma_r * (2.0 - mu + mu * mu) + 4.0 * b
        ) / (b * (gamma_r + 2.0 * b))
        corr = g2 * mu / (2.0 * b * one_m_mu2) * bracket
    elif representation == WIGNER:
        bracket = gamma_r / (gamma_r + 2.0) + (
            gamma_r * (1.0 + 3.0 * mu - 2.0 * mu * mu) + 4.0 * mu * b
        ) / (b * (gamma_r + 2.0 * b))
        corr = g2 / (2.0 * b * one_m_mu2) * bracket
    else:
        raise ParameterError(f"unknown representation {representation!r}")
    return 1.0 / b + corr


# ---------------------------------------------------------------------------
# Triple spectral correlations
# ---------------------------------------------------------------------------

def triple_plusp(mu: float, gamma_r: float, omega1, omega2):
    """Positive-P triple spectral density <x~ y+~ y0~> at leading order,
    with the g^4 prefactor stripped (pure function of mu, gamma_r, Omegas):

        D(W1, W2) = 4 mu^2 gamma_r / sqrt(2 pi)
                    / ((-i W3 + gamma_r)(W1^2+(1-mu)^2)(W2^2+(1+mu)^2)),

    where W3 = -W1 - W2.  Multiply by g^4 to compare with estimates formed
    from the scaled quadrature series.
    """
    _check_below_threshold(mu)
    w1 = np.asarray(omega1, dtype=float)
    w2 = np.asarray(omega2, dtype=float)
    w3 = -w1 - w2
    val = (4.0 * mu * mu * gamma_r / SQRT_2PI) / (
        (-1j * w3 + gamma_r) * (w1**2 + (1.0 - mu) ** 2) * (w2**2 + (1.0 + mu) ** 2)
    )
    if np.ndim(omega1) == 0 and np.ndim(omega2) == 0:
        return complex(val)
    return val


def triple_wigner(mu: float, gamma_r: float, omega1, omega2, g: float):
    """Truncated-Wigner triple spectral density (g^4 factor included).

    The order-g^3 term vanishes; the leading contribution is

        g^4 * 4 gamma_r/sqrt(2 pi) * [ -1/((-i W3+gr)(W1^2+a^2)(W2^2+b^2))
            + gr/((-i W1+a)(W2^2+b^2)(W3^2+gr^2))
            + gr/((-i W2+b)(W1^2+a^2)(W3^2+gr^2)) ]

    with a = 1-mu, b = 1+mu.  Nonzero even at mu = 0.
    """
    _check_below_threshold(mu)
    w1 = np.asarray(omega1, dtype=float)
    w2 = np.asarray(omega2, dtype=float)
    w3 = -w1 - w2
    a, b = 1.0 - mu, 1.0 + mu
    la = w1**2 + a * a
    lb = w2**2 + b * b
    lg = w3**2 + gamma_r * gamma_r
    val = (g**4 * 4.0 * gamma_r / SQRT_2PI) * (
        -1.0 / ((-1j * w3 + gamma_r) * la * lb)
        + gamma_r / ((-1j * w1 + a) * lb * lg)
        + gamma_r / ((-1j * w2 + b) * la * lg)
    )
    if np.ndim(omega1) == 0 and np.ndim(omega2) == 0:
        return complex(val)
    return val


def triple_moment_from_spectrum(mu: float, gamma_r: float, omega_max: float = 60.0, n: int = 1201):
    """Numerically integrate the positive-P triple density over (W1, W2):

        <x^(1) y+^(1) y0^(2)> = (2 pi)^(-3/2) * Int dW1 dW2 D(W1, W2)

    Used as a cross-check against the closed-form stationary moment.
    """
    w = np.linspace(-omega_max, omega_max, n)
    w1, w2 = np.meshgrid(w, w, indexing="ij")
    dens = triple_plusp(mu, gamma_r, w1, w2)
    dw = w[1] - w[0]
    integral = np.trapezoid(np.trapezoid(dens, dx=dw, axis=1), dx=dw)
    return float(np.real(integral)) / (2.0 * math.pi) ** 1.5


# ---------------------------------------------------------------------------
# Critical point (mu ~ 1)
# ---------------------------------------------------------------------------

def critical_xx(eta: float) -> float:
    """Radial second moment <x x+> of the critical stationary density.

    The reduced critical dynamics dx = (eta*x - x(x.x)/2) dtau + dw has the
    stationary density P(x) ~ exp(eta r^2 - r^4/4) on the (x+, x-) plane, so
    with u = r^2:

        <r^2> = Int_0^inf u exp(eta u - u^2/4) du
                / Int_0^inf exp(eta u - u^2/4) du.

    Evaluated by adaptive quadrature with the exponent peak factored out so
    large |eta| stays finite; at eta = 0 this is 2*Gamma(1)/Gamma(1/2)
    = 2/sqrt(pi) = 1.12838.
    """
    if not math.isfinite(eta):
        raise ParameterError(f"eta must be finite, got {eta}")
    u_max = max(50.0, 2.0 * eta + 30.0 * math.sqrt(max(eta, 1.0)))
    # peak of eta*u - u^2/4 on u >= 0
    u_peak = max(0.0, 2.0 * eta)
    log_peak = eta * u_peak - u_peak * u_peak / 4.0

    def weight(u):
        return math.exp(eta * u - u * u / 4.0 - log_peak)

    num, _ = quad(lambda u: u * weight(u), 0.0, u_max, epsabs=1e-13, epsrel=1e-12, limit=200)
    den, _ = quad(weight, 0.0, u_max, epsabs=1e-13, epsrel=1e-12, limit=200)
    return num / den


def critical_squeeze_moment(eta: float, gamma_r: float, g: float) -> float:
    """Total squeezed moment <y y+> near threshold:

        <y y+> = 1/2 - g*eta/4 + (g/8) * (2+2*gamma_r)/(2+gamma_r) * <x x+>(eta)

    The positive-P and truncated-Wigner treatments give exactly this same
    expression at this order, so no representation argument is needed.
    The minimizer over eta is strictly positive: best overall squeezing sits
    just above threshold.
    """
    if g < 0:
        raise ParameterError(f"g must be non-negative, got {g}")
    factor = (2.0 + 2.0 * gamma_r) / (2.0 + gamma_r)
    return 0.5 - g * eta / 4.0 + (g / 8.0) * factor * critical_xx(eta)
