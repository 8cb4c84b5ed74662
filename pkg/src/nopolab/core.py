"""Parameters, scalings, classical steady states and quadrature maps.

Model: three cavity modes (pump a0, signal a1, idler a2) coupled by a
chi^(2) crystal, with coherent pump drive E and amplitude decay rates
gamma0 (pump) and gamma (signal = idler).  Classical equations of motion:

    da0/dt = E - gamma0*a0 - chi*a1*a2
    dai/dt = -gamma*ai + chi*conj(a_{3-i})*a0        (i = 1, 2)

The oscillation threshold sits at E_c = gamma*gamma0/chi.  All analytic
results and estimators in this package are expressed in the dimensionless
frame

    gamma_r = gamma0/gamma,   mu = E/E_c,   g = chi/(gamma*sqrt(2*gamma_r)),

with scaled time tau = gamma*t and scaled quadratures

    x0 = g*sqrt(2*gamma_r)*X0,   x = g*X,   x+ = g*X+   (same for y's),

where X0 = a0 + a0+, X = a1 + a2+, X+ = a2 + a1+, Y = -i*(a1 - a2+), etc.
In the positive-P representation the plus-variables are independent of the
unconjugated ones; in the truncated Wigner representation a+ means conj(a).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ScalingError

POSITIVE_P = "positive_p"
WIGNER = "wigner"
_REPRESENTATIONS = (POSITIVE_P, WIGNER)

# chi/gamma above this ratio strains the large-damping validity condition
WEAK_COUPLING_RATIO = 0.1


@dataclass(frozen=True)
class PhysicalParams:
    """Cavity rates, nonlinearity and pump drive in physical (1/time) units."""

    gamma0: float
    gamma: float
    chi: float
    drive: complex

    def __post_init__(self):
        if not (self.gamma0 > 0 and self.gamma > 0):
            raise ParameterError(
                f"decay rates must be positive, got gamma0={self.gamma0}, gamma={self.gamma}"
            )
        if self.chi < 0:
            raise ParameterError(f"chi must be non-negative, got {self.chi}")
        if self.chi / self.gamma > WEAK_COUPLING_RATIO:
            warnings.warn(
                f"chi/gamma = {self.chi / self.gamma:.3g} > {WEAK_COUPLING_RATIO}: "
                "outside the weak-coupling regime where the phase-space mappings are reliable",
                stacklevel=2,
            )


@dataclass(frozen=True)
class ScaledParams:
    """Dimensionless parameter set (gamma_r, mu, g) plus the threshold drive."""

    gamma_r: float
    mu: float
    g: float
    e_crit: float

    @property
    def g2(self) -> float:
        return self.g * self.g

    @property
    def no_threshold(self) -> bool:
        """True when chi = 0, i.e. the threshold drive is infinite."""
        return not math.isfinite(self.e_crit)


@dataclass(frozen=True)
class CriticalParams:
    """Critical-frame drive offset and time unit.

    eta = (2/g)*(mu - 1) measures the distance from threshold in critical
    units; one critical time unit equals gamma*g physical seconds^-1, i.e.
    tau_crit = g * tau in scaled time.
    """

    eta: float
    tau_scale: float


def derive_scaled(p: PhysicalParams) -> ScaledParams:
    """Map physical parameters onto (gamma_r, mu, g, E_c).

    chi = 0 yields g = 0 and an infinite threshold (mu = 0, flagged via
    ScaledParams.no_threshold).
    """
    gamma_r = p.gamma0 / p.gamma
    g = p.chi / (p.gamma * math.sqrt(2.0 * gamma_r))
    if p.chi == 0.0:
        return ScaledParams(gamma_r=gamma_r, mu=0.0, g=0.0, e_crit=math.inf)
    e_crit = p.gamma * p.gamma0 / p.chi
    mu = abs(p.drive) / e_crit
    return ScaledParams(gamma_r=gamma_r, mu=mu, g=g, e_crit=e_crit)


def physical_from_scaled(g2: float, gamma_r: float, mu: float, gamma: float = 1.0) -> PhysicalParams:
    """Invert derive_scaled: build physical parameters realizing (g^2, gamma_r, mu).

    gamma = 1 makes physical time coincide with scaled time tau, which is the
    canonical internal frame.
    """
    if g2 < 0 or gamma_r <= 0 or mu < 0:
        raise ParameterError(f"need g2 >= 0, gamma_r > 0, mu >= 0; got {g2}, {gamma_r}, {mu}")
    chi = math.sqrt(g2) * gamma * math.sqrt(2.0 * gamma_r)
    gamma0 = gamma_r * gamma
    if chi == 0.0:
        if mu != 0.0:
            raise ParameterError("mu > 0 is unreachable with g = 0 (no threshold)")
        return PhysicalParams(gamma0=gamma0, gamma=gamma, chi=0.0, drive=0.0)
    e_crit = gamma * gamma0 / chi
    return PhysicalParams(gamma0=gamma0, gamma=gamma, chi=chi, drive=mu * e_crit)


def critical_params(sp: ScaledParams, gamma: float = 1.0) -> CriticalParams:
    """Critical-frame (eta, time unit) for the given scaled parameters."""
    if sp.g <= 0:
        raise ScalingError("critical frame undefined for g = 0")
    return CriticalParams(eta=2.0 * (sp.mu - 1.0) / sp.g, tau_scale=gamma * sp.g)


def classical_steady_state(p: PhysicalParams) -> tuple[complex, complex, complex]:
    """Stable classical steady state (a0, a1, a2).

    Below threshold (mu < 1): a0 = E/gamma0 and a1 = a2 = 0.  At and above
    threshold the pump clamps at a0 = E_c/gamma0 while |a1|^2 = |a2|^2 =
    (E - E_c)/chi grows linearly with the drive; the free signal/idler phase
    is fixed to the real-positive convention a1 = a2 > 0.
    """
    sp = derive_scaled(p)
    if sp.no_threshold or sp.mu < 1.0:
        return (complex(p.drive) / p.gamma0, 0.0 + 0.0j, 0.0 + 0.0j)
    drive = complex(p.drive)
    if drive.imag != 0 or drive.real < 0:
        raise ParameterError("above-threshold branch implemented for real non-negative drive")
    a0 = sp.e_crit / p.gamma0
    amp = math.sqrt((drive.real - sp.e_crit) / p.chi)
    return (complex(a0), complex(amp), complex(amp))


def classical_drift(p: PhysicalParams, a0: complex, a1: complex, a2: complex):
    """Right-hand side of the classical equations; used as a drift oracle."""
    d0 = p.drive - p.gamma0 * a0 - p.chi * a1 * a2
    d1 = -p.gamma * a1 + p.chi * np.conj(a2) * a0
    d2 = -p.gamma * a2 + p.chi * np.conj(a1) * a0
    return d0, d1, d2


@dataclass
class PhaseState:
    """Phase-space amplitudes of one trajectory.

    positive_p: amplitudes = [a0, a0+, a1, a1+, a2, a2+] (six independent
    complex values).  wigner: amplitudes = [a0, a1, a2]; the plus-variables
    are the complex conjugates.
    """

    representation: str
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.representation not in _REPRESENTATIONS:
            raise ParameterError(f"unknown representation {self.representation!r}")
        want = 6 if self.representation == POSITIVE_P else 3
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape[0] != want:
            raise ParameterError(
                f"{self.representation} state needs {want} amplitudes, got shape {self.amplitudes.shape}"
            )

    @classmethod
    def vacuum(cls, representation: str) -> "PhaseState":
        n = 6 if representation == POSITIVE_P else 3
        return cls(representation, np.zeros(n, dtype=np.complex128))

    @classmethod
    def from_classical(cls, p: PhysicalParams, representation: str) -> "PhaseState":
        """State at the classical steady state (deterministic start for ensembles)."""
        a0, a1, a2 = classical_steady_state(p)
        if representation == POSITIVE_P:
            amps = np.array([a0, np.conj(a0), a1, np.conj(a1), a2, np.conj(a2)])
        else:
            amps = np.array([a0, a1, a2])
        return cls(representation, amps)

    def plus_pairs(self):
        """Return (a0, a0p, a1, a1p, a2, a2p) with a+ = conj(a) for Wigner."""
        a = self.amplitudes
        if self.representation == POSITIVE_P:
            return a[0], a[1], a[2], a[3], a[4], a[5]
        return a[0], np.conj(a[0]), a[1], np.conj(a[1]), a[2], np.conj(a[2])


@dataclass
class QuadratureSample:
    """Scaled quadratures of one state at one time.

    The values are complex: in the positive-P representation the quadrature
    variables are genuinely complex (a+ is independent of conj(a)) and only
    their ensemble moments are real.  In the Wigner representation
    xp = conj(x) and yp = conj(y) hold identically.
    """

    x0: complex
    y0: complex
    x: complex
    y: complex
    xp: complex
    yp: complex
    time: float = 0.0


def quadratures_from_state(
    s: PhaseState, g: float, gamma_r: float, theta: float = 0.0, time: float = 0.0
) -> QuadratureSample:
    """Scaled quadratures of a phase-space state at local-oscillator angle theta.

    theta rotates every mode, a -> a*exp(-i*theta) and a+ -> a+*exp(+i*theta),
    before the quadratures are formed, so theta = pi/2 maps the X-family onto
    the Y-family of theta = 0.
    """
    a0, a0p, a1, a1p, a2, a2p = s.plus_pairs()
    ph = np.exp(-1j * theta)
    phc = np.exp(1j * theta)
    a0, a1, a2 = a0 * ph, a1 * ph, a2 * ph
    a0p, a1p, a2p = a0p * phc, a1p * phc, a2p * phc
    scale0 = g * math.sqrt(2.0 * gamma_r)
    return QuadratureSample(
        x0=scale0 * (a0 + a0p),
        y0=scale0 * (a0 - a0p) / 1j,
        x=g * (a1 + a2p),
        y=g * (a1 - a2p) / 1j,
        xp=g * (a2 + a1p),
        yp=g * (a2 - a1p) / 1j,
        time=time,
    )


def critical_rescale(sp: ScaledParams, q: QuadratureSample, representation: str = POSITIVE_P) -> QuadratureSample:
    """Map a scaled quadrature sample into the critical frame.

    x0_crit = (x0 - 2)/g (pump depletion relative to the undepleted critical
    value), x_crit = x/sqrt(g), y_crit = y/g; the pump phase quadrature
    scales as y0/g^(3/2) in positive-P and y0/g in Wigner.  Time is measured
    in critical units tau_crit = g*tau.
    """
    if sp.g <= 0:
        raise ScalingError("critical rescale undefined for g = 0")
    g = sp.g
    y0_scale = g ** 1.5 if representation == POSITIVE_P else g
    return QuadratureSample(
        x0=(q.x0 - 2.0) / g,
        y0=q.y0 / y0_scale,
        x=q.x / math.sqrt(g),
        y=q.y / g,
        xp=q.xp / math.sqrt(g),
        yp=q.yp / g,
        time=q.time * g,
    )
