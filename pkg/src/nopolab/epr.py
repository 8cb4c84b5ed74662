"""EPR-paradox and two-mode-squeezing entanglement verdicts from spectra.

Conventions: quadratures normalized so the vacuum spectrum is 1 and the
single-mode Heisenberg bound is Var(X1)*Var(Y1) >= 1.  By the signal/idler
symmetry of this system Var(X1) = Var(X2) = (V^0 + V^{pi/2})/2 and
<X1, X2> = (V^0 - V^{pi/2})/2, which collapses the linear-estimate
inference variance to the harmonic mean of the two spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

EPR_BOUND = 1.0       # product of inference variances below this -> EPR
DUAN_SIMON_BOUND = 1.0  # V^{pi/2} below this -> inseparable
DUAN_SUM_BOUND = 4.0    # Var(X1-X2) + Var(Y1+Y2) below this -> inseparable


def inference_variance(v0, vpi2):
    """Linear-estimate inference variance for one quadrature:

        Delta^2_inf X = 2 V^0 V^{pi/2} / (V^0 + V^{pi/2}).

    In the limit V^0 -> inf this tends to 2 V^{pi/2}.
    """
    v0 = np.asarray(v0, dtype=float)
    vpi2 = np.asarray(vpi2, dtype=float)
    if np.any(v0 <= 0) or np.any(vpi2 < 0):
        raise ParameterError("need V0 > 0 and Vpi2 >= 0")
    denom = v0 + vpi2
    if np.any(denom == 0):
        raise ParameterError("V0 + Vpi2 = 0: inference variance undefined")
    out = 2.0 * v0 * vpi2 / denom
    return float(out) if out.ndim == 0 else out


def inference_gains(v0, vpi2):
    """Optimal linear inference gains (c_x, c_y).

    c_x = <X1, X2>/Var(X2) = (V^0 - V^{pi/2})/(V^0 + V^{pi/2}); the Y
    quadratures are anticorrelated, so c_y = -c_x.
    """
    v0 = np.asarray(v0, dtype=float)
    vpi2 = np.asarray(vpi2, dtype=float)
    denom = v0 + vpi2
    if np.any(denom == 0):
        raise ParameterError("degenerate variances: gains undefined")
    c_x = (v0 - vpi2) / denom
    if c_x.ndim == 0:
        return float(c_x), -float(c_x)
    return c_x, -c_x


def epr_flag(d2x, d2y) -> bool:
    """True iff the inferred-HUP product demonstrates an EPR paradox:
    Delta^2_inf(X) * Delta^2_inf(Y) < 1 (strict; the boundary does not count)."""
    d2x = float(d2x)
    d2y = float(d2y)
    if d2x < 0 or d2y < 0:
        raise ParameterError("inference variances must be non-negative")
    return d2x * d2y < EPR_BOUND


def duan_simon_flag(vpi2) -> bool:
    """True iff the two-mode-squeezing variance certifies inseparability:
    V^{pi/2} < 1 (strict)."""
    v = float(vpi2)
    if v < 0:
        raise ParameterError("V^{pi/2} must be non-negative")
    return v < DUAN_SIMON_BOUND


def duan_sum(d2_dx, d2_dy) -> bool:
    """Sum form of the inseparability bound: Var(X1-X2) + Var(Y1+Y2) < 4."""
    a, b = float(d2_dx), float(d2_dy)
    if a < 0 or b < 0:
        raise ParameterError("variances must be non-negative")
    return a + b < DUAN_SUM_BOUND


@dataclass
class EprReport:
    """Per-frequency EPR and entanglement verdicts derived from spectra.

    inference_x equals inference_y by the signal/idler symmetry, so
    epr_product = inference_x**2.  Flags evaluated conservatively when
    standard errors are supplied: the point estimate is shifted one
    standard error away from the violating side before comparison.
    """

    omega: np.ndarray
    v0: np.ndarray
    vpi2: np.ndarray
    inference_x: np.ndarray
    inference_y: np.ndarray
    epr_product: np.ndarray
    heisenberg_product: np.ndarray
    c_x: np.ndarray
    c_y: np.ndarray
    epr_demonstrated: np.ndarray
    entangled_duan_simon: np.ndarray


def epr_report(spec) -> EprReport:
    """Assemble an EprReport from a spectrum estimate.

    `spec` needs attributes omega, v0, vpi2 and (optionally) v0_se, vpi2_se;
    a SpectrumEstimate or any object with those fields works.  With standard
    errors present the criteria are evaluated on the value plus one standard
    error, so statistical noise cannot assert a paradox.
    """
    omega = np.asarray(spec.omega, dtype=float)
    v0 = np.asarray(spec.v0, dtype=float)
    vpi2 = np.asarray(spec.vpi2, dtype=float)
    v0_se = getattr(spec, "v0_se", None)
    vpi2_se = getattr(spec, "vpi2_se", None)
    v0_se = np.zeros_like(v0) if v0_se is None else np.asarray(v0_se, dtype=float)
    vpi2_se = np.zeros_like(vpi2) if vpi2_se is None else np.asarray(vpi2_se, dtype=float)

    d2 = inference_variance(v0, vpi2)
    c_x, c_y = inference_gains(v0, vpi2)
    # conservative values: push each spectrum one SE toward the non-violating side
    d2_cons = inference_variance(v0 + v0_se, np.maximum(vpi2 + vpi2_se, 0.0))
    vpi2_cons = vpi2 + vpi2_se

    d2 = np.atleast_1d(d2)
    c_x = np.atleast_1d(np.asarray(c_x, dtype=float))
    d2_cons = np.atleast_1d(d2_cons)
    vpi2_cons = np.atleast_1d(vpi2_cons)

    return EprReport(
        omega=np.atleast_1d(omega),
        v0=np.atleast_1d(v0),
        vpi2=np.atleast_1d(vpi2),
        inference_x=d2,
        inference_y=d2.copy(),
        epr_product=d2 * d2,
        heisenberg_product=np.atleast_1d(v0) * np.atleast_1d(vpi2),
        c_x=c_x,
        c_y=-c_x,
        epr_demonstrated=d2_cons * d2_cons < EPR_BOUND,
        entangled_duan_simon=vpi2_cons < DUAN_SIMON_BOUND,
    )
