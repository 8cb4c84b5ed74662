"""Spectral and moment estimators for trajectory ensembles.

Transform convention: a~(W) = Int dt e^{i W t} a(t) / sqrt(2 pi), mapped to
finite segments of length T with delta(W) -> T/(2 pi), so the cross spectral
density estimator on the DFT grid W_k = 2 pi k / T is

    S_ab(W_k) = (2 pi / T) <a~(W_k) b~(-W_k)> = (h / N) A[k] B[(N-k) % N],

with h the sample spacing, N = T/h, and A[k] = sum_n a_n e^{+i W_k t_n}
(= N * ifft(a)[k]).  Segments use a rectangular window and do not overlap,
which keeps the delta <-> T/(2 pi) mapping exact; estimates are symmetrized
over +-W and over the (a, b) ordering.

Recorded series are bin averages over the record interval h, a boxcar
filter that multiplies densities by sinc^2(W h / 2); internal-quadrature
estimates divide that factor back out.

Positive-P squeezing spectra come from internal quadratures alone,

    V^theta(W) = 1 + 2 <dX~^theta(W) dX~^theta-dagger(-W)>,

while truncated-Wigner spectra must be built from the output fields
Phi_out = sqrt(2 gamma) a - Phi_in (the reflected vacuum is correlated with
the internal amplitudes), with Phi_in reconstructed from the recorded noise
increments, Phi_in = dW/(sqrt 2 dt).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import POSITIVE_P, WIGNER
from .errors import EstimationError, MissingRecordError
from .oracle import linear_spectra_theta

# per-segment transform products among (a1, a1p, a2, a2p); together they
# carry both orderings and both frequency signs of every theta spectrum
PRIM_KEYS = ("p12", "p21", "p11p", "p1p1", "p22p", "p2p2", "p2p1p", "p1p2p")
# output-field products for the Wigner estimator
OUT_KEYS = ("q12", "q21", "d1p", "d1m", "d2p", "d2m")


def _dft(series, axis=0):
    """A[k] = sum_n a_n exp(+i W_k t_n) along the given axis."""
    n = series.shape[axis]
    return np.fft.ifft(series, axis=axis) * n


def _sinc(x):
    return np.sinc(np.asarray(x) / math.pi)


def boxcar_correction(omega, h):
    """sinc^2(W h / 2) attenuation of a bin-averaged recording."""
    return _sinc(np.asarray(omega) * h / 2.0) ** 2


# ---------------------------------------------------------------------------
# Generic cross-spectrum estimator (public operation)
# ---------------------------------------------------------------------------

@dataclass
class CrossSpectrum:
    omega: np.ndarray
    values: np.ndarray       # complex, symmetrized over +-W and ordering
    se: np.ndarray
    t_seg: float
    n_segments: int


def cross_spectrum(a, b, t_seg: float, dt: float, sym: bool = True) -> CrossSpectrum:
    """Segmented rectangular-window cross spectral density of two series.

    `a` and `b` are equally long 1-d series (or stacks of series with shape
    (n_series, n_samples)) sampled at spacing dt; the caller centers them.
    The series must cover at least two segments.
    """
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    if a.shape != b.shape:
        raise EstimationError(f"series shapes differ: {a.shape} vs {b.shape}")
    n_per_seg = int(round(t_seg / dt))
    if n_per_seg < 2:
        raise EstimationError(f"t_seg={t_seg} too short for dt={dt}")
    n_seg_each = a.shape[1] // n_per_seg
    if n_seg_each < 2 and a.shape[0] == 1:
        raise EstimationError(
            f"series of {a.shape[1]} samples holds fewer than two segments of {n_per_seg}"
        )
    if n_seg_each < 1:
        raise EstimationError("series shorter than one segment")

    segs_a = a[:, : n_seg_each * n_per_seg].reshape(-1, n_per_seg)
    segs_b = b[:, : n_seg_each * n_per_seg].reshape(-1, n_per_seg)
    fa = _dft(segs_a, axis=1)
    fb = _dft(segs_b, axis=1)
    n = n_per_seg
    k = np.arange(n // 2 + 1)
    neg = (n - k) % n
    prod = fa[:, k] * fb[:, neg]
    if sym:
        prod = 0.5 * (prod + fb[:, k] * fa[:, neg])
    prod *= dt / n
    values = prod.mean(axis=0)
    se = prod.std(axis=0, ddof=1) / math.sqrt(prod.shape[0]) if prod.shape[0] > 1 else np.zeros_like(k, dtype=float)
    omega = 2.0 * math.pi * k / (n * dt)
    return CrossSpectrum(omega=omega, values=values, se=np.abs(se),
                         t_seg=n * dt, n_segments=prod.shape[0])


# ---------------------------------------------------------------------------
# Per-segment primitives (called by the engine while streaming)
# ---------------------------------------------------------------------------

def _signal_transforms(amps, representation):
    """Transforms of (a1, a1p, a2, a2p) from a recorded amplitude block.

    amps has shape (n_bins, n_var, batch) with n_var = 6 (positive-P) or
    3 (Wigner); for Wigner the plus-transforms are conj at mirrored index,
    computed explicitly here for uniformity.
    """
    if representation == POSITIVE_P:
        a1, a1p, a2, a2p = amps[:, 2], amps[:, 3], amps[:, 4], amps[:, 5]
    else:
        a1, a2 = amps[:, 1], amps[:, 2]
        a1p, a2p = np.conj(a1), np.conj(a2)
    return (_dft(a1), _dft(a1p), _dft(a2), _dft(a2p))


def _pair_products(f1, f1p, f2, f2p, k_idx, h):
    n = f1.shape[0]
    k = k_idx
    neg = (n - k) % n
    scale = h / n
    return {
        "p12": scale * f1[k] * f2[neg],
        "p21": scale * f2[k] * f1[neg],
        "p11p": scale * f1[k] * f1p[neg],
        "p1p1": scale * f1p[k] * f1[neg],
        "p22p": scale * f2[k] * f2p[neg],
        "p2p2": scale * f2p[k] * f2[neg],
        "p2p1p": scale * f2p[k] * f1p[neg],
        "p1p2p": scale * f1p[k] * f2p[neg],
    }


def segment_signal_primitives(amps, representation, k_idx, h):
    """Quadrature-spectrum primitives of one segment; dict of (n_k, batch)."""
    f1, f1p, f2, f2p = _signal_transforms(amps, representation)
    return _pair_products(f1, f1p, f2, f2p, k_idx, h)


def segment_signal_primitives_linear(lin_amps, k_idx, h):
    """Same primitives for the linear companion block (a1, a1p, a2, a2p)."""
    f1, f1p, f2, f2p = (_dft(lin_amps[:, i]) for i in range(4))
    return _pair_products(f1, f1p, f2, f2p, k_idx, h)


def segment_output_primitives(amps, noise_sums, representation, k_idx, h, gamma_int):
    """Output-field products for the Wigner external spectra.

    phi_j = sqrt(2 gamma) a_j - dW_j / (sqrt 2 h) per record bin, in the
    internal frame (gamma_int = 1); noise_sums holds the bin-summed dW_j.
    """
    if representation != WIGNER:
        raise MissingRecordError("output-field spectra are defined for the Wigner representation")
    a1, a2 = amps[:, 1], amps[:, 2]
    w1, w2 = noise_sums[:, 0], noise_sums[:, 1]
    root = math.sqrt(2.0 * gamma_int)
    phi1 = root * a1 - w1 / (math.sqrt(2.0) * h)
    phi2 = root * a2 - w2 / (math.sqrt(2.0) * h)
    g1 = _dft(phi1)
    g2 = _dft(phi2)
    n = g1.shape[0]
    k = k_idx
    neg = (n - k) % n
    scale = h / n
    return {
        "q12": scale * g1[k] * g2[neg],
        "q21": scale * g2[k] * g1[neg],
        "d1p": scale * g1[k] * np.conj(g1[k]),
        "d1m": scale * g1[neg] * np.conj(g1[neg]),
        "d2p": scale * g2[k] * np.conj(g2[k]),
        "d2m": scale * g2[neg] * np.conj(g2[neg]),
    }


def segment_triple_products(amps, representation, triple_k, h, g, gamma_r):
    """Triple spectral products x~(W1) y+~(W2) y0~(W3) on the index grid.

    Series are the scaled quadratures (x = g X and so on), so the result
    estimates the scaled-variable density; W3 = -W1 - W2 on the DFT grid.
    Returns an (n_k, n_k, batch) complex block for one segment.
    """
    if representation == POSITIVE_P:
        a0, a0p = amps[:, 0], amps[:, 1]
        a1, a1p, a2, a2p = amps[:, 2], amps[:, 3], amps[:, 4], amps[:, 5]
    else:
        a0, a1, a2 = amps[:, 0], amps[:, 1], amps[:, 2]
        a0p, a1p, a2p = np.conj(a0), np.conj(a1), np.conj(a2)
    xs = g * (a1 + a2p)
    yps = -1j * g * (a2 - a1p)
    y0s = -1j * g * math.sqrt(2.0 * gamma_r) * (a0 - a0p)
    fx = _dft(xs)
    fyp = _dft(yps)
    fy0 = _dft(y0s)
    n = fx.shape[0]
    k1 = triple_k[:, None]
    k2 = triple_k[None, :]
    i1 = k1 % n
    i2 = k2 % n
    i3 = (-(k1 + k2)) % n
    scale = h * h / (math.sqrt(2.0 * math.pi) * n)
    return scale * fx[i1] * fyp[i2] * fy0[i3]


# ---------------------------------------------------------------------------
# Assembly into estimates
# ---------------------------------------------------------------------------

@dataclass
class SpectrumEstimate:
    """Squeezing spectra on the frequency grid, with standard errors.

    method is "direct" or "differenced"; in the latter case vpi2/v0 are the
    analytic linear spectra plus the simulated nonlinear difference, and
    subtracting the analytic linear spectrum (nonlinear_residual) recovers
    exactly the low-variance differencing estimate.
    """

    omega: np.ndarray
    v0: np.ndarray
    vpi2: np.ndarray
    v0_se: np.ndarray
    vpi2_se: np.ndarray
    t_seg: float
    n_segments: int
    n_traj: int
    representation: str
    method: str
    mu: float
    theta_spectra: dict | None = None
    imag_max: float = 0.0
    record_dt: float | None = None


@dataclass
class ResidualSpectrum:
    omega: np.ndarray
    values: np.ndarray
    se: np.ndarray


@dataclass
class TripleCorrEstimate:
    omega1: np.ndarray
    omega2: np.ndarray
    values: np.ndarray       # (n1, n2) complex, scaled-variable density
    se: np.ndarray
    n_traj: int
    conj_asymmetry: float    # max |D(W) - conj(D(-W))| / se, diagnostic


@dataclass
class MomentEstimate:
    """Stationary scaled moments with standard errors (value, se) pairs.

    x0_2 is (mean scaled pump quadrature - 2 mu)/g^2; xx1 and yy1 are the
    unsqueezed/squeezed quadrature products <X X+> and <Y Y+> (equal to the
    order-1 expansion moments up to O(g^2)); triple is the scaled triple
    moment divided by g^4; total_squeeze reconstructs <Y1 Y1-dagger>.
    """

    x0_2: tuple
    xx1: tuple
    yy1: tuple
    triple: tuple
    total_squeeze: tuple
    n_traj: int
    representation: str


def _mean_se(per_traj, axis=0):
    m = per_traj.mean(axis=axis)
    n = per_traj.shape[axis]
    if n > 1:
        se = per_traj.std(axis=axis, ddof=1) / math.sqrt(n)
    else:
        se = np.zeros_like(np.abs(m), dtype=float)
    return m, np.abs(se)


def _theta_combo(prims, theta):
    ph = np.exp(-2j * theta)
    return (
        ph * (prims["p12"] + prims["p21"])
        + prims["p11p"] + prims["p1p1"] + prims["p22p"] + prims["p2p2"]
        + np.conj(ph) * (prims["p2p1p"] + prims["p1p2p"])
    )


def _require(cond, msg):
    if not cond:
        raise EstimationError(msg)


def squeezing_spectra(ens, thetas=()) -> SpectrumEstimate:
    """Assemble output squeezing spectra V^theta from an ensemble.

    positive-P: V = 1 + 2 S_internal (normally ordered; reflected vacuum
    does not contribute).  Wigner: spectra of the reconstructed output
    fields directly (symmetric ordering includes the vacuum), which needs
    the recorded noise increments.  With a linear companion present the
    nonlinear difference estimator is used and the linear part is analytic.
    """
    _require(ens.n_segments > 0, "ensemble carries no spectral segments")
    ok = ens.ok
    _require(int(np.sum(ok)) > 0, "no non-faulted trajectories")
    mu = ens.scaled.mu
    corr = boxcar_correction(ens.omega, ens.config.record_dt)
    imag_max = 0.0
    theta_spectra = {}

    if ens.representation == WIGNER:
        if ens.out_traj is None:
            raise MissingRecordError(
                "Wigner squeezing spectra need output-field records (plan.output_spectra=True)"
            )
        prims = {k: v[ok] for k, v in ens.out_traj.items()}

        def v_theta(theta):
            ph = np.exp(-2j * theta)
            per_traj = np.real(ph * (prims["q12"] + prims["q21"])) + 0.5 * (
                np.real(prims["d1p"] + prims["d1m"] + prims["d2p"] + prims["d2m"])
            )
            per_traj = 1.0 + (per_traj - 1.0) / corr[None, :]
            return _mean_se(per_traj)

        method = "direct"
    elif ens.spec_lin_traj is not None:
        full = {k: v[ok] for k, v in ens.spec_traj.items()}
        lin = {k: v[ok] for k, v in ens.spec_lin_traj.items()}

        def v_theta(theta):
            diff = (_theta_combo(full, theta) - _theta_combo(lin, theta)) / corr[None, :]
            nonlocal imag_max
            imag_max = max(imag_max, float(np.abs(np.imag(diff.mean(axis=0))).max()))
            base = linear_spectra_theta(mu, ens.omega, theta)
            m, se = _mean_se(np.real(diff))
            return base + m, se

        method = "differenced"
    else:
        full = {k: v[ok] for k, v in ens.spec_traj.items()}

        def v_theta(theta):
            combo = _theta_combo(full, theta) / corr[None, :]
            nonlocal imag_max
            imag_max = max(imag_max, float(np.abs(np.imag(combo.mean(axis=0))).max()))
            m, se = _mean_se(np.real(combo))
            return 1.0 + m, se

        method = "direct"

    v0, v0_se = v_theta(0.0)
    vpi2, vpi2_se = v_theta(math.pi / 2.0)
    extra = {th: v_theta(th) for th in thetas}
    return SpectrumEstimate(
        omega=ens.omega, v0=np.asarray(v0), vpi2=np.asarray(vpi2),
        v0_se=v0_se, vpi2_se=vpi2_se,
        t_seg=ens.plan.t_seg, n_segments=ens.n_segments, n_traj=int(np.sum(ok)),
        representation=ens.representation, method=method, mu=mu,
        theta_spectra=extra or None, imag_max=imag_max,
        record_dt=ens.config.record_dt,
    )


def nonlinear_residual(est: SpectrumEstimate, mu: float) -> ResidualSpectrum:
    """Nonlinear squeezing variance V(W) = V^{pi/2}(W) - V^{(1)pi/2}(W):
    subtract the analytic linear spectrum bin by bin."""
    base = linear_spectra_theta(mu, est.omega, math.pi / 2.0)
    return ResidualSpectrum(omega=est.omega, values=est.vpi2 - base, se=est.vpi2_se)


def intracavity_moments(ens) -> MomentEstimate:
    """Time-and-ensemble averages of the stationary scaled moments."""
    _require(ens.moment_traj is not None and ens.n_moment_samples > 0,
             "ensemble carries no moment samples")
    ok = ens.ok
    _require(int(np.sum(ok)) > 0, "no non-faulted trajectories")
    sp = ens.scaled
    g, gr, mu = sp.g, sp.gamma_r, sp.mu
    mt = {k: v[ok] for k, v in ens.moment_traj.items()}
    if ens.representation == POSITIVE_P:
        x0 = g * math.sqrt(2.0 * gr) * np.real(mt["a0"] + mt["a0p"])
        total_per_traj = 1.0 + np.real(mt["yyp"])
    else:
        x0 = g * math.sqrt(2.0 * gr) * 2.0 * np.real(mt["a0"])
        total_per_traj = np.real(mt["yyp"])
    xx1 = np.real(mt["xxp"])
    yy1 = np.real(mt["yyp"])
    if g > 0:
        x0_2 = (x0 - 2.0 * mu) / (g * g)
        triple = math.sqrt(2.0 * gr) * np.real(mt["xyy"]) / g
    else:
        # no threshold: the g-scaled depletion and triple moments are undefined
        x0_2 = np.full_like(xx1, math.nan)
        triple = np.full_like(xx1, math.nan)

    def pack(vals):
        if np.any(np.isnan(vals)):
            return (math.nan, math.nan)
        m, se = _mean_se(vals)
        return (float(m), float(se))

    return MomentEstimate(
        x0_2=pack(x0_2), xx1=pack(xx1), yy1=pack(yy1), triple=pack(triple),
        total_squeeze=pack(total_per_traj),
        n_traj=int(np.sum(ok)), representation=ens.representation,
    )


def triple_spectrum(ens) -> TripleCorrEstimate:
    """Ensemble-averaged triple spectral density on the (W1, W2) grid."""
    _require(ens.triple_traj is not None, "ensemble carries no triple-correlation products")
    ok = ens.ok
    _require(int(np.sum(ok)) > 0, "no non-faulted trajectories")
    per_traj = ens.triple_traj[ok]
    h = ens.config.record_dt
    omega = 2.0 * math.pi * ens.triple_k / ens.plan.t_seg
    w1 = omega[:, None]
    w2 = omega[None, :]
    w3 = -w1 - w2
    corr = _sinc(w1 * h / 2.0) * _sinc(w2 * h / 2.0) * _sinc(w3 * h / 2.0)
    per_traj = per_traj / corr[None, :, :]
    values = per_traj.mean(axis=0)
    n = per_traj.shape[0]
    if n > 1:
        se = per_traj.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        se = np.zeros_like(np.abs(values))
    se = np.abs(se)
    # D(W1, W2) should equal conj(D(-W1, -W2)); grid is symmetric by construction
    flipped = np.conj(values[::-1, ::-1])
    denom = np.maximum(se + np.abs(np.conj(se[::-1, ::-1])), 1e-300)
    asym = float(np.max(np.abs(values - flipped) / denom)) if n > 1 else 0.0
    return TripleCorrEstimate(
        omega1=omega, omega2=omega, values=values, se=se,
        n_traj=n, conj_asymmetry=asym,
    )
