"""Ito integration of the phase-space trajectory equations.

The engine integrates the unscaled amplitude equations with gamma = 1, so
integration time coincides with the scaled time tau = gamma*t; arbitrary
physical parameters are mapped into this frame on entry (distributionally
equivalent).  Each trajectory owns a counter-derived RNG stream keyed by
(seed, trajectory index), so results are bit-for-bit reproducible for a
given configuration regardless of batch size or worker count.

Trajectories are advanced in batches by the kernels in _kernels (numba fast
path with a NumPy mirror).  Recording is streaming: amplitudes are averaged
over record bins of width record_dt, segments of length t_seg are Fourier
transformed on the fly, and only per-trajectory reductions (spectral
primitives, moment sums, triple-correlation products) are kept.  Raw records
can be retained for small runs with keep_records.

An optional linearized companion system (signal/idler equations frozen at
the undepleted pump, driven by the same Wiener increments) is integrated
alongside positive-P trajectories; spectra formed from the difference of the
two systems estimate the nonlinear corrections with sampling noise far below
that of either spectrum alone.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, spectra as _spec
from .core import (
    POSITIVE_P,
    WIGNER,
    PhaseState,
    PhysicalParams,
    ScaledParams,
    derive_scaled,
)
from .errors import FaultBudgetError, ParameterError

SCHEME_EULER = "euler"
SCHEME_MIDPOINT = "midpoint"
_SCHEMES = {SCHEME_EULER: _kernels.EULER, SCHEME_MIDPOINT: _kernels.MIDPOINT}

PP_MOMENT_KEYS = ("a0", "a0p", "a1", "a1p", "a2", "a2p", "xxp", "yyp", "xyy")
W_MOMENT_KEYS = ("a0", "a1", "a2", "xxp", "yyp", "xyy")

_MAX_CHUNK_STEPS = 1024


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Philox stream keyed by (seed, trajectory index)."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------------------
# Noise blocks and single-step operations (contract surface; the batch
# kernels consume the same draws in the same order)
# ---------------------------------------------------------------------------

@dataclass
class NoiseBlock:
    """Wiener increments for one step of the active representation.

    positive_p: dw1, dw2, dw1p, dw2p with <dW1 dW2> = <dW1+ dW2+> = dt and
    every other second moment zero.  wigner: dw0, dw1, dw2 independent
    complex increments with <dWj conj(dWj)> = dt.  critical: dwx, a
    2-vector of independent real increments of variance dt each.
    """

    representation: str
    dt: float
    dw1: np.ndarray | complex | None = None
    dw2: np.ndarray | complex | None = None
    dw1p: np.ndarray | complex | None = None
    dw2p: np.ndarray | complex | None = None
    dw0: np.ndarray | complex | None = None
    dwx: np.ndarray | None = None

    @classmethod
    def zero(cls, representation: str, dt: float = 0.0) -> "NoiseBlock":
        z = 0.0 + 0.0j
        if representation == "critical":
            return cls(representation, dt, dwx=np.zeros(2))
        return cls(representation, dt, dw1=z, dw2=z, dw1p=z, dw2p=z, dw0=z)


def gen_noise(representation: str, rng: np.random.Generator, dt: float, size: int | None = None) -> NoiseBlock:
    """Draw one noise block; dt = 0 returns an exact zero block.

    positive-P construction from four real N(0, dt) variables u, v, u', v':
    dW1 = (u+iv)/sqrt2, dW2 = (u-iv)/sqrt2 (and primed for dW1+, dW2+),
    which realizes <dW1 dW2> = dt with <dW1^2> = <dW1 conj(dW1)>... = 0 for
    all unlisted moments.  Wigner draws three independent complex increments.
    """
    if dt < 0:
        raise ParameterError(f"dt must be non-negative, got {dt}")
    shape = (4,) if size is None else (4, size)
    if dt == 0.0:
        block = NoiseBlock.zero(representation, dt)
        if size is not None and representation != "critical":
            z = np.zeros(size, dtype=np.complex128)
            block.dw1 = z.copy()
            block.dw2 = z.copy()
            block.dw1p = z.copy()
            block.dw2p = z.copy()
            block.dw0 = z.copy()
        return block
    s = math.sqrt(dt)
    if representation == POSITIVE_P:
        u, v, up, vp = rng.standard_normal(shape) * s
        inv = _kernels.INV_SQRT2
        return NoiseBlock(
            representation, dt,
            dw1=(u + 1j * v) * inv, dw2=(u - 1j * v) * inv,
            dw1p=(up + 1j * vp) * inv, dw2p=(up - 1j * vp) * inv,
        )
    if representation == WIGNER:
        shape = (6,) if size is None else (6, size)
        n = rng.standard_normal(shape) * s
        inv = _kernels.INV_SQRT2
        return NoiseBlock(
            representation, dt,
            dw0=(n[0] + 1j * n[1]) * inv,
            dw1=(n[2] + 1j * n[3]) * inv,
            dw2=(n[4] + 1j * n[5]) * inv,
        )
    if representation == "critical":
        shape = (2,) if size is None else (2, size)
        return NoiseBlock(representation, dt, dwx=rng.standard_normal(shape) * s)
    raise ParameterError(f"unknown representation {representation!r}")


def _pp_drift(p: PhysicalParams, a):
    a0, a0p, a1, a1p, a2, a2p = a
    e = complex(p.drive)
    return np.array([
        e - p.gamma0 * a0 - p.chi * a1 * a2,
        np.conj(e) - p.gamma0 * a0p - p.chi * a1p * a2p,
        -p.gamma * a1 + p.chi * a2p * a0,
        -p.gamma * a1p + p.chi * a2 * a0p,
        -p.gamma * a2 + p.chi * a1p * a0,
        -p.gamma * a2p + p.chi * a1 * a0p,
    ])


def step_plusp(s: PhaseState, p: PhysicalParams, noise: NoiseBlock, dt: float,
               scheme: str = SCHEME_MIDPOINT, mid_iters: int = 3) -> PhaseState:
    """One Ito step of the positive-P equations.

    Multiplicative noise amplitude (chi*a0)^(1/2) uses the principal complex
    square root, evaluated at the step start.  The vacuum with no drive is
    exactly absorbing: zero state and zero pump give zero drift and zero
    noise amplitude.
    """
    if s.representation != POSITIVE_P:
        raise ParameterError("step_plusp needs a positive_p state")
    a = s.amplitudes
    amp = np.sqrt(p.chi * a[0])
    amp_p = np.sqrt(p.chi * a[1])
    nvec = np.array([0.0, 0.0, amp * noise.dw1, amp_p * noise.dw1p,
                     amp * noise.dw2, amp_p * noise.dw2p])
    if scheme == SCHEME_MIDPOINT:
        m = a.copy()
        for _ in range(mid_iters):
            m = a + 0.5 * (dt * _pp_drift(p, m) + nvec)
        out = a + dt * _pp_drift(p, m) + nvec
    elif scheme == SCHEME_EULER:
        out = a + dt * _pp_drift(p, a) + nvec
    else:
        raise ParameterError(f"unknown scheme {scheme!r}")
    if not np.all(np.isfinite(out.view(float))):
        raise FloatingPointError(f"positive-P step left the finite domain at state {a}")
    return PhaseState(POSITIVE_P, out)


def _wigner_drift(p: PhysicalParams, a):
    a0, a1, a2 = a
    e = complex(p.drive)
    return np.array([
        e - p.gamma0 * a0 - p.chi * a1 * a2,
        -p.gamma * a1 + p.chi * np.conj(a2) * a0,
        -p.gamma * a2 + p.chi * np.conj(a1) * a0,
    ])


def step_wigner(s: PhaseState, p: PhysicalParams, noise: NoiseBlock, dt: float,
                scheme: str = SCHEME_MIDPOINT, mid_iters: int = 3) -> PhaseState:
    """One Ito step of the truncated-Wigner equations (additive noise)."""
    if s.representation != WIGNER:
        raise ParameterError("step_wigner needs a wigner state")
    a = s.amplitudes
    nvec = np.array([math.sqrt(p.gamma0) * noise.dw0,
                     math.sqrt(p.gamma) * noise.dw1,
                     math.sqrt(p.gamma) * noise.dw2])
    if scheme == SCHEME_MIDPOINT:
        m = a.copy()
        for _ in range(mid_iters):
            m = a + 0.5 * (dt * _wigner_drift(p, m) + nvec)
        out = a + dt * _wigner_drift(p, m) + nvec
    elif scheme == SCHEME_EULER:
        out = a + dt * _wigner_drift(p, a) + nvec
    else:
        raise ParameterError(f"unknown scheme {scheme!r}")
    if not np.all(np.isfinite(out.view(float))):
        raise FloatingPointError(f"wigner step left the finite domain at state {a}")
    return PhaseState(WIGNER, out)


def step_critical(x, eta: float, noise: NoiseBlock | np.ndarray, dt: float):
    """One Euler-Maruyama step of the reduced critical 2-vector dynamics:

        dx_i = (eta*x_i - x_i*(x.x)/2) dtau + dw_i,

    with independent real increments of variance dtau on each component.
    """
    x = np.asarray(x, dtype=float)
    dw = noise.dwx if isinstance(noise, NoiseBlock) else np.asarray(noise, dtype=float)
    r2 = float(x @ x)
    return x + (eta * x - 0.5 * x * r2) * dt + dw


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegratorConfig:
    """Integration and recording protocol (times in scaled units).

    t_burn = None applies the default burn-in 50/min(1-mu, gamma_r, 1); at or
    above threshold an explicit value is required.  record_dt must be an
    integer multiple of dt, and t_seg an integer multiple of record_dt.
    """

    dt: float = 1e-3
    t_burn: float | None = None
    t_record: float = 10000.0
    n_traj: int = 2000
    seed: int = 0
    scheme: str = SCHEME_MIDPOINT
    record_dt: float = 0.05
    batch_size: int = 500
    with_linear_companion: bool = False
    record_noise: bool | None = None
    backend: str = "auto"
    fault_budget: float = 0.01
    mid_iters: int = 3

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.t_record < 0:
            raise ParameterError(f"t_record must be non-negative, got {self.t_record}")
        if self.n_traj < 1:
            raise ParameterError(f"n_traj must be at least 1, got {self.n_traj}")
        if self.scheme not in _SCHEMES:
            raise ParameterError(f"unknown scheme {self.scheme!r}")
        if self.backend not in ("auto", "numba", "numpy"):
            raise ParameterError(f"unknown backend {self.backend!r}")

    @property
    def steps_per_bin(self) -> int:
        n = int(round(self.record_dt / self.dt))
        if n < 1 or abs(n * self.dt - self.record_dt) > 1e-9 * self.record_dt:
            raise ParameterError(
                f"record_dt={self.record_dt} is not an integer multiple of dt={self.dt}"
            )
        return n


@dataclass(frozen=True)
class ObservablesPlan:
    """What to reduce while integrating."""

    t_seg: float = 100.0
    omega_max: float = 10.0
    spectra: bool = True
    output_spectra: bool = False
    moments: bool = True
    triple_kmax: int = 0
    keep_records: bool = False

    def bins_per_seg(self, record_dt: float) -> int:
        n = int(round(self.t_seg / record_dt))
        if n < 2 or abs(n * record_dt - self.t_seg) > 1e-9 * self.t_seg:
            raise ParameterError(
                f"t_seg={self.t_seg} is not an integer multiple of record_dt={record_dt}"
            )
        return n


@dataclass
class TrajectoryRecord:
    """Raw per-trajectory record (kept only for small runs)."""

    times: np.ndarray
    amplitudes: np.ndarray
    linear_amplitudes: np.ndarray | None = None
    noise_sums: np.ndarray | None = None
    faulted: bool = False


@dataclass
class EnsembleResult:
    """Streaming-reduced trajectory ensemble.

    Per-trajectory reductions are stored for every launched trajectory;
    `ok` masks the non-faulted ones and all assembly averages use it.
    """

    representation: str
    params: PhysicalParams
    scaled: ScaledParams
    config: IntegratorConfig
    plan: ObservablesPlan
    gamma_physical: float
    omega: np.ndarray | None = None
    k_idx: np.ndarray | None = None
    spec_traj: dict | None = None
    spec_lin_traj: dict | None = None
    out_traj: dict | None = None
    triple_traj: np.ndarray | None = None
    triple_k: np.ndarray | None = None
    moment_traj: dict | None = None
    n_moment_samples: int = 0
    n_segments: int = 0
    faulted: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    records: list | None = None

    @property
    def ok(self) -> np.ndarray:
        return ~self.faulted

    @property
    def n_ok(self) -> int:
        return int(np.sum(self.ok))

    @property
    def fault_fraction(self) -> float:
        return 1.0 - self.n_ok / max(len(self.faulted), 1)


# ---------------------------------------------------------------------------
# Ensemble runner
# ---------------------------------------------------------------------------

# amplitudes beyond this are treated as divergent even while still finite,
# so that accumulated products cannot overflow before the NaN check trips
_AMPLITUDE_CAP = 1e80


def _bad_lanes(a: np.ndarray, nb: int, n_var: int) -> np.ndarray:
    fv = a.view(float).reshape(2 * n_var, nb)
    return ~np.all(np.isfinite(fv) & (np.abs(fv) < _AMPLITUDE_CAP), axis=0)


def default_burn_in(sp: ScaledParams) -> float:
    """50 relaxation times of the slowest linearized mode, 50/min(1-mu, gamma_r, 1)."""
    if sp.mu >= 1.0:
        raise ParameterError(
            "default burn-in is undefined at or above threshold; pass t_burn explicitly"
        )
    return 50.0 / min(1.0 - sp.mu, sp.gamma_r, 1.0)


def _internal_frame(p: PhysicalParams) -> PhysicalParams:
    """Rescale to gamma = 1 so integration time is the scaled time tau.

    chi/gamma is invariant under this rescale, so the weak-coupling warning
    already issued (or not) for the caller's parameters is not repeated.
    """
    g = p.gamma
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return PhysicalParams(gamma0=p.gamma0 / g, gamma=1.0, chi=p.chi / g, drive=p.drive / g)


def _resolve_backend(name: str) -> str:
    if name == "auto":
        return "numba" if _kernels.HAVE_NUMBA else "numpy"
    if name == "numba" and not _kernels.HAVE_NUMBA:
        raise ParameterError("numba backend requested but numba is not importable")
    return name


def _chunk_plan(n_bins: int, steps_per_bin: int) -> int:
    """Bins per kernel call; fixed by the recording geometry only."""
    return max(1, min(n_bins, _MAX_CHUNK_STEPS // steps_per_bin))


def run_ensemble(p: PhysicalParams, representation: str, cfg: IntegratorConfig,
                 plan: ObservablesPlan | None = None) -> EnsembleResult:
    """Integrate an independent trajectory ensemble and reduce it on the fly.

    Raises FaultBudgetError when more than cfg.fault_budget of the
    trajectories leave the finite domain.
    """
    if representation not in (POSITIVE_P, WIGNER):
        raise ParameterError(f"unknown representation {representation!r}")
    plan = plan or ObservablesPlan()
    sp = derive_scaled(p)
    if cfg.with_linear_companion:
        if representation != POSITIVE_P:
            raise ParameterError("the linear companion is implemented for positive_p only")
        if sp.mu >= 1.0:
            raise ParameterError("the linear companion requires mu < 1")
    backend = _resolve_backend(cfg.backend)
    p_int = _internal_frame(p)
    t_burn = cfg.t_burn if cfg.t_burn is not None else default_burn_in(sp)

    spb = cfg.steps_per_bin
    h = cfg.record_dt
    n_bins_total = int(round(cfg.t_record / h))
    burn_steps = int(round(t_burn / cfg.dt))
    want_spec = plan.spectra and n_bins_total > 0
    bins_per_seg = plan.bins_per_seg(h) if want_spec else 0
    n_seg = n_bins_total // bins_per_seg if want_spec else 0
    record_noise = cfg.record_noise
    if record_noise is None:
        record_noise = representation == WIGNER
    want_out = plan.output_spectra and representation == WIGNER
    if want_out and not record_noise:
        raise ParameterError("output spectra need record_noise=True")

    if want_spec:
        n_fft = bins_per_seg
        k_max = int(math.floor(plan.omega_max * plan.t_seg / (2.0 * math.pi)))
        k_max = min(k_max, n_fft // 2 - 1)
        k_idx = np.arange(k_max + 1)
        omega = 2.0 * math.pi * k_idx / plan.t_seg
    else:
        k_idx = None
        omega = None

    triple_nk = 2 * plan.triple_kmax + 1 if plan.triple_kmax else 0
    if triple_nk and not want_spec:
        raise ParameterError("triple correlations need spectra segmentation")
    if triple_nk:
        triple_k = np.arange(-plan.triple_kmax, plan.triple_kmax + 1)
    else:
        triple_k = None

    n_traj = cfg.n_traj
    batch_size = max(1, min(cfg.batch_size, n_traj))
    batches = [(lo, min(lo + batch_size, n_traj)) for lo in range(0, n_traj, batch_size)]

    result = EnsembleResult(
        representation=representation, params=p, scaled=sp, config=cfg, plan=plan,
        gamma_physical=p.gamma, omega=omega, k_idx=k_idx,
        triple_k=triple_k, n_segments=n_seg,
        faulted=np.zeros(n_traj, dtype=bool),
    )
    n_k = len(k_idx) if want_spec else 0
    want_lin = cfg.with_linear_companion and want_spec
    if want_spec:
        result.spec_traj = {k: np.zeros((n_traj, n_k), dtype=np.complex128) for k in _spec.PRIM_KEYS}
        if want_lin:
            result.spec_lin_traj = {k: np.zeros((n_traj, n_k), dtype=np.complex128) for k in _spec.PRIM_KEYS}
        if want_out:
            result.out_traj = {k: np.zeros((n_traj, n_k), dtype=np.complex128) for k in _spec.OUT_KEYS}
        if triple_nk:
            result.triple_traj = np.zeros((n_traj, triple_nk, triple_nk), dtype=np.complex128)
    mom_keys = PP_MOMENT_KEYS if representation == POSITIVE_P else W_MOMENT_KEYS
    if plan.moments:
        result.moment_traj = {k: np.zeros(n_traj, dtype=np.complex128) for k in mom_keys}
    result.n_moment_samples = n_bins_total * spb if plan.moments else 0
    if plan.keep_records:
        result.records = [None] * n_traj

    def do_batch(lo_hi):
        lo, hi = lo_hi
        _run_batch(result, p_int, representation, cfg, plan, backend, lo, hi,
                   burn_steps, n_bins_total, bins_per_seg, n_seg, spb,
                   record_noise, want_spec, want_lin, want_out, triple_nk)

    workers = int(os.environ.get("NOPO_THREADS", "1") or "1")
    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(do_batch, batches))
    else:
        for b in batches:
            do_batch(b)

    if result.fault_fraction > cfg.fault_budget and n_traj > 0:
        raise FaultBudgetError(
            f"{np.sum(result.faulted)} of {n_traj} trajectories diverged "
            f"(fault fraction {result.fault_fraction:.3%} > budget {cfg.fault_budget:.1%})"
        )
    return result


def _run_batch(result, p_int, representation, cfg, plan, backend, lo, hi,
               burn_steps, n_bins_total, bins_per_seg, n_seg, spb,
               record_noise, want_spec, want_lin, want_out, triple_nk):
    nb = hi - lo
    dt = cfg.dt
    h = cfg.record_dt
    sp = result.scaled
    scheme = _SCHEMES[cfg.scheme]
    rngs = [trajectory_rng(cfg.seed, i) for i in range(lo, hi)]
    state0 = PhaseState.from_classical(p_int, representation).amplitudes
    n_var = 6 if representation == POSITIVE_P else 3
    a = np.repeat(state0[:, None], nb, axis=1).astype(np.complex128)
    faulted = np.zeros(nb, dtype=bool)

    if representation == POSITIVE_P:
        n_ch = 4
        lin = np.zeros((4, nb), dtype=np.complex128)
        a0bar = complex(p_int.drive) / p_int.gamma0
        s_lin = complex(np.sqrt(p_int.chi * a0bar))
        s_linp = complex(np.sqrt(p_int.chi * np.conj(a0bar)))
        n_noise_ch = 4
    else:
        n_ch = 6
        lin = np.zeros((0, 0), dtype=np.complex128)
        s_lin = s_linp = 0.0 + 0.0j
        n_noise_ch = 2

    use_lin = bool(cfg.with_linear_companion)
    want_mom = bool(plan.moments)
    mom = np.zeros((len(PP_MOMENT_KEYS if representation == POSITIVE_P else W_MOMENT_KEYS), nb),
                   dtype=np.complex128)

    if backend == "numba":
        pp_fn, w_fn = _kernels.pp_chunk_numba, _kernels.wigner_chunk_numba
    else:
        pp_fn, w_fn = _kernels.pp_chunk_numpy, _kernels.wigner_chunk_numpy

    sqrt_dt = math.sqrt(dt)
    dummy_noise = np.zeros((1, n_noise_ch, nb), dtype=np.complex128)

    def draw(n_steps):
        normals = np.empty((n_steps, n_ch, nb))
        for j, rng in enumerate(rngs):
            normals[:, :, j] = rng.standard_normal((n_steps, n_ch))
        normals *= sqrt_dt
        return normals

    def advance(n_bins, rec, noise_rec, accumulate_mom, rec_lin=None):
        """Advance n_bins record bins, filling rec (n_bins, n_var, nb) with bin sums."""
        done = 0
        while done < n_bins:
            nb_chunk = min(_chunk_plan(n_bins - done, spb), n_bins - done)
            n_steps = nb_chunk * spb
            normals = draw(n_steps)
            rec_view = rec[done:done + nb_chunk]
            nr_view = noise_rec[done:done + nb_chunk] if noise_rec is not None else dummy_noise
            if representation == POSITIVE_P:
                rl_view = rec_lin[done:done + nb_chunk] if rec_lin is not None else np.zeros((nb_chunk, 4, nb), dtype=np.complex128)
                pp_fn(a, lin, use_lin, complex(p_int.drive), p_int.gamma0, p_int.gamma,
                      p_int.chi, s_lin, s_linp, dt, normals, scheme, cfg.mid_iters, spb,
                      rec_view, rl_view, nr_view, noise_rec is not None, mom, accumulate_mom)
            else:
                w_fn(a, complex(p_int.drive), p_int.gamma0, p_int.gamma, p_int.chi,
                     dt, normals, scheme, cfg.mid_iters, spb,
                     rec_view, nr_view, noise_rec is not None, mom, accumulate_mom)
            done += nb_chunk
            bad = _bad_lanes(a, nb, n_var)
            if bad.any():
                newly = bad & ~faulted
                if newly.any():
                    faulted[newly] = True
                a[:, bad] = 0.0
                if use_lin:
                    lin[:, bad] = 0.0

    # burn-in: reuse a throwaway record buffer, no reductions
    if burn_steps:
        burn_bins = burn_steps // spb
        tail = burn_steps - burn_bins * spb
        if burn_bins:
            scratch = np.zeros((min(burn_bins, _MAX_CHUNK_STEPS // spb + 1), n_var, nb), dtype=np.complex128)
            done = 0
            while done < burn_bins:
                nb_chunk = min(scratch.shape[0], burn_bins - done)
                scratch[:nb_chunk] = 0.0
                normals = draw(nb_chunk * spb)
                if representation == POSITIVE_P:
                    rl = np.zeros((nb_chunk, 4, nb), dtype=np.complex128)
                    pp_fn(a, lin, use_lin, complex(p_int.drive), p_int.gamma0, p_int.gamma,
                          p_int.chi, s_lin, s_linp, dt, normals, scheme, cfg.mid_iters, spb,
                          scratch[:nb_chunk], rl, dummy_noise, False, mom, False)
                else:
                    w_fn(a, complex(p_int.drive), p_int.gamma0, p_int.gamma, p_int.chi,
                         dt, normals, scheme, cfg.mid_iters, spb,
                         scratch[:nb_chunk], dummy_noise, False, mom, False)
                done += nb_chunk
                bad = _bad_lanes(a, nb, n_var)
                if bad.any():
                    faulted[bad] = True
                    a[:, bad] = 0.0
                    if use_lin:
                        lin[:, bad] = 0.0
        if tail:
            normals = draw(tail)
            scratch = np.zeros((1, n_var, nb), dtype=np.complex128)
            if representation == POSITIVE_P:
                rl = np.zeros((1, 4, nb), dtype=np.complex128)
                pp_fn(a, lin, use_lin, complex(p_int.drive), p_int.gamma0, p_int.gamma,
                      p_int.chi, s_lin, s_linp, dt, normals, scheme, cfg.mid_iters, tail,
                      scratch, rl, dummy_noise, False, mom, False)
            else:
                w_fn(a, complex(p_int.drive), p_int.gamma0, p_int.gamma, p_int.chi,
                     dt, normals, scheme, cfg.mid_iters, tail,
                     scratch, dummy_noise, False, mom, False)

    # recording
    keep = plan.keep_records
    kept_amp = [] if keep else None
    kept_lin = [] if keep and use_lin else None
    kept_noise = [] if keep and record_noise else None

    n_k = len(result.k_idx) if want_spec else 0
    g = sp.g
    gamma_r = sp.gamma_r

    def process_segment(seg_rec, seg_lin, seg_noise):
        amps = seg_rec / spb  # bin averages
        if keep:
            kept_amp.append(amps.copy())
            if kept_lin is not None:
                kept_lin.append(seg_lin / spb)
            if kept_noise is not None:
                kept_noise.append(seg_noise.copy())
        if not want_spec:
            return
        prims = _spec.segment_signal_primitives(amps, representation, result.k_idx, h)
        for key, val in prims.items():
            result.spec_traj[key][lo:hi] += val.T
        if want_lin:
            lin_amps = seg_lin / spb
            prims_l = _spec.segment_signal_primitives_linear(lin_amps, result.k_idx, h)
            for key, val in prims_l.items():
                result.spec_lin_traj[key][lo:hi] += val.T
        if want_out:
            outs = _spec.segment_output_primitives(amps, seg_noise, representation,
                                                   result.k_idx, h, p_int.gamma)
            for key, val in outs.items():
                result.out_traj[key][lo:hi] += val.T
        if triple_nk:
            trip = _spec.segment_triple_products(amps, representation, result.triple_k,
                                                 h, g, gamma_r)
            result.triple_traj[lo:hi] += np.moveaxis(trip, 2, 0)

    if n_bins_total:
        seg_rec = np.zeros((bins_per_seg if want_spec else n_bins_total, n_var, nb), dtype=np.complex128)
        seg_lin = np.zeros_like(seg_rec[:, :4]) if use_lin else None
        seg_noise = np.zeros((seg_rec.shape[0], n_noise_ch, nb), dtype=np.complex128) if record_noise else None
        bins_done = 0
        for _ in range(max(n_seg, 0) if want_spec else 1):
            seg_rec[:] = 0.0
            if seg_lin is not None:
                seg_lin[:] = 0.0
            if seg_noise is not None:
                seg_noise[:] = 0.0
            advance(seg_rec.shape[0], seg_rec, seg_noise, want_mom, seg_lin)
            bins_done += seg_rec.shape[0]
            process_segment(seg_rec, seg_lin, seg_noise)
        # leftover bins beyond whole segments still feed the moment sums
        leftover = n_bins_total - bins_done
        if leftover > 0:
            seg_rec = np.zeros((leftover, n_var, nb), dtype=np.complex128)
            seg_lin2 = np.zeros((leftover, 4, nb), dtype=np.complex128) if use_lin else None
            seg_noise2 = np.zeros((leftover, n_noise_ch, nb), dtype=np.complex128) if record_noise else None
            advance(leftover, seg_rec, seg_noise2, want_mom, seg_lin2)
            if keep:
                kept_amp.append(seg_rec / spb)
                if kept_lin is not None:
                    kept_lin.append(seg_lin2 / spb)
                if kept_noise is not None:
                    kept_noise.append(seg_noise2.copy())

    # per-trajectory normalization and storage
    if want_spec and n_seg > 0:
        for key in result.spec_traj:
            result.spec_traj[key][lo:hi] /= n_seg
        if want_lin:
            for key in result.spec_lin_traj:
                result.spec_lin_traj[key][lo:hi] /= n_seg
        if want_out:
            for key in result.out_traj:
                result.out_traj[key][lo:hi] /= n_seg
        if triple_nk:
            result.triple_traj[lo:hi] /= n_seg
    if want_mom and result.n_moment_samples:
        keys = PP_MOMENT_KEYS if representation == POSITIVE_P else W_MOMENT_KEYS
        for i, key in enumerate(keys):
            result.moment_traj[key][lo:hi] = mom[i] / result.n_moment_samples
    result.faulted[lo:hi] = faulted

    if keep:
        t0 = (cfg.t_burn if cfg.t_burn is not None else default_burn_in(sp))
        for j in range(nb):
            amps = np.concatenate([blk[:, :, j] for blk in kept_amp], axis=0) if kept_amp else np.zeros((0, n_var))
            times = t0 + h * (np.arange(amps.shape[0]) + 0.5)
            rec = TrajectoryRecord(
                times=times,
                amplitudes=amps,
                linear_amplitudes=(np.concatenate([blk[:, :, j] for blk in kept_lin], axis=0)
                                   if kept_lin is not None else None),
                noise_sums=(np.concatenate([blk[:, :, j] for blk in kept_noise], axis=0)
                            if kept_noise is not None else None),
                faulted=bool(faulted[j]),
            )
            result.records[lo + j] = rec


# ---------------------------------------------------------------------------
# Reduced critical ensemble
# ---------------------------------------------------------------------------

@dataclass
class CriticalEnsembleResult:
    eta: float
    config: IntegratorConfig
    r2_traj: np.ndarray
    faulted: np.ndarray

    @property
    def r2_mean(self) -> float:
        return float(np.mean(self.r2_traj[~self.faulted]))

    @property
    def r2_se(self) -> float:
        vals = self.r2_traj[~self.faulted]
        return float(np.std(vals, ddof=1) / math.sqrt(len(vals)))


def run_critical_ensemble(eta: float, cfg: IntegratorConfig) -> CriticalEnsembleResult:
    """Ensemble of the reduced critical SDE; returns <x+^2 + x-^2> per trajectory.

    Times are in critical units; the default burn-in is 30 critical times.
    """
    backend = _resolve_backend(cfg.backend)
    fn = _kernels.critical_chunk_numba if backend == "numba" else _kernels.critical_chunk_numpy
    dt = cfg.dt
    t_burn = cfg.t_burn if cfg.t_burn is not None else 30.0
    burn_steps = int(round(t_burn / dt))
    rec_steps = int(round(cfg.t_record / dt))
    n_traj = cfg.n_traj
    batch_size = max(1, min(cfg.batch_size, n_traj))
    r2 = np.zeros(n_traj)
    faulted = np.zeros(n_traj, dtype=bool)
    sqrt_dt = math.sqrt(dt)
    chunk = _MAX_CHUNK_STEPS

    for lo in range(0, n_traj, batch_size):
        hi = min(lo + batch_size, n_traj)
        nb = hi - lo
        rngs = [trajectory_rng(cfg.seed, i) for i in range(lo, hi)]
        x = np.zeros((2, nb))
        mom = np.zeros((1, nb))

        def draw(n_steps):
            normals = np.empty((n_steps, 2, nb))
            for j, rng in enumerate(rngs):
                normals[:, :, j] = rng.standard_normal((n_steps, 2))
            normals *= sqrt_dt
            return normals

        for start, total, acc in ((0, burn_steps, False), (0, rec_steps, True)):
            done = 0
            while done < total:
                n = min(chunk, total - done)
                fn(x, eta, dt, draw(n), mom, acc)
                done += n
        bad = ~np.isfinite(x).all(axis=0)
        faulted[lo:hi] = bad
        r2[lo:hi] = mom[0] / max(rec_steps, 1)

    if np.mean(faulted) > cfg.fault_budget and n_traj > 0:
        raise FaultBudgetError(f"{np.sum(faulted)} of {n_traj} critical trajectories diverged")
    return CriticalEnsembleResult(eta=eta, config=cfg, r2_traj=r2, faulted=faulted)
