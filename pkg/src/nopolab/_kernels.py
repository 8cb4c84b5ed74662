"""Inner integration loops for the trajectory engine.

Two interchangeable backends advance a batch of trajectories through a chunk
of Ito steps while accumulating bin-averaged records, bin-summed noise and
running moment sums:

* a numba-jitted scalar loop (fast path), and
* a vectorized NumPy mirror with the same operation order (reference path,
  used when numba is unavailable and in agreement tests).

Both consume pre-generated standard-normal draws already scaled by sqrt(dt),
laid out as (n_steps, n_channels, batch).  Channel conventions:

positive-P  (4): u, v, u', v'   ->  dW1 = (u+iv)/sqrt2, dW2 = (u-iv)/sqrt2,
                                    dW1+ = (u'+iv')/sqrt2, dW2+ = (u'-iv')/sqrt2
wigner      (6): u0,v0,u1,v1,u2,v2 -> dWj = (uj+i*vj)/sqrt2
critical    (2): two independent real increments of variance dt

The scheme flag selects Euler-Maruyama (0) or the semi-implicit drift
midpoint (1): the midpoint state is iterated with half the drift plus half
the (start-state) noise term, so the noise coefficient keeps its Ito
placement.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap

INV_SQRT2 = 1.0 / np.sqrt(2.0)

EULER = 0
MIDPOINT = 1


# ---------------------------------------------------------------------------
# positive-P
# ---------------------------------------------------------------------------

@njit(cache=True)
def pp_chunk_numba(a, lin, use_lin, drive, g0, gam, chi, s_lin, s_linp, dt,
                   normals, scheme, mid_iters, steps_per_bin, rec, rec_lin,
                   noise_rec, want_noise, mom, want_mom):
    driv_c = np.conj(drive)
    c = s_lin * s_lin    # frozen chi*a0bar of the linear companion
    cp = s_linp * s_linp
    n_steps = normals.shape[0]
    nb = a.shape[1]
    for k in range(n_steps):
        b = k // steps_per_bin
        for j in range(nb):
            u = normals[k, 0, j]
            v = normals[k, 1, j]
            up = normals[k, 2, j]
            vp = normals[k, 3, j]
            dw1 = (u + 1j * v) * INV_SQRT2
            dw2 = (u - 1j * v) * INV_SQRT2
            dw1p = (up + 1j * vp) * INV_SQRT2
            dw2p = (up - 1j * vp) * INV_SQRT2

            a0 = a[0, j]
            a0p = a[1, j]
            a1 = a[2, j]
            a1p = a[3, j]
            a2 = a[4, j]
            a2p = a[5, j]

            s = np.sqrt(chi * a0)
            sp = np.sqrt(chi * a0p)
            n1 = s * dw1
            n2 = s * dw2
            n1p = sp * dw1p
            n2p = sp * dw2p

            if scheme == MIDPOINT:
                m0, m0p, m1, m1p, m2, m2p = a0, a0p, a1, a1p, a2, a2p
                for _ in range(mid_iters):
                    d0 = drive - g0 * m0 - chi * m1 * m2
                    d0p = driv_c - g0 * m0p - chi * m1p * m2p
                    d1 = -gam * m1 + chi * m2p * m0
                    d1p = -gam * m1p + chi * m2 * m0p
                    d2 = -gam * m2 + chi * m1p * m0
                    d2p = -gam * m2p + chi * m1 * m0p
                    m0 = a0 + 0.5 * dt * d0
                    m0p = a0p + 0.5 * dt * d0p
                    m1 = a1 + 0.5 * (dt * d1 + n1)
                    m1p = a1p + 0.5 * (dt * d1p + n1p)
                    m2 = a2 + 0.5 * (dt * d2 + n2)
                    m2p = a2p + 0.5 * (dt * d2p + n2p)
                d0 = drive - g0 * m0 - chi * m1 * m2
                d0p = driv_c - g0 * m0p - chi * m1p * m2p
                d1 = -gam * m1 + chi * m2p * m0
                d1p = -gam * m1p + chi * m2 * m0p
                d2 = -gam * m2 + chi * m1p * m0
                d2p = -gam * m2p + chi * m1 * m0p
            else:
                d0 = drive - g0 * a0 - chi * a1 * a2
                d0p = driv_c - g0 * a0p - chi * a1p * a2p
                d1 = -gam * a1 + chi * a2p * a0
                d1p = -gam * a1p + chi * a2 * a0p
                d2 = -gam * a2 + chi * a1p * a0
                d2p = -gam * a2p + chi * a1 * a0p

            a0 = a0 + dt * d0
            a0p = a0p + dt * d0p
            a1 = a1 + dt * d1 + n1
            a1p = a1p + dt * d1p + n1p
            a2 = a2 + dt * d2 + n2
            a2p = a2p + dt * d2p + n2p

            a[0, j] = a0
            a[1, j] = a0p
            a[2, j] = a1
            a[3, j] = a1p
            a[4, j] = a2
            a[5, j] = a2p

            rec[b, 0, j] += a0
            rec[b, 1, j] += a0p
            rec[b, 2, j] += a1
            rec[b, 3, j] += a1p
            rec[b, 4, j] += a2
            rec[b, 5, j] += a2p

            if want_noise:
                noise_rec[b, 0, j] += dw1
                noise_rec[b, 1, j] += dw2
                noise_rec[b, 2, j] += dw1p
                noise_rec[b, 3, j] += dw2p

            if use_lin:
                l1 = lin[0, j]
                l1p = lin[1, j]
                l2 = lin[2, j]
                l2p = lin[3, j]
                if scheme == MIDPOINT:
                    q1, q1p, q2, q2p = l1, l1p, l2, l2p
                    for _ in range(mid_iters):
                        e1 = -gam * q1 + c * q2p
                        e1p = -gam * q1p + cp * q2
                        e2 = -gam * q2 + c * q1p
                        e2p = -gam * q2p + cp * q1
                        q1 = l1 + 0.5 * (dt * e1 + s_lin * dw1)
                        q1p = l1p + 0.5 * (dt * e1p + s_linp * dw1p)
                        q2 = l2 + 0.5 * (dt * e2 + s_lin * dw2)
                        q2p = l2p + 0.5 * (dt * e2p + s_linp * dw2p)
                    e1 = -gam * q1 + c * q2p
                    e1p = -gam * q1p + cp * q2
                    e2 = -gam * q2 + c * q1p
                    e2p = -gam * q2p + cp * q1
                else:
                    e1 = -gam * l1 + c * l2p
                    e1p = -gam * l1p + cp * l2
                    e2 = -gam * l2 + c * l1p
                    e2p = -gam * l2p + cp * l1
                l1 = l1 + dt * e1 + s_lin * dw1
                l1p = l1p + dt * e1p + s_linp * dw1p
                l2 = l2 + dt * e2 + s_lin * dw2
                l2p = l2p + dt * e2p + s_linp * dw2p
                lin[0, j] = l1
                lin[1, j] = l1p
                lin[2, j] = l2
                lin[3, j] = l2p
                rec_lin[b, 0, j] += l1
                rec_lin[b, 1, j] += l1p
                rec_lin[b, 2, j] += l2
                rec_lin[b, 3, j] += l2p

            if want_mom:
                mom[0, j] += a0
                mom[1, j] += a0p
                mom[2, j] += a1
                mom[3, j] += a1p
                mom[4, j] += a2
                mom[5, j] += a2p
                xq = a1 + a2p
                xqp = a2 + a1p
                yq = -1j * (a1 - a2p)
                yqp = -1j * (a2 - a1p)
                y0q = -1j * (a0 - a0p)
                mom[6, j] += xq * xqp
                mom[7, j] += yq * yqp
                mom[8, j] += xq * yqp * y0q


def pp_chunk_numpy(a, lin, use_lin, drive, g0, gam, chi, s_lin, s_linp, dt,
                   normals, scheme, mid_iters, steps_per_bin, rec, rec_lin,
                   noise_rec, want_noise, mom, want_mom):
    """Vectorized mirror of pp_chunk_numba (same operation order per step)."""
    driv_c = np.conj(drive)
    c = s_lin * s_lin
    cp = s_linp * s_linp
    n_steps = normals.shape[0]
    for k in range(n_steps):
        b = k // steps_per_bin
        u, v, up, vp = normals[k, 0], normals[k, 1], normals[k, 2], normals[k, 3]
        dw1 = (u + 1j * v) * INV_SQRT2
        dw2 = (u - 1j * v) * INV_SQRT2
        dw1p = (up + 1j * vp) * INV_SQRT2
        dw2p = (up - 1j * vp) * INV_SQRT2

        a0, a0p, a1, a1p, a2, a2p = a

        s = np.sqrt(chi * a0)
        sp = np.sqrt(chi * a0p)
        n1 = s * dw1
        n2 = s * dw2
        n1p = sp * dw1p
        n2p = sp * dw2p

        if scheme == MIDPOINT:
            m0, m0p, m1, m1p, m2, m2p = a0, a0p, a1, a1p, a2, a2p
            for _ in range(mid_iters):
                d0 = drive - g0 * m0 - chi * m1 * m2
                d0p = driv_c - g0 * m0p - chi * m1p * m2p
                d1 = -gam * m1 + chi * m2p * m0
                d1p = -gam * m1p + chi * m2 * m0p
                d2 = -gam * m2 + chi * m1p * m0
                d2p = -gam * m2p + chi * m1 * m0p
                m0 = a0 + 0.5 * dt * d0
                m0p = a0p + 0.5 * dt * d0p
                m1 = a1 + 0.5 * (dt * d1 + n1)
                m1p = a1p + 0.5 * (dt * d1p + n1p)
                m2 = a2 + 0.5 * (dt * d2 + n2)
                m2p = a2p + 0.5 * (dt * d2p + n2p)
            d0 = drive - g0 * m0 - chi * m1 * m2
            d0p = driv_c - g0 * m0p - chi * m1p * m2p
            d1 = -gam * m1 + chi * m2p * m0
            d1p = -gam * m1p + chi * m2 * m0p
            d2 = -gam * m2 + chi * m1p * m0
            d2p = -gam * m2p + chi * m1 * m0p
        else:
            d0 = drive - g0 * a0 - chi * a1 * a2
            d0p = driv_c - g0 * a0p - chi * a1p * a2p
            d1 = -gam * a1 + chi * a2p * a0
            d1p = -gam * a1p + chi * a2 * a0p
            d2 = -gam * a2 + chi * a1p * a0
            d2p = -gam * a2p + chi * a1 * a0p

        a[0] = a0 + dt * d0
        a[1] = a0p + dt * d0p
        a[2] = a1 + dt * d1 + n1
        a[3] = a1p + dt * d1p + n1p
        a[4] = a2 + dt * d2 + n2
        a[5] = a2p + dt * d2p + n2p

        rec[b] += a

        if want_noise:
            noise_rec[b, 0] += dw1
            noise_rec[b, 1] += dw2
            noise_rec[b, 2] += dw1p
            noise_rec[b, 3] += dw2p

        if use_lin:
            l1, l1p, l2, l2p = lin
            if scheme == MIDPOINT:
                q1, q1p, q2, q2p = l1, l1p, l2, l2p
                for _ in range(mid_iters):
                    e1 = -gam * q1 + c * q2p
                    e1p = -gam * q1p + cp * q2
                    e2 = -gam * q2 + c * q1p
                    e2p = -gam * q2p + cp * q1
                    q1 = l1 + 0.5 * (dt * e1 + s_lin * dw1)
                    q1p = l1p + 0.5 * (dt * e1p + s_linp * dw1p)
                    q2 = l2 + 0.5 * (dt * e2 + s_lin * dw2)
                    q2p = l2p + 0.5 * (dt * e2p + s_linp * dw2p)
                e1 = -gam * q1 + c * q2p
                e1p = -gam * q1p + cp * q2
                e2 = -gam * q2 + c * q1p
                e2p = -gam * q2p + cp * q1
            else:
                e1 = -gam * l1 + c * l2p
                e1p = -gam * l1p + cp * l2
                e2 = -gam * l2 + c * l1p
                e2p = -gam * l2p + cp * l1
            lin[0] = l1 + dt * e1 + s_lin * dw1
            lin[1] = l1p + dt * e1p + s_linp * dw1p
            lin[2] = l2 + dt * e2 + s_lin * dw2
            lin[3] = l2p + dt * e2p + s_linp * dw2p
            rec_lin[b] += lin

        if want_mom:
            mom[0:6] += a
            a0, a0p, a1, a1p, a2, a2p = a
            xq = a1 + a2p
            xqp = a2 + a1p
            yq = -1j * (a1 - a2p)
            yqp = -1j * (a2 - a1p)
            y0q = -1j * (a0 - a0p)
            mom[6] += xq * xqp
            mom[7] += yq * yqp
            mom[8] += xq * yqp * y0q


# ---------------------------------------------------------------------------
# truncated Wigner
# ---------------------------------------------------------------------------

@njit(cache=True)
def wigner_chunk_numba(a, drive, g0, gam, chi, dt, normals, scheme, mid_iters,
                       steps_per_bin, rec, noise_rec, want_noise, mom, want_mom):
    sg0 = np.sqrt(g0)
    sg = np.sqrt(gam)
    n_steps = normals.shape[0]
    nb = a.shape[1]
    for k in range(n_steps):
        b = k // steps_per_bin
        for j in range(nb):
            dw0 = (normals[k, 0, j] + 1j * normals[k, 1, j]) * INV_SQRT2
            dw1 = (normals[k, 2, j] + 1j * normals[k, 3, j]) * INV_SQRT2
            dw2 = (normals[k, 4, j] + 1j * normals[k, 5, j]) * INV_SQRT2

            a0 = a[0, j]
            a1 = a[1, j]
            a2 = a[2, j]

            if scheme == MIDPOINT:
                m0, m1, m2 = a0, a1, a2
                for _ in range(mid_iters):
                    d0 = drive - g0 * m0 - chi * m1 * m2
                    d1 = -gam * m1 + chi * np.conj(m2) * m0
                    d2 = -gam * m2 + chi * np.conj(m1) * m0
                    m0 = a0 + 0.5 * (dt * d0 + sg0 * dw0)
                    m1 = a1 + 0.5 * (dt * d1 + sg * dw1)
                    m2 = a2 + 0.5 * (dt * d2 + sg * dw2)
                d0 = drive - g0 * m0 - chi * m1 * m2
                d1 = -gam * m1 + chi * np.conj(m2) * m0
                d2 = -gam * m2 + chi * np.conj(m1) * m0
            else:
                d0 = drive - g0 * a0 - chi * a1 * a2
                d1 = -gam * a1 + chi * np.conj(a2) * a0
                d2 = -gam * a2 + chi * np.conj(a1) * a0

            a0 = a0 + dt * d0 + sg0 * dw0
            a1 = a1 + dt * d1 + sg * dw1
            a2 = a2 + dt * d2 + sg * dw2

            a[0, j] = a0
            a[1, j] = a1
            a[2, j] = a2

            rec[b, 0, j] += a0
            rec[b, 1, j] += a1
            rec[b, 2, j] += a2

            if want_noise:
                noise_rec[b, 0, j] += dw1
                noise_rec[b, 1, j] += dw2

            if want_mom:
                mom[0, j] += a0
                mom[1, j] += a1
                mom[2, j] += a2
                xq = a1 + np.conj(a2)
                yq = -1j * (a1 - np.conj(a2))
                y0q = -1j * (a0 - np.conj(a0))
                mom[3, j] += xq * np.conj(xq)
                mom[4, j] += yq * np.conj(yq)
                mom[5, j] += xq * np.conj(yq) * y0q


def wigner_chunk_numpy(a, drive, g0, gam, chi, dt, normals, scheme, mid_iters,
                       steps_per_bin, rec, noise_rec, want_noise, mom, want_mom):
    """Vectorized mirror of wigner_chunk_numba."""
    sg0 = np.sqrt(g0)
    sg = np.sqrt(gam)
    n_steps = normals.shape[0]
    for k in range(n_steps):
        b = k // steps_per_bin
        dw0 = (normals[k, 0] + 1j * normals[k, 1]) * INV_SQRT2
        dw1 = (normals[k, 2] + 1j * normals[k, 3]) * INV_SQRT2
        dw2 = (normals[k, 4] + 1j * normals[k, 5]) * INV_SQRT2

        a0, a1, a2 = a
        if scheme == MIDPOINT:
            m0, m1, m2 = a0, a1, a2
            for _ in range(mid_iters):
                d0 = drive - g0 * m0 - chi * m1 * m2
                d1 = -gam * m1 + chi * np.conj(m2) * m0
                d2 = -gam * m2 + chi * np.conj(m1) * m0
                m0 = a0 + 0.5 * (dt * d0 + sg0 * dw0)
                m1 = a1 + 0.5 * (dt * d1 + sg * dw1)
                m2 = a2 + 0.5 * (dt * d2 + sg * dw2)
            d0 = drive - g0 * m0 - chi * m1 * m2
            d1 = -gam * m1 + chi * np.conj(m2) * m0
            d2 = -gam * m2 + chi * np.conj(m1) * m0
        else:
            d0 = drive - g0 * a0 - chi * a1 * a2
            d1 = -gam * a1 + chi * np.conj(a2) * a0
            d2 = -gam * a2 + chi * np.conj(a1) * a0

        a[0] = a0 + dt * d0 + sg0 * dw0
        a[1] = a1 + dt * d1 + sg * dw1
        a[2] = a2 + dt * d2 + sg * dw2

        rec[b] += a
        if want_noise:
            noise_rec[b, 0] += dw1
            noise_rec[b, 1] += dw2
        if want_mom:
            mom[0:3] += a
            a0, a1, a2 = a
            xq = a1 + np.conj(a2)
            yq = -1j * (a1 - np.conj(a2))
            y0q = -1j * (a0 - np.conj(a0))
            mom[3] += xq * np.conj(xq)
            mom[4] += yq * np.conj(yq)
            mom[5] += xq * np.conj(yq) * y0q


# ---------------------------------------------------------------------------
# reduced critical dynamics
# ---------------------------------------------------------------------------

@njit(cache=True)
def critical_chunk_numba(x, eta, dt, normals, mom, want_mom):
    n_steps = normals.shape[0]
    nb = x.shape[1]
    for k in range(n_steps):
        for j in range(nb):
            xp = x[0, j]
            xm = x[1, j]
            r2 = xp * xp + xm * xm
            x[0, j] = xp + (eta * xp - 0.5 * xp * r2) * dt + normals[k, 0, j]
            x[1, j] = xm + (eta * xm - 0.5 * xm * r2) * dt + normals[k, 1, j]
            if want_mom:
                mom[0, j] += x[0, j] * x[0, j] + x[1, j] * x[1, j]


def critical_chunk_numpy(x, eta, dt, normals, mom, want_mom):
    """Vectorized mirror of critical_chunk_numba (Euler-Maruyama)."""
    n_steps = normals.shape[0]
    for k in range(n_steps):
        xp, xm = x[0], x[1]
        r2 = xp * xp + xm * xm
        x[0] = xp + (eta * xp - 0.5 * xp * r2) * dt + normals[k, 0]
        x[1] = xm + (eta * xm - 0.5 * xm * r2) * dt + normals[k, 1]
        if want_mom:
            mom[0] += x[0] * x[0] + x[1] * x[1]
