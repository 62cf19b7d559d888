"""Pure numpy implementations of the compiled kernels.

Same signatures, layout conventions and step-control logic as
``_kernels.pyx``; used when the extension is not built.
"""
from functools import lru_cache

import numpy as np

_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@lru_cache(maxsize=16)
def _site_tables(n_spins):
    d = 1 << n_spins
    idx = np.arange(d)
    masks = [1 << k for k in range(n_spins)]
    clear = [idx[(idx & m) == 0] for m in masks]
    ndown = np.array([bin(i).count("1") for i in range(d)])
    return d, masks, clear, ndown


def _collective_parts(X, n_spins):
    d, masks, clear, _ = _site_tables(n_spins)

    def left_raise(M):
        out = np.zeros_like(M)
        for m, rows in zip(masks, clear):
            out[rows] += M[rows | m]
        return out

    def left_lower(M):
        out = np.zeros_like(M)
        for m, rows in zip(masks, clear):
            out[rows | m] += M[rows]
        return out

    def right_lower(M):
        out = np.zeros_like(M)
        for m, cols in zip(masks, clear):
            out[:, cols] += M[:, cols | m]
        return out

    def right_raise(M):
        out = np.zeros_like(M)
        for m, cols in zip(masks, clear):
            out[:, cols | m] += M[:, cols]
        return out

    return left_raise, left_lower, right_raise, right_lower


def lindblad_apply(n_spins, a, b, alpha, x):
    """Apply the generator to a column-stacked density matrix ``x``."""
    x = np.asarray(x, dtype=np.complex128)
    d, masks, clear, ndown = _site_tables(n_spins)
    if x.shape != (d * d,):
        raise ValueError("vector length does not match n_spins")
    X = x.reshape(d, d, order="F")

    nr = ndown[:, None]
    nc = ndown[None, :]
    local = -(b * (nr + nc) + a * (2 * n_spins - nr - nc)) * X
    for m, sel in zip(masks, clear):
        both_up = np.ix_(sel, sel)
        both_down = np.ix_(sel | m, sel | m)
        local[both_up] += 2.0 * b * X[both_down]
        local[both_down] += 2.0 * a * X[both_up]
    out = (1.0 - alpha) * local

    if alpha != 0.0:
        lr, ll, rr, rl = _collective_parts(X, n_spins)
        ex = lr(X)
        lx = ll(X)
        coll = b * (2.0 * rl(ex) - ll(ex) - rr(rl(X)))
        coll += a * (2.0 * rr(lx) - lr(lx) - rl(rr(X)))
        out = out + alpha * coll
    return out.reshape(-1, order="F")


def _integrate(apply, y0, times, rtol, atol, h0, max_step, max_steps):
    y = np.array(y0, dtype=np.complex128)
    times = np.asarray(times, dtype=float)
    out = np.zeros((len(times), y.size), dtype=np.complex128)
    if len(times) == 0:
        return out, 0, 0, 0
    out[0] = y
    t = times[0]
    h = h0
    k = np.empty((7, y.size), dtype=np.complex128)
    k[0] = apply(y)
    nsteps = nrej = 0
    for idx in range(1, len(times)):
        target = times[idx]
        while t < target:
            hstep = min(h, max_step)
            clipped = hstep >= target - t
            if clipped:
                hstep = target - t
            for s in range(1, 6):
                k[s] = apply(y + hstep * (np.array(_A[s]) @ k[:s]))
            yn = y + hstep * (_B @ k[:6])
            k[6] = apply(yn)
            ev = hstep * (_E @ k)
            sc = atol + rtol * np.maximum(np.abs(y), np.abs(yn))
            err = np.sqrt(np.mean(np.abs(ev) ** 2 / sc**2))
            if err <= 1.0:
                t = target if clipped else t + hstep
                y = yn
                k[0] = k[6]
                nsteps += 1
                fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err**-0.2))
                h = max(h, hstep * fac) if clipped else hstep * fac
            else:
                h = hstep * max(0.2, 0.9 * err**-0.2)
                nrej += 1
                if h < 1e-14 * max(1.0, abs(t)):
                    return out, nsteps, nrej, 2
            if nsteps + nrej > max_steps:
                return out, nsteps, nrej, 1
        out[idx] = y
    return out, nsteps, nrej, 0


def integrate_dense(L, y0, times, rtol, atol, h0, max_step, max_steps):
    """Integrate dy/dt = L y, returning ``(samples, n_acc, n_rej, status)``."""
    L = np.ascontiguousarray(L, dtype=np.complex128)
    if L.shape[0] != L.shape[1] or L.shape[1] != len(y0):
        raise ValueError("dimension mismatch between generator and state")
    return _integrate(L.dot, y0, times, rtol, atol, h0, max_step, max_steps)


def integrate_lindblad(n_spins, a, b, alpha, y0, times, rtol, atol, h0,
                       max_step, max_steps):
    """Matrix-free variant of :func:`integrate_dense` for the spin generator."""
    if len(y0) != 1 << (2 * n_spins):
        raise ValueError("vector length does not match n_spins")

    def apply(v):
        return lindblad_apply(n_spins, a, b, alpha, v)

    return _integrate(apply, y0, times, rtol, atol, h0, max_step, max_steps)
