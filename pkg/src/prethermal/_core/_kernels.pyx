# cython: language_level=3
"""Compiled kernels: matrix-free Lindblad generator and Dormand-Prince 5(4).

Density matrices are column-stacked: element (r, c) of a d x d matrix lives
at index r + d*c. Site k of the register corresponds to bit (n-1-k) of the
basis index; bit value 0 is spin-up. The emission operator (rate ``b``) is
the spin-raising operator, so relaxation drives every site toward spin-up.
"""
import numpy as np

from libc.math cimport sqrt, pow, fabs
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_blas cimport zgemv

ctypedef double complex cplx

DEF MODE_DENSE = 0
DEF MODE_LINDBLAD = 1

cdef struct Operator:
    int mode
    Py_ssize_t n            # vector length
    # dense mode
    cplx* mat
    # lindblad mode
    int n_spins
    Py_ssize_t d
    double a
    double b
    double alpha
    int* ndown
    cplx* s1
    cplx* s2


cdef void _dense_apply(Operator* op, cplx* x, cplx* out) noexcept nogil:
    # row-major matrix = column-major transpose, hence trans = 'T'
    cdef int n = <int>op.n, inc = 1
    cdef char trans = b'T'
    cdef cplx one = 1.0, zero = 0.0
    zgemv(&trans, &n, &n, &one, op.mat, &n, x, &inc, &zero, out, &inc)


cdef void _left_raise(int ns, Py_ssize_t d, cplx* X, cplx* Y) noexcept nogil:
    # Y = (sum_k sigma_+^k) X
    cdef Py_ssize_t r, c, m
    cdef int k
    for c in range(d):
        for r in range(d):
            Y[r + d * c] = 0
        for k in range(ns):
            m = 1 << k
            for r in range(d):
                if (r & m) == 0:
                    Y[r + d * c] = Y[r + d * c] + X[(r | m) + d * c]


cdef void _left_lower(int ns, Py_ssize_t d, cplx* X, cplx* Y) noexcept nogil:
    # Y = (sum_k sigma_-^k) X
    cdef Py_ssize_t r, c, m
    cdef int k
    for c in range(d):
        for r in range(d):
            Y[r + d * c] = 0
        for k in range(ns):
            m = 1 << k
            for r in range(d):
                if (r & m) != 0:
                    Y[r + d * c] = Y[r + d * c] + X[(r ^ m) + d * c]


cdef void _right_lower(int ns, Py_ssize_t d, cplx* X, cplx* Y) noexcept nogil:
    # Y = X (sum_k sigma_-^k)
    cdef Py_ssize_t r, c, m
    cdef int k
    for c in range(d):
        for r in range(d):
            Y[r + d * c] = 0
        for k in range(ns):
            m = 1 << k
            if (c & m) == 0:
                for r in range(d):
                    Y[r + d * c] = Y[r + d * c] + X[r + d * (c | m)]


cdef void _right_raise(int ns, Py_ssize_t d, cplx* X, cplx* Y) noexcept nogil:
    # Y = X (sum_k sigma_+^k)
    cdef Py_ssize_t r, c, m
    cdef int k
    for c in range(d):
        for r in range(d):
            Y[r + d * c] = 0
        for k in range(ns):
            m = 1 << k
            if (c & m) != 0:
                for r in range(d):
                    Y[r + d * c] = Y[r + d * c] + X[r + d * (c ^ m)]


cdef void _axpy(Py_ssize_t n, cplx a, cplx* x, cplx* y) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        y[i] = y[i] + a * x[i]


cdef void _lindblad_apply(Operator* op, cplx* x, cplx* out) noexcept nogil:
    cdef int ns = op.n_spins
    cdef Py_ssize_t d = op.d, n = op.n
    cdef Py_ssize_t r, c, m, idx
    cdef int k
    cdef double a = op.a, b = op.b, al = op.alpha
    cdef double loc = 1.0 - al
    cdef cplx acc
    cdef cplx* s1 = op.s1
    cdef cplx* s2 = op.s2

    # single-site dissipators, weight (1 - alpha)
    for c in range(d):
        for r in range(d):
            idx = r + d * c
            acc = -(b * (op.ndown[r] + op.ndown[c])
                    + a * (2 * ns - op.ndown[r] - op.ndown[c])) * x[idx]
            for k in range(ns):
                m = 1 << k
                if (r & m) == 0 and (c & m) == 0:
                    acc = acc + 2.0 * b * x[(r | m) + d * (c | m)]
                elif (r & m) != 0 and (c & m) != 0:
                    acc = acc + 2.0 * a * x[(r ^ m) + d * (c ^ m)]
            out[idx] = loc * acc

    if al == 0.0:
        return

    # collective dissipator, weight alpha
    _left_raise(ns, d, x, s1)
    _right_lower(ns, d, s1, s2)
    _axpy(n, 2.0 * al * b, s2, out)
    _left_lower(ns, d, s1, s2)
    _axpy(n, -al * b, s2, out)
    _right_lower(ns, d, x, s1)
    _right_raise(ns, d, s1, s2)
    _axpy(n, -al * b, s2, out)

    _left_lower(ns, d, x, s1)
    _right_raise(ns, d, s1, s2)
    _axpy(n, 2.0 * al * a, s2, out)
    _left_raise(ns, d, s1, s2)
    _axpy(n, -al * a, s2, out)
    _right_raise(ns, d, x, s1)
    _right_lower(ns, d, s1, s2)
    _axpy(n, -al * a, s2, out)


cdef inline void _apply(Operator* op, cplx* x, cplx* out) noexcept nogil:
    if op.mode == MODE_DENSE:
        _dense_apply(op, x, out)
    else:
        _lindblad_apply(op, x, out)


cdef int _popcount(Py_ssize_t v) noexcept nogil:
    cdef int cnt = 0
    while v:
        cnt += v & 1
        v >>= 1
    return cnt


cdef int _init_lindblad(Operator* op, int n_spins, double a, double b,
                        double alpha) except -1:
    cdef Py_ssize_t d = (<Py_ssize_t>1) << n_spins
    cdef Py_ssize_t i
    op.mode = MODE_LINDBLAD
    op.n_spins = n_spins
    op.d = d
    op.n = d * d
    op.a = a
    op.b = b
    op.alpha = alpha
    op.mat = NULL
    op.ndown = <int*>malloc(d * sizeof(int))
    op.s1 = <cplx*>malloc(d * d * sizeof(cplx))
    op.s2 = <cplx*>malloc(d * d * sizeof(cplx))
    if op.ndown == NULL or op.s1 == NULL or op.s2 == NULL:
        _free_lindblad(op)
        raise MemoryError()
    for i in range(d):
        op.ndown[i] = _popcount(i)
    return 0


cdef void _free_lindblad(Operator* op) noexcept:
    free(op.ndown)
    free(op.s1)
    free(op.s2)
    op.ndown = NULL
    op.s1 = NULL
    op.s2 = NULL


# Dormand-Prince 5(4) tableau
cdef double C_A21 = 1.0 / 5
cdef double C_A31 = 3.0 / 40, C_A32 = 9.0 / 40
cdef double C_A41 = 44.0 / 45, C_A42 = -56.0 / 15, C_A43 = 32.0 / 9
cdef double C_A51 = 19372.0 / 6561, C_A52 = -25360.0 / 2187
cdef double C_A53 = 64448.0 / 6561, C_A54 = -212.0 / 729
cdef double C_A61 = 9017.0 / 3168, C_A62 = -355.0 / 33, C_A63 = 46732.0 / 5247
cdef double C_A64 = 49.0 / 176, C_A65 = -5103.0 / 18656
cdef double C_B1 = 35.0 / 384, C_B3 = 500.0 / 1113, C_B4 = 125.0 / 192
cdef double C_B5 = -2187.0 / 6784, C_B6 = 11.0 / 84
cdef double C_E1 = 71.0 / 57600, C_E3 = -71.0 / 16695, C_E4 = 71.0 / 1920
cdef double C_E5 = -17253.0 / 339200, C_E6 = 22.0 / 525, C_E7 = -1.0 / 40


cdef int _integrate(Operator* op, cplx* y0, double* times, Py_ssize_t nt,
                    cplx* out, double rtol, double atol, double h0,
                    double max_step, long max_steps,
                    long* nsteps, long* nrej) noexcept nogil:
    cdef Py_ssize_t n = op.n, i, idx
    cdef cplx* y = <cplx*>malloc(n * sizeof(cplx))
    cdef cplx* yn = <cplx*>malloc(n * sizeof(cplx))
    cdef cplx* tmp = <cplx*>malloc(n * sizeof(cplx))
    cdef cplx* k = <cplx*>malloc(7 * n * sizeof(cplx))
    cdef cplx *k1, *k2, *k3, *k4, *k5, *k6, *k7
    cdef double t, target, h, hstep, err, sc, ay, ayn, fac, e
    cdef int clipped, status = 0
    cdef cplx ev

    if y == NULL or yn == NULL or tmp == NULL or k == NULL:
        free(y); free(yn); free(tmp); free(k)
        return 3

    k1 = k; k2 = k + n; k3 = k + 2 * n; k4 = k + 3 * n
    k5 = k + 4 * n; k6 = k + 5 * n; k7 = k + 6 * n

    for i in range(n):
        y[i] = y0[i]
        out[i] = y0[i]
    t = times[0]
    h = h0
    _apply(op, y, k1)
    nsteps[0] = 0
    nrej[0] = 0

    for idx in range(1, nt):
        target = times[idx]
        while t < target:
            hstep = h
            if hstep > max_step:
                hstep = max_step
            clipped = 0
            if hstep >= target - t:
                hstep = target - t
                clipped = 1

            for i in range(n):
                tmp[i] = y[i] + hstep * C_A21 * k1[i]
            _apply(op, tmp, k2)
            for i in range(n):
                tmp[i] = y[i] + hstep * (C_A31 * k1[i] + C_A32 * k2[i])
            _apply(op, tmp, k3)
            for i in range(n):
                tmp[i] = y[i] + hstep * (C_A41 * k1[i] + C_A42 * k2[i] + C_A43 * k3[i])
            _apply(op, tmp, k4)
            for i in range(n):
                tmp[i] = y[i] + hstep * (C_A51 * k1[i] + C_A52 * k2[i]
                                         + C_A53 * k3[i] + C_A54 * k4[i])
            _apply(op, tmp, k5)
            for i in range(n):
                tmp[i] = y[i] + hstep * (C_A61 * k1[i] + C_A62 * k2[i] + C_A63 * k3[i]
                                         + C_A64 * k4[i] + C_A65 * k5[i])
            _apply(op, tmp, k6)
            for i in range(n):
                yn[i] = y[i] + hstep * (C_B1 * k1[i] + C_B3 * k3[i] + C_B4 * k4[i]
                                        + C_B5 * k5[i] + C_B6 * k6[i])
            _apply(op, yn, k7)

            err = 0.0
            for i in range(n):
                ev = hstep * (C_E1 * k1[i] + C_E3 * k3[i] + C_E4 * k4[i]
                              + C_E5 * k5[i] + C_E6 * k6[i] + C_E7 * k7[i])
                ay = sqrt(y[i].real * y[i].real + y[i].imag * y[i].imag)
                ayn = sqrt(yn[i].real * yn[i].real + yn[i].imag * yn[i].imag)
                sc = atol + rtol * (ay if ay > ayn else ayn)
                err += (ev.real * ev.real + ev.imag * ev.imag) / (sc * sc)
            err = sqrt(err / n)

            if err <= 1.0:
                if clipped:
                    t = target
                else:
                    t = t + hstep
                for i in range(n):
                    y[i] = yn[i]
                    k1[i] = k7[i]
                nsteps[0] += 1
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = 0.9 * pow(err, -0.2)
                    if fac > 5.0:
                        fac = 5.0
                    if fac < 0.2:
                        fac = 0.2
                if clipped:
                    if hstep * fac > h:
                        h = hstep * fac
                else:
                    h = hstep * fac
            else:
                fac = 0.9 * pow(err, -0.2)
                if fac < 0.2:
                    fac = 0.2
                h = hstep * fac
                nrej[0] += 1
                e = fabs(t)
                if e < 1.0:
                    e = 1.0
                if h < 1e-14 * e:
                    status = 2
                    break
            if nsteps[0] + nrej[0] > max_steps:
                status = 1
                break
        if status != 0:
            break
        for i in range(n):
            out[idx * n + i] = y[i]

    free(y); free(yn); free(tmp); free(k)
    return status


def lindblad_apply(int n_spins, double a, double b, double alpha, x):
    """Apply the generator to a column-stacked density matrix ``x``."""
    cdef Operator op
    cdef const cplx[::1] xv = np.ascontiguousarray(x, dtype=np.complex128)
    if xv.shape[0] != (1 << (2 * n_spins)):
        raise ValueError("vector length does not match n_spins")
    res = np.empty(xv.shape[0], dtype=np.complex128)
    cdef cplx[::1] rv = res
    _init_lindblad(&op, n_spins, a, b, alpha)
    try:
        with nogil:
            _lindblad_apply(&op, <cplx*>&xv[0], &rv[0])
    finally:
        _free_lindblad(&op)
    return res


def integrate_dense(L, y0, times, double rtol, double atol, double h0,
                    double max_step, long max_steps):
    """Integrate dy/dt = L y, returning samples at ``times``.

    Returns ``(samples, n_accepted, n_rejected, status)``; status 0 is
    success, 1 step budget exhausted, 2 step-size underflow.
    """
    cdef Operator op
    cdef const cplx[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.complex128)
    cdef const cplx[::1] yv = np.ascontiguousarray(y0, dtype=np.complex128)
    cdef double[::1] tv = np.ascontiguousarray(times, dtype=np.float64)
    if Lv.shape[0] != Lv.shape[1] or Lv.shape[1] != yv.shape[0]:
        raise ValueError("dimension mismatch between generator and state")
    op.mode = MODE_DENSE
    op.n = yv.shape[0]
    op.mat = <cplx*>&Lv[0, 0]
    return _drive(&op, yv, tv, rtol, atol, h0, max_step, max_steps)


def integrate_lindblad(int n_spins, double a, double b, double alpha, y0, times,
                       double rtol, double atol, double h0, double max_step,
                       long max_steps):
    """Matrix-free variant of :func:`integrate_dense` for the spin generator."""
    cdef Operator op
    cdef const cplx[::1] yv = np.ascontiguousarray(y0, dtype=np.complex128)
    cdef double[::1] tv = np.ascontiguousarray(times, dtype=np.float64)
    if yv.shape[0] != (1 << (2 * n_spins)):
        raise ValueError("vector length does not match n_spins")
    _init_lindblad(&op, n_spins, a, b, alpha)
    try:
        return _drive(&op, yv, tv, rtol, atol, h0, max_step, max_steps)
    finally:
        _free_lindblad(&op)


cdef _drive(Operator* op, const cplx[::1] yv, double[::1] tv, double rtol,
            double atol, double h0, double max_step, long max_steps):
    cdef Py_ssize_t nt = tv.shape[0]
    cdef long nsteps = 0, nrej = 0
    cdef int status
    res = np.zeros((nt, yv.shape[0]), dtype=np.complex128)
    cdef cplx[:, ::1] rv = res
    if nt == 0:
        return res, 0, 0, 0
    with nogil:
        status = _integrate(op, <cplx*>&yv[0], &tv[0], nt, &rv[0, 0], rtol, atol, h0,
                            max_step, max_steps, &nsteps, &nrej)
    if status == 3:
        raise MemoryError()
    return res, nsteps, nrej, status
