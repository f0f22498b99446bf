# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; mirrors hyper3b._core_py."""
import numpy as np
from libc.math cimport lgamma, exp, cos, sin, pow, floor, fabs, M_PI

cdef int BITS = 5
cdef long long MASK = 31
cdef int HALF = 15

cdef double _LF[200]
cdef int _k
for _k in range(200):
    _LF[_k] = lgamma(_k + 1.0)


cdef inline double _pw(double x, double e) nogil:
    if fabs(e) < 1e-12:
        return 1.0
    return pow(x, e)


cdef double _dsum(double l, double a, double b, double beta) nogil:
    cdef double c = cos(0.5 * beta)
    cdef double s_ = sin(0.5 * beta)
    cdef double lim = l + b
    if l - a < lim:
        lim = l - a
    cdef int smax = <int>floor(lim + 1e-9)
    cdef double base = 0.5 * (lgamma(l + a + 1) + lgamma(l - a + 1)
                              + lgamma(l + b + 1) + lgamma(l - b + 1))
    cdef double total = 0.0, comp = 0.0, term, y, t, ec, es, mag
    cdef int k
    for k in range(smax + 1):
        ec = 2 * l + b - a - 2 * k
        es = a - b + 2 * k
        if ec < -1e-9 or es < -1e-9:
            continue
        mag = base - lgamma(l + b - k + 1) - lgamma(k + 1.0) - lgamma(a - b + k + 1) - lgamma(l - a - k + 1)
        term = exp(mag) * _pw(c, ec) * _pw(s_, es)
        if k & 1:
            term = -term
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def dsum(double l, double a, double b, double beta):
    return _dsum(l, a, b, beta)


def dsum_array(double l, double a, double b, betas):
    cdef double[:] bb = np.ascontiguousarray(betas, dtype=float).reshape(-1)
    out_np = np.empty(bb.shape[0])
    cdef double[:] out = out_np
    cdef Py_ssize_t i
    for i in range(bb.shape[0]):
        out[i] = _dsum(l, a, b, bb[i])
    return out_np.reshape(np.shape(betas))


def sphere_inner(kf, cf, kg, cg):
    cdef long long[:] f = np.ascontiguousarray(kf, dtype=np.int64)
    cdef long long[:] g = np.ascontiguousarray(kg, dtype=np.int64)
    cdef double complex[:] a = np.ascontiguousarray(cf, dtype=complex)
    cdef double complex[:] b = np.ascontiguousarray(cg, dtype=complex)
    cdef Py_ssize_t i, j, nf = f.shape[0], ng = g.shape[0]
    cdef long long low = (1 << HALF) - 1
    cdef long long tot, gs, al
    cdef int e0, e1, e2
    cdef double w, two_pi3 = 2.0 * M_PI * M_PI * M_PI
    cdef double sre = 0.0, sim = 0.0, cre = 0.0, cim = 0.0, y, t
    cdef double complex term
    for j in range(ng):
        gs = ((g[j] & low) << HALF) | (g[j] >> HALF)
        for i in range(nf):
            tot = f[i] + gs
            al = tot & low
            if al != (tot >> HALF):
                continue
            e0 = al & MASK
            e1 = (al >> BITS) & MASK
            e2 = (al >> (2 * BITS)) & MASK
            w = two_pi3 * exp(_LF[e0] + _LF[e1] + _LF[e2] - _LF[e0 + e1 + e2 + 2])
            term = a[i] * b[j].conjugate() * w
            y = term.real - cre
            t = sre + y
            cre = (t - sre) - y
            sre = t
            y = term.imag - cim
            t = sim + y
            cim = (t - sim) - y
            sim = t
    return complex(sre, sim)


def poly_mul(ka, ca, kb, cb):
    cdef long long[:] A = np.ascontiguousarray(ka, dtype=np.int64)
    cdef long long[:] B = np.ascontiguousarray(kb, dtype=np.int64)
    cdef double complex[:] a = np.ascontiguousarray(ca, dtype=complex)
    cdef double complex[:] b = np.ascontiguousarray(cb, dtype=complex)
    cdef Py_ssize_t na = A.shape[0], nb = B.shape[0], i, j, n = 0
    if na == 0 or nb == 0:
        return np.empty(0, np.int64), np.empty(0, complex)
    keys_np = np.empty(na * nb, dtype=np.int64)
    coefs_np = np.empty(na * nb, dtype=complex)
    cdef long long[:] keys = keys_np
    cdef double complex[:] coefs = coefs_np
    for i in range(na):
        for j in range(nb):
            keys[n] = A[i] + B[j]
            coefs[n] = a[i] * b[j]
            n += 1
    order = np.argsort(keys_np, kind="stable")
    cdef long long[:] sk = keys_np[order]
    cdef double complex[:] sc = coefs_np[order]
    outk_np = np.empty(n, dtype=np.int64)
    outc_np = np.empty(n, dtype=complex)
    cdef long long[:] ok = outk_np
    cdef double complex[:] oc = outc_np
    cdef Py_ssize_t m = 0
    for i in range(n):
        if m > 0 and ok[m - 1] == sk[i]:
            oc[m - 1] = oc[m - 1] + sc[i]
        else:
            ok[m] = sk[i]
            oc[m] = sc[i]
            m += 1
    return outk_np[:m], outc_np[:m]
