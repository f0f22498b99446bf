"""Pure-Python/numpy implementations of the hot kernels.

Same signatures as the compiled ``_core`` module; used when the extension is
absent or when ``HYPER3B_BACKEND=python`` is set.
"""
import math

import numpy as np

BITS = 5
MASK = (1 << BITS) - 1
HALF = 3 * BITS
PI3 = math.pi ** 3

_LF = np.array([math.lgamma(k + 1.0) for k in range(200)])


def dsum(l, a, b, beta):
    """Reduced factorial sum behind d^l_{ab}(beta), valid for a >= b.

    Returns sum_s (-1)^s G(s) cos(beta/2)^(2l+b-a-2s) sin(beta/2)^(a-b+2s)
    with G the usual Gamma-function ratio.  Kahan-compensated.
    """
    c = math.cos(0.5 * beta)
    s_ = math.sin(0.5 * beta)
    smax = int(math.floor(min(l + b, l - a) + 1e-9))
    lg = math.lgamma
    base = 0.5 * (lg(l + a + 1) + lg(l - a + 1) + lg(l + b + 1) + lg(l - b + 1))
    total = 0.0
    comp = 0.0
    for k in range(smax + 1):
        ec = 2 * l + b - a - 2 * k
        es = a - b + 2 * k
        if ec < -1e-9 or es < -1e-9:
            continue
        mag = base - lg(l + b - k + 1) - lg(k + 1) - lg(a - b + k + 1) - lg(l - a - k + 1)
        pc = _pow(c, ec)
        ps = _pow(s_, es)
        term = math.exp(mag) * pc * ps
        if k & 1:
            term = -term
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def _pow(x, e):
    if abs(e) < 1e-12:
        return 1.0
    if abs(e - round(e)) < 1e-12:
        return x ** int(round(e))
    return x ** e


def dsum_array(l, a, b, betas):
    betas = np.asarray(betas, dtype=float)
    out = np.empty(betas.shape)
    flat = out.reshape(-1)
    for i, bt in enumerate(betas.reshape(-1)):
        flat[i] = dsum(l, a, b, float(bt))
    return out


def _unpack(keys):
    keys = np.asarray(keys, dtype=np.int64)
    return np.stack([(keys >> (BITS * k)) & MASK for k in range(6)], axis=-1)


def sphere_inner(kf, cf, kg, cg):
    """Exact integral over the unit five-sphere of f * conj(g).

    Monomial z^a z*^b times conj(z^c z*^d) integrates to
    2 pi^3 prod (a+d)_k! / (|a+d|+2)! when a+d == b+c, else zero.
    """
    kf = np.asarray(kf, dtype=np.int64)
    kg = np.asarray(kg, dtype=np.int64)
    if kf.size == 0 or kg.size == 0:
        return 0j
    low = (1 << HALF) - 1
    kg_sw = ((kg & low) << HALF) | (kg >> HALF)
    tot = kf[:, None] + kg_sw[None, :]
    ok = (tot & low) == (tot >> HALF)
    if not ok.any():
        return 0j
    i, j = np.nonzero(ok)
    alpha = _unpack(tot[i, j] & low)[:, :3]
    logv = _LF[alpha].sum(axis=1) - _LF[alpha.sum(axis=1) + 2]
    w = 2.0 * PI3 * np.exp(logv)
    terms = np.asarray(cf)[i] * np.conj(np.asarray(cg)[j]) * w
    return complex(math.fsum(terms.real) + 1j * math.fsum(terms.imag))


def poly_mul(ka, ca, kb, cb):
    """Product of two packed sparse polynomials; returns sorted unique keys."""
    ka = np.asarray(ka, dtype=np.int64)
    kb = np.asarray(kb, dtype=np.int64)
    if ka.size == 0 or kb.size == 0:
        return np.empty(0, np.int64), np.empty(0, complex)
    keys = (ka[:, None] + kb[None, :]).reshape(-1)
    coefs = (np.asarray(ca)[:, None] * np.asarray(cb)[None, :]).reshape(-1)
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    coefs = coefs[order]
    uk, start = np.unique(keys, return_index=True)
    sums = np.add.reduceat(coefs, start)
    return uk, sums
