"""Clebsch-Gordan, 3j, 6j, 9j symbols and the double-brace composite.

Arguments are doubled integers (two_j = 2j).  Squared magnitudes and sums are
exact rationals; conversion to float happens once at the end.  Results are
memoized on the label tuple (functools.lru_cache is thread-safe).
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

_fact = math.factorial


def _half(x2: int) -> int:
    return x2 // 2


def _triangle_ok(a2, b2, c2) -> bool:
    if min(a2, b2, c2) < 0:
        return False
    if (a2 + b2 + c2) % 2:
        return False
    return abs(a2 - b2) <= c2 <= a2 + b2


def _proj_ok(j2, m2) -> bool:
    return abs(m2) <= j2 and (j2 - m2) % 2 == 0


def _delta2(a2, b2, c2) -> Fraction:
    """Squared triangle coefficient (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!."""
    return Fraction(
        _fact(_half(a2 + b2 - c2)) * _fact(_half(a2 - b2 + c2)) * _fact(_half(-a2 + b2 + c2)),
        _fact(_half(a2 + b2 + c2) + 1),
    )


def _signed_sqrt(sq: Fraction, s: Fraction) -> float:
    """s * sqrt(sq) as float, with one rounding of the combined rational."""
    if s == 0 or sq == 0:
        return 0.0
    mag = math.sqrt(sq * s * s)
    return mag if s > 0 else -mag


@lru_cache(maxsize=None)
def cg_exact(j1, m1, j2, m2, J, M):
    """Clebsch-Gordan as (squared prefactor, rational sum); value = sum*sqrt(prefactor)."""
    if m1 + m2 != M or not (_proj_ok(j1, m1) and _proj_ok(j2, m2) and _proj_ok(J, M)):
        return Fraction(0), Fraction(0)
    if not _triangle_ok(j1, j2, J):
        return Fraction(0), Fraction(0)
    pref = (J + 1) * _delta2(j1, j2, J) * (
        _fact(_half(J + M)) * _fact(_half(J - M)) * _fact(_half(j1 - m1)) * _fact(_half(j1 + m1))
        * _fact(_half(j2 - m2)) * _fact(_half(j2 + m2)))
    pref = Fraction(pref)
    s = Fraction(0)
    kmin = max(0, _half(j2 - J - m1), _half(j1 - J + m2))
    kmax = min(_half(j1 + j2 - J), _half(j1 - m1), _half(j2 + m2))
    for k in range(kmin, kmax + 1):
        den = (_fact(k) * _fact(_half(j1 + j2 - J) - k) * _fact(_half(j1 - m1) - k)
               * _fact(_half(j2 + m2) - k) * _fact(_half(J - j2 + m1) + k)
               * _fact(_half(J - j1 - m2) + k))
        s += Fraction((-1) ** k, den)
    return pref, s


@lru_cache(maxsize=None)
def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """<j1 m1; j2 m2 | J M>, Condon-Shortley phase; doubled-integer arguments."""
    pref, s = cg_exact(j1, m1, j2, m2, J, M)
    return _signed_sqrt(pref, s)


@lru_cache(maxsize=None)
def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    if m1 + m2 + m3 != 0:
        return 0.0
    pref, s = cg_exact(j1, m1, j2, m2, j3, -m3)
    if s == 0:
        return 0.0
    ph = _half(j1 - j2 - m3)
    val = _signed_sqrt(pref / (j3 + 1), s)
    return -val if ph % 2 else val


@lru_cache(maxsize=None)
def sixj_exact(a, b, c, d, e, f):
    for t in ((a, b, c), (a, e, f), (d, b, f), (d, e, c)):
        if not _triangle_ok(*t):
            return Fraction(0), Fraction(0)
    pref = _delta2(a, b, c) * _delta2(a, e, f) * _delta2(d, b, f) * _delta2(d, e, c)
    tri = [_half(a + b + c), _half(a + e + f), _half(d + b + f), _half(d + e + c)]
    quad = [_half(a + b + d + e), _half(a + c + d + f), _half(b + c + e + f)]
    s = Fraction(0)
    for t in range(max(tri), min(quad) + 1):
        den = 1
        for x in tri:
            den *= _fact(t - x)
        for x in quad:
            den *= _fact(x - t)
        s += Fraction((-1) ** t * _fact(t + 1), den)
    return pref, s


@lru_cache(maxsize=None)
def wigner_6j(a, b, c, d, e, f) -> float:
    pref, s = sixj_exact(a, b, c, d, e, f)
    return _signed_sqrt(pref, s)


@lru_cache(maxsize=None)
def wigner_9j(a, b, c, d, e, f, g, h, i) -> float:
    """{a b c; d e f; g h i} by the single-sum 6j contraction."""
    rows = ((a, b, c), (d, e, f), (g, h, i))
    cols = ((a, d, g), (b, e, h), (c, f, i))
    if not all(_triangle_ok(*t) for t in rows + cols):
        return 0.0
    xmin = max(abs(a - i), abs(d - h), abs(b - f))
    xmax = min(a + i, d + h, b + f)
    terms = []
    for x in range(xmin, xmax + 1, 2):
        w = wigner_6j(a, d, g, h, i, x) * wigner_6j(b, e, h, d, x, f) * wigner_6j(c, f, i, x, a, b)
        if w:
            terms.append((x + 1) * w * (-1 if x % 2 else 1))
    return math.fsum(terms)


def zero_3j(a: int, b: int, c: int) -> float:
    """3j(a b c; 0 0 0) for integer (not doubled) a, b, c."""
    return wigner_3j(2 * a, 2 * b, 2 * c, 0, 0, 0)


@lru_cache(maxsize=None)
def double_brace(p, r, j1p, q, s, j2p, j1, j2, J) -> float:
    """Composite symbol of the six-dimensional rotation coefficient.

    Integer (not doubled) orbital arguments:
    sqrt((2j1+1)(2j2+1)(2j1'+1)(2j2'+1)) (2p+1)(2q+1)(2r+1)(2s+1)
    * 3j(p q j1) 3j(s r j2) 3j(p r j1') 3j(q s j2') (all zero projections)
    * {p r j1'; q s j2'; j1 j2 J}.
    """
    t = zero_3j(p, q, j1) * zero_3j(s, r, j2) * zero_3j(p, r, j1p) * zero_3j(q, s, j2p)
    if t == 0.0:
        return 0.0
    nj = wigner_9j(2 * p, 2 * r, 2 * j1p, 2 * q, 2 * s, 2 * j2p, 2 * j1, 2 * j2, 2 * J)
    if nj == 0.0:
        return 0.0
    dims = math.sqrt((2 * j1 + 1) * (2 * j2 + 1) * (2 * j1p + 1) * (2 * j2p + 1))
    return dims * (2 * p + 1) * (2 * q + 1) * (2 * r + 1) * (2 * s + 1) * t * nj
