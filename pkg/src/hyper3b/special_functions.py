"""Scalar special functions: Jacobi, Gegenbauer, associated Legendre, Wigner d/D.

Angular-momentum labels are doubled integers (two_j, two_m) throughout.
The Wigner d-function uses the real orthogonal convention, e.g.
d^1_{10}(b) = -sin(b)/sqrt(2), and D^j_{mn}(f1, t, f2) = exp(-i(m f1 + n f2)) d^j_{mn}(t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from . import _backend

MAX_FACTORIAL = 64


class DomainError(ValueError):
    pass


class IndexError_(IndexError):
    pass


@dataclass(frozen=True)
class AngularMomentum:
    two_j: int
    two_m: int

    def __post_init__(self):
        if self.two_j < 0:
            raise IndexError_(f"two_j must be >= 0, got {self.two_j}")
        if abs(self.two_m) > self.two_j or (self.two_j - self.two_m) % 2:
            raise IndexError_(f"invalid projection two_m={self.two_m} for two_j={self.two_j}")

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def m(self) -> float:
        return self.two_m / 2


@dataclass(frozen=True)
class JacobiParams:
    alpha: float
    beta: float
    n: int

    def __post_init__(self):
        if self.alpha <= -1 or self.beta <= -1:
            raise DomainError(f"Jacobi weight not integrable: alpha={self.alpha}, beta={self.beta}")
        if int(self.n) != self.n or self.n < 0:
            raise DomainError(f"degree must be a non-negative integer, got {self.n}")


def jacobi_poly(p: JacobiParams, x):
    """P_n^(alpha,beta)(x)."""
    if not isinstance(p, JacobiParams):
        raise TypeError("expected JacobiParams")
    return sp.eval_jacobi(int(p.n), p.alpha, p.beta, x)


def jacobi(n, alpha, beta, x):
    return jacobi_poly(JacobiParams(alpha, beta, n), x)


def jacobi_sum(n, alpha, beta, x):
    """Finite binomial-sum form; slow, used as an independent oracle."""
    x = np.asarray(x, dtype=float)
    tot = np.zeros_like(x)
    for s in range(n + 1):
        c1 = sp.binom(n + alpha, n - s)
        c2 = sp.binom(n + beta, s)
        tot = tot + c1 * c2 * ((x - 1) / 2) ** s * ((x + 1) / 2) ** (n - s)
    return tot


def jacobi_leading(n, alpha, beta):
    """Coefficient of x^n in P_n^(alpha,beta)."""
    return math.exp(math.lgamma(2 * n + alpha + beta + 1) - n * math.log(2) - math.lgamma(n + 1)
                    - math.lgamma(n + alpha + beta + 1))


def gegenbauer_poly(lam, n, x):
    """C_n^lam(x)."""
    if lam <= -0.5:
        raise DomainError(f"Gegenbauer parameter must exceed -1/2, got {lam}")
    if int(n) != n or n < 0:
        raise DomainError(f"degree must be a non-negative integer, got {n}")
    return sp.eval_gegenbauer(int(n), lam, x)


def assoc_legendre(l, m, x):
    """P_l^m(x) with the Condon-Shortley phase."""
    if abs(m) > l:
        raise IndexError_(f"|m| > l: l={l} m={m}")
    return sp.lpmv(m, l, x)


def _check_jmn(two_j, two_m, two_n):
    if two_j < 0 or abs(two_m) > two_j or abs(two_n) > two_j:
        raise IndexError_(f"index out of range: two_j={two_j} two_m={two_m} two_n={two_n}")
    if (two_j - two_m) % 2 or (two_j - two_n) % 2:
        raise IndexError_(f"parity mismatch: two_j={two_j} two_m={two_m} two_n={two_n}")
    if two_j > MAX_FACTORIAL:
        raise DomainError(f"two_j={two_j} beyond supported range {MAX_FACTORIAL}")


def wigner_small_d(two_j: int, two_m: int, two_n: int, beta):
    """d^j_{mn}(beta) from the factorial sum (compiled kernel, Kahan summed)."""
    _check_jmn(two_j, two_m, two_n)
    l, a, b = two_j / 2, two_m / 2, two_n / 2
    if a >= b:
        sign = -1.0 if ((two_m - two_n) // 2) % 2 else 1.0
        lab = (l, a, b)
    else:
        sign = 1.0
        lab = (l, b, a)
    if np.ndim(beta) == 0:
        return sign * _backend.dsum(*lab, float(beta))
    return sign * _backend.dsum_array(*lab, beta)


def reduced_d(l: float, a: float, b: float, beta):
    """Phase-free factorial sum e^l_{ab}(beta) for a >= b with l - a integral.

    For ordinary indices d^l_{ab} = (-1)^(a-b) e^l_{ab}.  It stays finite when a - b
    is half-integral, which is what the six-dimensional rotation coefficients need.
    """
    if a < b - 1e-12:
        raise IndexError_("reduced_d requires a >= b")
    if abs((l - a) - round(l - a)) > 1e-12 or l - a < -1e-12:
        raise IndexError_("reduced_d requires l - a to be a non-negative integer")
    if np.ndim(beta) == 0:
        return _backend.dsum(l, a, b, float(beta))
    return _backend.dsum_array(l, a, b, beta)


def jacobi_via_reduced_d(n, alpha, beta_, theta):
    """P_n^(alpha,beta)(cos 2 theta) through the reduced d-function route.

    Uses a=(alpha+beta)/2, b=(beta-alpha)/2, l=n+a and the Gamma-ratio rescaling;
    independent of the recurrence used by jacobi_poly.
    """
    a = (alpha + beta_) / 2
    b = (beta_ - alpha) / 2
    l = n + a
    lg = math.lgamma
    scale = math.exp(0.5 * (lg(l - b + 1) + lg(l + b + 1) - lg(l - a + 1) - lg(l + a + 1)))
    th = np.asarray(theta, dtype=float)
    e = reduced_d(l, a, b, 2 * th)
    return scale * np.sin(th) ** (-alpha) * np.cos(th) ** (-beta_) * e


def wigner_d_matrix(two_j: int, beta: float) -> np.ndarray:
    """Full (2j+1)x(2j+1) matrix, rows m = j..-j, columns n = j..-j."""
    ms = list(range(two_j, -two_j - 1, -2))
    return np.array([[wigner_small_d(two_j, m, n, beta) for n in ms] for m in ms])


def wigner_D(two_j: int, two_m: int, two_n: int, angles) -> complex:
    """D^j_{mn}(phi1, theta, phi2) = exp(-i(m phi1 + n phi2)) d^j_{mn}(theta)."""
    phi1, theta, phi2 = angles
    d = wigner_small_d(two_j, two_m, two_n, theta)
    return np.exp(-0.5j * (two_m * np.asarray(phi1) + two_n * np.asarray(phi2))) * d


def delta_pi_half(two_l: int, two_m: int, two_n: int) -> float:
    """Delta^(l)_{mn} = d^l_{mn}(pi/2)."""
    return float(wigner_small_d(two_l, two_m, two_n, math.pi / 2))


def delta_pi_half_tilde(two_l: int, two_m: int, two_n: int) -> float:
    """Rescaled Delta: Delta^(l)_{mn} * sqrt((l-n)!(l+n)!/((l-m)!(l+m)!))."""
    _check_jmn(two_l, two_m, two_n)
    f = math.factorial
    num = f((two_l - two_n) // 2) * f((two_l + two_n) // 2)
    den = f((two_l - two_m) // 2) * f((two_l + two_m) // 2)
    return delta_pi_half(two_l, two_m, two_n) * math.sqrt(num / den)
