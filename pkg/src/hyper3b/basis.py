"""Tree functions on the five-sphere, their norms, enumeration and the J=0 sector.

A tree function of degree K, as a homogeneous polynomial:

    rho^K Phi = N_{K j1 j2} [Y_{j1}(xi) x Y_{j2}(eta)]_{JM} rho^{2n} P_n^{(j2+1/2, j1+1/2)}((xi^2-eta^2)/rho^2)

with solid harmonics Y_{jm}(r) = r^j Y_{jm}(r/|r|) (unit-sphere normalized,
Condon-Shortley phase) and n = (K-j1-j2)/2.  Since xi^2 - eta^2 = rho^2 cos 2Phi
with |xi| = rho cos Phi, the Jacobi index attached to eta's degree comes first.
Under the sphere measure of polyops.inner_product the functions are orthonormal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sp

from . import polyops as po
from .coupling import clebsch_gordan
from .polyops import Polynomial6
from .special_functions import IndexError_, wigner_D


class InvalidLabelError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class TreeLabel:
    K: int
    j1: int
    j2: int
    J: int
    M: int

    def __post_init__(self):
        K, j1, j2, J, M = self.K, self.j1, self.j2, self.J, self.M
        if min(K, j1, j2, J) < 0:
            raise InvalidLabelError(f"negative label in {self}")
        if j1 + j2 > K or (K - j1 - j2) % 2:
            raise InvalidLabelError(f"K - j1 - j2 must be even and non-negative: {self}")
        if not abs(j1 - j2) <= J <= j1 + j2:
            raise InvalidLabelError(f"J outside |j1-j2|..j1+j2: {self}")
        if abs(M) > J:
            raise InvalidLabelError(f"|M| > J: {self}")

    @property
    def n(self) -> int:
        return (self.K - self.j1 - self.j2) // 2

    def to_dict(self):
        return {"K": self.K, "j1": self.j1, "j2": self.j2, "J": self.J, "M": self.M}

    def __str__(self):
        return f"K={self.K} j1={self.j1} j2={self.j2} J={self.J} M={self.M}"


@dataclass(frozen=True, order=True)
class SymLabel:
    """(K, J, M, nu, omega_index); nu is stored doubled (two_nu = 2 nu)."""
    K: int
    J: int
    M: int
    two_nu: int
    omega_index: int = 0

    def __post_init__(self):
        if abs(self.two_nu) > self.K or (self.K - self.two_nu) % 2:
            raise InvalidLabelError(f"need |nu| <= K/2 and nu = K/2 mod 1: {self}")
        if abs(self.M) > self.J:
            raise InvalidLabelError(f"|M| > J: {self}")

    @property
    def nu(self) -> float:
        return self.two_nu / 2


# ---------------------------------------------------------------- solid harmonics

def _lin(kind: str):
    f = po.xi if kind == "xi" else po.eta
    x, y, z = f(1), f(2), f(3)
    return (x + y * 1j) * (-0.5), (x - y * 1j) * 0.5, z


@lru_cache(maxsize=None)
def _powers(kind: str, which: int, e: int) -> Polynomial6:
    if e == 0:
        return Polynomial6.constant(1.0)
    return _powers(kind, which, e - 1) * _lin(kind)[which]


@lru_cache(maxsize=None)
def solid_harmonic(kind: str, l: int, m: int) -> Polynomial6:
    """r^l Y_lm(r_hat) for r = xi or eta, via the Racah explicit sum.

    r^l Y_lm = sqrt((2l+1)(l+m)!(l-m)!/4pi) * sum u^p v^q z^s / (p! q! s!),
    u = -(x+iy)/2, v = (x-iy)/2, p - q = m, p + q + s = l.
    """
    if kind not in ("xi", "eta"):
        raise ValueError("kind must be 'xi' or 'eta'")
    if l < 0 or abs(m) > l:
        raise IndexError_(f"invalid (l, m) = ({l}, {m})")
    f = math.factorial
    pref = math.sqrt((2 * l + 1) * f(l + m) * f(l - m) / (4 * math.pi))
    out = Polynomial6()
    for q in range(0, l + 1):
        p = q + m
        s = l - p - q
        if p < 0 or s < 0:
            continue
        term = _powers(kind, 0, p) * _powers(kind, 1, q) * _powers(kind, 2, s)
        out = out + term * (pref / (f(p) * f(q) * f(s)))
    return out


@lru_cache(maxsize=None)
def coupled_harmonic(j1: int, j2: int, J: int, M: int) -> Polynomial6:
    """[Y_{j1}(xi) x Y_{j2}(eta)]_{JM}."""
    out = Polynomial6()
    for m1 in range(-j1, j1 + 1):
        m2 = M - m1
        if abs(m2) > j2:
            continue
        c = clebsch_gordan(2 * j1, 2 * m1, 2 * j2, 2 * m2, 2 * J, 2 * M)
        if c:
            out = out + solid_harmonic("xi", j1, m1) * solid_harmonic("eta", j2, m2) * c
    return out


@lru_cache(maxsize=None)
def _sq(kind: str) -> Polynomial6:
    f = po.xi if kind == "xi" else po.eta
    return sum((f(k) * f(k) for k in (1, 2, 3)), Polynomial6())


@lru_cache(maxsize=None)
def radial_jacobi(n: int, j1: int, j2: int) -> Polynomial6:
    """rho^{2n} P_n^{(j2+1/2, j1+1/2)}((xi^2-eta^2)/rho^2) as an exact binomial sum.

    With x = (xi^2-eta^2)/rho^2: (x-1)/2 = -eta^2/rho^2 and (x+1)/2 = xi^2/rho^2.
    """
    al, be = j2 + 0.5, j1 + 0.5
    x2, e2 = _sq("xi"), _sq("eta")
    out = Polynomial6()
    for s in range(n + 1):
        c = sp.binom(n + al, n - s) * sp.binom(n + be, s) * (-1) ** s
        out = out + (e2 ** s) * (x2 ** (n - s)) * float(c)
    return out


def tree_norm(K: int, j1: int, j2: int) -> float:
    """N_{K j1 j2}: unit norm of the hyperangular factor under cos^2 sin^2 dPhi."""
    if min(K, j1, j2) < 0 or j1 + j2 > K or (K - j1 - j2) % 2:
        raise InvalidLabelError(f"invalid (K, j1, j2) = ({K}, {j1}, {j2})")
    n = (K - j1 - j2) // 2
    lg = math.lgamma
    l2 = (math.log(2 * (K + 2)) + lg(n + 1) + lg(n + j1 + j2 + 2)
          - lg(n + j1 + 1.5) - lg(n + j2 + 1.5))
    return math.exp(0.5 * l2)


@lru_cache(maxsize=None)
def _tree_cached(K, j1, j2, J, M) -> Polynomial6:
    n = (K - j1 - j2) // 2
    p = coupled_harmonic(j1, j2, J, M) * radial_jacobi(n, j1, j2)
    return (p * tree_norm(K, j1, j2)).chop(1e-15)


def tree_function(label: TreeLabel) -> Polynomial6:
    if not isinstance(label, TreeLabel):
        raise InvalidLabelError("expected a TreeLabel")
    return _tree_cached(label.K, label.j1, label.j2, label.J, label.M)


def enumerate_tree_basis(K: int, J: int | None = None, M: int | None = None):
    """All tree labels of degree K, ordered by (j1, j2, J, M descending)."""
    if K < 0:
        return []
    out = []
    for j1 in range(K + 1):
        for j2 in range(K - j1 + 1):
            if (K - j1 - j2) % 2:
                continue
            for JJ in range(abs(j1 - j2), j1 + j2 + 1):
                if J is not None and JJ != J:
                    continue
                for MM in range(JJ, -JJ - 1, -1):
                    if M is not None and MM != M:
                        continue
                    out.append(TreeLabel(K, j1, j2, JJ, MM))
    return out


def tree_pairs(K: int, J: int):
    """Admissible (j1, j2) pairs for fixed K, J."""
    return [(j1, j2) for j1 in range(K + 1) for j2 in range(K - j1 + 1)
            if (K - j1 - j2) % 2 == 0 and abs(j1 - j2) <= J <= j1 + j2]


# ---------------------------------------------------------------- degeneracy

def degeneracy(K: int, nu: float) -> int:
    """n(K, nu) = (K+2)(K+2-2nu)(K+2+2nu)/8, zero outside the admissible range."""
    two_nu = round(2 * nu)
    if abs(2 * nu - two_nu) > 1e-12 or abs(two_nu) > K or (K - two_nu) % 2:
        return 0
    return (K + 2) * (K + 2 - two_nu) * (K + 2 + two_nu) // 8


def degeneracy_total(K: int) -> int:
    if K < 0:
        return 0
    return (K + 3) * (K + 2) ** 2 * (K + 1) // 12


def degeneracy_max(K: int) -> int:
    """Largest n(K, nu): at nu = 0 (even K) or nu = 1/2 (odd K)."""
    if K % 2 == 0:
        return (K + 2) ** 3 // 8
    return (K + 1) * (K + 2) * (K + 3) // 8


def harmonic_dimension(K: int) -> int:
    """Dimension of degree-K harmonic polynomials in six variables (independent count)."""
    def hom(d):
        return math.comb(d + 5, 5) if d >= 0 else 0
    return hom(K) - hom(K - 2)


# ---------------------------------------------------------------- J = 0 sector

def _check_j0(K, two_nu):
    if K % 2 or K < 0:
        raise InvalidLabelError(f"J=0 harmonics need even K, got {K}")
    if abs(two_nu) > K or (K // 2 - two_nu // 2) % 2 or two_nu % 2:
        raise InvalidLabelError(f"nu={two_nu / 2} not admissible for K={K} (need nu = K/2 mod 2)")


def j0_nus(K: int):
    """Admissible nu (integers) of the J=0 harmonics at degree K."""
    return [nu for nu in range(-K // 2, K // 2 + 1) if (K // 2 - nu) % 2 == 0]


def j0_harmonic(K: int, nu: int):
    """Function (lam, a) -> D^{K/4}_{nu/2,-nu/2}(2 lam, 2 a, 0).

    nu is the N eigenvalue of the corresponding polynomial (z^2 carries nu = +1).
    """
    two_nu = 2 * nu
    _check_j0(K, two_nu)

    def f(lam, a):
        return wigner_D(K // 2, nu, -nu, (2 * np.asarray(lam), 2 * np.asarray(a), 0.0))
    return f


@lru_cache(maxsize=None)
def j0_polynomial(K: int, nu: int) -> Polynomial6:
    """rho^K D^{K/4}_{nu/2,-nu/2}(2 lam, 2 a, 0) as a polynomial in z, z*.

    Built as (-i z.z)^{nu} (nu >= 0) or (i z*.z*)^{|nu|} times a Jacobi
    polynomial in cos 2a = 1 - 2 (z.z)(z*.z*)/rho^4; the overall constant is
    the d-function factorial prefactor.
    """
    _check_j0(K, 2 * nu)
    l2 = K // 2          # 2l
    m = abs(nu)          # 2|m'| with m' = nu/2
    nn = (l2 - m) // 2   # l - |m'|
    r4 = po.rho2() * po.rho2()
    t = po.zdot("z", "z") * po.zdot("zs", "zs")
    # rho^{4 nn} P_nn^{(m,0)}(1 - 2 t / rho^4) via the binomial form
    x1 = r4 - t          # rho^4 (1+x)/2
    radial = Polynomial6()
    for s in range(nn + 1):
        c = sp.binom(nn + m, nn - s) * sp.binom(nn, s) * (-1) ** s
        radial = radial + (t ** s) * (x1 ** (nn - s)) * float(c)
    if nu >= 0:
        ang = (po.zdot("z", "z") * (-1j)) ** m
    else:
        ang = (po.zdot("zs", "zs") * 1j) ** m
    # d^l_{m',-m'}(b) = (-1)^{?} sqrt((l+|m'|)!(l-|m'|)!/((l+|m'|)!(l-|m'|)!)) ... fixed by one evaluation
    poly = ang * radial
    return (poly * _j0_const(K, nu, poly)).chop(1e-15)


def _j0_const(K, nu, poly):
    from .kinematics import FrameOrientation, ShapeState, reconstruct
    s = ShapeState(1.0, 0.37, 0.61)
    z = reconstruct(s, FrameOrientation(0.2, 0.9, -0.4)).z
    target = complex(wigner_D(K // 2, nu, -nu, (2 * s.lam, 2 * s.a, 0.0)))
    val = complex(poly.evaluate(z))
    c = target / val
    if abs(c.imag) > 1e-9 * abs(c):
        raise ArithmeticError("J=0 normalization constant not real")
    return c.real


def j0_norm2(K: int) -> float:
    """<D, D> over the unit five-sphere for every J=0 harmonic of degree K."""
    return 2 * math.pi ** 3 / (K + 2)


def j0_expansion_coeffs(K: int, j: int, form: str = "derived"):
    """{nu: C(j, nu)} expanding the orthonormal J=0 tree function with j1=j2=j
    over D^{K/4}_{nu/2,-nu/2}(2 lam, 2 a, 0).

    form="derived":  C = sqrt((K+2)/(2 pi^3)) i^j (-i)^nu <K/4 nu/2; K/4 -nu/2 | j 0>
    form="literal":  C = -i^j 2^{1/2-2j} sqrt((K+2)/(2j+1)) G(2j+2) G(K+3/2)
                         / (G(j+1) G(j+3/2) G((K+3)/2)) <K/4 nu/2; K/4 -nu/2 | j 0>
    Only the derived form matches exact projection; the literal one is kept for comparison.
    """
    if K % 2 or j < 0 or 2 * j > K:
        raise InvalidLabelError(f"need even K and j <= K/2, got K={K} j={j}")
    if form == "derived":
        pref = math.sqrt((K + 2) / (2 * math.pi ** 3)) * (1j ** j)
    elif form == "literal":
        lg = math.lgamma
        mag = math.exp(0.5 * math.log(2) - 2 * j * math.log(2) + 0.5 * math.log((K + 2) / (2 * j + 1))
                       + lg(2 * j + 2) + lg(K + 1.5) - lg(j + 1) - lg(j + 1.5) - lg((K + 3) / 2))
        pref = -(1j ** j) * mag
    else:
        raise ValueError("form must be 'derived' or 'literal'")
    out = {}
    for nu in j0_nus(K):
        cg = clebsch_gordan(K // 2, nu, K // 2, -nu, 2 * j, 0)
        ph = (-1j) ** nu if form == "derived" else 1.0
        out[nu] = complex(pref * ph * cg)
    return out
