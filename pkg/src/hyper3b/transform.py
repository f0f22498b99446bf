"""Six-dimensional rotation coefficients, the Weyl turn, nu-split and Omega blocks.

The rotation acts on the Jacobi pair as

    xi' = cos(phi) xi - sin(phi) eta,   eta' = sin(phi) xi + cos(phi) eta,

i.e. z -> exp(i phi) z, and the coefficients are defined by

    Phi_mu(xi', eta') = sum_mu' C_{mu' mu}(phi) Phi_mu'(xi, eta),   mu = (j1, j2).

Three independent evaluations are provided: "overlap" (exact sphere integrals of
the phase-rotated polynomial), "jacobi" (closed sum over double-brace symbols and
Jacobi polynomials in -cos 2phi) and "dform" (the same sum written with
phase-free d-functions of argument pi - 2phi and an explicit 1/sin 2phi).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import polyops as po
from .basis import (InvalidLabelError, SymLabel, TreeLabel, tree_function, tree_norm,
                    tree_pairs)
from .coupling import double_brace
from .polyops import Polynomial6, unpack
from .special_functions import jacobi, jacobi_leading, reduced_d, wigner_D, wigner_small_d

SIN_EPS = 1e-6


class SingularGramError(np.linalg.LinAlgError):
    pass


# ---------------------------------------------------------------- helpers

def nu_of_key(key: int) -> int:
    """Doubled N eigenvalue (p - q) of a packed monomial."""
    e = unpack(key)
    return sum(e[:3]) - sum(e[3:])


def phase_rotate(f: Polynomial6, phi: float) -> Polynomial6:
    """f(exp(i phi) z, exp(-i phi) z*): the (xi, eta) rotation by phi."""
    keys, coefs = f.arrays()
    if len(keys) == 0:
        return Polynomial6()
    d = np.array([nu_of_key(int(k)) for k in keys])
    return Polynomial6.from_arrays(keys, coefs * np.exp(1j * phi * d))


@dataclass(frozen=True)
class RotationCoeff:
    K: int
    J: int
    M: int
    phi: float
    pairs: tuple
    matrix: np.ndarray = field(compare=False)

    def to_dict(self):
        return {"K": self.K, "J": self.J, "M": self.M, "phi": self.phi,
                "pairs": [list(p) for p in self.pairs],
                "matrix": [[float(x) for x in row] for row in self.matrix]}


# ---------------------------------------------------------------- rotation coefficients

def _null_cone_factor(K, j1, j2) -> complex:
    """Phi_mu(P, iQ) on the null cone P.P = Q.Q = 1 equals this times the bipolar harmonic."""
    n = (K - j1 - j2) // 2
    return tree_norm(K, j1, j2) * jacobi_leading(n, j2 + 0.5, j1 + 0.5) * 2 ** n * (1j ** j2)


@lru_cache(maxsize=None)
def _terms(K, J, k1, k2, j1, j2, split):
    """phi-independent part of the closed sum for C_{(k1 k2),(j1 j2)}.

    Each entry: (p, q, r, s, n1, n2, weight) with weight including the
    double-brace symbol, the Gamma denominators and the (-i)^{q+r} (-1)^{n1+n2}
    phase.  split='all' sums every K1 + K2 = K; 'r+s' keeps only K2 = r + s;
    an integer fixes K1.
    """
    lg = math.lgamma
    out = []
    for p in range(K + 1):
        for q in range(K + 1 - p):
            for r in range(K + 1 - p - q):
                for s in range(K + 1 - p - q - r):
                    db = double_brace(p, r, k1, q, s, k2, j1, j2, J)
                    if db == 0.0:
                        continue
                    if split == "all":
                        k1s = range(p + q, K - r - s + 1)
                    elif split == "r+s":
                        k1s = [K - r - s]
                    else:
                        k1s = [int(split)]
                    for K1 in k1s:
                        K2 = K - K1
                        if K1 < p + q or K2 < r + s or (K1 - p - q) % 2 or (K2 - r - s) % 2:
                            continue
                        n1, n2 = (K1 - p - q) // 2, (K2 - r - s) // 2
                        g = math.exp(-(lg(n1 + p + 1.5) + lg(n1 + q + 1.5)
                                       + lg(n2 + s + 1.5) + lg(n2 + r + 1.5)))
                        ph = ((-1j) ** (q + r)) * (-1) ** (n1 + n2)
                        out.append((p, q, r, s, n1, n2, ph * db * g))
    return tuple(out)


def _prefactor(K, k1, k2, j1, j2) -> complex:
    return (math.pi / 2) * math.factorial(K + 2) / (
        _null_cone_factor(K, k1, k2) * np.conj(_null_cone_factor(K, j1, j2)))


def _entry_jacobi(K, J, k1, k2, j1, j2, phi, split="all") -> complex:
    c, s = math.cos(phi), math.sin(phi)
    x = -math.cos(2 * phi)
    tot = 0j
    for p, q, r, ss, n1, n2, w in _terms(K, J, k1, k2, j1, j2, split):
        tot += (w * c ** (p + ss) * s ** (q + r)
                * jacobi(n1, p + 0.5, q + 0.5, x) * jacobi(n2, ss + 0.5, r + 0.5, x))
    return _prefactor(K, k1, k2, j1, j2) * tot


def _dform_factor(n, p, q, phi):
    """cos^p sin^q P_n^(p+1/2, q+1/2)(-cos 2phi) * sqrt(sin 2phi / 2), via e^l_ab(pi - 2phi)."""
    a = (p + q + 1) / 2
    b = (q - p) / 2
    l = n + a
    lg = math.lgamma
    ratio = math.exp(0.5 * (lg(l - b + 1) + lg(l + b + 1) - lg(l - a + 1) - lg(l + a + 1)))
    return ratio * reduced_d(l, a, b, math.pi - 2 * phi)


def _entry_dform(K, J, k1, k2, j1, j2, phi, split="all") -> complex:
    s2 = math.sin(2 * phi)
    if abs(s2) < SIN_EPS:
        return _entry_jacobi(K, J, k1, k2, j1, j2, phi, split)
    tot = 0j
    for p, q, r, ss, n1, n2, w in _terms(K, J, k1, k2, j1, j2, split):
        tot += w * _dform_factor(n1, p, q, phi) * _dform_factor(n2, ss, r, phi)
    # each factor carries sqrt(sin 2phi / 2); sign of sin follows from cos^p sin^q when phi leaves (0, pi/2)
    return _prefactor(K, k1, k2, j1, j2) * tot / (s2 / 2)


def _entry_overlap(K, J, M, k1, k2, j1, j2, phi) -> complex:
    g = phase_rotate(tree_function(TreeLabel(K, j1, j2, J, M)), phi)
    return po.inner_product(g, tree_function(TreeLabel(K, k1, k2, J, M)))


def rotation_coefficient(K: int, J: int, M: int, phi: float, form: str = "jacobi",
                         k1_split="all") -> RotationCoeff:
    """Matrix C[mu', mu] over the admissible (j1, j2) pairs of (K, J).

    Only k1_split='all' is exact; 'r+s' (K2 = r + s per term) or a fixed K1 are
    available for comparison and do not reproduce the rotation in general.
    """
    if abs(M) > J:
        raise InvalidLabelError(f"|M| > J: M={M} J={J}")
    pairs = tuple(tree_pairs(K, J))
    n = len(pairs)
    if n == 0:
        return RotationCoeff(K, J, M, phi, pairs, np.zeros((0, 0)))
    if form == "dform" and abs(math.cos(phi)) > SIN_EPS and math.sin(2 * phi) < 0:
        raise ValueError("dform is implemented for 0 <= phi <= pi/2 (sin 2phi >= 0)")
    C = np.zeros((n, n), dtype=complex)
    for b, (j1, j2) in enumerate(pairs):
        for a, (k1, k2) in enumerate(pairs):
            if form == "jacobi":
                C[a, b] = _entry_jacobi(K, J, k1, k2, j1, j2, phi, k1_split)
            elif form == "dform":
                C[a, b] = _entry_dform(K, J, k1, k2, j1, j2, phi, k1_split)
            elif form == "overlap":
                C[a, b] = _entry_overlap(K, J, M, k1, k2, j1, j2, phi)
            else:
                raise ValueError(f"unknown form {form!r}")
    imag = float(np.abs(C.imag).max())
    if imag > 1e-8 * max(1.0, float(np.abs(C).max())):
        raise ArithmeticError(f"rotation coefficients not real (max imag {imag:.3e})")
    return RotationCoeff(K, J, M, phi, pairs, C.real.copy())


def rotate_tree(label: TreeLabel, phi: float, form: str = "jacobi"):
    """[(TreeLabel', coefficient)] with Phi_label(rotated) = sum coeff * Phi_label'."""
    rc = rotation_coefficient(label.K, label.J, label.M, phi, form)
    b = rc.pairs.index((label.j1, label.j2))
    return [(TreeLabel(label.K, k1, k2, label.J, label.M), float(rc.matrix[a, b]))
            for a, (k1, k2) in enumerate(rc.pairs)]


def expansion_polynomial(expansion) -> Polynomial6:
    return sum((tree_function(l) * c for l, c in expansion), Polynomial6())


# ---------------------------------------------------------------- Weyl turn and nu split

@dataclass(frozen=True)
class WeylTurn:
    label: TreeLabel
    polynomial: Polynomial6 = field(compare=False)
    coeffs: tuple = ()


def weyl_turn(label: TreeLabel) -> WeylTurn:
    """Tree function turned by pi/4 in every (xi_k, eta_k) plane.

    The polynomial is exact (z -> exp(i pi/4) z); coeffs lists its expansion over
    the unturned tree basis, i.e. the rotation coefficients at phi = pi/4.
    """
    f = tree_function(label)
    poly = phase_rotate(f, math.pi / 4)
    return WeylTurn(label, poly, tuple(rotate_tree(label, math.pi / 4)))


def nu_split(obj, tol: float = 1e-13):
    """[(two_nu, piece)] ordered by two_nu; pieces are exact N eigenfunctions (nu = two_nu/2)."""
    f = obj.polynomial if isinstance(obj, WeylTurn) else obj
    groups = {}
    for k, c in f.items():
        groups.setdefault(nu_of_key(k), {})[k] = c
    out = []
    for tn in sorted(groups):
        piece = Polynomial6(groups[tn])
        if piece.max_abs() > tol:
            out.append((tn, piece))
    return out


# ---------------------------------------------------------------- D-product expansion

def _gl_nodes(n=64):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def general_solution_coeffs(label: TreeLabel, two_nu: int, nquad: int = 64):
    """Coefficients of the nu-piece of a tree function over D-function products.

        Phi^(nu) = sum_{Lambda, mu} c * D^Lambda_{nu, mu/2}(lam, a, 0) D^J_{mu, -M}(phi1, theta, phi2)

    (the Euler D carries -M because L3 Phi_M = -M Phi_M).  Computed by reducing to
    the body frame, Phi_M(R z_b) = sum_mu Phi_{-mu}(z_b) D^J_{mu,-M}, and projecting
    the shape factor on d^Lambda_{nu, mu/2}(a) with Gauss-Legendre quadrature.
    Returns {(two_Lambda, mu): c}; empty if nu does not occur.
    """
    from .kinematics import FrameOrientation, ShapeState, reconstruct
    K, J = label.K, label.J
    pieces = {}
    for mu in range(-J, J + 1):
        f = tree_function(TreeLabel(K, label.j1, label.j2, J, -mu))
        for tn, p in nu_split(f):
            if tn == two_nu:
                pieces[mu] = p
    if not pieces:
        return {}
    x, w = _gl_nodes(nquad)
    a_nodes = np.pi / 2 * (x + 1)          # a in (0, pi)
    wq = w * np.pi / 2 * np.sin(a_nodes)   # measure sin a da
    ident = FrameOrientation(0.0, 0.0, 0.0)
    lam0 = 0.0
    out = {}
    for mu, p in sorted(pieces.items()):
        # the lambda dependence of the piece is exp(-i nu lam); evaluate at lam = 0
        g = np.array([p.evaluate(reconstruct(ShapeState(1.0, lam0, float(a)), ident).z) for a in a_nodes])
        two_m, two_n = two_nu, mu
        if (two_m - two_n) % 2:
            # nu - mu/2 must be integral; such body components vanish identically
            if np.abs(g).max() > 1e-10:
                raise ArithmeticError(f"unexpected body component nu={two_nu}/2 mu={mu}")
            continue
        lo = max(abs(two_m), abs(two_n))
        for tl in range(lo, K + 1, 2):
            if (tl - two_m) % 2:
                continue
            d = wigner_small_d(tl, two_m, two_n, a_nodes)
            c = (tl + 1) / 2 * np.sum(wq * g * d)
            if abs(c) > 1e-13:
                out[(tl, mu)] = complex(c)
    return out


def evaluate_general_solution(coeffs, K: int, two_nu: int, J: int, M: int, shape, frame) -> complex:
    tot = 0j
    for (tl, mu), c in coeffs.items():
        d1 = wigner_D(tl, two_nu, mu, (shape.lam, shape.a, 0.0))
        d2 = wigner_D(2 * J, 2 * mu, -2 * M, (frame.phi1, frame.theta, frame.phi2))
        tot += c * d1 * d2
    return complex(tot) * shape.rho ** K


# ---------------------------------------------------------------- Omega blocks

@dataclass(frozen=True)
class OmegaBlock:
    K: int
    J: int
    M: int
    two_nu: int
    tags: tuple
    basis: tuple = field(compare=False)
    matrix: np.ndarray = field(compare=False)
    gram: np.ndarray = field(compare=False)

    @property
    def nu(self) -> float:
        return self.two_nu / 2


@dataclass(frozen=True)
class SymFunction:
    label: SymLabel
    omega: float
    polynomial: Polynomial6 = field(compare=False)
    components: tuple = ()


def omega_block(K: int, J: int, M: int, two_nu: int) -> OmegaBlock:
    """Omega' = i Omega and Gram matrices over the (j1, j2)-tagged nu-pieces."""
    tags, basis = [], []
    for j1, j2 in tree_pairs(K, J):
        for tn, p in nu_split(tree_function(TreeLabel(K, j1, j2, J, M))):
            if tn == two_nu:
                tags.append((j1, j2))
                basis.append(p)
    n = len(basis)
    G = np.zeros((n, n), dtype=complex)
    H = np.zeros((n, n), dtype=complex)
    ob = [po.apply(po.Omega, f) * 1j for f in basis]
    for a in range(n):
        for b in range(n):
            G[a, b] = po.inner_product(basis[b], basis[a])
            H[a, b] = po.inner_product(ob[b], basis[a])
    return OmegaBlock(K, J, M, two_nu, tuple(tags), tuple(basis), H, G)


def block_dimension(b: OmegaBlock, rtol: float = 1e-10) -> int:
    if len(b.basis) == 0:
        return 0
    ev = np.linalg.eigvalsh((b.gram + b.gram.conj().T) / 2)
    return int(np.sum(ev > rtol * max(ev.max(), 1e-300)))


def _canonical_phase(v):
    k = int(np.argmax(np.abs(v) > np.abs(v).max() * (1 - 1e-9)))
    return v * (abs(v[k]) / v[k])


def diagonalize_block(b: OmegaBlock, rtol: float = 1e-10, degen_tol: float = 1e-8,
                      strict: bool = False, max_cond: float = 1e12):
    """Orthonormal simultaneous eigenfunctions of the block, ordered deterministically.

    The Gram matrix is reduced by Cholesky when its condition number is at most
    max_cond; otherwise (the usual case, the tagged nu-pieces are linearly
    dependent) by its eigen-decomposition keeping eigenvalues above rtol * max.
    strict=True raises SingularGramError instead of reducing.
    """
    n = len(b.basis)
    if n == 0:
        return []
    G = (b.gram + b.gram.conj().T) / 2
    ev, U = np.linalg.eigh(G)
    if ev.max() <= 0:
        raise SingularGramError("Gram matrix is numerically zero")
    if ev.min() > 0 and ev.max() / ev.min() <= max_cond:
        Lc = np.linalg.cholesky(G)
        # columns of T give orthonormal functions sum_a T[a, i] f_a
        T = np.linalg.inv(Lc).conj().T
    else:
        if strict:
            raise SingularGramError(
                f"tagged set dependent: cond {ev.max() / max(ev.min(), 1e-300):.3e}")
        keep = ev > rtol * ev.max()
        T = U[:, keep] / np.sqrt(ev[keep])
    Hr = T.conj().T @ b.matrix @ T
    Hr = (Hr + Hr.conj().T) / 2
    w, V = np.linalg.eigh(Hr)
    X = T @ V                              # coefficients over the tagged functions
    # canonical form inside degenerate clusters: row-echelon in the tag order
    out_vecs, out_w = [], []
    i = 0
    r = len(w)
    while i < r:
        j = i + 1
        while j < r and abs(w[j] - w[i]) < degen_tol * max(1.0, abs(w[i])):
            j += 1
        cl = X[:, i:j]
        if j - i > 1:
            cl = _echelon_cluster(cl, G)
        for k in range(cl.shape[1]):
            out_vecs.append(_canonical_phase(cl[:, k]))
            out_w.append(float(np.mean(w[i:j])))
        i = j

    def dominant(v):
        # functional overlap of the eigenfunction with each tagged function
        comps = np.abs(G @ v)
        return b.tags[int(np.argmax(comps))]

    order = sorted(range(len(out_w)), key=lambda k: (round(out_w[k], 9), dominant(out_vecs[k]), k))
    result = []
    for idx, k in enumerate(order):
        v = out_vecs[k]
        poly = sum((f * complex(c) for f, c in zip(b.basis, v)), Polynomial6()).chop(1e-15)
        comps = tuple((b.tags[a], complex(v[a])) for a in range(n) if abs(v[a]) > 1e-14)
        result.append(SymFunction(SymLabel(b.K, b.J, b.M, b.two_nu, idx), out_w[k], poly, comps))
    return result


def _echelon_cluster(cl, G):
    """Deterministic G-orthonormal basis of span(cl): Gram-Schmidt on the projections
    of the tagged functions, taken in tag order."""
    n, m = cl.shape
    # projector coefficients onto span(cl) (cl is G-orthonormal)
    Pm = cl @ cl.conj().T @ G
    vecs = []
    for a in range(n):
        e = np.zeros(n, dtype=complex)
        e[a] = 1
        v = Pm @ e
        for u in vecs:
            v = v - u * (u.conj() @ G @ v)
        nv = math.sqrt(max((v.conj() @ G @ v).real, 0.0))
        if nv > 1e-8:
            vecs.append(v / nv)
        if len(vecs) == m:
            break
    return np.column_stack(vecs)


def sym_basis(K: int, J: int | None = None, M: int | None = None):
    """All (K, J, M, nu, omega) eigenfunctions of degree K, ordered by (J, M desc, nu, omega)."""
    out = []
    Js = range(K + 1) if J is None else [J]
    for JJ in Js:
        if not tree_pairs(K, JJ):
            continue
        Ms = range(JJ, -JJ - 1, -1) if M is None else [M]
        for MM in Ms:
            for tn in range(-K, K + 1, 2):
                out.extend(diagonalize_block(omega_block(K, JJ, MM, tn)))
    return out
