"""Exact polynomial engine in (z1, z2, z3, z1*, z2*, z3*).

Polynomials are immutable sparse maps from packed exponent keys to complex
coefficients.  Operators act exactly on exponents; only coefficient
arithmetic rounds.  Every operator here preserves or lowers the bigrading
(p, q) = (holomorphic, antiholomorphic degree), so actions are cached as
dense matrices per bidegree block.

Conventions (indices 1-based, as in the operator tags):
    A_ik = i z_i d/dz_k - i z*_k d/dz*_i
    L_ik = (A_ik - A_ki)/2,  B_ik = (A_ik + A_ki)/2
    N    = 1/2 sum_k (z_k d/dz_k - z*_k d/dz*_k)
    Lap6 = 4 sum_k d^2/dz_k dz*_k
    L3   = 2 L_12,  Lk = 2 L_{k+1,k+2} cyclically
    L2   = -4 sum_{i>k} L_ik^2  (angular Laplacian; -L2 has eigenvalue J(J+1))
    Omega = sum_{ikl} L_ik B_kl L_li
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from threading import Lock

import numpy as np

from . import _backend

BITS = 5
MASK = (1 << BITS) - 1
MAX_EXP = MASK
UNIT = [1 << (BITS * k) for k in range(6)]
ZERO_TOL = 1e-10


def pack(exps) -> int:
    key = 0
    for k, e in enumerate(exps):
        if e < 0 or e > MAX_EXP:
            raise ValueError(f"exponent {e} out of range")
        key |= int(e) << (BITS * k)
    return key


def unpack(key: int) -> tuple:
    return tuple((key >> (BITS * k)) & MASK for k in range(6))


def bidegree(key: int) -> tuple:
    e = unpack(key)
    return (e[0] + e[1] + e[2], e[3] + e[4] + e[5])


class Polynomial6:
    """Sparse complex polynomial in z and z*; immutable."""

    __slots__ = ("_t", "_arr")

    def __init__(self, terms=None):
        t = {}
        if terms:
            for k, c in terms.items():
                key = pack(k) if isinstance(k, tuple) else int(k)
                c = complex(c)
                if c != 0:
                    t[key] = t.get(key, 0j) + c
            t = {k: c for k, c in t.items() if c != 0}
        self._t = t
        self._arr = None

    @classmethod
    def _raw(cls, t):
        obj = cls.__new__(cls)
        obj._t = t
        obj._arr = None
        return obj

    @classmethod
    def constant(cls, c=1.0):
        return cls({0: c})

    @classmethod
    def z(cls, k: int):
        """z_k, k = 1..3."""
        return cls({UNIT[k - 1]: 1.0})

    @classmethod
    def zs(cls, k: int):
        """z*_k, k = 1..3."""
        return cls({UNIT[k + 2]: 1.0})

    @classmethod
    def from_arrays(cls, keys, coefs):
        return cls._raw({int(k): complex(c) for k, c in zip(keys, coefs) if c != 0})

    # containers
    def items(self):
        return self._t.items()

    def __len__(self):
        return len(self._t)

    def coeff(self, exps) -> complex:
        key = pack(exps) if isinstance(exps, tuple) else int(exps)
        return self._t.get(key, 0j)

    def terms(self):
        """Sorted list of (exponent tuple, coefficient)."""
        return sorted(((unpack(k), c) for k, c in self._t.items()), key=lambda kv: kv[0])

    def arrays(self):
        if self._arr is None:
            keys = np.fromiter(self._t.keys(), dtype=np.int64, count=len(self._t))
            coefs = np.fromiter(self._t.values(), dtype=complex, count=len(self._t))
            self._arr = (keys, coefs)
        return self._arr

    # algebra
    def __add__(self, other):
        if not isinstance(other, Polynomial6):
            other = Polynomial6.constant(other)
        t = dict(self._t)
        for k, c in other._t.items():
            v = t.get(k, 0j) + c
            if v == 0:
                t.pop(k, None)
            else:
                t[k] = v
        return Polynomial6._raw(t)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial6._raw({k: -c for k, c in self._t.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, Polynomial6) else -complex(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Polynomial6):
            if not self._t or not other._t:
                return Polynomial6()
            if self.degree() + other.degree() > MAX_EXP:
                raise ValueError("product degree exceeds packing range")
            ka, ca = self.arrays()
            kb, cb = other.arrays()
            keys, coefs = _backend.poly_mul(ka, ca, kb, cb)
            return Polynomial6.from_arrays(keys, coefs)
        c = complex(other)
        if c == 0:
            return Polynomial6()
        return Polynomial6._raw({k: v * c for k, v in self._t.items()})

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / complex(c))

    def __pow__(self, n: int):
        out = Polynomial6.constant(1.0)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def conj(self):
        """Complex conjugate of the function: swap z <-> z*, conjugate coefficients."""
        low = (1 << (3 * BITS)) - 1
        return Polynomial6._raw({((k & low) << (3 * BITS)) | (k >> (3 * BITS)): c.conjugate()
                                 for k, c in self._t.items()})

    # inspection
    def degree(self) -> int:
        return max((sum(unpack(k)) for k in self._t), default=0)

    def bidegrees(self):
        return sorted({bidegree(k) for k in self._t})

    def project_bidegree(self, p: int, q: int):
        return Polynomial6._raw({k: c for k, c in self._t.items() if bidegree(k) == (p, q)})

    def split_bidegree(self):
        out = {}
        for k, c in self._t.items():
            out.setdefault(bidegree(k), {})[k] = c
        return {pq: Polynomial6._raw(t) for pq, t in sorted(out.items())}

    def max_abs(self) -> float:
        return max((abs(c) for c in self._t.values()), default=0.0)

    def chop(self, tol=1e-14):
        scale = max(self.max_abs(), 1.0) * tol
        return Polynomial6._raw({k: c for k, c in self._t.items() if abs(c) > scale})

    def is_zero(self, tol=ZERO_TOL, ref=None) -> bool:
        r = 1.0 if ref is None else max(ref, 1e-300)
        return self.max_abs() <= tol * r

    def allclose(self, other, tol=1e-10) -> bool:
        d = self - other
        return d.max_abs() <= tol * max(self.max_abs(), other.max_abs(), 1e-300)

    def evaluate(self, z, zs=None):
        """Value at z (complex 3-vector); zs defaults to conj(z)."""
        z = np.asarray(z, dtype=complex)
        zs = np.conj(z) if zs is None else np.asarray(zs, dtype=complex)
        v = np.concatenate([z, zs])
        tot = 0j
        for k, c in self._t.items():
            e = unpack(k)
            m = c
            for x, p in zip(v, e):
                if p:
                    m = m * x ** p
            tot += m
        return tot

    def evaluate_real(self, xi, eta):
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        return self.evaluate(xi + 1j * eta)

    def dump(self) -> str:
        """One term per line 'coeff_re coeff_im e1..e6', sorted by exponents."""
        lines = []
        for e, c in self.terms():
            lines.append(f"{c.real:.17g} {c.imag:.17g} " + " ".join(str(x) for x in e))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def parse_dump(cls, text: str):
        t = {}
        for line in text.splitlines():
            if not line.strip():
                continue
            parts = line.split()
            c = complex(float(parts[0]), float(parts[1]))
            t[tuple(int(x) for x in parts[2:8])] = c
        return cls(t)

    def __repr__(self):
        return f"Polynomial6({len(self._t)} terms, bidegrees={self.bidegrees()})"


# ---------------------------------------------------------------- operators

@dataclass(frozen=True)
class OperatorTag:
    kind: str
    i: int = 0
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("A", "L", "B", "N", "Lap6", "L2", "L3", "Lk", "Omega"):
            raise ValueError(f"unknown operator {self.kind}")
        if self.kind in ("A", "L", "B") and not (1 <= self.i <= 3 and 1 <= self.k <= 3):
            raise ValueError("indices must be in 1..3")
        if self.kind == "Lk" and not 1 <= self.i <= 3:
            raise ValueError("component must be in 1..3")

    def __str__(self):
        if self.kind in ("A", "L", "B"):
            return f"{self.kind}{self.i}{self.k}"
        if self.kind == "Lk":
            return f"L{self.i}"
        return self.kind


def A(i, k):
    return OperatorTag("A", i, k)


def L(i, k):
    return OperatorTag("L", i, k)


def B(i, k):
    return OperatorTag("B", i, k)


def Lk(c):
    """Angular-momentum component L1 = 2L23, L2c = 2L31, L3 = 2L12."""
    return OperatorTag("Lk", c)


N = OperatorTag("N")
Lap6 = OperatorTag("Lap6")
L2 = OperatorTag("L2")
L3 = OperatorTag("L3")
Omega = OperatorTag("Omega")


@lru_cache(maxsize=None)
def block_keys(p: int, q: int):
    """Sorted packed keys of all monomials with bidegree (p, q)."""
    hol = [e for e in product(range(p + 1), repeat=3) if sum(e) == p]
    anti = [e for e in product(range(q + 1), repeat=3) if sum(e) == q]
    keys = sorted(pack(a + b) for a in hol for b in anti)
    return tuple(keys)


@lru_cache(maxsize=None)
def _block_index(p, q):
    return {k: n for n, k in enumerate(block_keys(p, q))}


def _elem_action(key, i, k, anti):
    """z_i d/dz_k (or the starred version) on a single monomial; returns (key, factor)."""
    off = 3 if anti else 0
    e = (key >> (BITS * (k + off))) & MASK
    if e == 0:
        return None
    return key - UNIT[k + off] + UNIT[i + off], e


def _first_order_terms(op: OperatorTag):
    """List of (i, k, anti, coefficient) elementary pieces, 0-based indices."""
    I = 1j
    if op.kind == "A":
        i, k = op.i - 1, op.k - 1
        return [(i, k, False, I), (k, i, True, -I)]
    if op.kind in ("L", "B"):
        sgn = -1 if op.kind == "L" else 1
        i, k = op.i - 1, op.k - 1
        return [(i, k, False, 0.5 * I), (k, i, True, -0.5 * I),
                (k, i, False, sgn * 0.5 * I), (i, k, True, -sgn * 0.5 * I)]
    if op.kind == "N":
        out = []
        for m in range(3):
            out += [(m, m, False, 0.5), (m, m, True, -0.5)]
        return out
    if op.kind in ("Lk", "L3"):
        c = 3 if op.kind == "L3" else op.i
        a, b = {1: (2, 3), 2: (3, 1), 3: (1, 2)}[c]
        return [(i, k, an, 2 * v) for (i, k, an, v) in _first_order_terms(L(a, b))]
    raise ValueError(f"{op} is not first order")


_lock = Lock()
_mat_cache = {}


def _first_order_matrix(op: OperatorTag, p: int, q: int) -> np.ndarray:
    keys = block_keys(p, q)
    idx = _block_index(p, q)
    M = np.zeros((len(keys), len(keys)), dtype=complex)
    pieces = _first_order_terms(op)
    for col, key in enumerate(keys):
        for (i, k, anti, c) in pieces:
            r = _elem_action(key, i, k, anti)
            if r is not None:
                M[idx[r[0]], col] += c * r[1]
    return M


def operator_matrix(op: OperatorTag, p: int, q: int) -> np.ndarray:
    """Dense matrix of a bigrading-preserving operator on block (p, q)."""
    ck = (op, p, q)
    M = _mat_cache.get(ck)
    if M is not None:
        return M
    if op.kind == "L2":
        M = np.zeros((len(block_keys(p, q)),) * 2, dtype=complex)
        for (i, k) in ((2, 1), (3, 1), (3, 2)):
            X = operator_matrix(L(i, k), p, q)
            M -= 4 * (X @ X)
    elif op.kind == "Omega":
        M = np.zeros((len(block_keys(p, q)),) * 2, dtype=complex)
        for i, k, l in product((1, 2, 3), repeat=3):
            M += operator_matrix(L(i, k), p, q) @ operator_matrix(B(k, l), p, q) @ operator_matrix(L(l, i), p, q)
    elif op.kind == "Lap6":
        raise ValueError("Lap6 changes bidegree; use lap6_matrix")
    else:
        M = _first_order_matrix(op, p, q)
    M.setflags(write=False)
    with _lock:
        _mat_cache[ck] = M
    return M


def lap6_matrix(p: int, q: int) -> np.ndarray:
    """Matrix of Lap6 from block (p, q) to block (p-1, q-1)."""
    ck = ("Lap6", p, q)
    M = _mat_cache.get(ck)
    if M is not None:
        return M
    src = block_keys(p, q)
    if p == 0 or q == 0:
        M = np.zeros((0, len(src)), dtype=complex)
    else:
        idx = _block_index(p - 1, q - 1)
        M = np.zeros((len(idx), len(src)), dtype=complex)
        for col, key in enumerate(src):
            for m in range(3):
                e1 = (key >> (BITS * m)) & MASK
                e2 = (key >> (BITS * (m + 3))) & MASK
                if e1 and e2:
                    M[idx[key - UNIT[m] - UNIT[m + 3]], col] += 4.0 * e1 * e2
    M.setflags(write=False)
    with _lock:
        _mat_cache[ck] = M
    return M


def to_block_vector(f: Polynomial6, p: int, q: int) -> np.ndarray:
    idx = _block_index(p, q)
    v = np.zeros(len(idx), dtype=complex)
    for k, c in f.items():
        n = idx.get(k)
        if n is not None:
            v[n] = c
    return v


def from_block_vector(v, p: int, q: int) -> Polynomial6:
    keys = block_keys(p, q)
    return Polynomial6._raw({k: complex(c) for k, c in zip(keys, v) if c != 0})


def apply(op: OperatorTag, f: Polynomial6) -> Polynomial6:
    """Exact action of an operator tag on a polynomial."""
    out = Polynomial6()
    for (p, q), piece in f.split_bidegree().items():
        v = to_block_vector(piece, p, q)
        if op.kind == "Lap6":
            if p == 0 or q == 0:
                continue
            w = lap6_matrix(p, q) @ v
            out = out + from_block_vector(w, p - 1, q - 1)
        else:
            w = operator_matrix(op, p, q) @ v
            out = out + from_block_vector(w, p, q)
    return out


def apply_sparse(op: OperatorTag, f: Polynomial6) -> Polynomial6:
    """Direct term-by-term action of a first-order operator (no matrices)."""
    t = {}
    for key, c in f.items():
        for (i, k, anti, w) in _first_order_terms(op):
            r = _elem_action(key, i, k, anti)
            if r is not None:
                t[r[0]] = t.get(r[0], 0j) + c * w * r[1]
    return Polynomial6(t)


def commutator(op1: OperatorTag, op2: OperatorTag, f: Polynomial6) -> Polynomial6:
    return apply(op1, apply(op2, f)) - apply(op2, apply(op1, f))


def inner_product(f: Polynomial6, g: Polynomial6) -> complex:
    """Integral of f * conj(g) over the unit five-sphere (exact monomial rule)."""
    if len(f) == 0 or len(g) == 0:
        return 0j
    kf, cf = f.arrays()
    kg, cg = g.arrays()
    return _backend.sphere_inner(kf, cf, kg, cg)


def monomial_integral_real(alphas) -> float:
    """Integral over S^5 of prod x_i^alpha_i in six real coordinates."""
    if any(a % 2 for a in alphas):
        return 0.0
    lg = math.lgamma
    return 2.0 * math.exp(sum(lg((a + 1) / 2) for a in alphas) - lg(3 + sum(alphas) / 2))


# ------------------------------------------------------------ real variables

@lru_cache(maxsize=None)
def _linear_form(kind: str, k: int) -> Polynomial6:
    if kind == "xi":
        return (Polynomial6.z(k) + Polynomial6.zs(k)) * 0.5
    return (Polynomial6.z(k) - Polynomial6.zs(k)) * (-0.5j)


@lru_cache(maxsize=None)
def _real_monomial(exps: tuple) -> Polynomial6:
    out = Polynomial6.constant(1.0)
    for n, e in enumerate(exps):
        if e:
            out = out * (_linear_form("xi" if n < 3 else "eta", n % 3 + 1) ** e)
    return out


def xi(k: int) -> Polynomial6:
    return _linear_form("xi", k)


def eta(k: int) -> Polynomial6:
    return _linear_form("eta", k)


def substitute_real(terms) -> Polynomial6:
    """Map a polynomial in (xi1, xi2, xi3, eta1, eta2, eta3) to z/z* form.

    ``terms`` is a mapping from 6-tuples of real exponents to coefficients.
    """
    out = Polynomial6()
    for exps, c in terms.items():
        out = out + _real_monomial(tuple(exps)) * c
    return out


def rho2() -> Polynomial6:
    return sum((Polynomial6.z(k) * Polynomial6.zs(k) for k in (1, 2, 3)), Polynomial6())


def zdot(a: str, b: str) -> Polynomial6:
    """Scalar products: zdot('z','z') = z.z, zdot('zs','zs') = z*.z*, zdot('z','zs') = rho^2."""
    get = {"z": Polynomial6.z, "zs": Polynomial6.zs}
    return sum((get[a](k) * get[b](k) for k in (1, 2, 3)), Polynomial6())


def spherical_z(M: int, star=False) -> Polynomial6:
    """Spherical components z_{+1} = -(z1+iz2)/sqrt2, z_0 = z3, z_{-1} = (z1-iz2)/sqrt2."""
    v = Polynomial6.zs if star else Polynomial6.z
    r = 1 / math.sqrt(2)
    if M == 1:
        return (v(1) + v(2) * 1j) * (-r)
    if M == 0:
        return v(3)
    if M == -1:
        return (v(1) - v(2) * 1j) * r
    raise ValueError("M must be -1, 0 or 1")


def all_monomials(max_degree: int):
    """All monomials of total degree <= max_degree, as Polynomial6 objects."""
    out = []
    for d in range(max_degree + 1):
        for p in range(d + 1):
            for key in block_keys(p, d - p):
                out.append(Polynomial6._raw({key: 1.0 + 0j}))
    return out
