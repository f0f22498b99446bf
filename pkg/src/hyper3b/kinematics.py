"""Triangle kinematics: Jacobi vectors, z = xi + i eta, shape angles and Euler frame.

Shape/frame parametrization (rho, lambda, a; phi1, theta, phi2):

    z = rho/sqrt2 * exp(-i lambda/2) * (exp(i a/2) l1 + i exp(-i a/2) l2)

with the moving frame (l1, l2, l) the columns of
R = Rz(phi2) Ry(theta) Rz(phi1).  Spherical components use
e_{+1} = -(x+iy)/sqrt2, e_0 = z, e_{-1} = (x-iy)/sqrt2 and c_n(v) = v . e_{-n}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQ2 = math.sqrt(2.0)
SQ3 = math.sqrt(3.0)
SQ6 = math.sqrt(6.0)
GAUGE_EPS = 1e-12


class DegenerateShapeError(ValueError):
    pass


def _vec(x):
    v = np.asarray(x, dtype=float).reshape(3)
    return v


@dataclass(frozen=True)
class ParticleConfig:
    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray

    def __post_init__(self):
        for n in ("x1", "x2", "x3"):
            object.__setattr__(self, n, _vec(getattr(self, n)))

    def com_residual(self) -> float:
        return float(np.linalg.norm(self.x1 + self.x2 + self.x3))

    def to_dict(self):
        return {"x1": self.x1.tolist(), "x2": self.x2.tolist(), "x3": self.x3.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["x1"], d["x2"], d["x3"])


@dataclass(frozen=True)
class JacobiPair:
    xi: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xi", _vec(self.xi))
        object.__setattr__(self, "eta", _vec(self.eta))

    @property
    def rho(self) -> float:
        return float(math.sqrt(self.xi @ self.xi + self.eta @ self.eta))

    def to_complex(self) -> "ComplexVec":
        return ComplexVec(self.xi + 1j * self.eta)


@dataclass(frozen=True)
class ComplexVec:
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", np.asarray(self.z, dtype=complex).reshape(3))

    @property
    def zs(self) -> np.ndarray:
        return np.conj(self.z)

    @property
    def rho(self) -> float:
        return float(math.sqrt(np.real(self.z @ self.zs)))

    def to_jacobi(self) -> JacobiPair:
        return JacobiPair(self.z.real, self.z.imag)


@dataclass(frozen=True)
class ShapeState:
    rho: float
    lam: float
    a: float

    # derived phases of the l+/l- expansion: xi = (u l+ + u* l-)/2, eta = -i(v l+ - v* l-)/2
    @property
    def u(self) -> complex:
        h = self.lam / 2
        return self.rho * (np.exp(-1j * h) * math.cos(self.a / 2) - 1j * np.exp(1j * h) * math.sin(self.a / 2))

    @property
    def v(self) -> complex:
        h = self.lam / 2
        return self.rho * (np.exp(-1j * h) * math.cos(self.a / 2) + 1j * np.exp(1j * h) * math.sin(self.a / 2))

    @property
    def us(self) -> complex:
        return np.conj(self.u)

    @property
    def vs(self) -> complex:
        return np.conj(self.v)

    @property
    def psi1(self) -> float:
        return float(np.angle(self.u))

    @property
    def psi(self) -> float:
        return float(np.angle(self.v))

    @property
    def psi2(self) -> float:
        return self.psi - math.pi / 2

    def to_dict(self):
        return {"rho": self.rho, "lambda": self.lam, "a": self.a}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["rho"]), float(d["lambda"]), float(d["a"]))


@dataclass(frozen=True)
class FrameOrientation:
    phi1: float
    theta: float
    phi2: float

    def matrix(self) -> np.ndarray:
        return euler_matrix(self.phi1, self.theta, self.phi2)

    def to_dict(self):
        return {"phi1": self.phi1, "theta": self.theta, "phi2": self.phi2}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["phi1"]), float(d["theta"]), float(d["phi2"]))


def _rz(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def euler_matrix(phi1, theta, phi2) -> np.ndarray:
    """Columns are l1, l2, l."""
    return _rz(phi2) @ _ry(theta) @ _rz(phi1)


def frame_vectors(f: FrameOrientation):
    R = f.matrix()
    return R[:, 0], R[:, 1], R[:, 2]


def l_plus_minus(f: FrameOrientation):
    l1, l2, l = frame_vectors(f)
    lp = (l1 + 1j * l2) / SQ2
    return lp, np.conj(lp), l


SPHERICAL_BASIS = {
    1: -np.array([1.0, 1j, 0.0]) / SQ2,
    0: np.array([0.0, 0.0, 1.0]) + 0j,
    -1: np.array([1.0, -1j, 0.0]) / SQ2,
}


def spherical_component(v, n: int) -> complex:
    """c_n(v) = v . e_{-n}."""
    return complex(np.asarray(v) @ SPHERICAL_BASIS[-n])


def euler_from_matrix(R, hint: FrameOrientation | None = None) -> FrameOrientation:
    c = float(np.clip(R[2, 2], -1.0, 1.0))
    st = math.hypot(R[0, 2], R[1, 2])
    theta = math.atan2(st, c)  # acos loses half the digits near the poles
    if st > GAUGE_EPS:
        phi2 = math.atan2(R[1, 2], R[0, 2])
        phi1 = math.atan2(R[2, 1], -R[2, 0])
    else:
        # gimbal pole: only phi1 + phi2 (or phi2 - phi1) is defined; put it in phi2
        phi1 = hint.phi1 if hint is not None else 0.0
        if c > 0:
            tot = math.atan2(R[1, 0], R[0, 0])
            phi2 = tot - phi1
        else:
            dif = math.atan2(-R[1, 0], -R[0, 0])
            phi2 = dif + phi1
    if hint is not None:
        phi1 = _unwrap(phi1, hint.phi1)
        phi2 = _unwrap(phi2, hint.phi2)
    return FrameOrientation(phi1, theta, phi2)


def _unwrap(x, ref):
    return x + 2 * math.pi * round((ref - x) / (2 * math.pi))


def to_jacobi(cfg: ParticleConfig, tol: float = 1e-12) -> JacobiPair:
    scale = max(1.0, float(np.abs(np.stack([cfg.x1, cfg.x2, cfg.x3])).max()))
    if cfg.com_residual() > tol * scale:
        raise ValueError(f"configuration violates x1+x2+x3=0 (residual {cfg.com_residual():.3e})")
    xi = -math.sqrt(1.5) * (cfg.x1 + cfg.x2)
    eta = (cfg.x1 - cfg.x2) / SQ2
    return JacobiPair(xi, eta)


def particle_positions(j: JacobiPair) -> ParticleConfig:
    """Inverse of to_jacobi."""
    x1 = -j.xi / SQ6 + j.eta / SQ2
    x2 = -j.xi / SQ6 - j.eta / SQ2
    x3 = math.sqrt(2.0 / 3.0) * j.xi
    return ParticleConfig(x1, x2, x3)


def reconstruct(s: ShapeState, f: FrameOrientation) -> ComplexVec:
    l1, l2, _ = frame_vectors(f)
    z = s.rho / SQ2 * np.exp(-0.5j * s.lam) * (np.exp(0.5j * s.a) * l1 + 1j * np.exp(-0.5j * s.a) * l2)
    return ComplexVec(z)


def jacobi_from_shape(s: ShapeState, f: FrameOrientation) -> JacobiPair:
    return reconstruct(s, f).to_jacobi()


def _perp_unit(n, pref=None):
    if pref is not None:
        m = pref - (pref @ n) * n
        if np.linalg.norm(m) > 1e-8:
            return m / np.linalg.norm(m)
    k = int(np.argmin(np.abs(n)))
    e = np.zeros(3)
    e[k] = 1.0
    m = e - (e @ n) * n
    return m / np.linalg.norm(m)


def parametrize(z, hint: tuple | None = None, eps: float = 1e-10):
    """Invert reconstruct: z -> (ShapeState, FrameOrientation).

    Without a hint the branch cos a >= 0 is chosen.  With a hint (previous
    ShapeState, FrameOrientation) the branch a or pi-a nearest to it is used
    and all angles are unwrapped for continuity.  Gauges: sin a = 0 sets
    lambda = 0 (xi along l1), or the hinted lambda; sin theta = 0 sets phi1 = 0
    (or the hinted phi1); cos a = 0 (collinear) picks a canonical frame.
    """
    zv = z.z if isinstance(z, ComplexVec) else np.asarray(z, dtype=complex).reshape(3)
    rho = math.sqrt(float(np.real(zv @ np.conj(zv))))
    if rho <= 0:
        raise DegenerateShapeError("rho = 0: shape undefined")
    hs, hf = hint if hint is not None else (None, None)
    w = complex(zv @ zv) / rho ** 2
    sa = min(abs(w), 1.0)
    a = math.asin(sa)
    if hs is not None and abs((math.pi - a) - hs.a) < abs(a - hs.a):
        a = math.pi - a
    if sa > eps:
        lam = -float(np.angle(-1j * w))
        if hs is not None:
            lam = _unwrap(lam, hs.lam)
    else:
        lam = hs.lam if hs is not None else 0.0
    xi = zv.real
    et = zv.imag
    ca = math.cos(a)
    if abs(ca) > 1e-7:
        c1, s2 = math.cos((a - lam) / 2), math.sin((a + lam) / 2)
        s1, c2 = math.sin((a - lam) / 2), math.cos((a + lam) / 2)
        det = c1 * c2 - s1 * s2
        k = SQ2 / rho / det
        l1 = k * (c2 * xi - s2 * et)
        l2 = k * (-s1 * xi + c1 * et)
    else:
        # collinear: xi, eta both along n = (l1+l2)/sqrt2
        c = math.cos(math.pi / 4 - lam / 2)
        s = math.sin(math.pi / 4 - lam / 2)
        n = (c * xi + s * et) / rho
        n = n / np.linalg.norm(n)
        pref = None
        if hf is not None:
            h1, h2, _ = frame_vectors(hf)
            pref = (h1 - h2) / SQ2
        m = _perp_unit(n, pref)
        l1 = (n + m) / SQ2
        l2 = (n - m) / SQ2
    l3 = np.cross(l1, l2)
    R = np.column_stack([l1, l2, l3])
    f = euler_from_matrix(R, hf)
    return ShapeState(rho, lam, a), f


def permute(p: str, z):
    """Particle transpositions acting on z (conjugate rules follow by conjugation)."""
    zv = z.z if isinstance(z, ComplexVec) else np.asarray(z, dtype=complex)
    phase = {"P12": 1.0, "P13": np.exp(2j * math.pi / 3), "P23": np.exp(-2j * math.pi / 3)}
    if p not in phase:
        raise ValueError(f"unknown permutation {p}")
    out = phase[p] * np.conj(zv)
    return ComplexVec(out) if isinstance(z, ComplexVec) else out


PERMUTATION_PAIRS = {"P12": (0, 1), "P13": (0, 2), "P23": (1, 2)}


def cos_inter_vector_angle(s: ShapeState) -> float:
    den = 1.0 - (math.sin(s.lam) * math.sin(s.a)) ** 2
    if den <= 1e-15:
        raise DegenerateShapeError("one Jacobi vector vanishes")
    return math.cos(s.lam) * math.sin(s.a) / math.sqrt(den)


def inter_vector_angle(s: ShapeState) -> float:
    """Angle between xi and eta."""
    return math.acos(max(-1.0, min(1.0, cos_inter_vector_angle(s))))


def inertia_components(s: ShapeState):
    r2 = s.rho ** 2
    return (r2 * math.sin(s.a / 2 - math.pi / 4) ** 2, r2 * math.cos(s.a / 2 - math.pi / 4) ** 2, r2)


def inertia_tensor(cfg: ParticleConfig) -> np.ndarray:
    I = np.zeros((3, 3))
    for x in (cfg.x1, cfg.x2, cfg.x3):
        I += (x @ x) * np.eye(3) - np.outer(x, x)
    return I


def body_projections(s: ShapeState):
    """Projections of x_i onto l1 and l2 (independent of the Euler angles)."""
    rho = s.rho
    cm, sm = math.cos((s.a - s.lam) / 2), math.sin((s.a - s.lam) / 2)
    cp, sp = math.cos((s.a + s.lam) / 2), math.sin((s.a + s.lam) / 2)
    p1 = np.array([rho / 2 * (sm - cm / SQ3), -rho / 2 * (sm + cm / SQ3), rho / SQ3 * cm])
    p2 = np.array([rho / 2 * (cp - sp / SQ3), -rho / 2 * (cp + sp / SQ3), rho / SQ3 * sp])
    return p1, p2


# Shapes drawn in the illustrative gallery: (label, lambda, a)
GALLERY = [
    ("linear a=pi/2 lambda=0", 0.0, math.pi / 2),
    ("linear a=pi/2 lambda=pi/6", math.pi / 6, math.pi / 2),
    ("a=0 lambda=0", 0.0, 0.0),
    ("a=pi/4 lambda=0", 0.0, math.pi / 4),
    ("a=3pi/4 lambda=0", 0.0, 3 * math.pi / 4),
    ("a=pi lambda=0", 0.0, math.pi),
    ("a=0 lambda=pi/2", math.pi / 2, 0.0),
    ("a=pi/6 lambda=pi/2", math.pi / 2, math.pi / 6),
    ("a=pi/2 lambda=pi/2", math.pi / 2, math.pi / 2),
]


def gallery(rho: float = 1.0):
    """Particle configurations (identity frame) for the gallery shapes."""
    out = []
    f0 = FrameOrientation(0.0, 0.0, 0.0)
    for label, lam, a in GALLERY:
        j = jacobi_from_shape(ShapeState(rho, lam, a), f0)
        out.append((label, particle_positions(j)))
    return out
