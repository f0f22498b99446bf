"""Classical motion of the three-body triangle in shape/Euler coordinates.

Generalized coordinates q = (a, lambda, phi1, theta, phi2, rho) with

    z = xi + i eta = (rho / sqrt2) R(phi1, theta, phi2) w(lambda, a),
    w = exp(-i lambda/2) (exp(i a/2) e1 + i exp(-i a/2) e2).

T = |dz/dt|^2 / 2 (unit masses, mass-weighted Jacobi vectors).  Accelerations come
from the Euler-Lagrange system M(q) qdd = F - Re(J^H d2z[qd, qd]) where J = dz/dq and
M = Re(J^H J); every derivative of z is exact (the Euler rotations and the shape
phases each depend on one coordinate).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import (FrameOrientation, JacobiPair, ShapeState, particle_positions,
                         reconstruct)

COORDS = ("a", "lambda", "phi1", "theta", "phi2", "rho")
CHART_EPS = 1e-8
COLLISION_EPS = 1e-4
H_MIN_REL = 1e-11
SQ2 = math.sqrt(2.0)

# generator of rotations about z and y: d/dt R(t) = R(t) G
_GZ = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
_GY = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
_E1 = np.array([1.0, 0.0, 0.0])
_E2 = np.array([0.0, 1.0, 0.0])


class SingularConfigurationError(ArithmeticError):
    """Coordinate chart breakdown: the mass matrix is degenerate."""

    def __init__(self, reason: str, value: float):
        super().__init__(f"{reason} (|value| = {value:.3e})")
        self.reason = reason
        self.value = value


class ConstraintViolationError(ValueError):
    pass


@dataclass(frozen=True)
class DynState:
    a: float
    lam: float
    phi1: float
    theta: float
    phi2: float
    rho: float
    da: float = 0.0
    dlam: float = 0.0
    dphi1: float = 0.0
    dtheta: float = 0.0
    dphi2: float = 0.0
    drho: float = 0.0

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    @property
    def q(self) -> np.ndarray:
        return np.array([self.a, self.lam, self.phi1, self.theta, self.phi2, self.rho])

    @property
    def qd(self) -> np.ndarray:
        return np.array([self.da, self.dlam, self.dphi1, self.dtheta, self.dphi2, self.drho])

    @property
    def y(self) -> np.ndarray:
        return np.concatenate([self.q, self.qd])

    @classmethod
    def from_y(cls, y) -> "DynState":
        return cls(*[float(v) for v in y])

    def shape(self) -> ShapeState:
        return ShapeState(self.rho, self.lam, self.a)

    def frame(self) -> FrameOrientation:
        return FrameOrientation(self.phi1, self.theta, self.phi2)

    _KEYS = ("a", "lambda", "phi1", "theta", "phi2", "rho",
             "da", "dlambda", "dphi1", "dtheta", "dphi2", "drho")

    def to_dict(self):
        return dict(zip(self._KEYS, (float(v) for v in self.y)))

    @classmethod
    def from_dict(cls, d):
        missing = [k for k in cls._KEYS[:6] if k not in d]
        if missing:
            raise KeyError(f"missing coordinates: {missing}")
        return cls(*[float(d.get(k, 0.0)) for k in cls._KEYS])


@dataclass(frozen=True)
class PotentialSpec:
    kind: str = "free"          # free | harmonic | newton
    rho0: float = 0.0
    g: float = 1.0

    def __post_init__(self):
        if self.kind not in ("free", "harmonic", "newton"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.rho0 < 0:
            raise ValueError("rho0 must be >= 0")


FREE = PotentialSpec()


# ---------------------------------------------------------------- exact derivatives of z(q)

def _rz(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _ry(t):
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _w(lam, a, kl, ka):
    """d^kl/dlam^kl d^ka/da^ka of the body vector w."""
    ph = (-0.5j) ** kl * np.exp(-0.5j * lam)
    return ph * ((0.5j) ** ka * np.exp(0.5j * a) * _E1
                 + 1j * (-0.5j) ** ka * np.exp(-0.5j * a) * _E2)


def _R(p1, th, p2, k1, kt, k2):
    return (_rz(p2) @ np.linalg.matrix_power(_GZ, k2) @ _ry(th)
            @ np.linalg.matrix_power(_GY, kt) @ _rz(p1) @ np.linalg.matrix_power(_GZ, k1))


def _zpart(q, orders):
    a, lam, p1, th, p2, rho = q
    ka, kl, k1, kt, k2, kr = orders
    if kr > 1:
        return np.zeros(3, dtype=complex)
    r = rho / SQ2 if kr == 0 else 1 / SQ2
    return r * (_R(p1, th, p2, k1, kt, k2) @ _w(lam, a, kl, ka))


def z_of_q(q) -> np.ndarray:
    return _zpart(q, (0,) * 6)


_ORDERS1 = [tuple(1 if k == i else 0 for k in range(6)) for i in range(6)]
_GZP = [np.eye(3), _GZ, _GZ @ _GZ]
_GYP = [np.eye(3), _GY, _GY @ _GY]


def z_jacobian(q):
    """(z, J[3x6], H[6x6x3]) with J[:, i] = dz/dq_i and H[i, j] = d2z/dq_i dq_j."""
    a, lam, p1, th, p2, rho = (float(v) for v in q)
    A2 = [_rz(p2) @ g for g in _GZP]
    B = [_ry(th) @ g for g in _GYP]
    C = [_rz(p1) @ g for g in _GZP]
    e_l = np.exp(-0.5j * lam)
    e_a = np.exp(0.5j * a)
    W = {}
    for kl in range(3):
        for ka in range(3 - kl):
            W[kl, ka] = ((-0.5j) ** kl * e_l) * ((0.5j) ** ka * e_a * _E1
                                                 + 1j * (-0.5j) ** ka / e_a * _E2)
    cache = {}

    def part(o):
        ka, kl, k1, kt, k2, kr = o
        if kr > 1:
            return np.zeros(3, dtype=complex)
        key = (k2, kt, k1)
        R = cache.get(key)
        if R is None:
            R = cache[key] = A2[k2] @ B[kt] @ C[k1]
        r = rho / SQ2 if kr == 0 else 1 / SQ2
        return r * (R @ W[kl, ka])

    z = part((0,) * 6)
    J = np.empty((3, 6), dtype=complex)
    H = np.empty((6, 6, 3), dtype=complex)
    for i in range(6):
        o = _ORDERS1[i]
        J[:, i] = part(o)
        for j in range(i, 6):
            o2 = list(o)
            o2[j] += 1
            H[i, j] = H[j, i] = part(o2)
    return z, J, H


def mass_matrix(q) -> np.ndarray:
    _, J, _ = z_jacobian(q)
    return (J.conj().T @ J).real


def chart_check(q, mode: str = "free", eps: float = CHART_EPS):
    """Raise SingularConfigurationError where the mode's mass matrix degenerates.

    Full motion: sin theta, sin a, cos a.  Planar and deforming: sin a only.
    """
    a, th = q[0], q[3]
    if mode in ("free", "harmonic", "newton") and abs(math.sin(th)) < eps:
        raise SingularConfigurationError("sin(theta) ~ 0", math.sin(th))
    if abs(math.sin(a)) < eps:
        raise SingularConfigurationError("sin(a) ~ 0", math.sin(a))
    if mode in ("free", "harmonic", "newton") and abs(math.cos(a)) < eps:
        raise SingularConfigurationError("cos(a) ~ 0", math.cos(a))


# ---------------------------------------------------------------- energies and observables

def kinetic_energy(s: DynState) -> float:
    _, J, _ = z_jacobian(s.q)
    zd = J @ s.qd
    return 0.5 * float(np.real(zd.conj() @ zd))


def moving_axis_rates(s: DynState) -> np.ndarray:
    """Rotation rates about the moving axes l1, l2, l3 (sign: dz = ... - dw x z)."""
    p1, th = s.phi1, s.theta
    return np.array([
        -math.cos(p1) * math.sin(th) * s.dphi2 + math.sin(p1) * s.dtheta,
        math.sin(p1) * math.sin(th) * s.dphi2 + math.cos(p1) * s.dtheta,
        -s.dphi1 - math.cos(th) * s.dphi2,
    ])


def kinetic_energy_moving_axes(s: DynState) -> float:
    """Quadratic form in (a', lambda', Omega', rho') built on the moving-axis rates."""
    o1, o2, o3 = moving_axis_rates(s)
    a = s.a
    br = (s.da ** 2 / 4 + s.dlam ** 2 / 4 + o1 ** 2 / 2 + o2 ** 2 / 2 + o3 ** 2
          - math.sin(a) * o1 * o2 - math.cos(a) * o3 * s.dlam)
    return 0.5 * s.rho ** 2 * br + 0.5 * s.drho ** 2


def kinetic_energy_euler(s: DynState) -> float:
    """Explicit Euler-angle form of the kinetic energy."""
    a, p1, th = s.a, s.phi1, s.theta
    d1, dt, d2, dl = s.dphi1, s.dtheta, s.dphi2, s.dlam
    br = (s.da ** 2 / 4 + dl ** 2 / 4 + d1 ** 2 + dt ** 2 / 2 + d2 ** 2 / 2
          + math.cos(th) ** 2 * d2 ** 2 / 2 + 2 * math.cos(th) * d1 * d2
          + math.sin(a) * (0.5 * math.sin(2 * p1) * math.sin(th) ** 2 * d2 ** 2
                           + math.cos(2 * p1) * math.sin(th) * d2 * dt
                           - 0.5 * math.sin(2 * p1) * dt ** 2)
          + math.cos(a) * (d1 * dl + math.cos(th) * d2 * dl))
    return 0.5 * s.rho ** 2 * br + 0.5 * s.drho ** 2


def _pair_forces(z):
    """(U, dU/dxi, dU/deta) for the Newtonian pair sum -sum 1/r_ij."""
    xi, eta = z.real, z.imag
    cfg = particle_positions(JacobiPair(xi, eta))
    x = [cfg.x1, cfg.x2, cfg.x3]
    U = 0.0
    gx = [np.zeros(3) for _ in range(3)]
    for i, j in ((0, 1), (0, 2), (1, 2)):
        d = x[i] - x[j]
        r = float(np.linalg.norm(d))
        if r < 1e-12:
            raise SingularConfigurationError("particle collision", r)
        U -= 1.0 / r
        g = d / r ** 3
        gx[i] += g
        gx[j] -= g
    # x1 = -xi/sqrt6 + eta/sqrt2, x2 = -xi/sqrt6 - eta/sqrt2, x3 = sqrt(2/3) xi
    s6 = math.sqrt(6.0)
    gxi = -gx[0] / s6 - gx[1] / s6 + math.sqrt(2 / 3) * gx[2]
    geta = gx[0] / SQ2 - gx[1] / SQ2
    return U, gxi, geta


def min_pair_distance(z) -> float:
    cfg = particle_positions(JacobiPair(z.real, z.imag))
    x = [cfg.x1, cfg.x2, cfg.x3]
    return float(min(np.linalg.norm(x[i] - x[j]) for i, j in ((0, 1), (0, 2), (1, 2))))


def potential_energy(s: DynState, p: PotentialSpec = FREE) -> float:
    if p.kind == "free":
        return 0.0
    if p.kind == "harmonic":
        return 0.5 * (s.rho ** 2 + p.rho0 ** 2
                      - 2 * s.rho * p.rho0 * math.sin(s.a / 2) * math.cos(s.lam / 2))
    return p.g * _pair_forces(z_of_q(s.q))[0]


def generalized_force(s: DynState, p: PotentialSpec = FREE) -> np.ndarray:
    """F = -dU/dq."""
    F = np.zeros(6)
    if p.kind == "harmonic":
        r, r0, a, lam = s.rho, p.rho0, s.a, s.lam
        F[0] = 0.5 * r * r0 * math.cos(a / 2) * math.cos(lam / 2)
        F[1] = -0.5 * r * r0 * math.sin(a / 2) * math.sin(lam / 2)
        F[5] = -r + r0 * math.sin(a / 2) * math.cos(lam / 2)
    elif p.kind == "newton":
        if s.rho < 1e-12:
            raise SingularConfigurationError("rho ~ 0", s.rho)
        z, J, _ = z_jacobian(s.q)
        _, gxi, geta = _pair_forces(z)
        g = gxi + 1j * geta
        F = -p.g * np.real(g.conj() @ J)
    return F


def energy(s: DynState, p: PotentialSpec = FREE) -> float:
    return kinetic_energy(s) + potential_energy(s, p)


def cartesian_state(s: DynState):
    """(z, dz/dt)."""
    z, J, _ = z_jacobian(s.q)
    return z, J @ s.qd


def angular_momentum(s: DynState) -> np.ndarray:
    """xi x xi' + eta x eta' (total angular momentum of the unit masses)."""
    z, zd = cartesian_state(s)
    return np.real(np.cross(z.conj(), zd))


def omega_classical(s: DynState) -> float:
    """(xi.L)(q.L) - (eta.L)(p.L) with p = xi', q = eta' (half the classical cubic invariant)."""
    z, zd = cartesian_state(s)
    L = np.real(np.cross(z.conj(), zd))
    xi, eta, p, q = z.real, z.imag, zd.real, zd.imag
    return float((xi @ L) * (q @ L) - (eta @ L) * (p @ L))


# ---------------------------------------------------------------- equations of motion

def _quadratic_terms(q, qd):
    _, J, H = z_jacobian(q)
    acc = np.einsum("ijk,i,j->k", H, qd, qd)
    return J, np.real(J.conj().T @ acc)


def el_residual(s: DynState, qdd, p: PotentialSpec = FREE) -> np.ndarray:
    """Euler-Lagrange residual M qdd + Re(J^H H[qd, qd]) - F; zero on solutions."""
    J, c = _quadratic_terms(s.q, s.qd)
    M = (J.conj().T @ J).real
    return M @ np.asarray(qdd, dtype=float) + c - generalized_force(s, p)


def eom_potential(s: DynState, p: PotentialSpec = FREE, check: bool = True) -> np.ndarray:
    if check:
        chart_check(s.q, "free")
    J, c = _quadratic_terms(s.q, s.qd)
    M = (J.conj().T @ J).real
    return np.linalg.solve(M, generalized_force(s, p) - c)


def eom_free(s: DynState, check: bool = True) -> np.ndarray:
    return eom_potential(s, FREE, check)


def _check_planar(s: DynState, tol=1e-12):
    if abs(s.dtheta) > tol or abs(s.dphi2) > tol:
        raise ConstraintViolationError(f"planar motion needs theta' = phi2' = 0 "
                                       f"(got {s.dtheta:.3e}, {s.dphi2:.3e})")


def eom_planar(s: DynState, p: PotentialSpec = FREE, check: bool = True) -> np.ndarray:
    """Reduced system in (a, lambda, phi1, rho) with theta, phi2 frozen."""
    _check_planar(s)
    if check:
        chart_check(s.q, "planar")
    idx = [0, 1, 2, 5]
    J, c = _quadratic_terms(s.q, s.qd)
    M = (J.conj().T @ J).real
    F = generalized_force(s, p) - c
    out = np.zeros(6)
    out[idx] = np.linalg.solve(M[np.ix_(idx, idx)], F[idx])
    return out


def p_phi1(s: DynState) -> float:
    return float((mass_matrix(s.q) @ s.qd)[2])


def p_lambda(s: DynState) -> float:
    return float((mass_matrix(s.q) @ s.qd)[1])


def deforming_phi1_rate(a: float, dlam: float) -> float:
    """phi1' fixed by p_phi1 = 0 in planar motion."""
    return -0.5 * math.cos(a) * dlam


def eom_deforming(s: DynState, p: PotentialSpec = FREE, fix_rho: bool = False,
                  check: bool = True, tol: float = 1e-9) -> np.ndarray:
    """Non-rotating planar motion: theta' = phi2' = 0 and p_phi1 = 0.

    The (a, lambda, rho) part follows from T = rho^2 (a'^2 + sin^2 a lambda'^2) / 8 + rho'^2 / 2;
    phi1'' keeps p_phi1 = 0.  With fix_rho the radial equation is dropped (rigid rotator on
    the (a, lambda) sphere).
    """
    _check_planar(s)
    if abs(s.dphi1 - deforming_phi1_rate(s.a, s.dlam)) > tol * max(1.0, abs(s.dlam)):
        raise ConstraintViolationError("deforming motion needs p_phi1 = 0")
    if check:
        chart_check(s.q, "deforming")
    a, r = s.a, s.rho
    sa, ca = math.sin(a), math.cos(a)
    F = generalized_force(s, p)
    dr = 0.0 if fix_rho else s.drho
    # (r^2/4) a'' + (r r'/2) a' - (r^2/4) sa ca lam'^2 = F_a
    add = (F[0] - 0.5 * r * dr * s.da + 0.25 * r * r * sa * ca * s.dlam ** 2) / (0.25 * r * r)
    # d/dt (r^2 sa^2 lam'/4) = F_lam
    ddl = (F[1] - 0.5 * r * dr * sa * sa * s.dlam - 0.5 * r * r * sa * ca * s.da * s.dlam) / (0.25 * r * r * sa * sa)
    ddr = 0.0 if fix_rho else r * (s.da ** 2 + sa * sa * s.dlam ** 2) / 4 + F[5]
    ddp1 = 0.5 * sa * s.da * s.dlam - 0.5 * ca * ddl
    return np.array([add, ddl, ddp1, 0.0, 0.0, ddr])


def harmonic_equilibrium(rho0: float) -> DynState:
    return DynState(a=math.pi, lam=0.0, phi1=0.0, theta=math.pi / 2, phi2=0.0, rho=rho0)


def equilibrium_residual(s: DynState, p: PotentialSpec) -> float:
    """max |generalized and Cartesian force| at zero velocity (chart independent check)."""
    s0 = DynState(*s.q)
    r = float(np.abs(el_residual(s0, np.zeros(6), p)).max())
    if p.kind == "harmonic":
        # U = |z - z0|^2 / 2 with z0 fixed in the body frame
        f = FrameOrientation(s.phi1, s.theta, s.phi2)
        z0 = reconstruct(ShapeState(p.rho0, 0.0, math.pi), f).z
        r = max(r, float(np.abs(z_of_q(s.q) - z0).max()))
    return r


# ---------------------------------------------------------------- Kepler (equilateral) reduction

@dataclass(frozen=True)
class KeplerState:
    rho: float
    psi: float
    drho: float
    dpsi: float

    @property
    def y(self):
        return np.array([self.rho, self.psi, self.drho, self.dpsi])

    def to_dict(self):
        return {"rho": self.rho, "psi": self.psi, "drho": self.drho, "dpsi": self.dpsi}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["rho"]), float(d["psi"]), float(d.get("drho", 0.0)), float(d["dpsi"]))

    @classmethod
    def from_dynstate(cls, s: DynState):
        """Equilateral chart a = 0: psi = lambda/2 + phi1 (frame rotating in its plane)."""
        return cls(s.rho, s.lam / 2 + s.phi1, s.drho, s.dlam / 2 + s.dphi1)


def eom_kepler(y, g: float = 1.0) -> np.ndarray:
    rho, psi, dr, dp = y
    if rho < 1e-12:
        raise SingularConfigurationError("rho ~ 0", rho)
    return np.array([rho * dp * dp - 3 * g / rho ** 2, -2 * dr * dp / rho])


def kepler_z(rho, psi):
    """Equilateral configuration z = rho/sqrt2 exp(-i psi) (e1 + i e2)."""
    return rho / SQ2 * np.exp(-1j * psi) * (_E1 + 1j * _E2)


def kepler_energy(y, g=1.0) -> float:
    rho, _, dr, dp = y
    return 0.5 * (dr * dr + rho * rho * dp * dp) - 3 * g / rho


# ---------------------------------------------------------------- Dormand-Prince 5(4)

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# dense output: y(t + th h) = y + h K^T P [th, th^2, th^3, th^4]
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    status: str = "ok"           # ok | singular | budget
    message: str = ""
    nsteps: int = 0
    nrejected: int = 0
    mode: str = "free"
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def dopri5(f, t0, y0, t_end, tol, t_eval=None, check=None, h0=None, max_steps=2_000_000):
    """Adaptive Dormand-Prince 5(4) with PI step control and dense output.

    f(t, y) -> dy/dt.  check(y) may raise SingularConfigurationError to stop the run.
    Returns Trajectory sampled at t_eval (default: every accepted step).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    y = np.asarray(y0, dtype=float).copy()
    t = float(t0)
    direction = 1.0 if t_end >= t0 else -1.0
    span = abs(t_end - t0)
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if np.any(np.diff(t_eval) * direction < 0):
            raise ValueError("t_eval must be monotone in the integration direction")
    ts, ys = ([t], [y.copy()]) if t_eval is None else ([], [])
    ie = 0
    if t_eval is not None:
        while ie < len(t_eval) and abs(t_eval[ie] - t0) <= 0:
            ts.append(t_eval[ie]); ys.append(y.copy()); ie += 1
    rtol = atol = tol

    def err_norm(e, y_old, y_new):
        sc = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
        return float(np.sqrt(np.mean((e / sc) ** 2)))

    try:
        if check:
            check(y)
        k0 = np.asarray(f(t, y), dtype=float)
    except SingularConfigurationError as exc:
        return Trajectory(np.array(ts), np.array(ys), "singular", str(exc))
    if span == 0:
        return Trajectory(np.array(ts), np.array(ys))
    if h0 is None:
        d0 = np.linalg.norm(y) / math.sqrt(len(y))
        d1 = np.linalg.norm(k0) / math.sqrt(len(y))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = min(h, span) * 0.1 + 1e-6 * min(1.0, span)
    else:
        h = abs(h0)
    h_min = H_MIN_REL * max(1.0, span, abs(t0))
    err_prev = 1e-4
    nsteps = nrej = 0
    status, message = "ok", ""
    K = np.empty((7, len(y)))
    while direction * (t_end - t) > 0:
        if nsteps + nrej > max_steps:
            status, message = "budget", "step budget exhausted"
            break
        if h < h_min:
            status, message = "singular", f"step size underflow at t={t:.17g}"
            break
        h = min(h, abs(t_end - t))
        hs = h * direction
        K[0] = k0
        try:
            for i in range(1, 6):
                yi = y + hs * np.dot(_A[i], K[:i])
                K[i] = f(t + _C[i] * hs, yi)
            y_new = y + hs * (_B @ K[:6])
            K[6] = f(t + hs, y_new)
        except (SingularConfigurationError, np.linalg.LinAlgError):
            h *= 0.25
            nrej += 1
            continue
        err = err_norm(hs * (_E @ K), y, y_new)
        if err <= 1.0:
            fac = 0.9 * err ** -0.14 * err_prev ** 0.08 if err > 0 else 5.0
            fac = min(5.0, max(0.2, fac))
            t_new = t + hs
            if t_eval is not None:
                while ie < len(t_eval) and direction * (t_eval[ie] - t_new) <= 0:
                    th = (t_eval[ie] - t) / hs
                    Q = K.T @ _P
                    ys.append(y + hs * (Q @ np.array([th, th ** 2, th ** 3, th ** 4])))
                    ts.append(t_eval[ie])
                    ie += 1
            else:
                ts.append(t_new)
                ys.append(y_new.copy())
            t, y, k0 = t_new, y_new, K[6].copy()
            err_prev = max(err, 1e-4)
            nsteps += 1
            h = h * fac
            if check:
                try:
                    check(y)
                except SingularConfigurationError as exc:
                    status, message = "singular", f"t={t:.17g}: {exc}"
                    break
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
            nrej += 1
    return Trajectory(np.array(ts), np.array(ys), status, message, nsteps, nrej)


MODES = ("free", "planar", "deforming", "harmonic", "kepler", "newton")


def integrate(s0, p: PotentialSpec = FREE, t_end: float = 1.0, tol: float = 1e-10,
              mode: str = "free", t_eval=None, fix_rho: bool = False) -> Trajectory:
    """Integrate from s0 (DynState, or KeplerState for mode='kepler')."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "kepler":
        ks = s0 if isinstance(s0, KeplerState) else KeplerState.from_dynstate(s0)

        def fk(t, y):
            acc = eom_kepler(y, p.g if p.kind == "newton" else 1.0)
            return np.array([y[2], y[3], acc[0], acc[1]])

        def ck(y):
            if y[0] < 1e-8:
                raise SingularConfigurationError("rho ~ 0", y[0])

        tr = dopri5(fk, 0.0, ks.y, t_end, tol, t_eval, ck)
        tr.mode = mode
        return tr
    if mode == "harmonic" and p.kind != "harmonic":
        p = PotentialSpec("harmonic", p.rho0)
    if mode == "newton" and p.kind != "newton":
        p = PotentialSpec("newton")
    if mode in ("planar", "deforming"):
        _check_planar(s0)
        if mode == "deforming":
            eom_deforming(s0, p, fix_rho=fix_rho, check=False)
            if fix_rho and s0.drho != 0:
                raise ConstraintViolationError("fix_rho needs rho' = 0")
        chart = mode
    else:
        chart = "free"

    def rhs(t, y):
        s = DynState.from_y(y)
        if mode == "planar":
            acc = eom_planar(s, p, check=False)
        elif mode == "deforming":
            acc = eom_deforming(s, p, fix_rho=fix_rho, check=False, tol=math.inf)
        else:
            acc = eom_potential(s, p, check=False)
        return np.concatenate([y[6:], acc])

    def check(y):
        chart_check(y[:6], chart)
        if p.kind == "newton":
            r = min_pair_distance(z_of_q(y[:6]))
            if r < COLLISION_EPS:
                raise SingularConfigurationError("close encounter", r)

    tr = dopri5(rhs, 0.0, s0.y, t_end, tol, t_eval, check)
    tr.mode = mode
    tr.meta["potential"] = p.kind
    return tr


def monitors(tr: Trajectory, p: PotentialSpec = FREE):
    """Per-sample (energy, |L|, omega_classical)."""
    out = []
    for t, y in zip(tr.t, tr.y):
        if tr.mode == "kepler":
            s = kepler_to_dynstate(y)
            e = kepler_energy(y)
        else:
            s = DynState.from_y(y)
            e = energy(s, p)
        out.append((e, float(np.linalg.norm(angular_momentum(s))), omega_classical(s)))
    return np.array(out).reshape(-1, 3)


def kepler_to_dynstate(y) -> DynState:
    """Equilateral chart: a = lambda = theta = phi2 = 0 and phi1 = psi."""
    rho, psi, dr, dp = (float(v) for v in y)
    return DynState(0.0, 0.0, psi, 0.0, 0.0, rho, 0.0, 0.0, dp, 0.0, 0.0, dr)


def fit_conic(x, y):
    """Least-squares conic A x^2 + B xy + C y^2 + D x + E y = 1; returns (coeffs, max residual)."""
    x = np.asarray(x)
    y = np.asarray(y)
    X = np.column_stack([x * x, x * y, y * y, x, y])
    c, *_ = np.linalg.lstsq(X, np.ones_like(x), rcond=None)
    return c, float(np.abs(X @ c - 1).max())
