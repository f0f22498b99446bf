"""Invariant suites shared by the CLI `verify` command.

Each suite returns a SuiteResult: named checks with measured value, tolerance and
verdict, plus the worst offender.  Work units are independent and may be fanned
out over processes; results are assembled in submission order.
"""
from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import basis as bs
from . import dynamics as dy
from . import polyops as po
from . import transform as tr

SUITES = ("harmonicity", "commutators", "orthonormality", "transform", "omega", "dynamics")


@dataclass
class Check:
    name: str
    value: float
    tol: float
    informational: bool = False

    @property
    def ok(self) -> bool:
        return bool(self.value <= self.tol)

    def to_dict(self):
        return {"name": self.name, "value": self.value, "tol": self.tol, "ok": self.ok,
                "informational": self.informational}


@dataclass
class SuiteResult:
    suite: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks if not c.informational)

    def worst(self):
        real = [c for c in self.checks if not c.informational]
        if not real:
            return None
        return max(real, key=lambda c: (not c.ok, c.value / c.tol if c.tol else c.value))

    def to_dict(self):
        w = self.worst()
        return {"suite": self.suite, "passed": self.passed, "n_checks": len(self.checks),
                "worst": None if w is None else w.to_dict(),
                "info": self.info, "checks": [c.to_dict() for c in self.checks]}


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None:
        env = os.environ.get("HYPER3B_JOBS")
        jobs = int(env) if env else 1
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    return jobs


def fan_out(fn, items, jobs: int = 1):
    """Ordered map, optionally over a process pool."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------- harmonicity

def _harm_tree(K):
    worst, arg = 0.0, None
    for lab in bs.enumerate_tree_basis(K):
        f = bs.tree_function(lab)
        r = po.apply(po.Lap6, f).max_abs() / f.max_abs()
        if r >= worst:
            worst, arg = r, str(lab)
    return K, worst, arg


def _harm_sym(K):
    worst = 0.0
    for sf in tr.sym_basis(K):
        worst = max(worst, po.apply(po.Lap6, sf.polynomial).max_abs() / sf.polynomial.max_abs())
    return K, worst


def suite_harmonicity(K_max=4, tol=1e-10, jobs=1) -> SuiteResult:
    res = SuiteResult("harmonicity")
    for K, w, arg in fan_out(_harm_tree, range(K_max + 1), jobs):
        res.checks.append(Check(f"tree K={K} (worst {arg})", w, tol))
    for K, w in fan_out(_harm_sym, range(K_max + 1), jobs):
        res.checks.append(Check(f"symmetrized K={K}", w, tol))
    return res


# ---------------------------------------------------------------- commutators

def _d(a, b):
    return 1.0 if a == b else 0.0


def commutator_relations(literal: bool = False):
    """[(name, op1, op2, [(coef, op), ...])] as operator identities.

    literal=True returns the uncorrected forms of the general relations and of
    the angular-momentum closure, which are expected to fail.
    """
    B, L, Lk = po.B, po.L, po.Lk
    rels = []
    I3 = range(1, 4)
    h = 0.5 if literal else 0.5j
    for i, k, j, l in itertools.product(I3, I3, I3, I3):
        rels.append((f"[B{i}{k},B{j}{l}]", B(i, k), B(j, l),
                     [(h * _d(k, j), L(i, l)), (-h * _d(i, l), L(j, k)),
                      (0.5j * _d(k, l), L(i, j)), (-0.5j * _d(i, j), L(l, k))]))
        last = B(i, k) if literal else B(k, l)
        rels.append((f"[B{i}{k},L{j}{l}]", B(i, k), L(j, l),
                     [(0.5j * _d(k, j), B(i, l)), (-0.5j * _d(i, l), B(j, k)),
                      (-0.5j * _d(k, l), B(i, j)), (0.5j * _d(i, j), last)]))
    if literal:
        rels.append(("[L2,L3]=-iL2", Lk(2), Lk(3), [(-1j, Lk(2))]))
        return rels
    rels += [
        ("[L1,L2]=-iL3", Lk(1), Lk(2), [(-1j, Lk(3))]),
        ("[L2,L3]=-iL1", Lk(2), Lk(3), [(-1j, Lk(1))]),
        ("[L3,L1]=-iL2", Lk(3), Lk(1), [(-1j, Lk(2))]),
        ("[B12,B11]=-iL12", B(1, 2), B(1, 1), [(-1j, L(1, 2))]),
        ("[B12,B22]=iL12", B(1, 2), B(2, 2), [(1j, L(1, 2))]),
        ("[B11,L12]=iB12", B(1, 1), L(1, 2), [(1j, B(1, 2))]),
        ("[B22,L12]=-iB12", B(2, 2), L(1, 2), [(-1j, B(1, 2))]),
        ("[B12,L12]=-i/2(B11-B22)", B(1, 2), L(1, 2), [(-0.5j, B(1, 1)), (0.5j, B(2, 2))]),
    ]
    for i, k in itertools.product(I3, I3):
        rels.append((f"[N,L{i}{k}]=0", po.N, L(i, k), []))
        rels.append((f"[N,B{i}{k}]=0", po.N, B(i, k), []))
    return rels


def relation_residual(op1, op2, rhs, max_degree=4) -> float:
    """max |([op1, op2] - rhs) m| over all monomials m of degree 1..max_degree."""
    worst = 0.0
    for p in range(max_degree + 1):
        for q in range(max_degree + 1 - p):
            if p + q == 0:
                continue
            M1 = po.operator_matrix(op1, p, q)
            M2 = po.operator_matrix(op2, p, q)
            D = M1 @ M2 - M2 @ M1
            for c, o in rhs:
                if c != 0:
                    D = D - c * po.operator_matrix(o, p, q)
            worst = max(worst, float(np.abs(D).max()) if D.size else 0.0)
    return worst


def suite_commutators(K_max=4, tol=1e-11, jobs=1) -> SuiteResult:
    res = SuiteResult("commutators")
    for name, o1, o2, rhs in commutator_relations():
        res.checks.append(Check(name, relation_residual(o1, o2, rhs, K_max), tol))
    worst_literal = max(relation_residual(o1, o2, rhs, min(K_max, 2))
                        for _, o1, o2, rhs in commutator_relations(literal=True))
    res.checks.append(Check("uncorrected general forms (expected to fail)", worst_literal,
                            tol, informational=True))
    return res


# ---------------------------------------------------------------- orthonormality

def _ortho(K):
    labs = bs.enumerate_tree_basis(K)
    fs = [bs.tree_function(l) for l in labs]
    n = len(fs)
    G = np.array([[po.inner_product(fs[b], fs[a]) for b in range(n)] for a in range(n)])
    return K, float(np.abs(G - np.eye(n)).max())


def suite_orthonormality(K_max=4, tol=1e-10, jobs=1) -> SuiteResult:
    res = SuiteResult("orthonormality")
    for K, w in fan_out(_ortho, range(K_max + 1), jobs):
        res.checks.append(Check(f"tree Gram K={K}", w, tol))
    for K in range(0, K_max + 1, 2):
        w = 0.0
        for nu in bs.j0_nus(K):
            p = bs.j0_polynomial(K, nu)
            w = max(w, abs(po.inner_product(p, p) - bs.j0_norm2(K)) / bs.j0_norm2(K))
        res.checks.append(Check(f"J=0 harmonic norms K={K}", w, tol))
    return res


# ---------------------------------------------------------------- transform

def _transform_K(args):
    K, phis = args
    out = []
    for J in range(K + 1):
        if not bs.tree_pairs(K, J):
            continue
        for phi in phis:
            M = min(J, 1)
            Cj = tr.rotation_coefficient(K, J, M, phi, "jacobi").matrix
            Cd = tr.rotation_coefficient(K, J, M, phi, "dform").matrix
            Co = tr.rotation_coefficient(K, J, M, phi, "overlap").matrix
            out.append((K, J, phi, float(np.abs(Cj - Cd).max()), float(np.abs(Cj - Co).max()),
                        float(np.abs(Cj @ Cj.T - np.eye(len(Cj))).max())))
    return out


def suite_transform(K_max=4, tol=1e-10, jobs=1) -> SuiteResult:
    res = SuiteResult("transform")
    phis = (0.0, 0.37, 1.1, math.pi / 4, math.pi / 2)
    rows = [r for part in fan_out(_transform_K, [(K, phis) for K in range(K_max + 1)], jobs)
            for r in part]
    for name, idx in (("jacobi vs d-form", 3), ("jacobi vs overlap", 4), ("orthogonality", 5)):
        w = max(rows, key=lambda r: r[idx])
        res.checks.append(Check(f"{name} (worst K={w[0]} J={w[1]} phi={w[2]:.4g})", w[idx], tol))
    g = 0.0
    for K in range(min(K_max, 3) + 1):
        for J in range(K + 1):
            if not bs.tree_pairs(K, J):
                continue
            a, b = 0.3, 0.9
            Ca = tr.rotation_coefficient(K, J, 0, a).matrix
            Cb = tr.rotation_coefficient(K, J, 0, b).matrix
            Cab = tr.rotation_coefficient(K, J, 0, a + b).matrix
            g = max(g, float(np.abs(Ca @ Cb - Cab).max()))
    res.checks.append(Check("group property K<=3", g, tol))
    return res


# ---------------------------------------------------------------- omega blocks

def _omega_K(K):
    dims, resid, count = [], 0.0, 0
    for J in range(K + 1):
        if not bs.tree_pairs(K, J):
            continue
        for M in range(J, -J - 1, -1):
            for tn in range(-K, K + 1, 2):
                b = tr.omega_block(K, J, M, tn)
                if not b.basis:
                    continue
                sfs = tr.diagonalize_block(b)
                dims.append((J, M, tn, len(sfs)))
                count += len(sfs)
                for sf in sfs:
                    resid = max(resid, eigen_residual(sf))
    return K, dims, resid, count


def eigen_residual(sf) -> float:
    """Worst relative residual of the five eigen-relations (Lap6, L2, L3, N, Omega')."""
    f = sf.polynomial
    lab = sf.label
    nrm = f.max_abs()
    r = [po.apply(po.Lap6, f).max_abs(),
         (po.apply(po.L2, f) + f * (lab.J * (lab.J + 1))).max_abs(),
         (po.apply(po.L3, f) + f * lab.M).max_abs(),
         (po.apply(po.N, f) - f * lab.nu).max_abs(),
         (po.apply(po.Omega, f) * 1j - f * sf.omega).max_abs()]
    return max(r) / nrm


def suite_omega(K_max=4, tol=1e-9, jobs=1) -> SuiteResult:
    res = SuiteResult("omega")
    for K, dims, resid, count in fan_out(_omega_K, range(K_max + 1), jobs):
        res.checks.append(Check(f"eigen residual K={K}", resid, tol))
        res.checks.append(Check(f"count K={K} == n(K)={bs.degeneracy_total(K)}",
                                float(abs(count - bs.degeneracy_total(K))), 0.0))
        mx = max(d[3] for d in dims)
        if K < 4:
            res.checks.append(Check(f"K={K} blocks 1-dimensional (max {mx})", float(mx - 1), 0.0))
        res.info[f"K={K}"] = {"max_block": mx,
                              "blocks_gt1": sorted({(J, tn) for J, M, tn, d in dims if d > 1})}
    return res


# ---------------------------------------------------------------- dynamics

FREE_STATE = dy.DynState(0.6, 0.4, 0.3, 1.1, 0.5, 1.0, 0.1, -0.2, 0.15, 0.05, -0.1, 0.02)


def suite_dynamics(K_max=None, tol=1e-10, jobs=1) -> SuiteResult:
    res = SuiteResult("dynamics")
    ts = np.linspace(0, 100, 201)
    trj = dy.integrate(FREE_STATE, t_end=100, tol=tol, t_eval=ts)
    res.checks.append(Check(f"free run status {trj.status}", 0.0 if trj.ok else 1.0, 0.0))
    m = dy.monitors(trj)
    for j, name in enumerate(("energy", "|L|", "omega_classical")):
        rel = float(np.abs(m[:, j] - m[0, j]).max() / abs(m[0, j]))
        res.checks.append(Check(f"free {name} relative drift", rel, 1e-8))
    from .kinematics import parametrize
    z0, zd0 = dy.cartesian_state(FREE_STATE)
    hint = (FREE_STATE.shape(), FREE_STATE.frame())
    err = 0.0
    for t, y in zip(trj.t, trj.y):
        sh, fr = parametrize(z0 + t * zd0, hint=hint)
        hint = (sh, fr)
        err = max(err, float(np.abs(np.array([sh.a, sh.lam, fr.phi1, fr.theta, fr.phi2, sh.rho])
                                    - y[:6]).max()))
    res.checks.append(Check("Cartesian straight-line oracle", err, 1e-6))
    period = 2 * math.pi / math.sqrt(3)
    k = dy.integrate(dy.KeplerState(1.0, 0.0, 0.0, math.sqrt(3)), mode="kepler",
                     t_end=10 * period, tol=tol, t_eval=np.linspace(0, 10 * period, 400))
    res.checks.append(Check("Kepler circular radius drift", float(np.abs(k.y[:, 0] - 1).max()), 1e-6))
    k = dy.integrate(dy.KeplerState(1.0, 0.0, 0.0, 1.4), mode="kepler", t_end=20, tol=tol,
                     t_eval=np.linspace(0, 20, 400))
    _, cres = dy.fit_conic(k.y[:, 0] * np.cos(k.y[:, 1]), k.y[:, 0] * np.sin(k.y[:, 1]))
    res.checks.append(Check("Kepler elliptic conic fit", cres, 1e-6))
    p = dy.PotentialSpec("harmonic", 1.3)
    res.checks.append(Check("harmonic equilibrium residual",
                            dy.equilibrium_residual(dy.harmonic_equilibrium(1.3), p), 1e-12))
    return res


_RUNNERS = {
    "harmonicity": suite_harmonicity,
    "commutators": suite_commutators,
    "orthonormality": suite_orthonormality,
    "transform": suite_transform,
    "omega": suite_omega,
    "dynamics": suite_dynamics,
}


def run_suite(name: str, K_max: int = 4, tol: float | None = None, jobs: int = 1) -> SuiteResult:
    if name not in _RUNNERS:
        raise KeyError(f"unknown suite {name!r}")
    kw = {"K_max": K_max, "jobs": jobs}
    if tol is not None:
        kw["tol"] = tol
    t0 = time.perf_counter()
    res = _RUNNERS[name](**kw)
    res.seconds = time.perf_counter() - t0
    return res
