"""hyper3b command line: enumerate, verify, transform, simulate, export, basis.

Exit codes: 0 success, 1 a check or run failed, 2 bad arguments.
"""
from __future__ import annotations

import json
import math
import os
import sys

import click
import numpy as np

from . import _io
from . import basis as bs
from . import dynamics as dy
from . import transform as tr
from . import verify as vf

DEFAULT_CONFIG = {"k_max": 8, "tolerances": {}, "jobs": None}

TRAJ_COLUMNS = ["t", "a", "lambda", "phi1", "theta", "phi2", "rho",
                "da", "dlambda", "dphi1", "dtheta", "dphi2", "drho",
                "energy", "L", "omega_classical"]


class Ctx:
    def __init__(self, config, jobs):
        self.config = config
        self.jobs = jobs


def _fail_usage(msg):
    raise click.UsageError(msg)


def _load_config(path):
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except (OSError, ValueError) as exc:
            _fail_usage(f"cannot read config {path}: {exc}")
        if not isinstance(user, dict):
            _fail_usage("config must be a JSON object")
        unknown = set(user) - set(DEFAULT_CONFIG)
        if unknown:
            _fail_usage(f"unknown config keys: {sorted(unknown)}")
        cfg.update(user)
    return cfg


def _emit(text, out):
    if out:
        _io.write_text(out, text)
    else:
        click.echo(text, nl=False)


def _two_nu(nu, K=None):
    if nu is None:
        return None
    tn = round(2 * nu)
    if abs(2 * nu - tn) > 1e-9:
        _fail_usage(f"nu must be a multiple of 1/2, got {nu}")
    return tn


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="JSON config (k_max, tolerances, jobs); flags override.")
@click.option("--jobs", type=click.IntRange(min=1), default=None,
              help="Worker processes (fallback: HYPER3B_JOBS, then config, then 1).")
@click.pass_context
def main(ctx, config_path, jobs):
    """Hyperspherical harmonics and classical dynamics for three equal masses."""
    cfg = _load_config(config_path)
    if jobs is None:
        env = os.environ.get("HYPER3B_JOBS")
        if env:
            try:
                jobs = int(env)
            except ValueError:
                _fail_usage(f"HYPER3B_JOBS must be an integer, got {env!r}")
        elif cfg.get("jobs"):
            jobs = int(cfg["jobs"])
        else:
            jobs = 1
    if jobs < 1:
        _fail_usage("jobs must be >= 1")
    ctx.obj = Ctx(cfg, jobs)


# ---------------------------------------------------------------- enumerate

def _sym_rows(K, J, M, two_nu):
    rows = []
    Js = range(K + 1) if J is None else [J]
    for JJ in Js:
        if not bs.tree_pairs(K, JJ):
            continue
        Ms = range(JJ, -JJ - 1, -1) if M is None else [M]
        for MM in Ms:
            if abs(MM) > JJ:
                continue
            nus = range(-K, K + 1, 2) if two_nu is None else [two_nu]
            for tn in nus:
                if abs(tn) > K or (K - tn) % 2:
                    continue
                b = tr.omega_block(K, JJ, MM, tn)
                d = tr.block_dimension(b) if b.basis else 0
                for idx in range(d):
                    rows.append({"K": K, "J": JJ, "M": MM, "nu": tn / 2, "omega_index": idx,
                                 "block_dim": d, "n_K_nu": bs.degeneracy(K, tn / 2)})
    return rows


def _tree_rows(K, J, M):
    rows = []
    for lab in bs.enumerate_tree_basis(K, J, M):
        rows.append({"K": lab.K, "j1": lab.j1, "j2": lab.j2, "J": lab.J, "M": lab.M})
    return rows


@main.command("enumerate")
@click.option("--K", "K", type=int, required=True)
@click.option("--J", "J", type=int, default=None)
@click.option("--M", "M", type=int, default=None)
@click.option("--nu", type=float, default=None, help="N eigenvalue filter (symmetrized basis).")
@click.option("--basis", "which", type=click.Choice(["sym", "tree"]), default="sym")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def enumerate_cmd(obj, K, J, M, nu, which, fmt, out):
    """List basis labels of degree K with degeneracies."""
    kmax = int(obj.config["k_max"])
    if K < 0 or K > kmax:
        _fail_usage(f"K must be in 0..{kmax}")
    if J is not None and (J < 0 or J > K):
        _fail_usage("J must be in 0..K")
    if M is not None and J is not None and abs(M) > J:
        _fail_usage("|M| must be <= J")
    tn = _two_nu(nu)
    if which == "tree":
        if tn is not None:
            _fail_usage("--nu applies to the symmetrized basis only")
        rows = _tree_rows(K, J, M)
        header = ["K", "j1", "j2", "J", "M"]
    else:
        rows = _sym_rows(K, J, M, tn)
        header = ["K", "J", "M", "nu", "omega_index", "block_dim", "n_K_nu"]
    if fmt == "csv":
        _emit(_io.csv_text(header, [[r[h] for h in header] for r in rows]), out)
    else:
        _emit(_io.dumps({"K": K, "basis": which, "count": len(rows), "n_K": bs.degeneracy_total(K),
                         "labels": rows}), out)


# ---------------------------------------------------------------- verify

@main.command()
@click.argument("suite", type=click.Choice(list(vf.SUITES)))
@click.option("--K-max", "K_max", type=click.IntRange(0, 8), default=4)
@click.option("--tol", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
def verify(obj, suite, K_max, tol, out):
    """Run an invariant suite; exit 1 on any violation."""
    if tol is None:
        tol = obj.config["tolerances"].get(suite)
    if tol is not None and not tol > 0:
        _fail_usage("tol must be positive")
    res = vf.run_suite(suite, K_max=K_max, tol=tol, jobs=obj.jobs)
    _emit(_io.dumps(res.to_dict()), out)
    sys.exit(0 if res.passed else 1)


# ---------------------------------------------------------------- transform

@main.group()
def transform():
    """Rotation coefficients and Omega blocks."""


@transform.command("coeffs")
@click.option("--K", "K", type=click.IntRange(0, 8), required=True)
@click.option("--J", "J", type=int, required=True)
@click.option("--M", "M", type=int, default=0)
@click.option("--phi", type=float, required=True)
@click.option("--form", type=click.Choice(["jacobi", "dform", "overlap"]), default="jacobi")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def transform_coeffs(K, J, M, phi, form, fmt, out):
    """Matrix C[(j1', j2'), (j1, j2)] of the rotation by phi."""
    if J < 0 or J > K or abs(M) > J:
        _fail_usage("need 0 <= J <= K and |M| <= J")
    try:
        rc = tr.rotation_coefficient(K, J, M, phi, form)
    except ValueError as exc:
        _fail_usage(str(exc))
    if fmt == "csv":
        rows = []
        for a, (k1, k2) in enumerate(rc.pairs):
            for b, (j1, j2) in enumerate(rc.pairs):
                rows.append([k1, k2, j1, j2, float(rc.matrix[a, b])])
        _emit(_io.csv_text(["j1p", "j2p", "j1", "j2", "coeff"], rows), out)
    else:
        _emit(_io.dumps(rc.to_dict()), out)


@transform.command("omega")
@click.option("--K", "K", type=click.IntRange(0, 8), required=True)
@click.option("--J", "J", type=int, required=True)
@click.option("--M", "M", type=int, default=None, help="Default: M = J.")
@click.option("--nu", type=float, required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def transform_omega(K, J, M, nu, fmt, out):
    """Eigenvalues of Omega' = i Omega in one (K, J, M, nu) block with component tables."""
    M = J if M is None else M
    tn = _two_nu(nu)
    if J < 0 or J > K or abs(M) > J:
        _fail_usage("need 0 <= J <= K and |M| <= J")
    if abs(tn) > K or (K - tn) % 2:
        _fail_usage("need |nu| <= K/2 and nu = K/2 mod 1")
    b = tr.omega_block(K, J, M, tn)
    sfs = tr.diagonalize_block(b) if b.basis else []
    if fmt == "csv":
        rows = []
        for sf in sfs:
            for (j1, j2), c in sf.components:
                rows.append([sf.label.omega_index, float(sf.omega), j1, j2, float(c.real), float(c.imag)])
        _emit(_io.csv_text(["omega_index", "omega", "j1", "j2", "re", "im"], rows), out)
    else:
        _emit(_io.dumps({
            "K": K, "J": J, "M": M, "nu": tn / 2, "dimension": len(sfs),
            "tags": [list(t) for t in b.tags],
            "functions": [{"omega_index": sf.label.omega_index, "omega": sf.omega,
                           "residual": vf.eigen_residual(sf),
                           "components": [{"j1": t[0], "j2": t[1], "coeff": c}
                                          for t, c in sf.components]} for sf in sfs]}), out)


# ---------------------------------------------------------------- simulate

def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, ValueError) as exc:
        _fail_usage(f"cannot read {path}: {exc}")


def _traj_rows(trj, p):
    mon = dy.monitors(trj, p)
    rows = []
    for t, y, m in zip(trj.t, trj.y, mon):
        s = dy.kepler_to_dynstate(y) if trj.mode == "kepler" else dy.DynState.from_y(y)
        rows.append([float(t), *map(float, s.y), float(m[0]), float(m[1]), float(m[2])])
    return rows, mon


@main.command()
@click.argument("mode", type=click.Choice(["free", "planar", "deforming", "harmonic", "kepler"]))
@click.option("--init", "init_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--t-end", type=float, required=True)
@click.option("--tol", type=float, default=1e-10)
@click.option("--samples", type=click.IntRange(min=2), default=201)
@click.option("--rho0", type=float, default=None, help="Harmonic equilibrium size (default from init or 1).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Trajectory CSV.")
@click.option("--report", type=click.Path(dir_okay=False), default=None, help="Report JSON (default stdout).")
def simulate(mode, init_path, t_end, tol, samples, rho0, out, report):
    """Integrate the equations of motion and report conservation monitors."""
    if not tol > 0:
        _fail_usage("tol must be positive")
    if not t_end > 0:
        _fail_usage("t-end must be positive")
    d = _read_json(init_path)
    if not isinstance(d, dict):
        _fail_usage("init must be a JSON object")
    try:
        if mode == "kepler":
            s0 = dy.KeplerState.from_dict(d) if "psi" in d else dy.KeplerState.from_dynstate(dy.DynState.from_dict(d))
            p = dy.PotentialSpec("newton")
        else:
            s0 = dy.DynState.from_dict(d)
            if mode == "harmonic":
                r0 = rho0 if rho0 is not None else float(d.get("rho0", 1.0))
                p = dy.PotentialSpec("harmonic", r0)
            else:
                p = dy.FREE
        ts = np.linspace(0.0, t_end, samples)
        trj = dy.integrate(s0, p, t_end, tol, mode=mode, t_eval=ts)
    except (KeyError, ValueError, dy.ConstraintViolationError) as exc:
        _fail_usage(f"invalid initial state: {exc}")
    except dy.SingularConfigurationError as exc:
        _emit(_io.dumps({"mode": mode, "status": "singular", "message": str(exc)}), report)
        sys.exit(1)
    rows, mon = _traj_rows(trj, p)
    if out:
        _io.write_text(out, _io.csv_text(TRAJ_COLUMNS, rows))
    rep = {"mode": mode, "status": trj.status, "message": trj.message, "samples": len(rows),
           "t_end_reached": float(trj.t[-1]) if len(trj.t) else 0.0,
           "steps": trj.nsteps, "rejected": trj.nrejected, "tol": tol}
    if len(mon):
        for j, name in enumerate(("energy", "L", "omega_classical")):
            ref = abs(mon[0, j])
            rep[f"{name}_initial"] = float(mon[0, j])
            rep[f"{name}_drift"] = float(np.abs(mon[:, j] - mon[0, j]).max())
            rep[f"{name}_rel_drift"] = rep[f"{name}_drift"] / ref if ref > 0 else rep[f"{name}_drift"]
        if mode == "kepler":
            rep["radius_drift"] = float(np.abs(trj.y[:, 0] - trj.y[0, 0]).max())
    _emit(_io.dumps(rep), report)
    sys.exit(0 if trj.ok else 1)


# ---------------------------------------------------------------- export

PLOTS = {"energy": "energy", "L": "L", "omega": "omega_classical", "rho": "rho",
         "shape": ("a", "lambda")}


@main.command()
@click.option("--in", "src", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None)
@click.option("--plot", type=click.Choice(sorted(PLOTS)), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def export(src, fmt, plot, out):
    """Convert a trajectory CSV to json/csv or render a static plot."""
    try:
        header, rows = _io.read_csv(src)
    except ValueError as exc:
        _fail_usage(str(exc))
    if "t" not in header:
        _fail_usage("input needs a 't' column")
    if plot:
        try:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            click.echo("plotting needs matplotlib (pip install hyper3b[plot])", err=True)
            sys.exit(1)
        cols = PLOTS[plot]
        cols = cols if isinstance(cols, tuple) else (cols,)
        missing = [c for c in cols if c not in header]
        if missing:
            _fail_usage(f"input lacks columns {missing}")
        data = np.array(rows).reshape(-1, len(header))
        t = data[:, header.index("t")]
        fig, ax = plt.subplots(figsize=(6, 4))
        for c in cols:
            y = data[:, header.index(c)]
            if c in ("energy", "L", "omega_classical"):
                y = y - y[0]
                c = f"{c} - initial"
            ax.plot(t, y, label=c)
        ax.set_xlabel("t")
        ax.legend()
        fig.tight_layout()
        path = out or os.path.splitext(src)[0] + f"_{plot}.png"
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
        click.echo(path)
        return
    fmt = fmt or "json"
    if fmt == "csv":
        _emit(_io.csv_text(header, rows), out)
    else:
        _emit(_io.dumps({"columns": header, "rows": rows}), out)


# ---------------------------------------------------------------- basis

@main.command("basis")
@click.argument("kind", type=click.Choice(["tree", "sym", "j0"]))
@click.option("--K", "K", type=click.IntRange(0, 8), required=True)
@click.option("--j1", type=int, default=None)
@click.option("--j2", type=int, default=None)
@click.option("--J", "J", type=int, default=0)
@click.option("--M", "M", type=int, default=0)
@click.option("--nu", type=float, default=None)
@click.option("--index", type=int, default=0, help="omega_index within the block (sym).")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def basis_cmd(kind, K, j1, j2, J, M, nu, index, out):
    """Dump one basis polynomial as sorted (exponents, coefficient) terms."""
    try:
        if kind == "tree":
            if j1 is None or j2 is None:
                _fail_usage("tree needs --j1 and --j2")
            lab = bs.TreeLabel(K, j1, j2, J, M)
            f = bs.tree_function(lab)
            meta = lab.to_dict()
        elif kind == "j0":
            if nu is None:
                _fail_usage("j0 needs --nu")
            tn = _two_nu(nu)
            f = bs.j0_polynomial(K, tn // 2 if tn % 2 == 0 else tn / 2)
            meta = {"K": K, "nu": nu}
        else:
            if nu is None:
                _fail_usage("sym needs --nu")
            tn = _two_nu(nu)
            lab = bs.SymLabel(K, J, M, tn, index)
            sfs = tr.diagonalize_block(tr.omega_block(K, J, M, tn))
            if index >= len(sfs):
                _fail_usage(f"block has {len(sfs)} functions")
            f = sfs[index].polynomial
            meta = {"K": K, "J": J, "M": M, "nu": tn / 2, "omega_index": index,
                    "omega": sfs[index].omega}
    except (bs.InvalidLabelError, ValueError) as exc:
        _fail_usage(str(exc))
    from .polyops import unpack
    terms = [{"exponents": list(unpack(k)), "coeff": c} for k, c in sorted(f.items())]
    meta["terms"] = terms
    _emit(_io.dumps(meta), out)


if __name__ == "__main__":
    main()
