import json
import subprocess
import sys

import numpy as np
import pytest

from hyper3b import _io
from hyper3b import verify as vf


@pytest.mark.parametrize("suite", ["harmonicity", "commutators", "orthonormality", "transform", "omega"])
def test_suites_pass_small(suite):
    res = vf.run_suite(suite, K_max=3)
    assert res.passed, res.worst()


def test_dynamics_suite():
    assert vf.run_suite("dynamics").passed


def test_literal_commutators_fail():
    worst = max(vf.relation_residual(o1, o2, rhs, 2) for _, o1, o2, rhs in vf.commutator_relations(literal=True))
    assert worst > 0.5


def test_fan_out_order_and_jobs():
    assert vf.fan_out(abs, [-3, 1, -2], jobs=2) == [3, 1, 2]
    a = vf.run_suite("harmonicity", K_max=3, jobs=1).to_dict()
    b = vf.run_suite("harmonicity", K_max=3, jobs=2).to_dict()
    assert a == b
    with pytest.raises(ValueError):
        vf.resolve_jobs(0)
    with pytest.raises(KeyError):
        vf.run_suite("nosuch")


def test_dumps_deterministic():
    obj = {"b": 0.1, "a": [1, 2.5, complex(1, -2)], "c": None, "d": np.float64(1 / 3), "e": True}
    s = _io.dumps(obj)
    assert s == _io.dumps(dict(reversed(list(obj.items()))))
    d = json.loads(s)
    assert list(d) == ["a", "b", "c", "d", "e"]
    assert d["d"] == 1 / 3  # 17 significant digits round-trip
    assert d["a"][2] == [1, -2]
    with pytest.raises(TypeError):
        _io.dumps({"x": object()})


def test_csv_roundtrip(tmp_path):
    p = tmp_path / "x.csv"
    _io.write_text(p, _io.csv_text(["t", "v"], [[0.0, 1 / 3], [1.0, 2.0]]))
    assert b"\r" not in p.read_bytes()
    header, rows = _io.read_csv(p)
    assert header == ["t", "v"] and rows[0][1] == 1 / 3


def test_backend_override():
    code = "import hyper3b._backend as b; print(b.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={"HYPER3B_BACKEND": "python", "PATH": ""},
                         capture_output=True, text=True)
    assert out.stdout.strip() == "python"


def test_backends_agree():
    from hyper3b import _backend, _core_py
    from hyper3b import polyops as po
    from hyper3b.basis import TreeLabel, tree_function
    f = tree_function(TreeLabel(4, 2, 2, 2, 1))
    g = tree_function(TreeLabel(4, 1, 1, 2, 1))
    kf, cf = f.arrays()
    kg, cg = g.arrays()
    assert _core_py.sphere_inner(kf, cf, kf, cf) == pytest.approx(_backend.sphere_inner(kf, cf, kf, cf), rel=1e-13)
    k1, c1 = _core_py.poly_mul(kf, cf, kg, cg)
    k2, c2 = _backend.poly_mul(kf, cf, kg, cg)
    assert po.Polynomial6.from_arrays(k1, c1).allclose(po.Polynomial6.from_arrays(k2, c2), tol=1e-14)
    betas = np.linspace(0, 3, 5)
    assert np.allclose(_core_py.dsum_array(2.5, 1.5, 0.5, betas), _backend.dsum_array(2.5, 1.5, 0.5, betas))
