import json
import math

import pytest
from click.testing import CliRunner

from hyper3b.cli import main


@pytest.fixture
def run():
    r = CliRunner()

    def _run(*args, **kw):
        return r.invoke(main, [str(a) for a in args], catch_exceptions=False, **kw)
    return _run


def test_enumerate_counts(run):
    res = run("enumerate", "--K", 2)
    assert res.exit_code == 0
    d = json.loads(res.output)
    assert d["count"] == 20 and d["n_K"] == 20
    res = run("enumerate", "--K", 1, "--nu", 0.5, "--format", "csv")
    assert res.exit_code == 0
    assert len(res.output.strip().splitlines()) == 1 + 3
    res = run("enumerate", "--K", 3, "--basis", "tree", "--J", 1)
    assert all(l["J"] == 1 for l in json.loads(res.output)["labels"])


@pytest.mark.parametrize("args", [("enumerate", "--K", -1), ("enumerate", "--K", 2, "--J", 5),
                                  ("enumerate", "--K", 2, "--nu", 0.3),
                                  ("enumerate", "--K", 2, "--basis", "tree", "--nu", 1),
                                  ("transform", "coeffs", "--K", 2, "--J", 3, "--phi", 0.1),
                                  ("transform", "omega", "--K", 2, "--J", 1, "--nu", 0.5),
                                  ("verify", "nosuch")])
def test_usage_errors_exit_2(run, args):
    assert run(*args).exit_code == 2


def test_config_k_max(run, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"k_max": 3}')
    assert run("--config", cfg, "enumerate", "--K", 4).exit_code == 2
    assert run("--config", cfg, "enumerate", "--K", 3).exit_code == 0
    cfg.write_text('{"bogus": 1}')
    assert run("--config", cfg, "enumerate", "--K", 1).exit_code == 2


def test_verify_pass(run):
    res = run("verify", "omega", "--K-max", 3)
    assert res.exit_code == 0
    d = json.loads(res.output)
    assert d["passed"] and d["suite"] == "omega"


def test_verify_violation_exits_1(run):
    # a tolerance below round-off turns a passing suite into a reported violation
    res = run("verify", "harmonicity", "--K-max", 3, "--tol", 1e-30)
    assert res.exit_code == 1
    assert json.loads(res.output)["passed"] is False


def test_transform_coeffs_identity(run):
    res = run("transform", "coeffs", "--K", 1, "--J", 1, "--phi", 0)
    m = json.loads(res.output)["matrix"]
    assert res.exit_code == 0
    assert m[0][0] == pytest.approx(1) and m[1][1] == pytest.approx(1) and abs(m[0][1]) < 1e-14


def test_transform_omega(run):
    res = run("transform", "omega", "--K", 1, "--J", 1, "--nu", 0.5)
    d = json.loads(res.output)
    assert d["dimension"] == 1
    assert d["functions"][0]["omega"] == pytest.approx(0.75)


def test_simulate_kepler_and_export(run, tmp_path):
    init = tmp_path / "circular.json"
    init.write_text(json.dumps({"rho": 1.0, "psi": 0.0, "drho": 0.0, "dpsi": math.sqrt(3)}))
    out = tmp_path / "traj.csv"
    res = run("simulate", "kepler", "--init", init, "--t-end", 36.28, "--tol", 1e-10, "--out", out)
    assert res.exit_code == 0
    rep = json.loads(res.output)
    assert rep["radius_drift"] <= 1e-6
    header = out.read_text().splitlines()[0].split(",")
    assert header == ["t", "a", "lambda", "phi1", "theta", "phi2", "rho", "da", "dlambda", "dphi1",
                      "dtheta", "dphi2", "drho", "energy", "L", "omega_classical"]
    png = tmp_path / "e.png"
    res = run("export", "--in", out, "--plot", "energy", "--out", png)
    assert res.exit_code == 0 and png.stat().st_size > 0
    res = run("export", "--in", out, "--format", "json")
    assert json.loads(res.output)["columns"][0] == "t"


def test_simulate_bad_init(run, tmp_path):
    init = tmp_path / "bad.json"
    init.write_text('{"a": 1}')
    assert run("simulate", "free", "--init", init, "--t-end", 1).exit_code == 2
    init.write_text('{"a": 0.7, "lambda": 0.3, "phi1": 0.2, "theta": 0.9, "phi2": 0.4, "rho": 1.0, '
                    '"da": 0.05, "dlambda": 0.3, "dphi1": 0.1, "dtheta": 0.1, "dphi2": 0.0, "drho": 0.0}')
    assert run("simulate", "planar", "--init", init, "--t-end", 1).exit_code == 2
    assert run("simulate", "free", "--init", init, "--t-end", -1).exit_code == 2


def test_simulate_singular_start_exits_1(run, tmp_path):
    init = tmp_path / "s.json"
    init.write_text('{"a": 0.6, "lambda": 0.3, "phi1": 0.2, "theta": 0.0, "phi2": 0.4, "rho": 1.0}')
    res = run("simulate", "free", "--init", init, "--t-end", 1)
    assert res.exit_code == 1
    assert json.loads(res.output)["status"] == "singular"


def test_basis_dump(run):
    res = run("basis", "tree", "--K", 1, "--j1", 1, "--j2", 0, "--J", 1, "--M", 1)
    assert res.exit_code == 0 and len(json.loads(res.output)["terms"]) == 4
    res = run("basis", "sym", "--K", 1, "--J", 1, "--M", 1, "--nu", -0.5)
    assert json.loads(res.output)["omega"] == pytest.approx(-0.75)
    assert run("basis", "tree", "--K", 1).exit_code == 2


def test_jobs_env(run, monkeypatch):
    monkeypatch.setenv("HYPER3B_JOBS", "x")
    assert run("enumerate", "--K", 0).exit_code == 2
    monkeypatch.setenv("HYPER3B_JOBS", "2")
    res = run("verify", "harmonicity", "--K-max", 2)
    assert res.exit_code == 0
