import json
import math
import os

import numpy as np
import pytest

from blowup_lab.cli import load_config, main, parse_named, parse_t
from blowup_lab.errors import ConfigError

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def base_config(tmp_path, **problem):
    cfg = {"problem": {"a": 0.0, "f": {"name": "exp_rho", "params": {"rho": 1.0}},
                       "weight": {"name": "power", "theta": 0.0},
                       "domain": {"kind": "interval", "bounds": [0.0, 1.0]}},
           "solver": {"mesh": {"n": 1024}, "M_max": 30.0},
           "output": {"dir": str(tmp_path / "out")}}
    cfg["problem"].update(problem)
    return cfg


def test_parse_helpers():
    assert parse_named("power_log:3,1", {"power_log": ["rho", "alpha"]}) == ("power_log", {"rho": 3.0, "alpha": 1.0})
    assert parse_named("power_exp:alpha=2") == ("power_exp", {"alpha": 2.0})
    np.testing.assert_allclose(parse_t("1e-2:1e-4"), [1e-2, 1e-3, 1e-4])
    with pytest.raises(ConfigError):
        parse_named("power:1,2", {"power": ["p"]})


def test_rv_index(capsys):
    code, out, _ = run(["rv", "index", "--fn", "power_log:3,1", "--xi", "2"], capsys)
    last = [l for l in out.splitlines() if not l.startswith("#")][-1]
    assert code == 0 and abs(float(last.split(",")[1]) - 3.0) < 5e-3


@pytest.mark.parametrize("fn, expected", [("power:1", "diverges"), ("power:3", "converges value=2.0")])
def test_rv_ko(capsys, fn, expected):
    code, out, _ = run(["rv", "ko", "--fn", fn], capsys)
    assert code == 0 and out.strip().startswith(expected)


def test_rv_sv_and_karamata(capsys):
    code, out, _ = run(["rv", "sv", "--fn", "log"], capsys)
    assert code == 0 and out.strip().endswith("pass")
    code, out, _ = run(["rv", "karamata", "--fn", "power:2", "--rho", "2", "--j", "-5", "--u", "1e3"], capsys)
    assert code == 0 and abs(float(out.splitlines()[1].split(",")[3])) < 1e-10


def test_rv_unknown_function(capsys):
    code, _, err = run(["rv", "index", "--fn", "nope"], capsys)
    assert code == 2 and "unknown" in err


def test_profile_roundtrip_column(capsys):
    code, out, _ = run(["profile", "--f", "expm1", "--weight", "power:0", "--t", "1e-2:1e-8"], capsys)
    rows = [l.split(",") for l in out.splitlines()]
    assert code == 0 and rows[0][-1] == "residual" and len(rows) == 8
    assert max(float(r[-1]) for r in rows[1:]) <= 1e-9


def test_profile_closed_form(capsys):
    code, out, _ = run(["profile", "--f", "exp_rho:1", "--weight", "power:1", "--t", "0.1"], capsys)
    assert code == 0 and float(out.splitlines()[1].split(",")[1]) == pytest.approx(1.6e5, rel=1e-12)


def test_profile_regular_branch_error(capsys):
    code, _, err = run(["profile", "--f", "power:3", "--t", "0.1"], capsys)
    assert code == 3 and "regular branch: use `profile --h`" in err
    code, out, _ = run(["profile", "--f", "power:3", "--t", "0.1", "--h"], capsys)
    assert code == 0 and float(out.splitlines()[1].split(",")[1]) == pytest.approx(10 * math.sqrt(2))


def test_profile_out_of_range(capsys):
    code, _, err = run(["profile", "--f", "exp_rho:1", "--t", "5"], capsys)
    assert code == 3 and "beta" in err


def test_profile_verify_report(tmp_path, capsys):
    rep = tmp_path / "lim.json"
    code, _, err = run(["profile", "--f", "expm1", "--t", "1e-2:1e-8", "--verify", "--report", str(rep)], capsys)
    data = json.loads(rep.read_text())
    assert [c["key"] for c in data["checks"]] == list("abcdef")
    assert code == 1 and err.count("PASS") == 4


def test_solve_bieberbach_deterministic(tmp_path, capsys):
    path = write(tmp_path, base_config(tmp_path))
    assert run(["solve", path, "--quiet"], capsys)[0] == 0
    csv1 = (tmp_path / "out" / "solution.csv").read_bytes()
    js1 = (tmp_path / "out" / "report.json").read_bytes()
    assert run(["solve", path, "--quiet"], capsys)[0] == 0
    assert csv1 == (tmp_path / "out" / "solution.csv").read_bytes()
    assert js1 == (tmp_path / "out" / "report.json").read_bytes()
    report = json.loads(js1)
    assert csv1.decode().splitlines()[0] == f"# config_sha256={report['config_hash']}"
    a = np.loadtxt(tmp_path / "out" / "solution.csv", delimiter=",", skiprows=2)
    assert np.interp(0.5, a[:, 0], a[:, 2]) == pytest.approx(2.98315, abs=1e-3)
    assert [c["verdict"] for c in report["checks"]] == ["pass", "pass"]


def test_solve_gate_refusal(tmp_path, capsys):
    cfg = base_config(tmp_path, a=50.0, f={"name": "expm1"}, omega0={"lo": 0.25, "hi": 0.75})
    code, _, err = run(["solve", write(tmp_path, cfg)], capsys)
    assert code == 4 and "lambda_inf_1 ~ 39.48" in err
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("patch, where", [
    ({"problem": {"a": 0.0}}, "$.problem"),
    ({"solver": {"tol_interior": -1.0}}, "$.solver.tol_interior"),
    ({"verify": {"subsuper": {"epsilon0": 0.5, "sigma_list": [1e-3]}}}, "$.verify.subsuper.epsilon0"),
    ({"extra": 1}, "$"),
    ({"problem": {"a": 0, "f": {"name": "expm1", "bogus": 1}, "weight": {"name": "power"},
                  "domain": {"kind": "interval"}}}, "$.problem.f"),
])
def test_malformed_config(tmp_path, capsys, patch, where):
    code, _, err = run(["solve", write(tmp_path, patch)], capsys)
    assert code == 2 and f"config invalid at {where}" in err


def test_catalog_parameter_error_is_config_error(tmp_path, capsys):
    cfg = base_config(tmp_path, f={"name": "power", "params": {"p": 0.5}})
    code, _, err = run(["solve", write(tmp_path, cfg)], capsys)
    assert code == 2 and "p must be > 1" in err


def test_bad_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    assert run(["solve", str(p)], capsys)[0] == 2


def test_shipped_configs_validate():
    names = sorted(n for n in os.listdir(CONFIGS) if n.endswith(".json") and n != "malformed.json")
    assert names
    for n in names:
        load_config(os.path.join(CONFIGS, n))
    with pytest.raises(ConfigError):
        load_config(os.path.join(CONFIGS, "malformed.json"))


def test_verify_empty_suite(tmp_path, capsys):
    rep = tmp_path / "r.json"
    code, out, _ = run(["verify", write(tmp_path, {"criteria": []}), "--report", str(rep)], capsys)
    assert code == 0 and json.loads(rep.read_text())["records"] == []


def test_verify_wrong_constant_fails_one_record(tmp_path, capsys):
    suite = {"criteria": [
        {"id": "3", "name": "phi", "kind": "phi_closed_form", "params": {"cases": [[1, 0]]}},
        {"id": "4", "name": "h", "kind": "h_closed_form", "params": {"h_constant_theta0": 1.5}},
        {"id": "8", "name": "ko", "kind": "keller_osserman"},
    ]}
    rep = tmp_path / "r.json"
    code, _, _ = run(["verify", write(tmp_path, suite), "--report", str(rep)], capsys)
    verdicts = [r["verdict"] for r in json.loads(rep.read_text())["records"]]
    assert code == 1 and verdicts == ["pass", "fail", "pass"]


def test_verify_crash_is_recorded(tmp_path, capsys):
    suite = {"criteria": [{"id": "x", "kind": "no_such_check"}, {"id": "8", "kind": "keller_osserman"}]}
    rep = tmp_path / "r.json"
    run(["verify", write(tmp_path, suite), "--report", str(rep)], capsys)
    recs = json.loads(rep.read_text())["records"]
    assert [r["verdict"] for r in recs] == ["fail", "pass"] and "KeyError" in recs[0]["details"]["error"]


def test_usage_error_exit_2(capsys):
    assert main(["frobnicate"]) == 2
