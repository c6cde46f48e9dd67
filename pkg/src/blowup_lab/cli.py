"""Command-line front end: ``rv``, ``profile``, ``solve`` and ``verify``.

Exit codes: 0 success, 1 a requested verdict failed, 2 usage or config
error, 3 domain or numerical error, 4 existence-gate refusal.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import json
import math
import os
import sys
from importlib import resources

import jsonschema
import numpy as np
import sympy as sp

from . import __version__
from .errors import BlowupLabError, ConfigError, ExistenceGateError, ValidationError
from .funcatalog import CATALOG_F, catalog_f, catalog_weight
from .functions import U, ScalarFunction
from .geometry import Omega0, make_domain
from .rvcalc import geometric_grid, karamata_residual, keller_osserman, normalised_sv_check, rv_index_estimate

F_POSITIONAL = {"power": ["p"], "exp_rho": ["rho"], "power_exp": ["beta", "rho", "alpha"], "exp2_cos": ["junction"]}
W_POSITIONAL = {"power": ["theta"], "sin_power": ["theta"], "power_log": ["theta", "alpha"],
                "power_itlog": ["theta", "alpha", "m"], "power_expgamma": ["theta", "gamma"]}

DEFAULTS = {
    "problem": {"omega0": None},
    "solver": {"mesh": {"n": 4096, "grading_q": 3.0}, "M0": 4.0, "M_max": None, "k_max": 20, "tol_interior": 1e-6,
               "d_min": 0.1, "newton": {"tol": 1e-10, "max_iter": 100}},
    "verify": {"lemma_pro": {"enabled": False, "t_hi": 1e-2, "t_lo": 1e-8, "per_decade": 1, "final_threshold": 1e-2},
               "rate_fit": {"enabled": True, "d_samples": None, "d_cut_factor": 100.0, "final_threshold": 0.05},
               "subsuper": None, "corollary": False, "uniqueness": False},
    "output": {"dir": "blowup_out", "formats": ["csv", "json"]},
}


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def parse_named(text: str, positional: dict | None = None):
    """``"name:1,2"`` or ``"name:k=v,..."`` to ``(name, params)``."""
    name, _, rest = text.partition(":")
    name = name.strip()
    if not name:
        raise ConfigError(f"missing name in {text!r}")
    params: dict = {}
    keys = (positional or {}).get(name, [])
    if rest.strip():
        for i, item in enumerate(rest.split(",")):
            k, eq, v = item.partition("=")
            try:
                if eq:
                    params[k.strip()] = float(v)
                elif i < len(keys):
                    params[keys[i]] = float(k)
                else:
                    raise ConfigError(f"too many positional parameters for {name!r}")
            except ValueError:
                raise ConfigError(f"bad parameter {item!r} in {text!r}") from None
    return name, params


def parse_t(text: str, per_decade: int = 1) -> np.ndarray:
    """``"1e-2:1e-8"`` (geometric, inclusive) or a single value."""
    try:
        if ":" in text:
            a, b = (float(v) for v in text.split(":"))
            return geometric_grid(min(a, b), max(a, b), per_decade)[::-1]
        return np.array([float(text)])
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None


def rv_function(text: str) -> ScalarFunction:
    """Test functions for the ``rv`` subcommands, or any catalogued ``f``."""
    name, p = parse_named(text, {"power": ["p"], "power_log": ["rho", "alpha"], "log": ["alpha"],
                                 "exp_log_gamma": ["gamma"], "exp_rho": ["rho"],
                                 "power_exp": ["beta", "rho", "alpha"]})
    n = sp.nsimplify
    if name == "power":
        return ScalarFunction(U ** n(p.get("p", 1.0)), 0.0, text)
    if name == "power_log":
        return ScalarFunction(U ** n(p.get("rho", 1.0)) * sp.log(U) ** n(p.get("alpha", 1.0)), 1.0, text)
    if name == "log":
        return ScalarFunction(sp.log(U) ** n(p.get("alpha", 1.0)), 1.0, text)
    if name == "loglog":
        return ScalarFunction(sp.log(sp.log(U)), math.e, text)
    if name == "exp_log_gamma":
        return ScalarFunction(sp.exp(sp.log(U) ** n(p.get("gamma", 0.5))), 1.0, text)
    if name == "osc":
        y = sp.log(U) ** sp.Rational(1, 3)
        return ScalarFunction(sp.exp(y * sp.cos(y)), 1.0, text)
    if name in CATALOG_F:
        return catalog_f(name, p).f
    raise ConfigError(f"unknown function {name!r}")


def ko_target(text: str):
    name, p = parse_named(text, F_POSITIONAL)
    if name == "power":
        # any p > 0, including the divergent p <= 1
        q = sp.nsimplify(p.get("p", 1.0))
        return ScalarFunction(U ** (q + 1) / (q + 1), 0.0, f"F[{text}]")
    return catalog_f(name, p)


def fmt(v) -> str:
    return f"{float(v):.16e}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def dump_json(obj, path=None):
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def load_schema() -> dict:
    return json.loads(resources.files("blowup_lab").joinpath("data/scenario.schema.json").read_text())


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def load_config(path: str):
    """Read, validate and default-fill a scenario file. Returns ``(config, hash)``."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: (-len(e.absolute_path), [str(p) for p in e.absolute_path]))
    if errors:
        msgs = []
        for e in errors:
            where = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path)
            msgs.append(f"config invalid at {where}: {e.message}")
        raise ConfigError("\n".join(msgs))
    cfg = _merge(DEFAULTS, raw)
    if cfg["verify"]["lemma_pro"]["t_lo"] >= cfg["verify"]["lemma_pro"]["t_hi"]:
        raise ConfigError("config invalid at $.verify.lemma_pro: t_lo must be below t_hi")
    return cfg, config_hash(raw)


def build_problem(cfg: dict):
    from .bvp import ProblemSpec

    pr = cfg["problem"]
    try:
        f = catalog_f(pr["f"]["name"], pr["f"].get("params"))
        wp = dict(pr["weight"].get("params", {}))
        wp["theta"] = pr["weight"].get("theta", wp.get("theta", 0.0))
        K = catalog_weight(pr["weight"]["name"], wp)
        dom = pr["domain"]
        domain = make_domain(dom["kind"], dom.get("N", 1), dom.get("bounds", [0.0, 1.0]))
        om = pr.get("omega0")
        omega0 = Omega0(float(om["lo"]), float(om["hi"])) if om else None
        return ProblemSpec(float(pr["a"]), f, K, domain, omega0)
    except ValidationError as exc:
        raise ConfigError(f"config invalid at $.problem: {exc}") from None


# ---------------------------------------------------------------------------
# rv
# ---------------------------------------------------------------------------

def cmd_rv(args) -> int:
    out = sys.stdout
    if args.what == "ko":
        r = keller_osserman(ko_target(args.fn))
        val = float(f"{r.value:.12g}") if math.isfinite(r.value) else r.value
        out.write(f"{r.verdict} value={val}\n")
        return 0
    R = rv_function(args.fn)
    lo, hi = (float(v) for v in args.grid.split(":"))
    grid = geometric_grid(lo, hi, args.per_decade)
    w = csv.writer(out, lineterminator="\n")
    if args.what == "index":
        est = rv_index_estimate(R, args.xi, grid)
        w.writerow(["u", "rho_hat"])
        for u, r in zip(est.u, est.rho_hat):
            w.writerow([fmt(u), fmt(r)])
        out.write(f"# index ~ {est.rho:.10g}  band = [{est.band[0]:.6g}, {est.band[1]:.6g}]"
                  f"{'  (grid truncated by overflow)' if est.truncated else ''}\n")
    elif args.what == "sv":
        chk = normalised_sv_check(R, grid, args.threshold)
        w.writerow(["u", "r"])
        for u, r in zip(chk.u, chk.r):
            w.writerow([fmt(u), fmt(r)])
        out.write(f"# verdict: {'pass' if chk.verdict else 'fail'}\n")
    elif args.what == "karamata":
        us = [float(v) for v in args.u.split(",")]
        w.writerow(["u", "ratio", "limit", "residual"])
        for u in us:
            k = karamata_residual(R, args.rho, args.j, u)
            w.writerow([fmt(u), fmt(k.ratio), fmt(k.limit), fmt(k.residual)])
    return 0


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------

def cmd_profile(args) -> int:
    from .profile import h_table, lemma_pro_verify, profile_table

    fname, fp = parse_named(args.f, F_POSITIONAL)
    wname, wp = parse_named(args.weight, W_POSITIONAL)
    try:
        f = catalog_f(fname, fp)
        K = catalog_weight(wname, wp)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    t = parse_t(args.t, args.per_decade)
    if args.h:
        table = h_table(f, K, t)
    else:
        if f.branch == "regular":
            raise ValidationError(f"{f.name} is on the regular branch: use `profile --h`")
        table = profile_table(f, K, t)
    if args.out:
        table.to_csv(args.out)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(table.COLUMNS)
        for row in table.rows():
            w.writerow([fmt(v) for v in row])
    if not args.verify:
        return 0
    if args.h:
        raise ValidationError("--verify checks the limits of Phi; it does not apply with --h")
    checks = lemma_pro_verify(f, K, t, args.threshold, table=table)
    for c in checks:
        sys.stderr.write(f"{'PASS' if c.verdict else 'FAIL'} ({c.key}) {c.label}: limit {c.limit:.6g}, "
                         f"final residual {c.residuals[-1]:.3e}\n")
    if args.report:
        dump_json({"f": f.name, "weight": K.name, "theta": K.theta, "checks": [c.as_dict() for c in checks]},
                  args.report)
    return 0 if all(c.verdict for c in checks) else 1


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _record(name, anchor, series, ok, **details):
    verdict = ok if isinstance(ok, str) else ("pass" if ok else "fail")
    return {"name": name, "anchor": anchor, "residual_series": [float(v) for v in series], "verdict": verdict,
            "details": details}


def run_scenario(cfg: dict, chash: str, quiet: bool = False) -> int:
    from .bvp import (boundary_rate_fit, graded_mesh, sandwich_check, solve_large, subsuper_residual,
                      uniqueness_probe)
    from .profile import lemma_pro_verify, rate_predict

    p = build_problem(cfg)
    p.check_existence()
    certs = p.certificates()
    s = cfg["solver"]
    mesh = graded_mesh(p.domain, s["mesh"]["n"], s["mesh"]["grading_q"])
    kw = dict(tol_interior=s["tol_interior"], d_min=s["d_min"], M0=s["M0"], k_max=s["k_max"], M_max=s["M_max"],
              newton_tol=s["newton"]["tol"], newton_max_iter=s["newton"]["max_iter"])
    res = solve_large(p, mesh=mesh, **kw)
    sol = res.solution
    # a user-set M_max is a requested stopping level, not a failure to converge
    at_cap = s["M_max"] is not None and res.report["schedule"][-1] >= s["M_max"]
    stop = "tol_interior" if res.converged else ("M_max" if at_cap else "schedule exhausted")
    records = [_record("continuation", "monotone convergence of u_M as M grows", res.interior_changes,
                       (res.converged or at_cap) and res.monotone, converged=res.converged, stopped_by=stop,
                       monotone=res.monotone, monotonicity_violation=res.monotonicity_violation)]
    v = cfg["verify"]
    pred = rate_predict(p.f.branch, p.f, p.weight)
    rf = v["rate_fit"]
    if rf["enabled"]:
        fit = boundary_rate_fit(sol, pred, rf["d_samples"], rf["final_threshold"], cut_factor=rf["d_cut_factor"])
        records.append(_record("rate_fit", "u(d) / predicted rate -> 1 as d -> 0", fit.ratio - 1.0, fit.verdict,
                               **fit.as_dict()))
    if v["corollary"]:
        if pred.corollary_constant is None:
            records.append(_record("corollary_fit", "u(d) / C (log_m(1/d))^alpha -> 1", [], "inconclusive",
                                   note="no iterated-log form for this nonlinearity"))
        else:
            fit = boundary_rate_fit(sol, pred.corollary, rf["d_samples"], rf["final_threshold"],
                                    cut_factor=rf["d_cut_factor"])
            records.append(_record("corollary_fit", "u(d) / C (log_m(1/d))^alpha -> 1", fit.ratio - 1.0,
                                   fit.verdict, constant=pred.corollary_constant, **fit.as_dict()))
    lp = v["lemma_pro"]
    if lp["enabled"]:
        t = geometric_grid(lp["t_lo"], lp["t_hi"], lp["per_decade"])[::-1]
        for c in lemma_pro_verify(p.f, p.weight, t, lp["final_threshold"]):
            records.append(_record(f"limit_{c.key}", c.anchor, c.residuals, c.verdict, label=c.label,
                                   limit=c.limit, t=list(c.t)))
    ss = v["subsuper"]
    if ss:
        for sigma in ss["sigma_list"]:
            reps = {side: subsuper_residual(p, sigma, ss["epsilon0"], side, ss.get("delta")) for side in "+-"}
            for side, anchor in (("+", "supersolution: residual <= 0"), ("-", "subsolution: residual >= 0")):
                r = reps[side]
                series = [float(r.residual.max() if side == "+" else -r.residual.min())] if r.certified else []
                records.append(_record(f"subsuper{side}:sigma={sigma:g}", anchor, series, r.certified,
                                       vartheta=r.vartheta, delta=r.delta, warnings=r.warnings,
                                       violations=r.violations))
            if all(r.certified for r in reps.values()):
                delta = min(r.delta for r in reps.values())
                sw = sandwich_check(p, sol, ss["epsilon0"], sigma, delta)
                records.append(_record(f"sandwich:sigma={sigma:g}", "u_- <= u <= u_+ near the boundary",
                                       [sw["slack"]], sw["verdict"], **sw))
    if v["uniqueness"]:
        kw_u = dict(kw)
        kw_u.pop("d_min")
        probe = uniqueness_probe(p, d_min=s["d_min"], mesh=mesh, **kw_u)
        records.append(_record("uniqueness", "three starting iterates reach the same solution",
                               [probe.discrepancy], probe.discrepancy <= 1e-6, starts=probe.starts,
                               converged=probe.converged))
    counts = {k: sum(r["verdict"] == k for r in records) for k in ("pass", "fail", "inconclusive")}
    out = cfg["output"]
    os.makedirs(out["dir"], exist_ok=True)
    if "csv" in out["formats"]:
        bvals = np.asarray(p.b(sol.x), float) * np.ones_like(sol.x)
        with open(os.path.join(out["dir"], "solution.csv"), "w", newline="") as fh:
            fh.write(f"# config_sha256={chash}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "d", "u", "b", "residual"])
            for row in zip(sol.x, sol.d, sol.u, bvals, sol.residual):
                w.writerow([fmt(v) for v in row])
    if "json" in out["formats"]:
        report = {
            "config_hash": chash,
            "config": cfg,
            "problem": {"f": p.f.name, "branch": p.f.branch, "weight": p.weight.name, "theta": p.weight.theta,
                        "a": p.a, "notes": p.f.notes},
            "gates": dict(p.gates, **certs),
            "convergence": res.report,
            "u_max_interior": float(sol.u[sol.d >= s["d_min"]].max()),
            "checks": records,
            "summary": dict(counts, config_hash=chash),
        }
        dump_json(report, os.path.join(out["dir"], "report.json"))
    if not quiet:
        for r in records:
            print(f"{r['verdict'].upper():<12} {r['name']}")
        print(f"outputs in {out['dir']} (config {chash[:12]})")
    return 0 if counts["fail"] == 0 and counts["inconclusive"] == 0 else 1


def cmd_solve(args) -> int:
    cfg, chash = load_config(args.config)
    if args.out:
        cfg["output"]["dir"] = args.out
    return run_scenario(cfg, chash, args.quiet)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    from .acceptance import default_suite, run_suite

    if args.suite:
        try:
            with open(args.suite) as fh:
                suite = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read suite: {exc}") from None
        if not isinstance(suite, dict) or not isinstance(suite.get("criteria", []), list):
            raise ConfigError("suite must be an object with a 'criteria' list")
    else:
        suite = default_suite()
    if args.only:
        keep = set(args.only.split(","))
        suite = dict(suite, criteria=[c for c in suite.get("criteria", []) if str(c.get("id")) in keep])
    report = run_suite(suite)
    report["summary"]["suite_hash"] = config_hash(suite)
    for r in report["records"]:
        print(f"{r['verdict'].upper():<5} [{r['id']}] {r['name']} ({r['runtime']:.1f} s)")
    s = report["summary"]
    print(f"{s['pass']} pass, {s['fail']} fail, {s['inconclusive']} inconclusive")
    if args.report:
        dump_json(report, args.report)
    return 0 if s["fail"] == 0 and s["inconclusive"] == 0 else 1


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blowup-lab", description="Boundary blow-up rates for -Lap u = a u - b(x) f(u).")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    rv = sub.add_parser("rv", help="regular-variation tools")
    rv.add_argument("what", choices=["index", "sv", "karamata", "ko"])
    rv.add_argument("--fn", required=True, help='function, e.g. "power_log:3,1" or "expm1"')
    rv.add_argument("--xi", type=float, default=2.0)
    rv.add_argument("--grid", default="1e2:1e100", help="lo:hi of the geometric grid")
    rv.add_argument("--per-decade", type=int, default=1)
    rv.add_argument("--threshold", type=float, default=1e-2)
    rv.add_argument("--rho", type=float, default=0.0)
    rv.add_argument("--j", type=float, default=-2.0)
    rv.add_argument("--u", default="1e4,1e6,1e8", help="comma-separated evaluation points")
    rv.set_defaults(func=cmd_rv)

    pf = sub.add_parser("profile", help="tabulate Phi (or h with --h)")
    pf.add_argument("--f", required=True)
    pf.add_argument("--weight", default="power:0")
    pf.add_argument("--t", default="1e-2:1e-8", help="hi:lo grid or a single value")
    pf.add_argument("--per-decade", type=int, default=1)
    pf.add_argument("--h", action="store_true", help="regular branch profile h")
    pf.add_argument("--verify", action="store_true", help="check the six limits of Phi")
    pf.add_argument("--threshold", type=float, default=1e-2)
    pf.add_argument("--out")
    pf.add_argument("--report")
    pf.set_defaults(func=cmd_profile)

    sv = sub.add_parser("solve", help="solve a scenario config")
    sv.add_argument("config")
    sv.add_argument("--out", help="override output.dir")
    sv.add_argument("--quiet", action="store_true")
    sv.set_defaults(func=cmd_solve)

    vf = sub.add_parser("verify", help="run an acceptance suite")
    vf.add_argument("suite", nargs="?", help="suite JSON (default: built-in suite)")
    vf.add_argument("--only", help="comma-separated criterion ids")
    vf.add_argument("--report")
    vf.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ExistenceGateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except BlowupLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
