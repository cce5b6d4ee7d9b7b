"""Batch command-line front end.

One subcommand per verification suite; every run writes a machine-readable
summary.json and a tabular report.csv into the output directory and exits
0 exactly when all checks pass their tolerances.  Identical configuration
and seed produce byte-identical summaries.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import csflow, models
from .conformal import (
    CutoffProfile,
    compact_profile,
    cone_equivalence_check,
    constant_profile,
    cutoff_squeeze,
    dilation_field,
    exponential_profile,
    ibp_check,
    lemma41_check,
    weight_check,
)
from .csflow import (
    AbelianLinearField,
    PolynomialSU2,
    PureGaugeSU2,
    cs_evaluate,
    decay_diagnostics,
    flow_integrate,
    identity_residual_ratio,
    load_model,
    trajectory_table,
)
from .exterior import random_form
from .fields import box_chart
from .instanton import (
    build_operator,
    cylinder_split_residual,
    instanton_projector,
    instanton_residual,
    project_instanton,
    projected_split_pair,
    random_split_pair,
    spectrum,
)
from .structures import (
    algebraic_suite,
    build_cylinder,
    catalog,
    verify_structure,
    verify_structure_convergence,
)

SCHEMA_VERSION = 1

FROZEN_SPECTRA = {
    "nk6": ((-1.0, 14), (2.0, 7)),
    "npg2": ((-1.0, 21), (3.0, 7)),
}


def _check(checks, name, identity, value, tolerance, passed):
    checks.append(
        {
            "name": name,
            "identity": identity,
            "value": value if isinstance(value, str) else float(value),
            "tolerance": tolerance if isinstance(tolerance, str) else float(tolerance),
            "pass": bool(passed),
        }
    )


def _bound_check(checks, name, identity, value, tol):
    _check(checks, name, identity, value, tol, value <= tol)


def _window_check(checks, name, identity, value, lo, hi):
    _check(checks, name, identity, value, f"[{lo}, {hi}]", lo <= value <= hi)


def _write_outputs(outdir, command, config, checks, tables=None):
    os.makedirs(outdir, exist_ok=True)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
    }
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    rows = [
        {"check": c["name"], "identity": c["identity"], "value": c["value"], "tolerance": c["tolerance"], "pass": c["pass"]}
        for c in checks
    ]
    with open(os.path.join(outdir, "report.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    for fname, table in (tables or {}).items():
        keys = list(table.keys())
        length = len(table[keys[0]])
        with open(os.path.join(outdir, fname), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(keys)
            for i in range(length):
                writer.writerow([repr(float(table[k][i])) for k in keys])
    return summary


def _tol(config, name, default):
    return float(config.get("tolerances", {}).get(name, default))


# -- commands ----------------------------------------------------------------


def cmd_verify_structure(config):
    cat = catalog(config["structure"])
    checks = []
    for row in verify_structure(cat, points=config["points"], h=config["h"], seed=config["seed"]):
        _bound_check(checks, f"residual:{row.identity}", row.identity, row.max_residual, _tol(config, "structure_residual", 1e-6))
    for row in verify_structure_convergence(cat, points=min(50, config["points"]), h=config["h"], seed=config["seed"]):
        _window_check(checks, f"order:{row.identity}", row.identity, row.order_ratio, 3.5, 4.5)
    for row in algebraic_suite(cat):
        _bound_check(checks, f"algebra:{row.identity}", row.identity, row.max_residual, _tol(config, "algebra_residual", 1e-12))
    return checks, {}


def cmd_spectrum(config):
    cat = catalog(config["structure"])
    cyl = build_cylinder(cat)
    op = build_operator(cyl.instanton_form)
    spec = spectrum(op)
    checks = []
    expected = FROZEN_SPECTRA[cat.name]
    got = tuple((round(v, 6), m) for v, m in spec.clusters)
    dev = max(
        (abs(g[0] - e[0]) for g, e in zip(got, expected)),
        default=float("inf"),
    ) if len(got) == len(expected) else float("inf")
    mult_ok = len(got) == len(expected) and all(g[1] == e[1] for g, e in zip(got, expected))
    ident = " + ".join(f"{{{v:g}: x{m}}}" for v, m in expected)
    _check(checks, "spectrum", f"eigenvalues of star(star(Q)∧.) = {ident}", dev, 1e-9, mult_ok and dev <= 1e-9)
    _bound_check(checks, "eigen-residual", "||B v - lambda v|| per pair", spec.max_eigen_residual(op), 1e-9)
    trace_dev = abs(float(np.trace(op.matrix)) - sum(v * m for v, m in spec.clusters))
    _bound_check(checks, "trace-identity", "tr(B) = sum lambda_i mult_i", trace_dev, 1e-9)
    proj = instanton_projector(op)
    _bound_check(checks, "projector-idempotent", "P^2 = P", float(np.max(np.abs(proj @ proj - proj))), 1e-12)
    rng = np.random.default_rng(config["seed"])
    f = project_instanton(op, random_form(op.dim, 2, rng))
    _bound_check(
        checks,
        "projected-instanton-residual",
        "star F + star(Q) ∧ F = 0 on the -1 eigenspace",
        instanton_residual(f, cyl.instanton_form),
        1e-9,
    )
    table = {
        "dimension": [op.dim] * len(spec.clusters),
        "eigenvalue": [v for v, _ in spec.clusters],
        "multiplicity": [m for _, m in spec.clusters],
    }
    return checks, {"spectrum.csv": table}


def cmd_split_check(config):
    cat = catalog(config["structure"])
    cyl = build_cylinder(cat)
    rng = np.random.default_rng(config["seed"])
    count = config["count"]
    worst_equiv = 0.0
    for _ in range(count):
        f_m, adot = random_split_pair(cyl, rng)
        res = cylinder_split_residual(f_m, adot, cyl)
        gap = abs(res.r_total**2 - (res.r1**2 + res.r2**2)) / (1.0 + res.r_total**2)
        worst_equiv = max(worst_equiv, gap)
    checks = []
    _bound_check(
        checks,
        "split-equivalence",
        "residual(star F_A + star Q_Z ∧ F_A)^2 = r1^2 + r2^2",
        worst_equiv,
        _tol(config, "split_equiv", 1e-12),
    )
    worst_proj = 0.0
    for _ in range(max(1, count // 10)):
        f_m, adot = projected_split_pair(cyl, rng)
        res = cylinder_split_residual(f_m, adot, cyl)
        worst_proj = max(worst_proj, res.r1, res.r2, res.r_total)
    _bound_check(
        checks,
        "projected-split",
        "instanton data solves both base equations",
        worst_proj,
        _tol(config, "split_projected", 1e-9),
    )
    return checks, {}


def cmd_cs_eval(config):
    field = PureGaugeSU2() if config["field"] == "pure-gauge" else PolynomialSU2()
    est = cs_evaluate(field, samples=config["samples"], seed=config["seed"], fd_h=config["h"])
    checks = []
    if config["field"] == "pure-gauge":
        _check(
            checks,
            "gauge-invariance",
            "CS(g^-1 dg) = 0 on S6",
            abs(est.value),
            3.0 * est.stderr,
            abs(est.value) <= 3.0 * est.stderr,
        )
    gap_tol = 3.0 * est.consistency_sigma + 1e-6
    _check(
        checks,
        "cs-two-forms",
        "CS(A) = 1/(n-3) ∫ Tr(F∧F) ∧ star Q",
        est.consistency_gap,
        gap_tol,
        est.consistency_gap <= gap_tol,
    )
    table = {
        "value": [est.value],
        "stderr": [est.stderr],
        "second_value": [est.second_value],
        "second_stderr": [est.second_stderr],
        "samples": [est.samples],
    }
    return checks, {"cs.csv": table}


def _resolve_model(name_or_path):
    if os.path.exists(name_or_path):
        return load_model(name_or_path)
    return load_model(models.model_path(name_or_path))


def cmd_flow(config):
    model = _resolve_model(config["model"])
    traj = flow_integrate(model, config["phi0"], t_end=config["t_end"], dt=config["dt"])
    checks = []
    _check(checks, "converged", "flow reaches a declared flat endpoint", float(not traj.converged), 0.0, traj.converged)
    increase = float(np.max(np.diff(traj.cs)))
    _bound_check(checks, "cs-decreasing", "dCS/dt <= 0 along the flow", increase, 1e-12)
    return checks, {"trajectory.csv": trajectory_table(traj, deltas=config["deltas"])}


def cmd_decay_report(config):
    model = _resolve_model(config["model"])
    traj = flow_integrate(model, config["phi0"], t_end=config["t_end"], dt=config["dt"])
    report = decay_diagnostics(traj, deltas=config["deltas"])
    n = report.n
    checks = []
    res_tol = _tol(config, "identity_residual", 1e-8)
    _bound_check(checks, "identity-dj-dcs", "dJ/dT = dCS/dT + (n-3) CS", report.residual_dj_dcs, res_tol)
    _bound_check(checks, "identity-dj-curv", "dJ/dT = -2||F||^2 - (n-3) CS", report.residual_dj_curv, res_tol)
    _bound_check(checks, "identity-dj-kin", "dJ/dT = -2||Adot||^2 + (n-3) CS", report.residual_dj_kin, res_tol)
    _bound_check(checks, "telescoping", "CS(T)-CS(T') = -∫ slice - (n-3) ∫ CS", report.residual_telescope, res_tol)
    margin_tol = _tol(config, "margin", 1e-8)
    _check(
        checks,
        "inequality-decay",
        "dCS/dT + 2(n-3) CS <= 0",
        report.margin_decay_ineq,
        -margin_tol,
        report.margin_decay_ineq >= -margin_tol,
    )
    _check(
        checks,
        "inequality-monotone",
        "dCS/dT <= 0",
        report.margin_monotone,
        -margin_tol,
        report.margin_monotone >= -margin_tol,
    )
    _check(checks, "cs-nonnegative", "CS(T) >= 0", report.cs_min, -1e-12, report.cs_min >= -1e-12)
    _check(checks, "j-nonnegative", "J(T) >= 0", report.j_min, -1e-12, report.j_min >= -1e-12)
    _bound_check(checks, "j-nonincreasing", "J(T) is nonincreasing", report.j_increase, 1e-12)
    rate_tol = _tol(config, "rate", 0.05)
    target = -(2 * n - 6)
    rate = report.cs_rate if report.cs_rate is not None else float("inf")
    _check(checks, "cs-decay-rate", f"0 <= CS(T) <= C exp({target} T)", rate, target + rate_tol, rate <= target + rate_tol)
    for delta, (lrate, _c) in sorted(report.ldelta.items()):
        lt = delta + target
        val = lrate if lrate is not None else float("inf")
        _check(
            checks,
            f"ldelta-rate-{delta:g}",
            f"L_{delta:g}(T) <= C exp({lt:g} T)",
            val,
            lt + rate_tol,
            val <= lt + rate_tol,
        )
    _check(
        checks,
        "admissibility",
        "||F_(A_T)||^2 = ||Adot||^2 - (n-3) CS >= 0",
        report.admissibility_margin,
        -1e-10,
        report.admissibility_margin >= -1e-10,
    )
    return checks, {"trajectory.csv": trajectory_table(traj, deltas=config["deltas"])}


def cmd_conformal_check(config):
    cat = catalog(config["structure"])
    cyl = build_cylinder(cat)
    rng = np.random.default_rng(config["seed"])
    checks = []

    worst = 0.0
    for n in (4, 5, 6, 7):
        for _ in range(max(1, config["draws"] // 20)):
            f2 = random_form(n + 1, 2, rng, matrix_dim=2)
            worst = max(worst, weight_check(f2, float(rng.uniform(-1.5, 1.5)), n))
    _bound_check(checks, "conformal-weight", "lambda(A, e^(2f) g) = e^((n-3) f) lambda(A, g)", worst, 1e-12)

    worst = 0.0
    for _ in range(config["draws"]):
        f2 = random_form(cyl.dim, 2, rng)
        worst = max(worst, cone_equivalence_check(f2, float(rng.uniform(-2.0, 2.0)), cyl))
    _bound_check(
        checks,
        "cone-equivalence",
        "star_cone F + star_cone Q_cone ∧ F = e^((n-3)t)(star F + star Q_Z ∧ F)",
        worst,
        1e-12,
    )

    dom = box_chart([-1.0] * 7, [1.0] * 7, h=config["h"])
    abelian = AbelianLinearField(dim=7).as_form_field(dom)
    conf = dilation_field(7)
    res_ab = lemma41_check(abelian, conf, count=config["points"], seed=config["seed"], h=config["h"])
    _bound_check(checks, "lie-derivative-abelian", "L_X lambda = (n-3) f lambda + 2 Tr(d_A(i_X F)∧*F)", res_ab, 1e-6)

    su2 = PolynomialSU2(dim=7, scale=0.2, seed=5).as_form_field(box_chart([-1.0] * 7, [1.0] * 7, h=2e-3))
    res_c = lemma41_check(su2, conf, count=8, seed=config["seed"], h=2e-3)
    res_f = lemma41_check(su2, conf, count=8, seed=config["seed"], h=1e-3)
    ratio = res_c / res_f if res_f > 0 else float("inf")
    _window_check(checks, "lie-derivative-order", "residual is O(h^2): halving h quarters it", ratio, 3.5, 4.5)

    lhs, rhs, res = _ibp_torus(config["h"])
    _bound_check(checks, "ibp-torus", "∫ eta L_X lambda = -∫ d(eta) ∧ i_X lambda (closed chart)", res, 1e-4)
    _, _, res_half = _ibp_torus(config["h"] / 2.0)
    ratio = res / res_half if res_half > 0 else float("inf")
    _window_check(checks, "ibp-order", "residual is O(h^2): halving h quarters it", ratio, 3.5, 4.5)

    lhs, rhs, res = _ibp_box(config["h"])
    scale = max(1.0, abs(lhs))
    _bound_check(checks, "ibp-box", "∫ eta L_X lambda = -∫ d(eta) ∧ i_X lambda (bump cutoff)", res / scale, 1e-4)
    return checks, {}


def _ibp_torus(h):
    def lam(pts):
        return 1.5 + np.sin(pts[:, 0]) * np.cos(pts[:, 1]) + 0.3 * np.cos(pts[:, 2])

    def xf(pts):
        out = np.zeros_like(pts)
        out[:, 0] = np.sin(pts[:, 1])
        out[:, 1] = np.cos(pts[:, 2])
        out[:, 2] = np.sin(pts[:, 0]) * np.cos(pts[:, 0])
        return out

    def eta(pts):
        return 1.0 + 0.5 * np.cos(pts[:, 0]) * np.cos(pts[:, 1])

    def eta_grad(pts):
        out = np.zeros_like(pts)
        out[:, 0] = -0.5 * np.sin(pts[:, 0]) * np.cos(pts[:, 1])
        out[:, 1] = -0.5 * np.cos(pts[:, 0]) * np.sin(pts[:, 1])
        return out

    return ibp_check(lam, xf, eta, eta_grad, kind="torus", dim=3, h=h, nodes=24)


def _ibp_box(h):
    radius = 2.0

    def lam(pts):
        return np.exp(-0.5 * np.sum(pts**2, axis=1)) + 0.1

    def xf(pts):
        return pts.copy()

    def eta(pts):
        s2 = np.sum(pts**2, axis=1) / radius**2
        out = np.zeros(len(pts))
        inside = s2 < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
        return out

    def eta_grad(pts):
        s2 = np.sum(pts**2, axis=1) / radius**2
        out = np.zeros_like(pts)
        inside = s2 < 1.0
        coef = np.zeros(len(pts))
        coef[inside] = np.exp(1.0 - 1.0 / (1.0 - s2[inside])) * (-2.0 / (1.0 - s2[inside]) ** 2 / radius**2)
        return pts * coef[:, None]

    lo = [-radius] * 3
    hi = [radius] * 3
    return ibp_check(lam, xf, eta, eta_grad, kind="box", dim=3, h=h, nodes=28, lo=lo, hi=hi)


PROFILES = {
    "exp6": lambda: exponential_profile(6.0),
    "const": lambda: constant_profile(1.0),
    "compact": lambda: compact_profile(1.0),
}


def cmd_squeeze(config):
    mass = PROFILES[config["profile"]]()
    rows = cutoff_squeeze(mass, config["T"], config["n"])
    checks = []
    ratios = [r.ratio for r in rows]
    rhs = [r.rhs for r in rows]
    if config["profile"] == "const":
        _check(
            checks,
            "squeeze-negative-control",
            "(6/T) ∫_band lambda stays bounded away from 0 for infinite mass",
            min(rhs),
            1.0,
            min(rhs) >= 1.0,
        )
    else:
        mono = all(ratios[i + 1] < ratios[i] for i in range(len(ratios) - 1))
        _check(
            checks,
            "squeeze-ratio-monotone",
            "rhs/lhs of ∫ eta (n-3) lambda <= (6/T) ∫_band lambda decreases to 0",
            float(ratios[-1]),
            float(ratios[0]),
            mono and ratios[-1] < ratios[0],
        )
        _check(
            checks,
            "squeeze-bound-vanishes",
            "(6/T) ∫_band lambda -> 0 for finite mass",
            rhs[-1],
            rhs[0] / 10.0,
            rhs[-1] <= rhs[0] / 10.0,
        )
    table = {
        "T": [r.T for r in rows],
        "lhs": [r.lhs for r in rows],
        "rhs": [r.rhs for r in rows],
        "ratio": [r.ratio for r in rows],
    }
    return checks, {"squeeze.csv": table}


COMMANDS = {
    "verify-structure": cmd_verify_structure,
    "spectrum": cmd_spectrum,
    "split-check": cmd_split_check,
    "cs-eval": cmd_cs_eval,
    "flow": cmd_flow,
    "decay-report": cmd_decay_report,
    "conformal-check": cmd_conformal_check,
    "squeeze": cmd_squeeze,
}


def _parse_floats(text):
    return [float(x) for x in str(text).split(",") if x != ""]


def build_parser():
    parser = argparse.ArgumentParser(prog="holoflow", description=__doc__)
    parser.add_argument("--config", default=None, help="JSON config file; explicit flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="RNG seed (default 0, reproducible)")
        p.add_argument("--out", default=None, help="output directory (default holoflow-out)")
        p.add_argument("--tol", action="append", default=None, metavar="NAME=VALUE", help="tolerance override")

    p = sub.add_parser("verify-structure", help="structure-equation residuals via the cone model")
    p.add_argument("--structure", choices=["nk6", "npg2"], default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    common(p)

    p = sub.add_parser("spectrum", help="anti-self-duality operator spectrum")
    p.add_argument("--structure", choices=["nk6", "npg2"], default=None)
    common(p)

    p = sub.add_parser("split-check", help="cylinder split equivalence over random data")
    p.add_argument("--structure", choices=["nk6", "npg2"], default=None)
    p.add_argument("--count", type=int, default=None)
    common(p)

    p = sub.add_parser("cs-eval", help="Monte Carlo Chern-Simons evaluation on S6")
    p.add_argument("--field", choices=["pure-gauge", "polynomial"], default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--h", type=float, default=None)
    common(p)

    p = sub.add_parser("flow", help="integrate a reduced gradient-flow model")
    p.add_argument("--model", default=None)
    p.add_argument("--phi0", default=None, help="comma-separated start state")
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--delta", default=None, help="comma-separated weights for L_delta columns")
    common(p)

    p = sub.add_parser("decay-report", help="full decay-diagnostic ladder of a trajectory")
    p.add_argument("--model", default=None)
    p.add_argument("--phi0", default=None)
    p.add_argument("--t-end", dest="t_end", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--delta", default=None)
    common(p)

    p = sub.add_parser("conformal-check", help="conformal weight, cone equivalence, Lie identity, IBP")
    p.add_argument("--structure", choices=["nk6", "npg2"], default=None)
    p.add_argument("--draws", type=int, default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--h", type=float, default=None)
    common(p)

    p = sub.add_parser("squeeze", help="cutoff squeeze of slice-mass profiles")
    p.add_argument("--profile", choices=sorted(PROFILES), default=None)
    p.add_argument("--T", default=None, help="comma-separated cutoff scales")
    p.add_argument("--n", type=int, default=None)
    common(p)
    return parser


DEFAULTS = {
    "verify-structure": {"structure": "nk6", "h": 1e-4, "points": 200},
    "spectrum": {"structure": "nk6"},
    "split-check": {"structure": "nk6", "count": 1000},
    "cs-eval": {"field": "pure-gauge", "samples": 100000, "h": 1e-4},
    "flow": {"model": "doublewell-n6", "phi0": [0.12], "t_end": 2.5, "dt": 1e-3, "deltas": [1.0, 3.0, 5.0]},
    "decay-report": {"model": "doublewell-n6", "phi0": [0.12], "t_end": 2.5, "dt": 1e-3, "deltas": [1.0, 3.0, 5.0]},
    "conformal-check": {"structure": "nk6", "draws": 1000, "points": 60, "h": 1e-4},
    "squeeze": {"profile": "exp6", "T": [1.0, 2.0, 4.0, 8.0], "n": 6},
}


def _resolve_config(args):
    file_cfg = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
    cfg = dict(DEFAULTS.get(args.command, {}))
    cfg["seed"] = 0
    cfg["out"] = "holoflow-out"
    cfg["tolerances"] = {}
    for key, value in file_cfg.items():
        if key == "tolerances":
            cfg["tolerances"].update(value)
        else:
            cfg[key] = value
    for key, value in vars(args).items():
        if key in ("command", "config", "tol") or value is None:
            continue
        if key == "phi0":
            cfg["phi0"] = _parse_floats(value)
        elif key == "delta":
            cfg["deltas"] = _parse_floats(value)
        elif key == "T":
            cfg["T"] = _parse_floats(value)
        else:
            cfg[key] = value
    for item in args.tol or []:
        name, _, raw = item.partition("=")
        if not raw:
            raise SystemExit(f"bad --tol override: {item!r}")
        cfg["tolerances"][name] = float(raw)
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = _resolve_config(args)
    checks, tables = COMMANDS[args.command](config)
    summary = _write_outputs(config["out"], args.command, _jsonable(config), checks, tables)
    for c in checks:
        status = "PASS" if c["pass"] else "FAIL"
        print(f"[{status}] {c['name']}: value={c['value']} tolerance={c['tolerance']}  ({c['identity']})")
    print(f"summary: {os.path.join(config['out'], 'summary.json')}")
    return 0 if summary["pass"] else 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


if __name__ == "__main__":
    sys.exit(main())
