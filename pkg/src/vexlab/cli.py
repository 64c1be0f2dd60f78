"""Command-line front end: config-driven scenarios with JSON/CSV artifacts.

Usage: vexlab <scenario> --config cfg.json [--out DIR] [--seed S]

Scenarios: spaces-check, solve, cascade, pohozaev, verdict, sweep.
Exit codes: 0 success, 2 config error, 3 solver non-convergence (artifacts
are still written, with converged = false).

Outputs are deterministic for a fixed (config, seed); the timestamp lives
in an isolated "meta" block so reports can be diffed modulo that block.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from .domains import Domain, find_star_center, star_shape_report
from .errors import (
    ConfigError,
    ExponentTooLarge,
    NonElliptic,
    NotStarShaped,
    VexlabError,
)
from .exponents import (
    ConstantExponent,
    bounds as exponent_bounds,
    embedding_gap,
    exponent_from_spec,
    log_holder_estimate,
)
from .fem import DiscreteField
from .meshes import build_mesh, write_mesh
from .modular import holder_check, luxemburg_norm, verify_modular_relations
from .pohozaev import (
    boundary_term,
    nonexistence_verdict,
    pohozaev_terms,
    remainder_R,
)
from .solvers import (
    SolveConfig,
    cascade,
    nehari_candidate,
    solve_regularized,
)

SCENARIOS = ("spaces-check", "solve", "cascade", "pohozaev", "verdict", "sweep")


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        obj = obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    return obj


def _write_json(path, payload):
    body = {str(k): _jsonable(v) for k, v in payload.items()}
    body["schema"] = "1"
    body["meta"] = {
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds")
    }
    with open(path, "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(v) for v in row) + "\n")


def _csv_cell(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        v = v.item()
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh), os.path.dirname(os.path.abspath(path))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _require(cfg, key, scenario):
    if key not in cfg:
        raise ConfigError(f"scenario {scenario!r} needs config key {key!r}")
    return cfg[key]


def _solver_config(cfg, seed):
    data = dict(cfg.get("solver", {}))
    data.setdefault("seed", seed)
    return SolveConfig.from_dict(data)


def _build_field(spec, mesh, base_dir):
    """Nodal field from a JSON spec: zero, constant, bump (boundary-distance
    profile), product_sin (separable sine over the bounding box), or
    nodal_file (one value per node)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("field spec must be a dict with a 'kind' key")
    kind = spec["kind"]
    if kind == "zero":
        return DiscreteField.zeros(mesh)
    if kind == "constant":
        vals = np.full(mesh.nnodes, float(spec.get("value", 1.0)))
        return DiscreteField(mesh, vals)
    if kind == "bump":
        prof = mesh.boundary_distance()
        prof = prof / prof.max()
        return DiscreteField(mesh, float(spec.get("amplitude", 1.0)) * prof,
                             zero_trace=True)
    if kind == "product_sin":
        lo = mesh.nodes.min(axis=0)
        hi = mesh.nodes.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        vals = np.prod(np.sin(np.pi * (mesh.nodes - lo) / span), axis=1)
        return DiscreteField(mesh, float(spec.get("amplitude", 1.0)) * vals,
                             zero_trace=True)
    if kind == "nodal_file":
        path = spec["file"]
        if base_dir:
            path = os.path.join(base_dir, path)
        try:
            vals = np.loadtxt(path).ravel()
        except OSError as exc:
            raise ConfigError(f"cannot read nodal field: {exc}") from exc
        if len(vals) != mesh.nnodes:
            raise ConfigError(
                f"nodal field has {len(vals)} values for {mesh.nnodes} nodes"
            )
        return DiscreteField(mesh, vals)
    raise ConfigError(f"unknown field kind {kind!r}")


def _setup(cfg, base_dir, need_mesh=True):
    domain = Domain.from_spec(_require(cfg, "domain", "any"))
    mesh = None
    if need_mesh:
        h = float(cfg.get("h", 0.05))
        mesh = build_mesh(domain, h)
    p = exponent_from_spec(_require(cfg, "p", "any"), mesh, base_dir)
    q = exponent_from_spec(_require(cfg, "q", "any"), mesh, base_dir)
    return domain, mesh, p, q


def _origin_for(cfg, domain):
    if "origin" in cfg:
        return np.atleast_1d(np.asarray(cfg["origin"], dtype=float))
    return find_star_center(domain)


def _candidate(cfg, mesh, p, q, scfg, base_dir):
    spec = _require(cfg, "candidate", "cascade/pohozaev")
    if isinstance(spec, dict) and spec.get("kind") == "nehari":
        return nehari_candidate(p, q, mesh, scfg, degree=scfg.quad_degree).field
    return _build_field(spec, mesh, base_dir)


# -- scenarios --------------------------------------------------------------


def _run_spaces_check(cfg, base_dir, out, seed):
    domain, mesh, p, q = _setup(cfg, base_dir)
    rng = np.random.default_rng(seed)
    trials = int(cfg.get("trials", 50))
    degree = int(cfg.get("quad_degree", 2))

    rel_passed = 0
    worst_unit_gap = 0.0
    for _ in range(trials):
        u = DiscreteField(mesh, rng.standard_normal(mesh.nnodes))
        rep = verify_modular_relations(u, p, degree=degree)
        rel_passed += int(rep.passed)
        worst_unit_gap = max(worst_unit_gap, rep.unit_gap)

    hold_passed = 0
    worst_slack = np.inf
    for _ in range(trials):
        u = DiscreteField(mesh, rng.standard_normal(mesh.nnodes))
        v = DiscreteField(mesh, rng.standard_normal(mesh.nnodes))
        hrep = holder_check(u, v, p, degree=degree)
        hold_passed += int(hrep.passed)
        worst_slack = min(worst_slack, hrep.slack)

    p_minus, p_plus = exponent_bounds(p, domain)
    report = {
        "scenario": "spaces-check",
        "trials": trials,
        "relations_passed": rel_passed,
        "worst_unit_gap": worst_unit_gap,
        "holder_passed": hold_passed,
        "worst_holder_slack": float(worst_slack),
        "p_minus": p_minus,
        "p_plus": p_plus,
        "all_passed": rel_passed == trials and hold_passed == trials,
    }
    N = float(cfg.get("N", domain.dim))
    if p_plus < N:
        report["embedding_gap"] = embedding_gap(p, q, domain, N)
    pairs = int(cfg.get("pairs", 500))
    lh = log_holder_estimate(p, domain, pairs=pairs, seed=seed)
    report["log_holder_c_hat"] = lh.c_hat
    report["log_holder_ball_form_max"] = lh.ball_form_max
    _write_json(os.path.join(out, "spaces_check.json"), report)
    return 0


def _run_solve(cfg, base_dir, out, seed):
    _, mesh, p, q = _setup(cfg, base_dir)
    scfg = _solver_config(cfg, seed)
    v = _build_field(_require(cfg, "rhs", "solve"), mesh, base_dir)
    res = solve_regularized(v, p, q, scfg)
    u = res.field
    report = {
        "scenario": "solve",
        "epsilon": res.diagnostics["epsilon"],
        "energy": res.energy,
        "el_residual": res.el_residual,
        "iterations": res.iterations,
        "converged": res.converged,
        "solution_min": float(u.values.min()),
        "solution_max": float(u.values.max()),
        "solution_luxemburg_q": luxemburg_norm(u, q),
        "energy_history": res.diagnostics["energy_history"],
    }
    _write_json(os.path.join(out, "solve.json"), report)
    np.savetxt(os.path.join(out, "solution.txt"), u.values)
    write_mesh(mesh, os.path.join(out, "mesh.txt"))
    return 0 if res.converged else 3


def _cascade_runs(cfg, base_dir, out, seed):
    domain, mesh, p, q = _setup(cfg, base_dir)
    scfg = _solver_config(cfg, seed)
    u = _candidate(cfg, mesh, p, q, scfg, base_dir)
    origin = _origin_for(cfg, domain)
    runs = cascade(u, p, q, scfg)
    return domain, mesh, p, q, scfg, u, origin, runs


def _series_rows(runs, p, origin):
    rows = []
    for res in runs:
        n = res.diagnostics["n"]
        series = res.diagnostics["series"]
        for k, eps in enumerate(series["epsilon"]):
            bt = boundary_term(
                res.diagnostics["eps_runs"][k].field, p, eps, origin
            )
            rows.append((n, eps, series["grad_modular"][k],
                         series["q_modular"][k], bt))
    return rows


def _run_cascade(cfg, base_dir, out, seed):
    domain, mesh, p, q, scfg, u, origin, runs = _cascade_runs(
        cfg, base_dir, out, seed
    )
    report = {
        "scenario": "cascade",
        "origin": origin,
        "n_schedule": list(scfg.n_schedule),
        "gap_grad_modular": [r.diagnostics["gap_grad_modular"] for r in runs],
        "gap_q_modular": [r.diagnostics["gap_q_modular"] for r in runs],
        "converged": all(r.converged for r in runs),
        "final_energy": runs[-1].energy,
        "final_el_residual": runs[-1].el_residual,
    }
    _write_json(os.path.join(out, "cascade.json"), report)
    _write_csv(
        os.path.join(out, "cascade_series.csv"),
        "n,epsilon,grad_modular,q_modular,boundary_term",
        _series_rows(runs, p, origin),
    )
    return 0 if report["converged"] else 3


def _run_pohozaev(cfg, base_dir, out, seed):
    domain, mesh, p, q = _setup(cfg, base_dir)
    scfg = _solver_config(cfg, seed)
    u = _candidate(cfg, mesh, p, q, scfg, base_dir)
    origin = _origin_for(cfg, domain)
    report = pohozaev_terms(u, p, q, origin, degree=scfg.quad_degree)
    code = 0
    if cfg.get("with_remainder", False):
        runs = cascade(u, p, q, scfg)
        report = report.with_remainder(remainder_R(runs, p, mesh, origin))
        if not all(r.converged for r in runs):
            code = 3
    star = star_shape_report(domain, origin)
    payload = {"scenario": "pohozaev", "star_min_xdotnu": star.min_xdotnu}
    payload.update(report.as_dict())
    _write_json(os.path.join(out, "pohozaev.json"), payload)
    with open(os.path.join(out, "pohozaev.csv"), "w") as fh:
        fh.write(report.CSV_HEADER + "\n" + report.csv_row() + "\n")
    return code


def _run_verdict(cfg, base_dir, out, seed):
    domain, _, p, q = _setup(cfg, base_dir, need_mesh="h" in cfg)
    N = cfg.get("N", domain.dim)
    origin = None
    if "origin" in cfg:
        origin = np.atleast_1d(np.asarray(cfg["origin"], dtype=float))
    rep = nonexistence_verdict(domain, p, q, N=N, origin=origin,
                               tol=float(cfg.get("tol", 1e-9)))
    payload = {"scenario": "verdict"}
    payload.update(rep.as_dict())
    _write_json(os.path.join(out, "verdict.json"), payload)
    return 0


def _run_sweep(cfg, base_dir, out, seed):
    sw = _require(cfg, "sweep", "sweep")
    param = sw.get("parameter")
    values = sw.get("values")
    if param not in ("p", "q") or not values:
        raise ConfigError(
            "sweep needs {'parameter': 'p'|'q', 'values': [..]}"
        )
    domain = Domain.from_spec(_require(cfg, "domain", "sweep"))
    N = cfg.get("N", domain.dim)
    tol = float(cfg.get("tol", 1e-9))
    base_p = exponent_from_spec(_require(cfg, "p", "sweep"), None, base_dir)
    base_q = exponent_from_spec(_require(cfg, "q", "sweep"), None, base_dir)

    def one(item):
        k, val = item
        run_seed = seed + k + 1
        p = ConstantExponent(val) if param == "p" else base_p
        q = ConstantExponent(val) if param == "q" else base_q
        rep = nonexistence_verdict(domain, p, q, N=N, tol=tol)
        d = rep.as_dict()
        d["value"] = float(val)
        d["seed"] = run_seed
        return d

    with ThreadPoolExecutor(max_workers=min(8, len(values))) as pool:
        results = list(pool.map(one, enumerate(values)))

    _write_csv(
        os.path.join(out, "sweep.csv"),
        "value,case,applies,q_minus,p_plus,p_plus_star,coefficient",
        [
            (d["value"], d["case"], d["applies"], d["q_minus"], d["p_plus"],
             d["p_plus_star"], d["coefficient"])
            for d in results
        ],
    )
    _write_json(
        os.path.join(out, "sweep.json"),
        {"scenario": "sweep", "parameter": param, "results": results},
    )
    return 0


_RUNNERS = {
    "spaces-check": _run_spaces_check,
    "solve": _run_solve,
    "cascade": _run_cascade,
    "pohozaev": _run_pohozaev,
    "verdict": _run_verdict,
    "sweep": _run_sweep,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="vexlab",
        description="Variable-exponent Dirichlet problem laboratory",
    )
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    args = parser.parse_args(argv)

    try:
        cfg, base_dir = _load_config(args.config)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        os.makedirs(args.out, exist_ok=True)
        return _RUNNERS[args.scenario](cfg, base_dir, args.out, seed)
    except (ConfigError, NonElliptic, ExponentTooLarge, NotStarShaped) as exc:
        print(f"vexlab: config error: {exc}", file=sys.stderr)
        return 2
    except VexlabError as exc:
        print(f"vexlab: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
