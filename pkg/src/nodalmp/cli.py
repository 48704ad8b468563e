"""Command line front end.

Usage: ``nodalmp <command> [config.json] [flags]``. Commands: constants,
check-conditions, expansion, mesh, solve, continue, pohozaev. Outputs go to
``--out`` (default ``nodalmp-out/<command>``) together with a manifest.

Exit codes: 0 ok, 2 hypothesis violated (only with ``--strict``), 3 numeric
or structural error, 4 configuration error.
"""

import argparse
import logging
import math
import os
import sys


from . import __version__
from . import config as cfg
from . import reporting as rp
from . import special_constants as sc
from .bubbles import BubbleParams, expansion_with_quadrature, sup_scan
from .errors import ConfigError, ConvergenceError, NodalMPError
from .mesh_domain import h_dimension, mesh_to_dict, split_check, verify_weak_commute
from .pohozaev import identity_terms, nonexistence_check, refinement_order, star_shaped_check
from .problem_model import (
    check_conditions_C,
    coercivity_estimate,
    exponent_windows,
    mp_threshold,
)
from .solver import (
    VariationalProblem,
    concentration_check,
    continuation,
    far_point,
    mountain_pass,
    nodal_rebuild,
    random_direction,
    rim_estimate,
    sign_structure,
)

__all__ = ["main", "build_parser", "run"]

log = logging.getLogger("nodalmp")

EXIT_OK, EXIT_VIOLATED, EXIT_NUMERIC, EXIT_CONFIG = 0, 2, 3, 4


class _Run:
    """Output directory, manifest and verdict of one command."""

    def __init__(self, command, config, out_dir):
        self.command = command
        self.config = config
        self.out = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.manifest = rp.RunManifest(command, rp.config_digest(config), config.get("seed", 0), __version__)
        self.violations = []

    def path(self, name):
        return os.path.join(self.out, name)

    def json(self, name, obj):
        return self.manifest.add(rp.write_json(self.path(name), obj))

    def csv(self, name, header, rows):
        return self.manifest.add(rp.write_csv(self.path(name), header, rows))

    def text(self, name, lines):
        p = self.path(name)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        print("\n".join(lines))
        return self.manifest.add(p)

    def finish(self):
        self.manifest.write(self.out)


# --------------------------------------------------------------------------
# commands


def cmd_constants(run, args):
    conf = run.config.get("problem", {})
    n = args.n if args.n is not None else conf.get("n")
    p = args.p if args.p is not None else conf.get("p")
    if n is None or p is None:
        raise ConfigError("constants needs n and p (flags --n/--p or problem section)", "/problem")
    b = sc.constant_bundle(int(n), float(p))
    d = b.as_dict()
    q = args.q if args.q is not None else conf.get("q")
    if q is not None:
        try:
            d["ratio_e"] = sc.ratio_e(int(n), float(p), float(q))
        except NodalMPError:
            d["ratio_e"] = math.nan
    run.json("constants.json", d)
    run.csv("constants.csv", ["name", "value"], [(k, float(v)) for k, v in d.items() if k not in ("n", "p")])
    run.text("constants.txt", [f"{k:>14s}  {rp.fmt_float(v)}" for k, v in d.items()])
    return EXIT_OK


def _conditions_payload(spec):
    conds = check_conditions_C(spec)
    win = exponent_windows(spec)
    thr = mp_threshold(spec)
    applicable = [c for c in conds if c.applicable and c.case_id != "iv"]
    iv = next(c for c in conds if c.case_id == "iv")
    if spec.orbit_card == math.inf:
        verdict = "not required"  # infinite orbits: no concentration, no level bound needed
    elif any(c.indeterminate for c in applicable):
        verdict = "indeterminate"
    elif not applicable:
        verdict = "indeterminate"
    else:
        verdict = "satisfied" if all(c.satisfied for c in applicable) and iv.satisfied else "violated"
    return {
        "conditions": [c.__dict__ for c in conds],
        "verdict_C": verdict,
        "windows": win.__dict__,
        "threshold": thr.__dict__,
    }


def cmd_check_conditions(run, args):
    spec = cfg.spec_from_config(run.config)
    out = _conditions_payload(spec)
    if out["verdict_C"] == "violated":
        run.violations.append("condition (C) violated at x_o")
    if spec.orbit_card != math.inf and not out["windows"]["in_effective"]:
        run.violations.append("q + 1 outside the effective exponent window")
    if args.coercivity:
        mesh = cfg.mesh_from_config(run.config)
        sym = cfg.symmetry_from_config(run.config, mesh)
        co = run.config["coercivity"]
        lam = coercivity_estimate(spec, mesh, sym, starts=co["starts"], iterations=co["iterations"],
                                  seed=run.config["seed"])
        out["coercivity"] = lam
        if not lam > 0.0:
            run.violations.append("coercivity estimate is not positive")
    out["violations"] = run.violations
    run.json("conditions.json", out)
    lines = [f"(C) {c['case_id']:>3s}: applicable={c['applicable']} satisfied={c['satisfied']}"
             + (" indeterminate" if c["indeterminate"] else "") for c in out["conditions"]]
    lines.append(f"verdict (C): {out['verdict_C']}")
    lines.append(f"q+1 in effective window: {out['windows']['in_effective']}")
    run.text("conditions.txt", lines)
    return EXIT_OK


def cmd_expansion(run, args):
    spec = cfg.spec_from_config(run.config)
    ex = run.config["expansion"]
    etas = [float(e) for e in ex["etas"]]
    reports, scans = [], []
    for eta in etas:
        params = BubbleParams(eta, ex["delta"])
        reports.extend(expansion_with_quadrature(spec, params))
        scans.append({"eta": eta, **sup_scan(spec, params)})
    run.json("expansion.json", {"reports": reports, "sup_scan": scans})
    for path in rp.emit_plot_data(reports, run.path("plot"), kind="expansion"):
        run.manifest.add(path)
    if any(not s["below_threshold"] for s in scans):
        run.violations.append("bubble energy not below the threshold for some eta")
    run.text("expansion.txt", [f"eta={rp.fmt_float(r.eta)} {r.term:>4s} rel_err={rp.fmt_float(r.rel_err)}"
                               for r in reports])
    return EXIT_OK


def cmd_mesh(run, args):
    mesh = cfg.mesh_from_config(run.config)
    sym = cfg.symmetry_from_config(run.config, mesh)
    ok, witness = verify_weak_commute(sym)
    split = split_check(sym, mesh)
    report = {
        "kind": mesh.kind,
        "n_nodes": mesh.n_nodes,
        "n_elements": int(len(mesh.elements)),
        "h_dimension": h_dimension(mesh, sym),
        "weak_commute": ok,
        "weak_commute_witness": witness,
        "split": split,
        "star_shaped": star_shaped_check(mesh) if mesh.euclidean and mesh.facets else None,
    }
    run.json("mesh.json", mesh_to_dict(mesh, sym))
    run.json("mesh_report.json", report)
    if not ok:
        run.violations.append("tau does not commute weakly with G")
    if sym.tau is not None and not split["ok"]:
        run.violations.append("the fixed set of tau does not split the domain")
    run.text("mesh.txt", [f"{k}: {report[k]}" for k in ("kind", "n_nodes", "n_elements", "h_dimension",
                                                           "weak_commute")] + [f"split ok: {split['ok']}"])
    return EXIT_OK


def _problem(config):
    spec = cfg.spec_from_config(config)
    mesh = cfg.mesh_from_config(config)
    sym = cfg.symmetry_from_config(config, mesh)
    return VariationalProblem(spec, mesh, sym, sigma=config["solver"].get("sigma", 1e-8))


def _solve(problem, controls, nodal):
    v = random_direction(problem, controls.seed)
    rim = rim_estimate(problem, direction=v, controls=controls)
    res = mountain_pass(problem, far_point(problem, v), controls, rim=rim, raise_on_failure=False)
    rebuilt = False
    sym = problem.symmetry
    if nodal and res.converged and sym.omega1 is not None and sym.omega2 is not None:
        try:
            res = nodal_rebuild(res, problem, controls)
            rebuilt = True
        except ConvergenceError as exc:
            log.warning("nodal rebuild failed: %s", exc)
            if exc.result is not None:
                res = exc.result
    return res, rim, rebuilt


def _node_rows(mesh, u):
    return [tuple(float(c) for c in x) + (float(val),) for x, val in zip(mesh.nodes, u)]


def cmd_solve(run, args):
    problem = _problem(run.config)
    controls = cfg.controls_from_config(run.config)
    res, rim, rebuilt = _solve(problem, controls, run.config["solver"].get("nodal", True))
    mesh = problem.mesh
    coords = ["x", "y", "z"][: mesh.dim]
    run.csv("solution.csv", coords + ["u"], _node_rows(mesh, res.field))
    for path in rp.emit_plot_data(res, run.path("plot"), kind="path", problem=problem):
        run.manifest.add(path)
    summary = {"result": res.summary(), "rim": rim, "nodal_rebuild": rebuilt,
               "concentration": concentration_check([res.field], problem)[0]}
    sym = problem.symmetry
    if sym.omega1 is not None and sym.omega2 is not None:
        summary["sign_structure"] = sign_structure(res.field, sym, mesh)
    run.json("summary.json", summary)
    run.text("solve.txt", [f"level = {rp.fmt_float(res.level)}", f"grad_norm = {rp.fmt_float(res.grad_norm)}",
                           f"converged = {res.converged}", f"nodal rebuild = {rebuilt}"])
    if not res.converged:
        raise ConvergenceError(f"solve did not converge (grad_norm {res.grad_norm:.3g}); outputs written")
    return EXIT_OK


def cmd_continue(run, args):
    problem = _problem(run.config)
    controls = cfg.controls_from_config(run.config)
    co = run.config["continuation"]
    schedule = co["schedule"]
    v = random_direction(problem, controls.seed)
    cont = continuation(problem, schedule, controls, direction=v, drift_warn=co["drift_warn"])
    rows = [(r.epsilon, r.level, r.norm, r.grad_norm, r.converged, r.iterations) for r in cont.results]
    run.csv("continuation_table.csv", ["epsilon", "level", "norm", "grad_norm", "converged", "iterations"], rows)
    for path in rp.emit_plot_data(cont, run.path("plot"), kind="continuation"):
        run.manifest.add(path)
    conc = concentration_check([r.field for r in cont.results], problem)
    run.json("continuation.json", {"summary": cont.summary(), "envelope": cont.envelope,
                                   "warnings": cont.warnings, "concentration": conc})
    if not cont.envelope["ok"]:
        run.violations.append("level above the continuation envelope")
    run.text("continue.txt", [f"eps={rp.fmt_float(r[0])} level={rp.fmt_float(r[1])} norm={rp.fmt_float(r[2])} "
                              f"converged={r[4]}" for r in rows] + cont.warnings)
    return EXIT_OK


def _refined_config(config):
    m = dict(config["mesh"])
    res = m["resolution"]
    m["resolution"] = 2 * res - 1 if m["kind"] in ("interval", "radial-ball", "interval-1D",
                                                   "radial-ball-1D") else 2 * res
    return cfg.merge(config, {"mesh": m})


def cmd_pohozaev(run, args):
    controls = cfg.controls_from_config(run.config)
    nodal = run.config["solver"].get("nodal", True)
    out, residuals = [], []
    for conf in (run.config, _refined_config(run.config)):
        problem = _problem(conf)
        res, _, _ = _solve(problem, controls, nodal)
        if not res.converged:
            raise ConvergenceError(f"solve did not converge on {problem.mesh.n_nodes} nodes")
        rep = identity_terms(res.field, problem.spec, problem.mesh)
        residuals.append(rep.residual)
        out.append({"n_nodes": problem.mesh.n_nodes, "level": res.level, "report": rep})
    order = refinement_order(*residuals)
    crit = nonexistence_check(problem.spec, problem.mesh)
    run.json("pohozaev.json", {"runs": out, "order": order, "nonexistence": crit})
    if crit["criterion_met"] is False:
        run.violations.append("hypotheses of the nonexistence criterion are not met")
    run.text("pohozaev.txt", [f"nodes={o['n_nodes']} residual={rp.fmt_float(o['report'].residual)}" for o in out]
             + [f"order = {rp.fmt_float(order)}", f"criterion met = {crit['criterion_met']}"])
    return EXIT_OK


COMMANDS = {
    "constants": cmd_constants,
    "check-conditions": cmd_check_conditions,
    "expansion": cmd_expansion,
    "mesh": cmd_mesh,
    "solve": cmd_solve,
    "continue": cmd_continue,
    "pohozaev": cmd_pohozaev,
}


# --------------------------------------------------------------------------
# entry point


def build_parser():
    parser = argparse.ArgumentParser(prog="nodalmp", description="Nodal mountain-pass toolkit.")
    parser.add_argument("--version", action="version", version=f"nodalmp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", nargs="?", help="JSON configuration file")
        sp.add_argument("--out", help="output directory (default nodalmp-out/<command>)")
        sp.add_argument("--seed", type=int, help="random seed (overrides the config)")
        sp.add_argument("--strict", action="store_true", help="exit 2 when a hypothesis is violated")
        sp.add_argument("--verbose", "-v", action="store_true")
        if name == "constants":
            sp.add_argument("--n", type=int)
            sp.add_argument("--p", type=float)
            sp.add_argument("--q", type=float)
        if name in ("solve", "continue", "pohozaev", "mesh", "check-conditions"):
            sp.add_argument("--resolution", type=int, help="mesh resolution (overrides the config)")
        if name in ("solve", "pohozaev"):
            sp.add_argument("--eps", type=float, help="subcritical defect epsilon")
        if name == "continue":
            sp.add_argument("--schedule", help="comma separated epsilon values")
        if name == "check-conditions":
            sp.add_argument("--coercivity", action="store_true", help="also estimate the coercivity constant")
    return parser


def _overrides(args):
    ov = {}
    if args.seed is not None:
        ov["seed"] = args.seed
    if getattr(args, "resolution", None) is not None:
        ov.setdefault("mesh", {})["resolution"] = args.resolution
    if getattr(args, "eps", None) is not None:
        ov.setdefault("problem", {})["epsilon"] = args.eps
    if getattr(args, "schedule", None):
        try:
            sched = [float(s) for s in args.schedule.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad --schedule: {exc}", "/continuation/schedule") from exc
        ov["continuation"] = {"schedule": sched}
    return ov


def _origin(exc):
    """Module in which ``exc`` was raised (for error messages)."""
    tb, name = exc.__traceback__, "nodalmp"
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", name)
        tb = tb.tb_next
    return name


def run(argv=None):
    """Parse ``argv`` and run one command; returns the exit status."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    r = None
    try:
        conf = cfg.load_config(args.config, _overrides(args))
        out = args.out or os.path.join("nodalmp-out", args.command)
        r = _Run(args.command, conf, out)
        status = COMMANDS[args.command](r, args)
        r.json("violations.json", {"violations": r.violations})
        r.finish()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NodalMPError as exc:
        print(f"error in {_origin(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        if r is not None:
            r.finish()
        return EXIT_NUMERIC
    for v in r.violations:
        print(f"hypothesis violated: {v}", file=sys.stderr)
    if args.strict and r.violations:
        return EXIT_VIOLATED
    return status


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
