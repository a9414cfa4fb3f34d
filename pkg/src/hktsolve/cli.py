"""Command line front end.

Subcommands:

* ``verify-su3``      run the exact symbolic pipeline on the built-in
                      golden algebra and check every identity
* ``verify-algebra``  same pipeline on a registry algebra, or a Jacobi
                      check on a structure-constant file
* ``solve``           continuity run from a JSON config
* ``manufactured``    recovery test against a chosen exact solution
* ``study``           grid convergence study

Every command is deterministic given its inputs and exits 0 only when
all of its declared checks pass.
"""

import argparse
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import algebras, gridio
from .continuity_driver import (
    ContinuityConfig,
    basicness_check,
    convergence_study,
    manufactured_problem,
    run_continuity,
    sine_product_field,
)
from .elliptic_solver import TorusGrid, check_b_bound, density, solve_at_t
from .errors import ConfigError, HktError
from .exact import QQi
from .hkt_symbolic import (
    Form,
    canonical_str,
    del_generator,
    del_holo,
    del_j_basic,
    form_add,
    p_const,
    quadratic_forms_closed,
    reality_check,
    reduce_ratio,
    ReductionContext,
    standard_hkt_form,
)
from .kernels import backend
from .lie_frame import (
    build_complex_frame,
    check_foliation,
    check_hypercomplex,
    check_jacobi,
    load_structure_constants,
    nijenhuis_pair_identities,
    relabel_spec,
)


def _say(line):
    print(line)


def _ok(label):
    _say("ok: %s" % label)


# ---------------------------------------------------------------------------
# verify-su3


def _su3_golden_ratio():
    """The stored golden reduction polynomial for the built-in algebra."""
    poly = p_const(1)
    poly[(("h", 3, 7),)] = QQi(1)
    poly[(("h", 4, 8),)] = QQi(1)
    poly[(("g", 3), ("g", 7))] = QQi(-4)
    poly[(("g", 4), ("g", 8))] = QQi(-4)
    return poly


def _su3_golden_gens():
    two = p_const(2)
    return {
        1: Form(4),
        2: Form(4, {(1, 2): two, (3, 4): two}),
        3: Form(4, {(1, 3): p_const(QQi(1, 3))}),
        4: Form(4, {(1, 4): p_const(QQi(1, -3))}),
    }


def verify_su3(perturb=False, emit_forms=None):
    """Run every golden identity; raises on the first failure."""
    spec = algebras.su3()
    if perturb:
        # deliberate corruption hook for testing the failure path
        spec.sc.table[(5, 6)] = {1: Fraction(1), 2: Fraction(2)}
    check_jacobi(spec.sc, strict=True)
    _ok("real structure constants satisfy the Jacobi identity (exact)")

    frame = build_complex_frame(spec)
    check_hypercomplex(frame, strict=True)
    _ok("both almost complex structures are integrable (Nijenhuis = 0)")

    parsed = load_structure_constants(algebras.su3_bracket_text())
    if parsed != spec.sc:
        raise ConfigError("shipped bracket file disagrees with the builtin table")
    _ok("shipped structure-constant file matches the builtin table")

    ctx = ReductionContext(frame.table, frame.split)
    golden = _su3_golden_gens()
    for k in range(1, 5):
        if del_generator(k, ctx) != golden[k]:
            raise ConfigError("coframe derivative %d differs from golden" % k)
    _ok("holomorphic coframe derivatives match the golden table")

    relabeled = build_complex_frame(relabel_spec(spec, (3, 4, 1, 2)))
    vals = nijenhuis_pair_identities(relabeled.table, (1, 2))
    if any(v != 0 for v in vals):
        raise ConfigError("pair identities violated: %r" % (vals,))
    _ok("leading-pair bracket identities hold after relabeling (exact)")

    check_foliation(frame, strict=True)
    _ok("annihilated pair spans a bracket-closed J-stable distribution")

    op = reduce_ratio(frame)
    if op.ratio_poly != _su3_golden_ratio():
        raise ConfigError("reduced ratio differs from the golden polynomial")
    _ok("top-power ratio equals the golden reduced polynomial")

    pc, qc = quadratic_forms_closed(frame.table, frame.split)
    if pc != op.p_forms or qc != op.q_forms:
        raise ConfigError("closed-form gradient components disagree")
    _ok("extracted gradient components match the closed-form table")

    qmat = op.real_quadratic_matrix()
    if not np.allclose(qmat, -4.0 * np.eye(4), atol=1e-12):
        raise ConfigError("real quadratic matrix is not -4 I")
    _ok("real quadratic form is -4 times the identity")

    perturbed = form_add(standard_hkt_form(4), del_holo(del_j_basic(ctx), ctx))
    if not reality_check(perturbed, ctx):
        raise ConfigError("perturbed form fails the J-reality check")
    _ok("perturbed top form is J-real")

    if emit_forms:
        with open(emit_forms, "w") as fh:
            fh.write(canonical_str(perturbed, sep="\n") + "\n")
        _say("wrote canonical form to %s" % emit_forms)
    return op


def cmd_verify_su3(args):
    verify_su3(perturb=args.perturb, emit_forms=args.emit_forms)
    _say("all golden identities verified")
    return 0


# ---------------------------------------------------------------------------
# verify-algebra


def _parse_params(pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError("parameter %r is not key=value" % item)
        key, val = item.split("=", 1)
        out[key.strip()] = Fraction(val.strip())
    return out


def cmd_verify_algebra(args):
    if args.file:
        with open(args.file) as fh:
            sc = load_structure_constants(fh.read())
        check_jacobi(sc, strict=True)
        _ok("file %s: dim %d table satisfies the Jacobi identity"
            % (args.file, sc.dim))
        return 0
    spec = algebras.get_algebra(args.name, **_parse_params(args.param))
    check_jacobi(spec.sc, strict=True)
    _ok("Jacobi identity (exact)")
    frame = build_complex_frame(spec)
    check_hypercomplex(frame, strict=True)
    _ok("hypercomplex pair integrable")
    check_foliation(frame, strict=True)
    _ok("annihilated set %s is foliating" % (frame.split,))
    op = reduce_ratio(frame)
    _ok("reduction has the advertised normal form")
    _say(op.describe())
    eig = np.linalg.eigvalsh(op.real_quadratic_matrix())
    _say("real quadratic form eigenvalues: %s" % np.array2string(eig, precision=6))
    if eig.max() > 1e-12:
        raise ConfigError("quadratic form is not negative semi-definite")
    _ok("quadratic form negative semi-definite")
    return 0


# ---------------------------------------------------------------------------
# solve


def _build_forcing(spec, grid):
    if "file" in spec:
        arr, lengths = gridio.read_field(spec["file"])
        if tuple(arr.shape) != grid.dims:
            raise ConfigError("forcing field does not match the grid")
        if tuple(lengths) != grid.lengths:
            raise ConfigError("forcing field lengths do not match the grid")
        return arr
    kind = spec.get("type", "zero")
    amp = float(spec.get("amplitude", 1.0))
    if kind == "zero":
        return grid.zeros()
    if kind == "sine":
        return sine_product_field(grid, amp)
    if kind == "bump":
        width = float(spec.get("width", 1.0))
        if width <= 0:
            raise ConfigError("bump width must be positive")
        acc = np.zeros(grid.dims)
        for ax in range(grid.ndim):
            x = grid.coords(ax)
            shape = [1] * grid.ndim
            shape[ax] = grid.dims[ax]
            acc = acc + (np.cos(2.0 * np.pi * x / grid.lengths[ax]) - 1.0).reshape(shape)
        return amp * np.exp(acc / width)
    raise ConfigError("unknown forcing type %r" % kind)


def _load_run_config(path, overrides):
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    for key, val in overrides.items():
        if val is None:
            continue
        section, sub = key
        cfg.setdefault(section, {})[sub] = val
    gspec = cfg.get("grid", {})
    grid = TorusGrid(gspec.get("dims", [64, 64]), gspec.get("lengths"))
    F = _build_forcing(cfg.get("forcing", {"type": "zero"}), grid)
    q = gridio.load_qspec(cfg.get("q", {"matrix": np.zeros((grid.ndim, grid.ndim)).tolist()}),
                          grid)
    cspec = cfg.get("continuity", {})
    ccfg = ContinuityConfig(
        t_step_init=float(cspec.get("t_step_init", 1.0)),
        t_step_min=float(cspec.get("t_step_min", 1e-6)),
        t_step_max=float(cspec.get("t_step_max", 1.0)),
        newton_tol=float(cspec.get("newton_tol", 1e-10)),
        max_newton=int(cspec.get("max_newton", 30)),
    ).validate()
    return cfg, grid, F, q, ccfg


def cmd_solve(args):
    overrides = {("continuity", "newton_tol"): args.newton_tol}
    cfg, grid, F, q, ccfg = _load_run_config(args.config, overrides)
    state, trace = run_continuity(grid, F, q, ccfg)
    dens = density(grid, state.phi, q)
    slack = 10.0 * ccfg.newton_tol
    bound_ok = check_b_bound(state, F, slack)
    _say("converged: b=%.12g residual=%.3e macro_steps=%d backend=%s"
         % (state.b, state.residual_norm, len(trace.rows), backend()))
    _say("density range: [%.6g, %.6g]" % (float(dens.min()), float(dens.max())))
    _say("b bound (max e^{-tF} + %.1e): %s" % (slack, "ok" if bound_ok else "VIOLATED"))

    outputs = cfg.get("outputs", {})
    outdir = args.out_dir or "."
    os.makedirs(outdir, exist_ok=True)

    def _path(key, default):
        return os.path.join(outdir, outputs.get(key) or default)

    gridio.write_field(_path("phi", "phi.field"), state.phi, grid.lengths)
    with open(_path("trace_csv", "trace.csv"), "w") as fh:
        fh.write(trace.to_csv())
    with open(_path("trace_json", "trace.json"), "w") as fh:
        fh.write(trace.to_json())
    summary = {
        "b": state.b,
        "t": state.t,
        "residual_norm": state.residual_norm,
        "macro_steps": len(trace.rows),
        "b_bound_ok": bool(bound_ok),
        "density_min": float(dens.min()),
        "density_max": float(dens.max()),
        "grid": {"dims": list(grid.dims), "lengths": list(grid.lengths)},
    }

    report = basicness_check(grid, F, q, state, ccfg.newton_tol)
    if report.get("applicable"):
        _say("basicness: variation %.3e along axes %s"
             % (report["variation"], report["invariant_axes"]))
        summary["basicness"] = {k: report[k] for k in
                                ("invariant_axes", "variation", "passed")}
    else:
        _say("basicness: not applicable (forcing varies along every axis)")

    if args.verify_unique:
        seed = 0.01 * sine_product_field(grid, 1.0)
        other = solve_at_t(grid, F, q, 1.0, phi0=seed, b0=1.5,
                           tol=ccfg.newton_tol, max_iters=ccfg.max_newton)
        dphi = float(np.max(np.abs(other.phi - state.phi)))
        db = abs(other.b - state.b)
        agree = dphi <= 100.0 * ccfg.newton_tol and db <= 100.0 * ccfg.newton_tol
        _say("uniqueness re-run: |dphi|=%.3e |db|=%.3e -> %s"
             % (dphi, db, "agree" if agree else "DISAGREE"))
        summary["uniqueness"] = {"dphi": dphi, "db": db, "agree": bool(agree)}
        if not agree:
            return 1
    with open(_path("summary", "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0 if bound_ok else 1


# ---------------------------------------------------------------------------
# manufactured and study


def cmd_manufactured(args):
    dims = [args.grid] * (4 if args.four_axes else 2)
    grid = TorusGrid(dims)
    q = np.eye(grid.ndim) * args.qdiag
    phi_star = sine_product_field(grid, args.amplitude)
    F = manufactured_problem(grid, phi_star, q, b_star=args.b_star)
    ccfg = ContinuityConfig(newton_tol=args.newton_tol)
    state, trace = run_continuity(grid, F, q, ccfg)
    err_phi = float(np.max(np.abs(state.phi - phi_star)))
    err_b = abs(state.b - args.b_star)
    budget = 50.0 * args.newton_tol
    _say("recovery: |phi-phi*|=%.3e |b-b*|=%.3e budget=%.1e macro_steps=%d"
         % (err_phi, err_b, budget, len(trace.rows)))
    if err_phi <= budget and err_b <= budget:
        _say("manufactured solution recovered")
        return 0
    _say("recovery outside budget")
    return 1


def cmd_study(args):
    sizes = [int(s) for s in args.sizes.split(",")]
    if len(sizes) < 2:
        raise ConfigError("need at least two grid sizes")
    rows = convergence_study(sizes, amplitude=args.amplitude, qdiag=args.qdiag,
                             newton_tol=args.newton_tol)
    _say("size   sup_error      observed_order")
    for row in rows:
        order = "%.3f" % row["order"] if "order" in row else "-"
        _say("%4d   %.6e   %s" % (row["size"], row["error"], order))
    orders = [row["order"] for row in rows if "order" in row]
    if all(1.7 <= o <= 2.3 for o in orders):
        _say("observed orders within the second-order window [1.7, 2.3]")
        return 0
    _say("observed orders outside [1.7, 2.3]")
    return 1


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hktsolve",
        description="Frame reduction of the quaternionic Monge-Ampere "
                    "operator and a continuity-method solver for the "
                    "reduced scalar equation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-su3", help="check every golden identity")
    p.add_argument("--perturb", action="store_true",
                   help="corrupt one bracket first (failure-path hook)")
    p.add_argument("--emit-forms", metavar="PATH",
                   help="write the canonical perturbed form to PATH")
    p.set_defaults(func=cmd_verify_su3)

    p = sub.add_parser("verify-algebra", help="verify a registry algebra or file")
    p.add_argument("--name", default="su3",
                   help="registry name (%s)" % ", ".join(sorted(algebras.REGISTRY)))
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="algebra parameter, rationals accepted (repeatable)")
    p.add_argument("--file", help="structure-constant file; Jacobi check only")
    p.set_defaults(func=cmd_verify_algebra)

    p = sub.add_parser("solve", help="continuity run from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", help="directory for output artifacts")
    p.add_argument("--newton-tol", type=float, dest="newton_tol",
                   help="override continuity.newton_tol")
    p.add_argument("--verify-unique", action="store_true",
                   help="re-solve from a perturbed start and compare")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("manufactured", help="recover a chosen exact solution")
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--four-axes", action="store_true")
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--qdiag", type=float, default=-1.0)
    p.add_argument("--b-star", type=float, dest="b_star", default=1.0)
    p.add_argument("--newton-tol", type=float, dest="newton_tol", default=1e-8)
    p.set_defaults(func=cmd_manufactured)

    p = sub.add_parser("study", help="grid convergence study")
    p.add_argument("--sizes", default="32,64,128")
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--qdiag", type=float, default=0.0)
    p.add_argument("--newton-tol", type=float, dest="newton_tol", default=1e-10)
    p.set_defaults(func=cmd_study)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HktError as exc:
        print("error: %s: %s" % (type(exc).__name__, exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
