"""Command line interface: ``obsctl {solve,certify,eig,export,mesh-info}``."""

import argparse
import logging
import os
import sys
from pathlib import Path

from . import certificate, fem, io, penalized, problems, vi
from .funcexpr import ExprFunction, ExprSyntaxError
from .linalg import IllConditionedError, NoConvergenceError, smallest_generalized_eigenvalue
from .mesh import Domain, build_uniform_mesh, write_mesh

log = logging.getLogger("obsctl")

DEFAULTS = {
    "example": None, "domain": "square", "N": "64", "alpha": "1.0",
    "f": "0", "y0": "0", "psi": "0", "ud": "0",
    "gamma_start": "1", "gamma_max": "1e15", "tau": "0", "lambda1": "reference",
    "quadrature": None,
}


def _problem_args(p, solve=True):
    p.add_argument("--config", help="key = value file; command line flags take precedence")
    p.add_argument("--example", type=int, choices=(1, 2, 3, 4), help="built-in problem")
    p.add_argument("--domain", help="square or lshape (default square)")
    p.add_argument("-N", "--N", dest="N", help="cells per unit length (default 64)")
    p.add_argument("--alpha", help="control cost weight (default 1)")
    p.add_argument("--f", help="right-hand side expression in x1, x2")
    p.add_argument("--y0", help="desired state expression")
    p.add_argument("--psi", help="obstacle expression")
    p.add_argument("--ud", help="control shift expression")
    p.add_argument("--quadrature", choices=sorted(fem.QUADRATURE_RULES),
                   help="load vector rule (default: centroid for examples, midpoint otherwise)")
    p.add_argument("--lambda1", help="'reference' (default), 'computed', or a number")
    p.add_argument("--tau", help="tolerance for y = psi in the node classification")
    if solve:
        p.add_argument("--gamma-start", dest="gamma_start", help="first penalty (default 1)")
        p.add_argument("--gamma-max", dest="gamma_max", help="last penalty (default 1e15)")


def build_parser():
    parser = argparse.ArgumentParser(prog="obsctl", description=(
        "Penalized optimal control of the obstacle problem with global-optimality certificates."))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the penalty homotopy and print the results table")
    _problem_args(p)
    p.add_argument("-o", "--output", help="results CSV (default stdout)")
    p.add_argument("--fields", help="directory for the fields of the last stage")

    p = sub.add_parser("certify", help="certify nodal fields y, p read from CSV files")
    _problem_args(p, solve=False)
    p.add_argument("--y", required=True, help="state field CSV (x,y,value)")
    p.add_argument("--p", required=True, help="adjoint field CSV")
    p.add_argument("--xi", help="multiplier xi field CSV; with --mu uses the unpenalized test")
    p.add_argument("--mu", help="multiplier mu field CSV")

    p = sub.add_parser("eig", help="smallest Dirichlet eigenvalue and the threshold")
    _problem_args(p, solve=False)
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("export", help="solve up to --gamma and write u, y, p, xi, mu")
    _problem_args(p)
    p.add_argument("--gamma", default="1e8", help="penalty at which fields are written")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("mesh-info", help="mesh statistics, optional text export")
    p.add_argument("--domain", default="square")
    p.add_argument("-N", "--N", dest="N", type=int, default=64)
    p.add_argument("--nodes", help="write vertices here")
    p.add_argument("--elements", help="write triangles here")
    return parser


def resolve_config(args):
    """Merge defaults, config file and flags into a dict of strings."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        file_cfg = io.read_config(args.config)
        if "u_d" in file_cfg:
            file_cfg["ud"] = file_cfg.pop("u_d")
        unknown = sorted(set(file_cfg) - set(DEFAULTS))
        if unknown:
            raise ValueError(f"{args.config}: unknown keys {', '.join(unknown)}")
        cfg.update(file_cfg)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = str(val)
    return cfg


def build_problem(cfg):
    N = int(cfg["N"])
    if N < 2:
        raise ValueError("N must be at least 2")
    if cfg.get("example") not in (None, "", "None"):
        quad = cfg["quadrature"] or problems.PRESET_QUADRATURE
        return problems.example(int(cfg["example"]), N=N, quadrature=quad)
    alpha = float(cfg["alpha"])
    return problems.from_functions(
        Domain.parse(cfg["domain"]), N, alpha,
        f=ExprFunction(cfg["f"]), y0=ExprFunction(cfg["y0"]), psi=ExprFunction(cfg["psi"]),
        u_d=ExprFunction(cfg["ud"]), quadrature=cfg["quadrature"] or "midpoint")


def resolve_lambda1(cfg, data):
    choice = cfg["lambda1"].strip().lower()
    if choice == "reference":
        return problems.reference_lambda1(data.mesh.domain)
    if choice == "computed":
        return smallest_generalized_eigenvalue(data.A, data.M)[0]
    return float(choice)


def schedule(cfg):
    start = float(cfg["gamma_start"])
    stop = float(cfg["gamma_max"])
    if start < 1:
        raise ValueError("gamma start must be >= 1")
    out = []
    g = start
    while g <= stop * (1 + 1e-12):
        out.append(g)
        g *= 10.0
    if not out:
        raise ValueError("empty gamma schedule")
    return out


def _fields(sol, data):
    xi, mu = certificate.multiplier_fields(sol.y, sol.p, data.psi_nodal, sol.gamma)
    # multipliers are defined on interior nodes only
    xi[data.n:] = 0.0
    mu[data.n:] = 0.0
    return {"u": sol.u, "y": sol.y, "p": sol.p, "xi": xi, "mu": mu}


def write_fields(directory, sol, data):
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    fields = _fields(sol, data)
    for name, values in fields.items():
        io.write_field_csv(out / f"{name}.csv", data.mesh, values)
        io.write_vtk(out / f"{name}.vtk", data.mesh, {name: values})
    return fields


def run_solve(args):
    cfg = resolve_config(args)
    data = build_problem(cfg)
    lam = resolve_lambda1(cfg, data)
    tau = float(cfg["tau"])
    sched = schedule(cfg)
    try:
        sols = penalized.gamma_homotopy(data, sched)
    except (IllConditionedError, NoConvergenceError) as exc:
        print(f"obsctl: solve failed at gamma={sched[0]:g}: {exc}", file=sys.stderr)
        return 2
    if len(sols) < len(sched):
        log.warning("homotopy truncated after gamma=%.1e", sols[-1].gamma)
    rows = [io.result_row(s, certificate.certify(s, data, lam, tau)) for s in sols]
    if args.output:
        io.write_results(args.output, rows)
    else:
        io.write_results(sys.stdout, rows)
    if args.fields:
        write_fields(args.fields, sols[-1], data)
    return 0


def run_certify(args):
    cfg = resolve_config(args)
    data = build_problem(cfg)
    lam = resolve_lambda1(cfg, data)
    n = data.n
    try:
        y = io.read_field_csv(args.y, data.mesh)
        p = io.read_field_csv(args.p, data.mesh)
    except io.MeshMismatchError as exc:
        print(f"obsctl: {exc}", file=sys.stderr)
        return 3
    cert = certificate.certify_fields(y[:n], p[:n], data.psi_int, data.alpha, lam,
                                      float(cfg["tau"]))
    eta = cert.eta
    if args.xi and args.mu:
        xi = io.read_field_csv(args.xi, data.mesh)[:n]
        mu = io.read_field_csv(args.mu, data.mesh)[:n]
        # nodal multiplier fields -> algebraic slack and multiplier vectors
        eta = vi.eta_unpenalized(y[:n], p[:n], data.m * xi, -data.m * mu, data.psi_int)
        verdict = certificate.verdict_for(eta, cert.threshold, cert.biactive_ok)
    else:
        verdict = cert.verdict
    print(f"eta       {eta:.8e}")
    print(f"threshold {cert.threshold:.8e}")
    print(f"kappa     {abs(eta) / cert.threshold:.8e}")
    print(f"verdict   {verdict}")
    if not cert.biactive_ok:
        print(f"biactive nodes with p < 0: {list(cert.offending_nodes)}")
    return 0 if verdict.certified else 1


def run_eig(args):
    cfg = resolve_config(args)
    if cfg.get("example") not in (None, "", "None"):
        spec = problems.PRESETS[int(cfg["example"])]
        domain, alpha = spec["domain"], spec["alpha"]
    else:
        domain, alpha = Domain.parse(cfg["domain"]), float(cfg["alpha"])
    mesh = build_uniform_mesh(domain, int(cfg["N"]))
    A = fem.interior_block(fem.assemble_stiffness(mesh), mesh)
    M = fem.interior_block(fem.assemble_mass(mesh), mesh)
    lam, _ = smallest_generalized_eigenvalue(A, M, tol=args.tol)
    print(f"lambda1   {lam:.8f}")
    print(f"threshold {certificate.threshold(alpha, lam):.4f}  (alpha={alpha:g})")
    return 0


def run_export(args):
    cfg = resolve_config(args)
    data = build_problem(cfg)
    target = float(args.gamma)
    sched = [g for g in schedule(cfg) if g <= target * (1 + 1e-12)]
    sols = penalized.gamma_homotopy(data, sched)
    if sols[-1].gamma < target * (1 - 1e-12):
        log.warning("homotopy stopped at gamma=%.1e before %.1e", sols[-1].gamma, target)
    write_fields(args.out, sols[-1], data)
    print(f"wrote u, y, p, xi, mu at gamma={sols[-1].gamma:.1e} to {args.out}")
    return 0


def run_mesh_info(args):
    mesh = build_uniform_mesh(Domain.parse(args.domain), args.N)
    print(f"domain     {mesh.domain.value}")
    print(f"vertices   {mesh.n_vertices}")
    print(f"interior   {mesh.n_interior}")
    print(f"triangles  {mesh.n_triangles}")
    print(f"h          {mesh.h:.10g}")
    print(f"area       {mesh.areas().sum():.12g}")
    if args.nodes or args.elements:
        if not (args.nodes and args.elements):
            print("obsctl: --nodes and --elements go together", file=sys.stderr)
            return 2
        write_mesh(mesh, args.nodes, args.elements)
    return 0


COMMANDS = {"solve": run_solve, "certify": run_certify, "eig": run_eig,
            "export": run_export, "mesh-info": run_mesh_info}


def main(argv=None):
    level = os.environ.get("OBSCTL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, ExprSyntaxError, OSError) as exc:
        print(f"obsctl: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
