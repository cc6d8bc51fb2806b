"""Command-line interface: solve, asymmetry, oracle, mesh, verify."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import default_config_text, parse_config
from .domains import fraenkel_asymmetry, parse_domain_spec
from .fem import boundary_integral, field_integral, solve_robin_poisson
from .meshing import export_mesh_text, generate_mesh, import_mesh_text, refine_mesh
from .radial import ball_closed_forms, bessel_eigen_oracle, symmetrized_constant_source
from .runner import all_passed, emit_reports, run_experiments, source_from_name


def _load_mesh(args):
    if getattr(args, "import_path", None):
        with open(args.import_path) as fh:
            mesh = import_mesh_text(fh.read())
    elif getattr(args, "domain", None):
        mesh = generate_mesh(parse_domain_spec(args.domain), args.h)
    else:
        raise SystemExit("mesh: provide --domain or --import")
    for _ in range(getattr(args, "refine", 0)):
        mesh = refine_mesh(mesh)
    return mesh


def cmd_mesh(args) -> int:
    mesh = _load_mesh(args)
    text = export_mesh_text(mesh)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"# nodes={mesh.num_nodes} triangles={len(mesh.triangles)} "
          f"area={mesh.area():.12g} boundary={mesh.boundary_length():.12g}",
          file=sys.stderr)
    return 0


def cmd_solve(args) -> int:
    mesh = _load_mesh(args)
    domain = parse_domain_spec(args.domain) if args.domain else None
    f = source_from_name(args.f, domain) if domain is not None else None
    if f is None:
        raise SystemExit("solve requires --domain")
    u = solve_robin_poisson(mesh, f, args.beta)
    out = export_mesh_text(mesh) + f"values {mesh.num_nodes}\n" + \
        "\n".join(f"{v:.17g}" for v in u.values) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    print(f"u_min={u.u_min:.12g} u_max={u.u_max:.12g} "
          f"integral={field_integral(u):.12g} boundary={boundary_integral(u):.12g}")
    return 0


def cmd_asymmetry(args) -> int:
    d = parse_domain_spec(args.domain)
    a = fraenkel_asymmetry(d, resolution=args.resolution)
    print(f"asymmetry={a.value:.10g} center=({a.center[0]:.10g}, {a.center[1]:.10g}) "
          f"radius={a.radius:.10g} error={a.error:.3g}")
    return 0


def cmd_oracle(args) -> int:
    if args.kind == "torsion":
        _, t = ball_closed_forms(args.R, args.beta)
        print(f"torsion={t:.15g}")
    elif args.kind == "eigen":
        print(f"lambda={bessel_eigen_oracle(args.R, args.beta):.15g}")
    else:
        rs = symmetrized_constant_source(np.pi * args.R ** 2, args.beta)
        sys.stdout.write(rs.export_text(num=args.samples))
    return 0


def cmd_verify(args) -> int:
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    else:
        text = default_config_text()
    cfg = parse_config(text)
    if args.out:
        cfg.outdir = args.out
    if args.h:
        cfg.h = args.h
    if args.gamma2:
        cfg.gamma2 = args.gamma2
    if args.seed is not None:
        cfg.seed = args.seed
    rows = run_experiments(cfg)
    files = emit_reports(rows, cfg.outdir)
    ok = all_passed(rows)
    npass = sum(1 for r in rows if r.status == "ok" and r.report.passed)
    print(f"{npass}/{len(rows)} checks passed; reports in {cfg.outdir} "
          f"({len(files)} files)")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robinsym",
                                 description="Robin-Poisson symmetrization laboratory")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="generate, refine, import or export a mesh")
    p.add_argument("--domain", help="domain spec, e.g. 'disc r=1'")
    p.add_argument("--import", dest="import_path", help="mesh text file to load")
    p.add_argument("--h", type=float, default=0.1)
    p.add_argument("--refine", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_mesh)

    p = sub.add_parser("solve", help="one Robin-Poisson solve with field export")
    p.add_argument("--domain", required=True)
    p.add_argument("--h", type=float, default=0.05)
    p.add_argument("--refine", type=int, default=0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--f", default="const", help="source: const, radial, or bump")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("asymmetry", help="Fraenkel asymmetry of one domain")
    p.add_argument("--domain", required=True)
    p.add_argument("--resolution", type=int, default=512)
    p.set_defaults(fn=cmd_asymmetry)

    p = sub.add_parser("oracle", help="disc closed forms and the Bessel eigenvalue")
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--kind", choices=("torsion", "eigen", "profile"), default="torsion")
    p.add_argument("--samples", type=int, default=65)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("verify", help="run the full inequality suite from a config")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--h", type=float)
    p.add_argument("--gamma2", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
