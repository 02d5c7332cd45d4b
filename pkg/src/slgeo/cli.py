"""Command-line front end: ``slgeo {verify,solve,fiber,evolve,spectrum,index}``.

Exit status: 0 on success, 2 when a computed quantity violates its tolerance
(the report then carries a ``violations`` list), 1 on any error.
"""
import argparse
import os
import sys

import numpy as np

from . import cones, evolver, families, fibration, io, moduli, u1pde
from .errors import SLGeoError
from .expr import ExpressionError, parse_expression
from .io import ConfigError, require

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage problems are errors (1); 2 is reserved for tolerance violations
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _finish(args, report, violations):
    report["violations"] = violations
    io.write_report(args.out, report)
    return EXIT_VIOLATION if violations else EXIT_OK


# --- verify ---------------------------------------------------------------------

_FAMILY_NAMES = {
    "hl": families.Family.HL_DESING,
    "hl-cone": families.Family.HL_CONE,
    "so3": families.Family.SO3,
    "quadric": families.Family.QUADRIC,
}


def cmd_verify(args):
    kind = _FAMILY_NAMES[args.family]
    if kind in (families.Family.HL_DESING, families.Family.SO3):
        params = (args.t,)
    elif kind is families.Family.QUADRIC:
        params = (args.a1, args.a2, args.c)
    else:
        params = ()
    spec = families.FamilySpec(kind, params)
    cloud = families.sample_family(spec, args.samples, rng=args.seed)
    r = cloud.residuals()
    worst = float(max(r[:, 0].max(), r[:, 1].max()))
    if args.csv:
        cloud.to_csv(args.csv)
    report = dict(family=args.family, params=list(params), samples=len(cloud), seed=args.seed,
                  max_sl_residual=worst, max_omega_norm=float(r[:, 0].max()),
                  max_abs_im_omega=float(r[:, 1].max()), min_calib_ratio=float(r[:, 2].min()),
                  tolerance=args.tol)
    violations = []
    if worst > args.tol:
        violations.append(dict(field="max_sl_residual", value=worst, limit=args.tol))
    if r[:, 2].min() < 1 - args.tol:
        violations.append(dict(field="min_calib_ratio", value=float(r[:, 2].min()), limit=1 - args.tol))
    return _finish(args, report, violations)


# --- solve ----------------------------------------------------------------------

def _domain_from(spec, where):
    if spec == "disk" or spec is None:
        return u1pde.disk(1.0)
    if isinstance(spec, dict):
        kind = require(spec, "type", str, where)
        if kind == "disk":
            return u1pde.disk(float(spec.get("radius", 1.0)))
        if kind == "ellipse":
            return u1pde.Ellipse(float(require(spec, "ax", (int, float), where)),
                                 float(require(spec, "ay", (int, float), where)),
                                 float(spec.get("cx", 0.0)), float(spec.get("cy", 0.0)))
        raise ConfigError(f"{where}: unknown domain type {kind!r} (disk, ellipse)")
    raise ConfigError(f"{where}: domain must be 'disk' or an object with a 'type' field")


def _boundary_from(phi, where, domain):
    """Expression string, or a table {theta: [...], value: [...]} interpolated periodically in polar angle."""
    if isinstance(phi, str):
        try:
            return parse_expression(phi)
        except ExpressionError as exc:
            raise ConfigError(f"{where}: field 'phi': {exc}") from None
    if isinstance(phi, dict):
        th = np.asarray(require(phi, "theta", list, where), dtype=float)
        val = np.asarray(require(phi, "value", list, where), dtype=float)
        if th.shape != val.shape or len(th) < 3:
            raise ConfigError(f"{where}: boundary table needs matching 'theta' and 'value' with >= 3 entries")
        cx, cy = domain.cx, domain.cy
        return lambda x, y: np.interp(np.mod(np.arctan2(y - cy, x - cx), 2 * np.pi), th, val, period=2 * np.pi)
    raise ConfigError(f"{where}: field 'phi' must be an expression string or a boundary table")


def cmd_solve(args):
    where = args.input or "command line"
    if args.input:
        prob = io.load_json(args.input)
        if not isinstance(prob, dict):
            raise ConfigError(f"{where}: top level must be an object")
        h = float(require(prob, "h", (int, float), where))
        a = float(require(prob, "a", (int, float), where))
        domain = _domain_from(prob.get("domain", "disk"), where)
        phi = _boundary_from(require(prob, "phi", (str, dict), where), where, domain)
        phi_src = prob["phi"] if isinstance(prob["phi"], str) else "table"
    else:
        if args.h is None or args.a is None or args.phi is None:
            raise ConfigError("solve needs --input or all of --h, --a, --phi")
        h, a = args.h, args.a
        domain = _domain_from(args.domain, where)
        phi = _boundary_from(args.phi, where, domain)
        phi_src = args.phi
    mesh = u1pde.DomainMesh.build(domain, h)
    field = u1pde.solve_dirichlet(mesh, phi, a)
    if args.grid:
        io.write_grid_csv(args.grid, mesh, field.f, "f")
    res = float(np.abs(u1pde.residual(field)).max())
    report = dict(phi=phi_src, h=h, a=a, vertices=mesh.n, residual=res,
                  iterations=field.info.get("iterations"))
    if a == 0:
        report.update(cauchy_converged=field.info["cauchy_converged"], cauchy_tail=field.info["cauchy_tail"],
                      continuation=[dict(a=c["a"], sup_diff=c["sup_diff"]) for c in field.info["continuation"]])
    violations = []
    if res > args.tol:
        violations.append(dict(field="residual", value=res, limit=args.tol))
    return _finish(args, report, violations)


# --- fiber ----------------------------------------------------------------------

def cmd_fiber(args):
    where = args.input
    cfg = io.load_json(args.input)
    fam = require(cfg, "family", dict, where)
    phi = _boundary_from(fam.get("phi", "0"), where + ": family", u1pde.disk(1.0))
    box = fam.get("box", [[-1, 1], [-1, 1], [-1, 1]])
    if not (isinstance(box, list) and len(box) == 3 and all(isinstance(b, list) and len(b) == 2 for b in box)):
        raise ConfigError(f"{where}: field 'family.box' must be three [lo, hi] pairs")
    keys = require(cfg, "keys", list, where)
    if not keys or not all(isinstance(k, list) and len(k) == 3 for k in keys):
        raise ConfigError(f"{where}: field 'keys' must be a nonempty list of [a, b, c] triples")
    h = float(cfg.get("h", 1 / 16))
    mesh = u1pde.DomainMesh.build(u1pde.disk(1.0), h)
    family = fibration.BoundaryFamily(phi, mesh, tuple(tuple(map(float, b)) for b in box))
    clouds = []
    for i, k in enumerate(keys):
        c = fibration.build_fiber(family, fibration.FiberKey(*map(float, k)), n_theta=args.n_theta)
        clouds.append(c)
        if args.outdir:
            os.makedirs(args.outdir, exist_ok=True)
            c.to_csv(os.path.join(args.outdir, f"fiber_{i:03d}.csv"))
    resid = max(float(max(r[:, 0].max(), r[:, 1].max())) for r in (c.residuals() for c in clouds))
    dmin = None
    zeros = []
    for i in range(len(clouds)):
        for j in range(i + 1, len(clouds)):
            d = fibration.fiber_distance(clouds[i], clouds[j])
            dmin = d if dmin is None else min(dmin, d)
            if keys[i][0] == keys[j][0]:
                zeros.append(dict(pair=[i, j], interior_zeros=fibration.fiber_zero_count(family, keys[i], keys[j]).total))
    flux = None
    a_vals = [k[0] for k in keys]
    if len(keys) > 1 and all(a != 0 for a in a_vals) and (all(a > 0 for a in a_vals) or all(a < 0 for a in a_vals)):
        num = fibration.flux_coordinates(family, keys)
        flux = dict(orbit=float(num[0]), loop=float(num[1]))
    report = dict(keys=keys, h=h, disjointness_min_distance=dmin, residual_max=resid, zero_counts=zeros, flux=flux)
    violations = []
    if dmin is not None and not dmin > 0:
        violations.append(dict(field="disjointness_min_distance", value=dmin, limit=0.0))
    if resid > args.tol:
        violations.append(dict(field="residual_max", value=resid, limit=args.tol))
    violations += [dict(field="interior_zeros", pair=z["pair"], value=z["interior_zeros"], limit=0)
                   for z in zeros if z["interior_zeros"] > 0]
    return _finish(args, report, violations)


# --- evolve ---------------------------------------------------------------------

def cmd_evolve(args):
    if args.seed_kind == "quadric-linear":
        init = evolver.quadric_linear_seed(args.a1, args.a2, args.c, n=args.samples, rng=args.seed)
    elif args.seed_kind == "quadric-grid":
        init, _ = evolver.quadric_seed(args.a1, args.a2, args.c, n=args.n)
    else:
        init = evolver.plane_seed(n=args.n)
    cloud = evolver.sweep(init, args.steps, args.dt)
    if args.csv:
        cloud.to_csv(args.csv)
    drift = cloud.meta["drift_history"]
    report = dict(seed_kind=args.seed_kind, dt=args.dt, steps=args.steps, final_time=cloud.meta["times"][-1],
                  max_drift=float(max(drift)), drift_history=drift, max_sl_residual=cloud.meta["max_sl_residual"])
    violations = []
    if max(drift) > args.tol:
        violations.append(dict(field="max_drift", value=float(max(drift)), limit=args.tol))
    return _finish(args, report, violations)


# --- spectrum -------------------------------------------------------------------

def cmd_spectrum(args):
    if args.preset:
        make_cone, make_link = cones.PRESETS[args.preset]
        cone = make_cone(args.count)
        link_desc = args.preset
    else:
        if args.torus:
            link = cones.FlatTorus(np.array(args.torus, dtype=float).reshape(2, 2))
            link_desc = dict(kind="flat_torus", lattice=link.lattice)
        elif args.sphere:
            d, r, k = args.sphere
            link = cones.RoundSphere(int(d), float(r), int(k))
            link_desc = dict(kind="round_sphere", dim=int(d), radius=float(r), components=int(k))
        elif args.mesh:
            link = cones.read_off(args.mesh)
            link_desc = dict(kind="mesh", path=args.mesh, vertices=len(link.vertices))
        else:
            raise ConfigError("spectrum needs --preset, --torus, --sphere or --mesh")
        if args.b0 is None or args.dim_g is None:
            raise ConfigError("spectrum without --preset needs --b0 and --dim-g")
        cone = cones.ConeData(args.m, args.b0, args.dim_g, cones.link_spectrum(link, args.count))
    rtol = cones.MESH_GROUP_RTOL if args.mesh else 0.0
    spec = cone.spectrum
    N2 = cones.count_N(spec, cone.m, 2.0, rtol=rtol)
    report = dict(link=link_desc, m=cone.m, b0_link=cone.b0_link, dim_G=cone.dim_G,
                  eigenvalues=[[v, k] for v, k in spec],
                  D_sigma=[[a, k] for a, k in cones.exponents(spec, cone.m)], N_of_2=N2)
    violations = []
    try:
        s = cones.stability_index(cone, rtol=rtol)
        report.update(s_ind=s, stable=s == 0)
    except SLGeoError as exc:
        report.update(s_ind=None, stable=False)
        violations.append(dict(field="s_ind", message=str(exc)))
    return _finish(args, report, violations)


# --- index ----------------------------------------------------------------------

def cmd_index(args):
    where = args.input
    cfg = io.load_json(args.input)
    b0 = require(cfg, "b0_Xprime", int, where)
    cs = require(cfg, "cones", list, where)
    b1cs, sind = [], []
    for i, c in enumerate(cs):
        b1cs.append(require(c, "b1cs", int, f"{where}: cones[{i}]"))
        sind.append(require(c, "sind", int, f"{where}: cones[{i}]"))
    ind = moduli.singularity_index(b0, b1cs, sind)
    if args.out not in (None, "-"):
        print(ind)
    return _finish(args, dict(b0_Xprime=b0, cones=cs, index=ind), [])


# --- parser ---------------------------------------------------------------------

def build_parser():
    p = _Parser(prog="slgeo", description="Special Lagrangian geometry toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, tol):
        sp.add_argument("--out", default="-", help="JSON report path ('-' for stdout)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=tol)

    v = sub.add_parser("verify", help="sample a family and check SL residuals")
    v.add_argument("--family", choices=sorted(_FAMILY_NAMES), required=True)
    v.add_argument("--t", type=float, default=1.0)
    v.add_argument("--a1", type=int, default=1)
    v.add_argument("--a2", type=int, default=1)
    v.add_argument("--c", type=float, default=1.0)
    v.add_argument("--samples", type=int, default=1000)
    v.add_argument("--csv", help="write the sample cloud")
    common(v, 1e-8)

    s = sub.add_parser("solve", help="solve the U(1)-invariant potential equation")
    s.add_argument("--input", help="JSON problem {domain, h, a, phi}")
    s.add_argument("--domain", default="disk")
    s.add_argument("--h", type=float)
    s.add_argument("--a", type=float)
    s.add_argument("--phi")
    s.add_argument("--grid", help="write f as x,y,f CSV")
    common(s, u1pde.SOLVER_TOL)

    f = sub.add_parser("fiber", help="build fibers of a boundary-data family")
    f.add_argument("--input", required=True, help="JSON {family: {phi, box}, keys: [[a,b,c], ...], h}")
    f.add_argument("--outdir", help="directory for per-fiber CSV clouds")
    f.add_argument("--n-theta", type=int, default=8)
    common(f, 1e-6)

    e = sub.add_parser("evolve", help="evolve a Lagrangian seed by the SL flow")
    e.add_argument("--seed-kind", choices=["quadric-linear", "quadric-grid", "plane"], default="quadric-linear")
    e.add_argument("--a1", type=int, default=1)
    e.add_argument("--a2", type=int, default=1)
    e.add_argument("--c", type=float, default=1.0)
    e.add_argument("--samples", type=int, default=200)
    e.add_argument("--n", type=int, default=17)
    e.add_argument("--steps", type=int, default=1000)
    e.add_argument("--dt", type=float, default=1e-3)
    e.add_argument("--csv", help="write the swept cloud")
    common(e, 1e-6)

    c = sub.add_parser("spectrum", help="link spectrum and stability index of a cone")
    c.add_argument("--preset", choices=sorted(cones.PRESETS))
    c.add_argument("--torus", type=float, nargs=4, metavar=("L11", "L12", "L21", "L22"))
    c.add_argument("--sphere", type=float, nargs=3, metavar=("DIM", "RADIUS", "COMPONENTS"))
    c.add_argument("--mesh", help="OFF triangle file")
    c.add_argument("--count", type=int, default=40)
    c.add_argument("--m", type=int, default=3)
    c.add_argument("--b0", type=int)
    c.add_argument("--dim-g", type=int)
    common(c, 0.0)

    i = sub.add_parser("index", help="index of an SL m-fold with conical singularities")
    i.add_argument("--input", required=True, help="JSON {b0_Xprime, cones: [{b1cs, sind}, ...]}")
    common(i, 0.0)
    return p


_COMMANDS = dict(verify=cmd_verify, solve=cmd_solve, fiber=cmd_fiber, evolve=cmd_evolve,
                 spectrum=cmd_spectrum, index=cmd_index)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, SLGeoError, OSError) as exc:
        print(f"slgeo {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
