"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` (or ``python3 tests/test_acceptance.py``);
the lines are also repeated in the pytest terminal summary.
"""
import time

import numpy as np
import pytest

from slgeo import calib, cones, evolver, families, fibration, moduli, u1pde
from slgeo.calib import TangentFrame
from slgeo.families import Family, FamilySpec

import oracles


def _sl_stats(cloud):
    r = cloud.residuals()
    return float(r[:, 0].max()), float(r[:, 1].max()), float(r[:, 2].min())


def test_criterion_01_closed_form_residuals(report_criterion):
    specs = [FamilySpec(Family.HL_CONE), FamilySpec(Family.HL_DESING, (0.5,)), FamilySpec(Family.SO3, (1.0,))]
    # a3 = -a1 - a2 even for (1, 1), odd for (1, 2); c of each sign and the cone c = 0
    specs += [FamilySpec(Family.QUADRIC, (a1, a2, c)) for a1, a2 in ((1, 1), (1, 2)) for c in (1.0, 0.0, -1.0)]
    t0 = time.perf_counter()
    worst_w = worst_im = 0.0
    min_cal = 1.0
    counts = []
    for k, spec in enumerate(specs):
        cloud = families.sample_family(spec, 1000, rng=k)
        w, im, cal = _sl_stats(cloud)
        worst_w, worst_im, min_cal = max(worst_w, w), max(worst_im, im), min(min_cal, cal)
        counts.append(len(cloud.frames))
    elapsed = time.perf_counter() - t0
    ok = worst_w <= 1e-8 and worst_im <= 1e-8 and min_cal >= 1 - 1e-8 and min(counts) >= 1000 and elapsed < 10
    report_criterion(1, "closed-form SL residuals", ok,
                     f"{len(specs)} families x >=1000 frames, max|omega|={worst_w:.1e}, max|Im Omega|={worst_im:.1e}, "
                     f"min calib={min_cal:.12f}, {elapsed:.2f}s")
    assert ok


def test_criterion_02_m2_equivalence(report_criterion):
    # half the frames are SL planes in a random basis, half are perturbed by 1e-14 .. 1e-4,
    # so the residuals cover the 1e-10 threshold
    rng = np.random.default_rng(2024)
    bad = []
    n_sl = 0
    for k in range(1000):
        V = calib.apply_unitary(calib.random_su(2, rng), calib.real_plane_frame(2).vectors)
        V = rng.normal(size=(2, 2)) @ V
        if k % 2:
            V = V + 10.0 ** rng.uniform(-14, -4) * rng.normal(size=V.shape)
        fr = TangentFrame(np.zeros(4), V)
        r = calib.sl_residual(fr)
        jh = calib.j_holomorphic_residual(fr)
        n_sl += r.is_sl
        if r.is_sl != (jh <= calib.SL_TOL):
            bad.append((max(r.omega_norm, abs(r.im_omega_val)), jh))
    ok = not bad
    # the flag bounds each component, the residual is their modulus: they can differ only
    # when max <= tol < modulus <= sqrt(2) tol
    note = "; ".join(f"max component {m:.3e}, modulus {j:.3e}" for m, j in bad)
    report_criterion(2, "m=2 SL flag <=> J-holomorphic", ok,
                     f"1000 frames, {n_sl} flagged SL, {len(bad)} disagreements" + (f" ({note})" if bad else ""))
    assert all(m <= calib.SL_TOL < j <= np.sqrt(2) * calib.SL_TOL for m, j in bad)
    assert ok


def test_criterion_03_graph_equation(report_criterion):
    rng = np.random.default_rng(3)
    err = 0.0
    for m in (2, 3):
        for _ in range(100):
            A = rng.normal(size=(m, m))
            H = A + A.T
            err = max(err, abs(calib.graph_residual(H) - oracles.graph_residual_symbolic(H)))
    eps = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    orders = []
    lin2 = 0.0
    for _ in range(10):
        A = rng.normal(size=(3, 3))
        H = A + A.T
        e = [abs(calib.graph_residual(s * H) - calib.graph_linearization(s * H)) for s in eps]
        orders.append(np.polyfit(np.log(eps), np.log(e), 1)[0])
        B = rng.normal(size=(2, 2))
        H2 = B + B.T
        lin2 = max(lin2, max(abs(calib.graph_residual(s * H2) - calib.graph_linearization(s * H2)) for s in eps))
    ok = err <= 1e-12 and min(orders) >= 2 and lin2 <= 1e-15
    report_criterion(3, "graph equation vs symbolic oracle", ok,
                     f"max diff {err:.1e} over 200 Hessians, m=3 linearization order {min(orders):.3f}, "
                     f"m=2 linearization exact (err {lin2:.0e})")
    assert ok


def test_criterion_04_dirichlet_solver(report_criterion):
    mesh = u1pde.DomainMesh.build(u1pde.disk(1.0), 1 / 16)
    aff = lambda x, y: 0.7 - 1.3 * x + 0.4 * y
    aff_err = max(np.abs(u1pde.solve_dirichlet(mesh, aff, a).f - aff(mesh.x, mesh.y)).max() for a in (0.5, -0.3, 0.0))
    phi = lambda x, y: x * x
    ref = u1pde.solve_dirichlet(mesh, phi, 0.25)
    uniq = max(np.abs(u1pde.solve_dirichlet(mesh, phi, 0.25, f0=g).f - ref.f).max()
               for g in (lambda x, y: 0 * x, lambda x, y: 3 * np.sin(4 * x) * y, lambda x, y: -(x * x + y * y)))
    pts = np.array([[0.0, 0.1], [0.2, -0.15], [-0.3, 0.2], [0.35, 0.3]])
    orders, _ = u1pde.convergence_order(phi, 0.25, [1 / 8, 1 / 16, 1 / 32, 1 / 64], pts)
    t0 = time.perf_counter()
    fine = u1pde.DomainMesh.build(u1pde.disk(1.0), 1 / 64)
    sol = u1pde.solve_dirichlet(fine, phi, 0.0)
    elapsed = time.perf_counter() - t0
    tail = sol.info["cauchy_tail"]
    ok = (aff_err <= 1e-12 and uniq <= 1e-9 and 1.8 <= orders[-1] <= 2.2 and sol.info["cauchy_converged"]
          and tail < 1e-6 and elapsed < 60)
    report_criterion(4, "Dirichlet solver", ok,
                     f"affine err {aff_err:.1e}, uniqueness {uniq:.1e}, order {orders[-1]:.3f} (a=0.25, h 1/8..1/64: "
                     f"{', '.join(f'{o:.2f}' for o in orders)}), a->0 Cauchy tail {tail:.1e}, h=1/64 solve {elapsed:.1f}s")
    assert ok


def test_criterion_05_fibration_disjointness(report_criterion):
    mesh = u1pde.DomainMesh.build(u1pde.disk(1.0), 1 / 16)
    family = fibration.BoundaryFamily(lambda x, y: 0 * x, mesh)
    rng = np.random.default_rng(5)
    zeros = 0
    dmin = np.inf
    resid = 0.0
    cal = 1.0
    built = {}

    def fiber(key):
        if key not in built:
            c = fibration.build_fiber(family, key, n_theta=4)
            w, im, ca = _sl_stats(c)
            built[key] = (c, max(w, im), ca)
        return built[key]

    for _ in range(100):
        a = float(rng.uniform(-0.9, 0.9))
        k1 = (a, *map(float, rng.uniform(-0.9, 0.9, 2)))
        k2 = (a, *map(float, rng.uniform(-0.9, 0.9, 2)))
        c1, r1, ca1 = fiber(k1)
        c2, r2, ca2 = fiber(k2)
        zeros += len(fibration.fiber_zero_count(family, k1, k2))
        dmin = min(dmin, fibration.fiber_distance(c1, c2))
        resid, cal = max(resid, r1, r2), min(cal, ca1, ca2)
    ok = zeros == 0 and dmin > 0 and resid <= 1e-8 and cal >= 1 - 1e-8
    report_criterion(5, "fibration disjointness", ok,
                     f"100 pairs (phi = 0, h = 1/16), interior zeros {zeros}, min distance {dmin:.3e}, "
                     f"fiber residual {resid:.1e}, min calib {cal:.10f}")
    assert ok


def test_criterion_06_explicit_fibration(report_criterion):
    a_vals = np.delete(np.linspace(-1, 1, 21), 1)
    rng = np.random.default_rng(6)
    var = 0.0
    vertex_ok = True
    for a in a_vals:
        b = complex(*rng.normal(size=2))
        chk = fibration.explicit_fiber_check(float(a), b, n_samples=1000, rng=rng)
        var = max(var, chk.variation)
        vertex_ok &= chk.contains_vertex == (a == 0)
    ok = var <= 1e-12 and vertex_ok and 0.0 in a_vals
    report_criterion(6, "explicit fibration constant on fibers", ok,
                     f"20 fibers a in [-1, 1] incl. a = 0 with its vertex, max variation {var:.1e}")
    assert ok


def test_criterion_07_stability_index(report_criterion):
    cone = cones.clifford_cone()
    N2 = cones.count_N(cone.spectrum, 3, 2.0)
    s = cones.stability_index(cone)
    t0 = time.perf_counter()
    mesh = cones.clifford_mesh(100)
    mspec = cones.link_spectrum(mesh, 40)
    mN2 = cones.count_N(mspec, 3, 2.0, rtol=cones.MESH_GROUP_RTOL)
    ms = cones.stability_index(cones.ConeData(3, 1, 2, mspec), rtol=cones.MESH_GROUP_RTOL)
    elapsed = time.perf_counter() - t0
    m, b0, dg = 3, 1, 2
    base = b0 + m * m + 2 * m - 1 - dg
    synth = [cones.stability_index(cones.ConeData(m, b0, dg, cones.Spectrum.from_list([(0.0, 1), (3.0, base - 1 + k)])))
             for k in (0, 4, 7)]
    ok = (N2 == 13 and s == 0 and mN2 == 13 and ms == 0 and synth == [0, 4, 7] and elapsed < 30)
    report_criterion(7, "Clifford cone stability index", ok,
                     f"lattice N(2)={N2}, s-ind={s}; mesh ({len(mesh.vertices)} vertices) N(2)={mN2}, s-ind={ms} "
                     f"in {elapsed:.1f}s; synthetic {synth}")
    assert ok


def test_criterion_08_evolution(report_criterion):
    # 10^3 steps at dt = 1e-3 on the quadric linear family, compared with the closed form
    st = evolver.quadric_linear_seed(1, 2, 1.0, n=200)
    cloud = evolver.sweep(st, 1000, 1e-3)
    drift = max(cloud.meta["drift_history"])
    match = evolver.quadric_match_error(cloud, st.x, 1, 2)
    # dt-halving on the grid discretization: omega pullback differences between dt, dt/2, dt/4
    s0, x = evolver.quadric_seed(1, 1, 1.0, n=17)

    def run(dt, T=0.05):
        s = s0
        for _ in range(int(round(T / dt))):
            s = evolver.step(s, dt)
        return evolver.omega_pullback(s)

    P = [run(dt) for dt in (2e-3, 1e-3, 5e-4)]
    factor = np.abs(P[0] - P[1]).max() / np.abs(P[1] - P[2]).max()
    grid_cloud = evolver.sweep(s0, 50, 1e-3)
    grid_match = evolver.quadric_match_error(grid_cloud, x, 1, 1)
    ok = drift <= 1e-6 and factor >= 8 and match <= 1e-3 and grid_match <= 1e-3
    report_criterion(8, "evolution preserves the Lagrangian constraint", ok,
                     f"drift {drift:.1e} after 1000 steps, closed-form match {match:.1e} (grid patch {grid_match:.1e}), "
                     f"dt-halving reduction {factor:.1f}x")
    assert ok


def test_criterion_09_index_arithmetic(report_criterion):
    checks = [
        moduli.singularity_index(1, [1], [0]) == 1,
        moduli.singularity_index(1, [0], [0]) == 0,
        moduli.singularity_index(2, [1, 1], [0, 0]) == 1,
        moduli.mclean_dim(moduli.BettiData(3, b_m_minus_1=3, closed=True)) == 3,
        moduli.mclean_dim(moduli.BettiData(0)) == 0,
        moduli.ac_moduli_dim(moduli.BettiData(1, 1), 3, 0.5, N_lambda=1) == 1,
        moduli.ac_moduli_dim(moduli.BettiData(0, b1_cs=2), 3, -0.5) == 2,
        moduli.ac_moduli_dim(moduli.BettiData(1, 1), 3, 1.5, N_lambda=0) == 0,
    ]
    ok = all(checks)
    report_criterion(9, "index and moduli arithmetic", ok, f"{sum(checks)}/{len(checks)} examples")
    assert ok


def test_criterion_10_convergence_to_cone(report_criterion):
    ts = [1 / 2, 1 / 4, 1 / 8, 1 / 16]
    cone = FamilySpec(Family.HL_CONE)
    d = [families.asymptotic_cone_distance(families.hl_cloud(t), cone, 1.0) for t in ts]
    ok = all(d[i + 1] < d[i] for i in range(3)) and all(di <= t for di, t in zip(d, ts))
    report_criterion(10, "L_t converges to the cone", ok,
                     "distances " + ", ".join(f"{di:.4f}" for di in d) + f", ratio d/t {d[-1] / ts[-1]:.4f}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
