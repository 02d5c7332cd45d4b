"""Timing of the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Both backends are imported
directly so the comparison does not depend on SLGEO_PURE_PYTHON.
"""
import argparse
import time

import numpy as np

from slgeo import _pykernels, kernels
from slgeo.u1pde import DomainMesh, disk, harmonic_extension, _boundary_values

try:
    from slgeo import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_nearest(n_points, n_targets, repeat, threads):
    # two nearby sampled 3-folds (torus orbits over a disk) in C^3, the typical workload
    rng = np.random.default_rng(0)

    def cloud(n, shift):
        r, th = np.sqrt(rng.uniform(0, 1, n)), rng.uniform(0, 2 * np.pi, (n, 2))
        z = np.stack([r * np.exp(1j * th[:, 0]), r * np.exp(1j * th[:, 1]), shift - r * r * np.exp(-1j * th.sum(1))], 1)
        return np.stack([z.real, z.imag], -1).reshape(n, 6)

    P, T = cloud(n_points, 0.0), cloud(n_targets, 0.1)
    rows = []
    tp, (dp, ip) = best_of(lambda: _pykernels.nearest_distances(P, T, threads), repeat)
    rows.append(("nearest_distances", "python", tp, 0.0))
    if _ckernels is not None:
        tc, (dc, ic) = best_of(lambda: _ckernels.nearest_distances(P, T, threads), repeat)
        rows.append(("nearest_distances", "cython", tc, float(np.abs(dc - dp).max())))
    return rows


def bench_stencil(h, repeat):
    mesh = DomainMesh.build(disk(1.0), h)
    phi_b = _boundary_values(mesh, lambda x, y: x * x - 0.3 * y)
    F = np.concatenate([harmonic_extension(mesh, phi_b), phi_b])
    args = (F, mesh.nbr, mesh.arm, mesh.y, 0.1)
    rows = []
    tp, (rp, Jp) = best_of(lambda: _pykernels.quasilinear_stencil(*args), repeat)
    rows.append((f"quasilinear_stencil n={mesh.n}", "python", tp, 0.0))
    if _ckernels is not None:
        tc, (rc, Jc) = best_of(lambda: _ckernels.quasilinear_stencil(*args), repeat)
        # relative to the entry scale: Jacobian rows grow like 1/h^2
        err = max(float(np.abs(rc - rp).max() / np.abs(rp).max()), float(np.abs(Jc - Jp).max() / np.abs(Jp).max()))
        rows.append((f"quasilinear_stencil n={mesh.n}", "cython", tc, err))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--targets", type=int, default=20000)
    ap.add_argument("--h", type=float, default=1 / 128)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    threads = kernels.thread_count()
    rows = bench_nearest(args.points, args.targets, args.repeat, threads)
    rows += bench_stencil(args.h, args.repeat)
    print(f"default backend: {kernels.BACKEND}, threads: {threads}")
    print(f"{'kernel':34s} {'backend':8s} {'seconds':>10s} {'speedup':>8s} {'rel diff':>10s}")
    base = {}
    for name, backend, t, err in rows:
        if backend == "python":
            base[name] = t
        print(f"{name:34s} {backend:8s} {t:10.4f} {base[name] / t:8.2f} {err:10.2e}")
    if _ckernels is None:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
