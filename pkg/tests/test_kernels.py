import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from slgeo import _pykernels, kernels
from slgeo.u1pde import DomainMesh, disk

compiled = pytest.importorskip("slgeo._ckernels")


def _clouds(seed, n=700, k=500, dim=6):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, dim)), rng.normal(size=(k, dim)) * np.array([3, 1, 1, 0.5, 0.5, 0.1])[:dim]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_nearest_parity_and_exactness(seed):
    P, T = _clouds(seed)
    dc, ic = compiled.nearest_distances(P, T, 1)
    dp, ip = _pykernels.nearest_distances(P, T, 1)
    D = cdist(P, T)
    assert np.array_equal(ic, ip)
    assert np.array_equal(ic, D.argmin(axis=1))
    assert np.allclose(dc, D.min(axis=1), rtol=1e-14, atol=0)
    assert np.allclose(dc, dp, rtol=1e-14, atol=0)


def test_nearest_handles_duplicates_and_single_target():
    P = np.zeros((4, 3))
    T = np.zeros((2, 3))
    d, i = compiled.nearest_distances(P, T, 1)
    assert np.all(d == 0)
    d, i = compiled.nearest_distances(P + 1, np.zeros((1, 3)), 1)
    assert np.allclose(d, np.sqrt(3)) and np.all(i == 0)


@pytest.mark.parametrize("a", [0.0, 0.3, -1.2])
def test_stencil_parity(a):
    mesh = DomainMesh.build(disk(1.0), 1 / 32)
    rng = np.random.default_rng(5)
    F = rng.normal(size=mesh.n + len(mesh.bpoints))
    rc, Jc = compiled.quasilinear_stencil(F, mesh.nbr, mesh.arm, mesh.y, a)
    rp, Jp = _pykernels.quasilinear_stencil(F, mesh.nbr, mesh.arm, mesh.y, a)
    assert np.allclose(rc, rp, rtol=1e-13, atol=1e-13 * np.abs(rp).max())
    assert np.allclose(Jc, Jp, rtol=1e-13, atol=1e-13 * np.abs(Jp).max())


def test_backend_selection():
    assert kernels.BACKEND == "cython"
    env = dict(os.environ, SLGEO_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from slgeo import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("SLGEO_THREADS", "3")
    assert kernels.thread_count() == 3
    monkeypatch.setenv("SLGEO_THREADS", "junk")
    assert kernels.thread_count() >= 1
