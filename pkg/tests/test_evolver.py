import numpy as np
import pytest

from slgeo import evolver as E
from slgeo.calib import to_real
from slgeo.errors import BlowUpError, DegeneracyError, DomainError

import oracles


@pytest.mark.parametrize("m", [2, 3, 4])
def test_contraction_velocity_matches_dense_tensor(m):
    rng = np.random.default_rng(m)
    for _ in range(10):
        X = rng.normal(size=(m - 1, m)) + 1j * rng.normal(size=(m - 1, m))
        v = E.contraction_velocity(X)
        w = oracles.re_omega_dual(to_real(X))
        assert np.allclose(v, w, atol=1e-12)


def test_cofactor_vector_is_cross_product_for_m3():
    X = np.array([[1, 0, 0], [0, 1, 0]], dtype=complex)
    assert np.allclose(E.cofactor_vector(X), [0, 0, 1])
    with pytest.raises(DomainError):
        E.cofactor_vector(np.ones((1, 3)))


def test_velocity_is_omega_orthogonal_to_tangents():
    # omega'(v, X_k) = 0 and g'(v, X_k) = 0 for the contraction field
    rng = np.random.default_rng(0)
    X = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    v = E.contraction_velocity(X)
    vz = v[0::2] + 1j * v[1::2]
    for k in range(2):
        assert abs(np.sum(np.conj(vz) * X[k])) < 1e-12


def test_plane_seed_moves_normally():
    st = E.plane_seed(n=5, kappa=2.0)
    v = E.velocity(st)
    # pushforwards e_1, e_2 in R^3 give conj(e_1 x e_2) = e_3: velocity 2 * Re e_3 direction
    assert np.allclose(v[..., 4], 2.0)
    assert np.allclose(np.delete(v, 4, axis=-1), 0.0)
    assert E.omega_drift(st) == 0.0


def test_plane_seed_sweeps_sl_plane():
    st = E.plane_seed(n=5)
    cloud = E.sweep(st, 10, 0.01)
    assert cloud.meta["max_sl_residual"] < 1e-12
    assert max(cloud.meta["drift_history"]) < 1e-14


def test_non_lagrangian_seed_rejected():
    s = np.linspace(-1, 1, 5)
    U, V = np.meshgrid(s, s, indexing="ij")
    # the complex line z2 = 0, z3 = 0 spanned by d/dx1 and d/dy1 is not Lagrangian
    z = np.stack([U + 1j * V, 0 * U, 0 * U], axis=-1)
    st = E.PatchState(to_real(z), 1.0, (0.5, 0.5), 0.0, None)
    with pytest.raises(DomainError):
        E.sweep(st, 1, 1e-3)


def test_degenerate_pushforward_raises():
    s = np.linspace(-1, 1, 5)
    U, V = np.meshgrid(s, s, indexing="ij")
    z = np.stack([U + V, 0 * U, 0 * U], axis=-1).astype(complex)
    st = E.PatchState(to_real(z), 1.0, (0.5, 0.5), 0.0, None)
    with pytest.raises(DegeneracyError):
        E.velocity(st)


def test_cfl_guard_and_blowup():
    st = E.plane_seed(n=5)
    with pytest.raises(DomainError):
        E.step(st, 10.0)
    assert E.step(st, 0.0) is st
    # velocity ~ 1e300 overflows in one unchecked step
    fast = E.plane_seed(n=5, kappa=1e300)
    with pytest.raises(BlowUpError) as exc:
        E.step(fast, 1e10, check_cfl=False)
    assert exc.value.last_state is fast


def test_quadric_seed_is_lagrangian_and_tracks_closed_form():
    st, x = E.quadric_seed(1, 2, 1.0, n=17)
    assert E.omega_drift(st) < 1e-12
    cloud = E.sweep(st, 20, 1e-3)
    assert E.quadric_match_error(cloud, x, 1, 2) < 1e-3


def test_linear_family_exact_solution():
    st = E.quadric_linear_seed(1, 2, 1.0, n=50)
    T = 0.5
    for _ in range(500):
        st = E.linear_step(st, 1e-3)
    a = np.array([1, 2, -3])
    exact = np.diag(np.exp(1j * a * T) * np.array([1, 1, 1j]))
    assert np.abs(st.M - exact).max() < 1e-10
    assert E.linear_omega_drift(st) < 1e-14


def test_linear_sweep_metadata():
    st = E.quadric_linear_seed(1, 1, 1.0, n=20)
    cloud = E.sweep(st, 30, 1e-2)
    meta = cloud.meta
    assert meta["steps"] == 30
    assert len(meta["times"]) == 31
    assert meta["trajectory"].shape == (31, 20, 6)
    assert len(cloud.points) == 31 * 20
    assert cloud.meta["max_sl_residual"] < 1e-12
    assert set(cloud.frame_index) <= set(range(len(cloud.points)))


def test_arclength_reparametrization():
    track = np.stack([np.cos(np.linspace(0, 1, 11)), np.sin(np.linspace(0, 1, 11))], axis=1)
    s = E.arclength_times(track)
    assert s[-1] == pytest.approx(1.0, rel=1e-2)
    assert np.all(np.diff(s) > 0)
