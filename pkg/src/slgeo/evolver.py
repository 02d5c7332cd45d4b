"""Evolution of (m-1)-dimensional Lagrangian seeds into special Lagrangian m-folds.

A seed phi: P -> C^m together with a nonvanishing section chi = kappa d_1 ^ ... ^ d_{m-1}
of Lambda^{m-1} TP evolves by

    d phi / dt = kappa * (contraction of Re Omega' with the pushforwards, raised by g')

which works out to kappa * conj(C), C the complex cofactor vector of the
pushforwards (the complex cross product when m = 3). The contraction puts the
pushforwards in the first m-1 slots of Re Omega'.

Two integrators are provided:

* ``PatchState``: samples on a rectangular parameter grid, tangents by finite
  differences. The evolution is an elliptic Cauchy problem, so high-frequency
  errors grow like exp(t/h); use it on short horizons.
* ``LinearFamilyState``: the finite-dimensional reduction phi_t(x) = M(t) x on a
  quadric hypersurface P, with chi dual to the linear field B x. The flow reduces
  to the ODE dM/dt = conj(det(M) M^{-T}) B and is stable for long horizons.
"""
from dataclasses import dataclass, replace

import numpy as np

from .calib import TangentFrame, flat_forms, sl_residual, to_complex, to_real
from .errors import BlowUpError, DegeneracyError, DomainError
from .families import SampleCloud


def cofactor_vector(X):
    """Complex cofactor vector C_b = det[X_1, ..., X_{m-1}, e_b].

    Parameters
    ----------
    X : complex ndarray, shape (..., m-1, m)
        Pushforward vectors as rows.
    """
    X = np.asarray(X, dtype=complex)
    k, m = X.shape[-2:]
    if k != m - 1:
        raise DomainError(f"need m-1 = {m - 1} vectors, got {k}")
    C = np.empty(X.shape[:-2] + (m,), dtype=complex)
    rows = np.arange(m)
    for b in range(m):
        minor = np.swapaxes(X[..., rows != b], -1, -2)
        C[..., b] = (-1) ** (b + m - 1) * np.linalg.det(minor)
    return C


def contraction_velocity(X, kappa=1.0):
    """Real 2m-vector(s) kappa * g'-dual of Re Omega'(X_1, ..., X_{m-1}, .)."""
    C = cofactor_vector(X)
    return to_real(np.asarray(kappa)[..., None] * np.conj(C))


@dataclass(frozen=True)
class PatchState:
    """Sampled seed on a parameter grid.

    Attributes
    ----------
    phi : ndarray, shape (n_1, ..., n_{m-1}, 2m)
        Images of the grid points (interleaved real coordinates).
    chi : ndarray, shape (n_1, ..., n_{m-1})
        Density kappa of chi = kappa d_1 ^ ... ^ d_{m-1}; must not vanish.
    spacing : tuple of float
        Parameter grid spacings.
    time : float
    params : ndarray or None
        Parameter values of the grid points, shape (n_1, ..., n_{m-1}, m-1).
    """

    phi: np.ndarray
    chi: np.ndarray
    spacing: tuple
    time: float = 0.0
    params: np.ndarray = None

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        chi = np.broadcast_to(np.asarray(self.chi, dtype=float), phi.shape[:-1]).copy()
        m = phi.shape[-1] // 2
        if phi.shape[-1] % 2 or phi.ndim - 1 != m - 1:
            raise DomainError(f"phi must be an (m-1)-dimensional grid of 2m-vectors, got shape {phi.shape}")
        if len(self.spacing) != m - 1:
            raise DomainError("one spacing per parameter direction expected")
        if np.any(chi == 0):
            raise DomainError("chi must be nonvanishing")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))

    @property
    def m(self):
        return self.phi.shape[-1] // 2


def pushforward(state, phi=None):
    """Complex tangent vectors d_k phi, shape (*grid, m-1, m); one-sided at the grid edges."""
    z = to_complex(state.phi if phi is None else phi)
    d = [np.gradient(z, h, axis=k, edge_order=2) for k, h in enumerate(state.spacing)]
    return np.stack(d, axis=-2)


def _velocity_field(state, phi):
    X = pushforward(state, phi)
    C = cofactor_vector(X)
    scale = np.prod(np.linalg.norm(X, axis=-1), axis=-1)
    if np.any(np.linalg.norm(C, axis=-1) <= 1e-12 * scale) or np.any(scale == 0):
        raise DegeneracyError("pushforward has rank < m-1 at some sample")
    return to_real(state.chi[..., None] * np.conj(C))


def velocity(state, p=None):
    """Right-hand side of the evolution equation.

    Parameters
    ----------
    state : PatchState
    p : tuple of int, optional
        Grid index; if omitted the whole velocity field is returned.
    """
    v = _velocity_field(state, state.phi)
    return v if p is None else v[tuple(p)]


def dt_max(state):
    """CFL-like bound 0.25 h / max|velocity|."""
    v = np.linalg.norm(_velocity_field(state, state.phi), axis=-1).max()
    return np.inf if v == 0 else 0.25 * min(state.spacing) / v


def step(state, dt, check_cfl=True):
    """One classical RK4 step; chi is time independent."""
    if dt == 0:
        return state
    if check_cfl and abs(dt) > dt_max(state):
        raise DomainError(f"|dt| = {abs(dt):.3g} exceeds the CFL bound {dt_max(state):.3g}")
    y = state.phi
    with np.errstate(all="ignore"):
        k1 = _velocity_field(state, y)
        k2 = _velocity_field(state, y + 0.5 * dt * k1)
        k3 = _velocity_field(state, y + 0.5 * dt * k2)
        k4 = _velocity_field(state, y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(y)):
        raise BlowUpError(f"non-finite values at t = {state.time + dt:.6g}", last_state=state)
    return replace(state, phi=y, time=state.time + dt)


def omega_pullback(state):
    """Components phi*(omega')(d_i, d_j), i < j, shape (*grid, n_pairs)."""
    X = pushforward(state)
    k = X.shape[-2]
    comps = [np.sum(np.conj(X[..., i, :]) * X[..., j, :], axis=-1).imag for i in range(k) for j in range(i + 1, k)]
    return np.stack(comps, axis=-1)


def omega_drift(state):
    """Largest component of the pulled-back Kahler form over all samples."""
    if isinstance(state, LinearFamilyState):
        return linear_omega_drift(state)
    return float(np.abs(omega_pullback(state)).max())


def _frames_for(phi, vel, X, idx):
    out = []
    ff = None
    for i in idx:
        V = np.vstack([vel[i], to_real(X[i])])
        if ff is None:
            ff = flat_forms(V.shape[1] // 2)
        s = ff.re_Omega(*V)
        out.append(TangentFrame(phi[i], V, 1 if s >= 0 else -1))
    return out


def sweep(initial, steps, dt, init_tol=1e-6, max_frames=2000, check_cfl=True):
    """Evolve a seed and collect the swept m-fold.

    Returns
    -------
    SampleCloud
        All evolved samples; frames (d/dt, parameter tangents) on a subset of
        at most ``max_frames`` samples. ``meta`` holds times, drift history,
        the trajectory array and the maximum SL residual.
    """
    if isinstance(initial, LinearFamilyState):
        return linear_sweep(initial, steps, dt, init_tol, max_frames)
    d0 = omega_drift(initial)
    if d0 > init_tol:
        raise DomainError(f"seed is not Lagrangian: pullback of omega' is {d0:.3g} > {init_tol:.3g}")
    states = [initial]
    st = initial
    for _ in range(int(steps)):
        st = step(st, dt, check_cfl)
        states.append(st)
    traj = np.stack([s.phi for s in states])
    m = initial.m
    pts = traj.reshape(-1, 2 * m)
    per = int(np.prod(initial.phi.shape[:-1]))
    stride = max(1, int(np.ceil(len(pts) / max_frames)))
    frames, fidx, resid = [], [], 0.0
    for k, s in enumerate(states):
        sel = [i for i in range(per) if (k * per + i) % stride == 0]
        if not sel:
            continue
        vel = _velocity_field(s, s.phi).reshape(per, 2 * m)
        X = pushforward(s).reshape(per, m - 1, m)
        fr = _frames_for(s.phi.reshape(per, 2 * m), vel, X, sel)
        frames.extend(fr)
        fidx.extend(k * per + i for i in sel)
    for fr in frames:
        r = sl_residual(fr)
        resid = max(resid, r.omega_norm, abs(r.im_omega_val))
    meta = dict(dt=dt, steps=int(steps), times=[s.time for s in states],
                drift_history=[omega_drift(s) for s in states], trajectory=traj,
                max_sl_residual=resid)
    return SampleCloud(pts, frames, None, meta, np.array(fidx))


# --- finite-dimensional linear family -------------------------------------

@dataclass(frozen=True)
class LinearFamilyState:
    """phi_t(x) = M x on P = {x : x^T A x = c} with chi dual to B x.

    Attributes
    ----------
    M : complex ndarray (m, m)
    B : real ndarray (m, m)
    x : ndarray (n, m)
        Sample points of P.
    tangents : ndarray (n, m-1, m)
        Orthonormal tangent frames of P at the samples.
    time : float
    """

    M: np.ndarray
    B: np.ndarray
    x: np.ndarray
    tangents: np.ndarray
    time: float = 0.0

    @property
    def m(self):
        return self.M.shape[0]

    @property
    def points(self):
        return to_real(self.x @ self.M.T)


def linear_rhs(M, B):
    """dM/dt = conj(det(M) M^{-T}) B."""
    cof = np.linalg.det(M) * np.linalg.inv(M).T
    return np.conj(cof) @ B


def linear_velocity(state, x=None):
    """Velocity (real 2m-vectors) of the linear family at parameter points x."""
    x = state.x if x is None else np.atleast_2d(x)
    return to_real(x @ linear_rhs(state.M, state.B).T)


def linear_step(state, dt):
    """One RK4 step of the matrix ODE."""
    if dt == 0:
        return state
    M, B = state.M, state.B
    with np.errstate(all="ignore"):
        k1 = linear_rhs(M, B)
        k2 = linear_rhs(M + 0.5 * dt * k1, B)
        k3 = linear_rhs(M + 0.5 * dt * k2, B)
        k4 = linear_rhs(M + dt * k3, B)
        M = M + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(M)):
        raise BlowUpError(f"non-finite values at t = {state.time + dt:.6g}", last_state=state)
    return replace(state, M=M, time=state.time + dt)


def linear_omega_drift(state):
    """max |omega'(M tau_i, M tau_j)| over samples and tangent pairs."""
    Z = state.tangents.astype(complex) @ state.M.T
    k = Z.shape[1]
    vals = [np.abs(np.sum(np.conj(Z[:, i]) * Z[:, j], axis=-1).imag).max() for i in range(k) for j in range(i + 1, k)]
    return float(max(vals))


def linear_sweep(initial, steps, dt, init_tol=1e-6, max_frames=2000):
    d0 = linear_omega_drift(initial)
    if d0 > init_tol:
        raise DomainError(f"seed is not Lagrangian: pullback of omega' is {d0:.3g} > {init_tol:.3g}")
    states = [initial]
    st = initial
    for _ in range(int(steps)):
        st = linear_step(st, dt)
        states.append(st)
    traj = np.stack([s.points for s in states])
    m = initial.m
    pts = traj.reshape(-1, 2 * m)
    n = len(initial.x)
    stride = max(1, int(np.ceil(len(pts) / max_frames)))
    frames, fidx = [], []
    for k, s in enumerate(states):
        sel = [i for i in range(n) if (k * n + i) % stride == 0]
        if not sel:
            continue
        vel = linear_velocity(s)
        X = s.tangents.astype(complex) @ s.M.T
        frames.extend(_frames_for(s.points, vel, X, sel))
        fidx.extend(k * n + i for i in sel)
    resid = 0.0
    for fr in frames:
        r = sl_residual(fr)
        resid = max(resid, r.omega_norm, abs(r.im_omega_val))
    meta = dict(dt=dt, steps=int(steps), times=[s.time for s in states],
                drift_history=[linear_omega_drift(s) for s in states], trajectory=traj,
                max_sl_residual=resid)
    return SampleCloud(pts, frames, None, meta, np.array(fidx))


# --- seeds ------------------------------------------------------------------

def plane_seed(n=9, extent=1.0, kappa=1.0):
    """Coordinate 2-plane patch in R^3 ⊂ C^3 with chi = kappa d_1 ^ d_2."""
    s = np.linspace(-extent, extent, n)
    U, V = np.meshgrid(s, s, indexing="ij")
    z = np.stack([U, V, np.zeros_like(U)], axis=-1).astype(complex)
    h = s[1] - s[0]
    return PatchState(to_real(z), kappa, (h, h), 0.0, np.stack([U, V], axis=-1))


def _quadric_surface(a1, a2, c, U, S):
    """Points and parameter tangents of {a1 x1^2 + a2 x2^2 - (a1+a2) x3^2 = c}, c > 0."""
    w = c + (a1 + a2) * S ** 2
    r1, r2 = np.sqrt(w / a1), np.sqrt(w / a2)
    x = np.stack([r1 * np.cos(U), r2 * np.sin(U), S], axis=-1)
    xu = np.stack([-r1 * np.sin(U), r2 * np.cos(U), 0 * S], axis=-1)
    dw = 2 * (a1 + a2) * S
    xs = np.stack([dw / (2 * r1 * a1) * np.cos(U), dw / (2 * r2 * a2) * np.sin(U), np.ones_like(S)], axis=-1)
    return x, xu, xs


def quadric_seed(a1=1, a2=1, c=1.0, n=17, u_range=(0.0, 1.0), s_range=(-0.5, 0.5)):
    """Grid seed phi_0(x) = (x1, x2, i x3) on the quadric with chi matched to the linear family.

    chi = kappa d_u ^ d_s with kappa chosen so that kappa (x_u x x_s) = -A x,
    A = diag(a1, a2, -a1 - a2). The evolution then reproduces the closed-form
    quadric family with time equal to its angle parameter.
    """
    if not c > 0:
        raise DomainError("quadric_seed needs c > 0")
    A = np.array([a1, a2, -a1 - a2], dtype=float)
    u = np.linspace(*u_range, n)
    s = np.linspace(*s_range, n)
    U, S = np.meshgrid(u, s, indexing="ij")
    x, xu, xs = _quadric_surface(a1, a2, c, U, S)
    nrm = np.cross(xu, xs)
    kappa = -np.sum(A * x * nrm, axis=-1) / np.sum(nrm * nrm, axis=-1)
    z = x.astype(complex)
    z[..., 2] *= 1j
    st = PatchState(to_real(z), kappa, (u[1] - u[0], s[1] - s[0]), 0.0, np.stack([U, S], axis=-1))
    return st, x


def quadric_linear_seed(a1=1, a2=1, c=1.0, n=400, rng=0):
    """Linear-family seed M_0 = diag(1, 1, i), B = -diag(a1, a2, a3) on the quadric.

    The exact solution is M(t) = diag(e^{i a1 t}, e^{i a2 t}, i e^{i a3 t}).
    """
    if not c > 0:
        raise DomainError("quadric_linear_seed needs c > 0")
    rng = np.random.default_rng(rng)
    U = rng.uniform(0, 2 * np.pi, n)
    S = rng.uniform(-1, 1, n)
    x, xu, xs = _quadric_surface(a1, a2, c, U, S)
    t1 = xu / np.linalg.norm(xu, axis=-1, keepdims=True)
    t2 = xs - np.sum(xs * t1, axis=-1, keepdims=True) * t1
    t2 /= np.linalg.norm(t2, axis=-1, keepdims=True)
    A = np.diag([a1, a2, -a1 - a2]).astype(float)
    M0 = np.diag([1, 1, 1j]).astype(complex)
    return LinearFamilyState(M0, -A, x, np.stack([t1, t2], axis=1), 0.0)


def closed_form_quadric(a1, a2, theta, x):
    """Closed-form quadric family (e^{i a1 t} x1, e^{i a2 t} x2, i e^{i a3 t} x3) without the constraint check."""
    a3 = -a1 - a2
    ph = np.exp(1j * np.asarray(theta)[..., None] * np.array([a1, a2, a3])) * np.array([1, 1, 1j])
    return to_real(ph * x)


def arclength_times(track):
    """Cumulative polyline arclength of a tracked sample trajectory (n_steps+1, 2m)."""
    seg = np.linalg.norm(np.diff(track, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def quadric_match_error(cloud, x, a1, a2, track=0):
    """Max distance between a sweep and the closed-form quadric family.

    Time is reparametrized by the arclength of sample ``track``: the closed-form
    sample moves at constant speed |A x|, so theta = arclength / |A x|.
    """
    traj = cloud.meta["trajectory"]
    T = traj.reshape(traj.shape[0], -1, traj.shape[-1])
    xs = np.asarray(x).reshape(-1, 3)
    A = np.array([a1, a2, -a1 - a2], dtype=float)
    s = arclength_times(T[:, track])
    theta = s / np.linalg.norm(A * xs[track])
    err = 0.0
    for k, th in enumerate(theta):
        err = max(err, np.abs(T[k] - closed_form_quadric(a1, a2, th, xs)).max())
    return float(err)
